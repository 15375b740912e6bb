"""Toolkit for temporally grounded audio-visual data: interval algebra,
rotary time embeddings, discrete time tokens, synthetic transition-QA
generation, prompt assembly, a toy attention model, and evaluation."""

__version__ = "0.1.0"

from .intervals import ClipTimeline, TimeInterval, audio_window_midpoints, iou, remap_to_local
from .parsing import ParsedAnswer, parse_intervals
from .rotary import EmbeddingMatrix, RotaryMode, RotaryTimeConfig, apply_rotary, frequency_schedule, relative_score
from .timetokens import TimeTokenBudget, Token, TokenKind, TokenStream, interleave, time_token_index

__all__ = [
    "ClipTimeline",
    "EmbeddingMatrix",
    "ParsedAnswer",
    "RotaryMode",
    "RotaryTimeConfig",
    "TimeInterval",
    "TimeTokenBudget",
    "Token",
    "TokenKind",
    "TokenStream",
    "apply_rotary",
    "audio_window_midpoints",
    "frequency_schedule",
    "interleave",
    "iou",
    "parse_intervals",
    "relative_score",
    "remap_to_local",
    "time_token_index",
]
