"""Instruction-prompt assembly with modality marker tokens.

Video-only input is wrapped in ``<vi_start> ... <vi_end>``, audio-only in
``<so_start> ... <so_end>``.  Joint audio-video input uses a single
``<vis_start> ... <vis_end>`` block holding the video patches then the
audio patches, and the individual markers are deactivated.  All tokens
are single-space separated and the prompt ends with ``Assistant:``.
"""

from __future__ import annotations

from dataclasses import dataclass

VI_START = "<vi_start>"
VI_PATCH = "<vi_patch>"
VI_END = "<vi_end>"
SO_START = "<so_start>"
SO_PATCH = "<so_patch>"
SO_END = "<so_end>"
VIS_START = "<vis_start>"
VIS_END = "<vis_end>"


@dataclass(frozen=True)
class PromptSpec:
    system_prompt: str
    question: str
    has_video: bool = False
    has_audio: bool = False
    joint: bool = False
    video_token_count: int = 0
    audio_token_count: int = 0

    def __post_init__(self) -> None:
        if self.joint and not (self.has_video and self.has_audio):
            raise ValueError("joint prompts require both video and audio")
        if self.video_token_count < 0 or self.audio_token_count < 0:
            raise ValueError("token counts must be non-negative")


def assemble(spec: PromptSpec) -> str:
    """Render the full single-turn prompt for ``spec``."""
    parts = ["User:", spec.system_prompt, spec.question]
    if spec.joint:
        if spec.video_token_count == 0 or spec.audio_token_count == 0:
            raise ValueError("joint prompts need at least one token per modality")
        parts.append(VIS_START)
        parts.extend([VI_PATCH] * spec.video_token_count)
        parts.extend([SO_PATCH] * spec.audio_token_count)
        parts.append(VIS_END)
    else:
        if spec.has_video:
            parts.append(VI_START)
            parts.extend([VI_PATCH] * spec.video_token_count)
            parts.append(VI_END)
        if spec.has_audio:
            parts.append(SO_START)
            parts.extend([SO_PATCH] * spec.audio_token_count)
            parts.append(SO_END)
    parts.append("Assistant:")
    return " ".join(parts)
