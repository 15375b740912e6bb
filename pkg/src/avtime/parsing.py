"""Extraction of time spans from free-form answer text.

Answers carry spans either as ``[18.0, 20.0]`` or as ``from 18 to 20``;
both forms are collected in order of appearance.  A matched span whose
numbers do not form a valid interval (negative start or end before start)
is skipped and counted instead of raising.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .intervals import TimeInterval

_NUM = r"(-?\d+(?:\.\d+)?)"
_SPAN_RE = re.compile(
    rf"\[\s*{_NUM}\s*,\s*{_NUM}\s*\]|from\s+{_NUM}\s+to\s+{_NUM}",
    re.IGNORECASE,
)


@dataclass
class ParsedAnswer:
    intervals: list[TimeInterval] = field(default_factory=list)
    residual_text: str = ""
    malformed: int = 0


def parse_intervals(answer: str) -> ParsedAnswer:
    """Pull every timestamp span out of ``answer``.

    Returns the valid spans in appearance order plus the residual text with
    all span matches (valid or not) removed.
    """
    intervals: list[TimeInterval] = []
    malformed = 0
    residual_parts: list[str] = []
    cursor = 0
    for match in _SPAN_RE.finditer(answer):
        residual_parts.append(answer[cursor : match.start()])
        cursor = match.end()
        groups = match.groups()
        start_s, end_s = (groups[0], groups[1]) if groups[0] is not None else (groups[2], groups[3])
        try:
            intervals.append(TimeInterval(float(start_s), float(end_s)))
        except ValueError:
            malformed += 1
    residual_parts.append(answer[cursor:])
    residual = " ".join(part.strip() for part in residual_parts if part.strip())
    return ParsedAnswer(intervals=intervals, residual_text=residual, malformed=malformed)


def format_span(interval: TimeInterval) -> str:
    """Render an interval the way answers print it: one decimal place."""
    return f"[{interval.start:.1f}, {interval.end:.1f}]"
