"""Interval and timestamp algebra shared by every other module.

All times are non-negative seconds.  Intervals are closed ``[start, end]``
with ``end >= start``; zero-duration point intervals are legal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class TimeInterval:
    """A closed time span in seconds."""

    start: float
    end: float

    def __post_init__(self) -> None:
        if self.start < 0:
            raise ValueError(f"interval start must be non-negative, got {self.start}")
        if self.end < self.start:
            raise ValueError(f"interval end {self.end} precedes start {self.start}")

    def duration(self) -> float:
        return self.end - self.start

    def midpoint(self) -> float:
        return (self.start + self.end) / 2.0

    def shift(self, offset: float) -> "TimeInterval":
        return TimeInterval(self.start + offset, self.end + offset)


@dataclass
class ClipTimeline:
    """Chunk-local view of a video chunk: its origin in the source video,
    its duration, and the captioned events remapped into [0, duration].
    """

    global_origin: float
    duration: float
    events: list[tuple[TimeInterval, str]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.duration < 0:
            raise ValueError("timeline duration must be non-negative")
        prev_end = None
        for interval, _ in self.events:
            if interval.start < -1e-9 or interval.end > self.duration + 1e-9:
                raise ValueError(
                    f"event {interval} falls outside [0, {self.duration}]"
                )
            if prev_end is not None and interval.start < prev_end - 1e-9:
                raise ValueError("timeline events must be sorted and non-overlapping")
            prev_end = interval.end


def iou(a: TimeInterval, b: TimeInterval) -> float:
    """Intersection-over-union of two intervals.

    Two identical point intervals score 1; any other pairing with a
    zero-length union scores 0, so there is never a division by zero.
    """
    inter = max(0.0, min(a.end, b.end) - max(a.start, b.start))
    union = a.duration() + b.duration() - inter
    if union <= 0.0:
        return 1.0 if (a.start == b.start and a.end == b.end) else 0.0
    return inter / union


def remap_to_local(global_interval: TimeInterval, origin: float) -> TimeInterval:
    """Shift a source-video interval into chunk-local coordinates."""
    if global_interval.start < origin:
        raise ValueError(
            f"interval starting at {global_interval.start} precedes chunk origin {origin}"
        )
    return TimeInterval(global_interval.start - origin, global_interval.end - origin)


def audio_window_midpoints(duration: float, window_len: float) -> list[float]:
    """Midpoints of consecutive non-overlapping audio windows of ``window_len``
    seconds covering ``[0, duration]``; the final window truncates at the
    clip end and its midpoint uses the truncated bounds.
    """
    if duration <= 0:
        raise ValueError(f"duration must be positive, got {duration}")
    if window_len <= 0:
        raise ValueError(f"window length must be positive, got {window_len}")
    count = math.ceil(duration / window_len)
    midpoints = []
    for n in range(1, count + 1):
        lo = (n - 1) * window_len
        hi = min(n * window_len, duration)
        midpoints.append((lo + hi) / 2.0)
    return midpoints
