"""Synthetic cross-modal retrieval task for the toy attention model.

Each sample is a clip: a handful of timestamped frame events, one sound
event dropped into a gap between two consecutive frames, and a query
asking for the event class immediately before or after the sound.  In
variable frame-rate mode the inter-frame gaps are heavy-tailed, so a
frame's position in the token sequence says little about its absolute
timestamp; only the timestamps themselves identify the frames adjacent
to the sound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .intervals import TimeInterval

UNIFORM = "uniform"
VARIABLE = "variable"

# Probability that the sound lands in gap p decays geometrically, giving
# order-aware models a positional prior to exploit.
SLOT_DECAY = 0.6
UNIFORM_GAP = 2.0


@dataclass(frozen=True)
class SyntheticSample:
    frame_events: tuple[tuple[float, int], ...]
    sound: tuple[TimeInterval, int]
    query: str  # "before" | "after"
    answer: int

    def duration(self) -> float:
        return max(self.frame_events[-1][0], self.sound[0].end)

    def shifted(self, offset: float) -> "SyntheticSample":
        """The same clip with every timestamp moved by ``offset``."""
        return SyntheticSample(
            frame_events=tuple((t + offset, c) for t, c in self.frame_events),
            sound=(self.sound[0].shift(offset), self.sound[1]),
            query=self.query,
            answer=self.answer,
        )


def make_dataset(
    n: int,
    C: int,
    frame_rate_mode: str,
    seed: int,
    *,
    frames: int = 8,
    sound_classes: int = 6,
) -> list[SyntheticSample]:
    """Generate ``n`` samples with ``C`` event classes, deterministically.

    With ``frames == 1`` the sound follows the single frame and every
    query is "before", which keeps the answer defined; that degenerate
    shape is the linearly separable sanity task.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    if C < 2:
        raise ValueError("need at least 2 event classes")
    if C < frames:
        raise ValueError("need at least as many classes as frames")
    if frame_rate_mode not in (UNIFORM, VARIABLE):
        raise ValueError(f"unknown frame rate mode {frame_rate_mode!r}")
    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(n):
        if frame_rate_mode == UNIFORM:
            gaps = np.full(frames, UNIFORM_GAP)
        else:
            gaps = 0.25 + rng.lognormal(mean=0.0, sigma=1.1, size=frames)
        times = np.cumsum(gaps)
        # Distinct classes per sample: the unordered class set then carries
        # no information about the answer, so only temporal or positional
        # reasoning generalizes.
        classes = rng.permutation(C)[:frames]

        if frames == 1:
            lo = times[0] + 0.3 * UNIFORM_GAP
            hi = times[0] + 0.7 * UNIFORM_GAP
            slot = 0
            query = "before"
            answer = int(classes[0])
        else:
            weights = SLOT_DECAY ** np.arange(frames - 1)
            weights /= weights.sum()
            slot = int(rng.choice(frames - 1, p=weights))
            if frame_rate_mode == VARIABLE:
                # Bound the width of the gap that hosts the sound so the
                # time offsets to its neighbouring frames stay on a
                # learnable scale; the remaining gaps keep the heavy tail.
                gaps[slot + 1] = rng.uniform(0.8, 2.5)
                times = np.cumsum(gaps)
            gap_lo, gap_hi = times[slot], times[slot + 1]
            a = rng.uniform(0.2, 0.45)
            b = rng.uniform(0.55, 0.8)
            lo = gap_lo + a * (gap_hi - gap_lo)
            hi = gap_lo + b * (gap_hi - gap_lo)
            query = "before" if rng.random() < 0.5 else "after"
            answer = int(classes[slot] if query == "before" else classes[slot + 1])

        samples.append(
            SyntheticSample(
                frame_events=tuple((float(t), int(c)) for t, c in zip(times, classes)),
                sound=(TimeInterval(float(lo), float(hi)), int(rng.integers(0, sound_classes))),
                query=query,
                answer=answer,
            )
        )
    return samples


def adjacent_answer(sample: SyntheticSample) -> int:
    """Recompute the label by scanning frames around the sound interval."""
    interval, _ = sample.sound
    if sample.query == "before":
        candidates = [(t, c) for t, c in sample.frame_events if t <= interval.start]
        if not candidates:
            raise ValueError("no frame precedes the sound")
        return max(candidates)[1]
    candidates = [(t, c) for t, c in sample.frame_events if t >= interval.end]
    if not candidates:
        raise ValueError("no frame follows the sound")
    return min(candidates)[1]
