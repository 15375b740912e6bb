"""Rotary feature rotation keyed either to absolute timestamps in seconds
or to token indices.

Feature vectors are rotated in 2-D pairs: pair ``j`` of row ``i`` turns by
``theta = -2*pi * p_i * f_j`` where ``p_i`` is the row's timestamp
(absolute-time mode) or its index (token-index mode), and ``f_j`` is a
geometrically decaying frequency.  Because each rotation is orthonormal,
row norms are preserved and dot products of two rotated rows depend only
on the difference of their positions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class RotaryMode(str, enum.Enum):
    ABSOLUTE_TIME = "absolute-time"
    TOKEN_INDEX = "token-index"


@dataclass(frozen=True)
class RotaryTimeConfig:
    """Rotation schedule: feature width, frequency base, and position source."""

    dim: int
    base: float = 10000.0
    mode: RotaryMode = RotaryMode.ABSOLUTE_TIME

    def __post_init__(self) -> None:
        if self.dim <= 0 or self.dim % 2 != 0:
            raise ValueError(f"dim must be a positive even integer, got {self.dim}")
        if self.base <= 1:
            raise ValueError(f"base must exceed 1, got {self.base}")


@dataclass
class EmbeddingMatrix:
    """A stack of feature rows with one timestamp per row."""

    values: np.ndarray
    timestamps: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-D matrix")
        if self.timestamps.shape != (self.values.shape[0],):
            raise ValueError("need exactly one timestamp per row")
        if np.any(self.timestamps < 0):
            raise ValueError("timestamps must be non-negative")

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


def frequency_schedule(config: RotaryTimeConfig) -> np.ndarray:
    """Per-pair rotation frequencies ``f_j = base**(-2j/dim)``.

    Strictly decreasing with ``f_0 == 1``: the first pair completes one
    revolution per unit of position, later pairs turn progressively slower.
    """
    half = config.dim // 2
    exponents = -2.0 * np.arange(half) / config.dim
    return config.base ** exponents


def rotate_rows(
    values: np.ndarray, positions: np.ndarray, freqs: np.ndarray
) -> np.ndarray:
    """Rotate feature pairs ``(2j, 2j+1)`` of each row by
    ``-2*pi * position * f_j``.  Works on any ``(..., rows, dim)`` stack;
    ``positions`` must broadcast against the leading shape ``(..., rows)``.

    The map is linear and orthonormal, so the gradient of a downstream
    loss propagates by calling this function again with ``-positions``.
    """
    values = np.asarray(values, dtype=float)
    positions = np.asarray(positions, dtype=float)
    angles = -2.0 * np.pi * positions[..., None] * freqs
    cos = np.cos(angles)
    sin = np.sin(angles)
    x = values[..., 0::2]
    y = values[..., 1::2]
    out = np.empty_like(values)
    out[..., 0::2] = x * cos - y * sin
    out[..., 1::2] = x * sin + y * cos
    return out


def apply_rotary(m: EmbeddingMatrix, config: RotaryTimeConfig) -> EmbeddingMatrix:
    """Rotate every row of ``m`` by its position under ``config``."""
    if m.cols != config.dim:
        raise ValueError(f"matrix has {m.cols} columns but config.dim is {config.dim}")
    if config.mode is RotaryMode.ABSOLUTE_TIME:
        positions = m.timestamps
    else:
        positions = np.arange(m.rows, dtype=float)
    rotated = rotate_rows(m.values, positions, frequency_schedule(config))
    return EmbeddingMatrix(rotated, m.timestamps.copy())


def relative_score(
    q_row: np.ndarray,
    k_row: np.ndarray,
    tau_q: float,
    tau_k: float,
    config: RotaryTimeConfig,
) -> float:
    """Dot product of the rotated query and key rows: the raw attention
    score.  In absolute-time mode it depends only on ``tau_q - tau_k``.
    """
    q_row = np.asarray(q_row, dtype=float)
    k_row = np.asarray(k_row, dtype=float)
    if q_row.shape != (config.dim,) or k_row.shape != (config.dim,):
        raise ValueError("q_row and k_row must be 1-D vectors of length config.dim")
    freqs = frequency_schedule(config)
    q_rot = rotate_rows(q_row[None, :], np.asarray([tau_q]), freqs)[0]
    k_rot = rotate_rows(k_row[None, :], np.asarray([tau_k]), freqs)[0]
    return float(q_rot @ k_rot)
