"""Discrete time-token assignment and interleaving with modality streams.

A budget of ``K`` learnable time tokens covers a clip of duration ``T``;
a continuous timestamp ``tau`` maps onto token ``round(tau / T * (K - 1))``
with ties rounded half-away-from-zero.  Interleaving follows each modality
token with its time token, doubling the stream length.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field


class TokenKind(str, enum.Enum):
    VIDEO = "video"
    AUDIO = "audio"
    TIME = "time"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    payload_id: int
    timestamp: float


@dataclass
class TokenStream:
    """Ordered tokens; timestamps must be non-decreasing within each kind."""

    items: list[Token] = field(default_factory=list)

    def __post_init__(self) -> None:
        last_seen: dict[TokenKind, float] = {}
        for token in self.items:
            prev = last_seen.get(token.kind)
            if prev is not None and token.timestamp < prev:
                raise ValueError(
                    f"{token.kind.value} timestamps must be non-decreasing"
                )
            last_seen[token.kind] = token.timestamp

    def __len__(self) -> int:
        return len(self.items)

    def kinds(self) -> set[TokenKind]:
        return {token.kind for token in self.items}


@dataclass(frozen=True)
class TimeTokenBudget:
    """Number of discrete time tokens available for a clip of duration T."""

    K: int = 100
    T: float = 30.0

    def __post_init__(self) -> None:
        if self.K < 2:
            raise ValueError(f"need at least 2 time tokens, got K={self.K}")
        if self.T <= 0:
            raise ValueError(f"clip duration must be positive, got T={self.T}")


def _round_half_away(x: float) -> int:
    # Built-in round() is banker's rounding; ties here must move away from zero.
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def time_token_index(tau: float, budget: TimeTokenBudget) -> int:
    """Discrete time-token id for a timestamp within ``[0, T]``."""
    if tau < 0 or tau > budget.T:
        raise ValueError(f"timestamp {tau} outside [0, {budget.T}]")
    return _round_half_away(tau / budget.T * (budget.K - 1))


def interleave(modality_tokens: TokenStream, budget: TimeTokenBudget) -> TokenStream:
    """Follow each modality token with its time token.

    The input must contain a single modality kind (video or audio); the
    output alternates modality/time pairs and is exactly twice as long.
    """
    kinds = modality_tokens.kinds()
    if TokenKind.TIME in kinds:
        raise ValueError("input stream already contains time tokens")
    if len(kinds) > 1:
        raise ValueError(f"input stream mixes modalities: {sorted(k.value for k in kinds)}")
    items: list[Token] = []
    for token in modality_tokens.items:
        items.append(token)
        items.append(
            Token(
                TokenKind.TIME,
                time_token_index(token.timestamp, budget),
                token.timestamp,
            )
        )
    return TokenStream(items)
