"""The single-threshold gambler mechanism and the prophet's offline choice.

Samples fix one threshold, the k-th largest sample (or a floor below every
value when there are fewer than k items).  Realizations are then accepted
online when they rank strictly above the threshold, until k are taken.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .core import Y, Z, ModelError, Number, Ranked, to_exact

# Slots used when plain numbers are passed in: a realization outranks a
# sample of the same value and item.
REALIZATION_SLOT = Y
SAMPLE_SLOT = Z


@dataclass(frozen=True)
class Threshold:
    """``rank is None`` is the floor used when ``n < k``: value 0, below all."""

    value: Fraction
    rank: Ranked | None = None

    def exceeded_by(self, r: Ranked) -> bool:
        return self.rank is None or r > self.rank


def _as_ranked(x: Union[Ranked, Number], item_id: int, slot: int) -> Ranked:
    if isinstance(x, Ranked):
        return x
    v = to_exact(x)
    if v < 0:
        raise ModelError(f"value must be nonnegative, got {v}")
    return Ranked(v, item_id, slot)


def compute_threshold(samples: Sequence[Union[Ranked, Number]], k: int) -> Threshold:
    """Threshold from the samples; item ids are the 1-based list positions."""
    if not isinstance(k, int) or k < 1:
        raise ModelError(f"rank k must be a positive integer, got {k!r}")
    ranked = [_as_ranked(s, i, SAMPLE_SLOT) for i, s in enumerate(samples, start=1)]
    if len(ranked) < k:
        return Threshold(Fraction(0))
    kth = sorted(ranked, reverse=True)[k - 1]
    return Threshold(kth.value, kth)


@dataclass(frozen=True)
class Selection:
    accepted: tuple[int, ...]
    gain: Fraction


def run_gambler(
    threshold: Threshold,
    arrivals: Iterable[tuple[int, Union[Ranked, Number]]],
    k: int,
) -> Selection:
    """Scan ``(item_id, realized)`` arrivals, taking the first k above T."""
    accepted = []
    gain = Fraction(0)
    seen = set()
    for item_id, r in arrivals:
        if item_id in seen:
            raise ModelError(f"item {item_id} arrives twice")
        seen.add(item_id)
        rv = _as_ranked(r, item_id, REALIZATION_SLOT)
        if len(accepted) < k and threshold.exceeded_by(rv):
            accepted.append(item_id)
            gain += rv.value
    return Selection(tuple(accepted), gain)


def prophet_select(realizations: Sequence[Union[Ranked, Number]], k: int) -> Selection:
    """The min(k, n) highest-ranked realizations."""
    if not isinstance(k, int) or k < 1:
        raise ModelError(f"rank k must be a positive integer, got {k!r}")
    ranked = [
        (_as_ranked(r, i, REALIZATION_SLOT), i) for i, r in enumerate(realizations, start=1)
    ]
    top = sorted(ranked, reverse=True)[:k]
    return Selection(tuple(i for _, i in top), sum((r.value for r, _ in top), Fraction(0)))
