"""Exact evaluation of the pairwise model by enumerating all 2^n assignments.

The gambler faces the worst arrival order.  Because acceptance is greedy
(the first k eligible arrivals are taken), the worst order presents the
eligible realizations in ascending value, so the gambler ends up with the k
smallest realizations above the threshold.  ``worst_order_check`` certifies
this against brute force over all arrival orders.

Per-element acceptance counts are integers; probabilities are those counts
over ``2**n``.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import (
    Assignment,
    DyadicProbability,
    ElementTable,
    Instance,
    build_element_table,
    classify_assignment,
    ranked_elements,
)
from .mechanism import Selection, compute_threshold, prophet_select, run_gambler

DEFAULT_CAP = 24
ORDER_CHECK_CAP = 8
CHUNK_BITS = 15
THREADS_ENV = "SSPI_THREADS"


class ResourceCapError(RuntimeError):
    """Requested enumeration is larger than the configured cap."""


def default_workers() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ExactResult:
    table: ElementTable
    k: int
    prophet_expectation: Fraction
    gambler_expectation: Fraction
    prophet_accept_prob: tuple[DyadicProbability, ...]
    gambler_accept_prob: tuple[DyadicProbability, ...]

    @property
    def ratio(self) -> Fraction | None:
        """prophet / gambler; None when the gambler's expectation is 0."""
        if self.gambler_expectation == 0:
            return None
        return self.prophet_expectation / self.gambler_expectation

    @property
    def unbounded(self) -> bool:
        return self.gambler_expectation == 0 and self.prophet_expectation > 0

    @property
    def margin(self) -> Fraction:
        return 2 * self.gambler_expectation - self.prophet_expectation


def _realized(table: ElementTable, a: Assignment) -> tuple[list[int], list[int]]:
    """(S-elements, R-elements), 1-based, in rank order."""
    labels = classify_assignment(table, a)
    s = [j for j, is_s in enumerate(labels, start=1) if is_s]
    r = [j for j, is_s in enumerate(labels, start=1) if not is_s]
    return s, r


def adversarial_gambler_gain(table: ElementTable, a: Assignment, k: int) -> Selection:
    """Elements the gambler takes under the worst order, and their sum.

    ``accepted`` holds element indices, not item ids.
    """
    elems = ranked_elements(table)
    s, r = _realized(table, a)
    t = compute_threshold([elems[j - 1] for j in s], k)
    eligible = [j for j in r if t.exceeded_by(elems[j - 1])]
    taken = eligible[-k:] if k else []
    return Selection(tuple(taken), sum((table.w[j - 1] for j in taken), Fraction(0)))


def _prophet_elements(table: ElementTable, a: Assignment, k: int) -> Selection:
    elems = ranked_elements(table)
    _, r = _realized(table, a)
    sel = prophet_select([elems[j - 1] for j in r], k)
    return Selection(tuple(r[i - 1] for i in sel.accepted), sel.gain)


def worst_order_check(table: ElementTable, a: Assignment, k: int) -> bool:
    """Brute force: min over all n! arrival orders equals the ascending-eligible gain."""
    if table.n > ORDER_CHECK_CAP:
        raise ResourceCapError(f"n={table.n} exceeds order-check cap {ORDER_CHECK_CAP}")
    elems = ranked_elements(table)
    s, r = _realized(table, a)
    t = compute_threshold([elems[j - 1] for j in s], k)
    arrivals = [(table.pair_of[j - 1], elems[j - 1]) for j in r]
    best = min(run_gambler(t, order, k).gain for order in itertools.permutations(arrivals))
    return best == adversarial_gambler_gain(table, a, k).gain


def _count_chunk(item_idx, is_y, k, lo, hi):
    masks = np.arange(lo, hi, dtype=np.int64)
    bits = ((masks[:, None] >> item_idx[None, :]) & 1).astype(np.int8)
    is_r = bits ^ is_y[None, :]
    prophet = is_r & (np.cumsum(is_r, axis=1, dtype=np.int16) <= k)
    cum_s = np.cumsum(1 - is_r, axis=1, dtype=np.int16)
    eligible = is_r & (cum_s < k)
    from_end = np.cumsum(eligible[:, ::-1], axis=1, dtype=np.int16)[:, ::-1]
    gambler = eligible & (from_end <= k)
    return prophet.sum(axis=0, dtype=np.int64), gambler.sum(axis=0, dtype=np.int64)


def acceptance_counts(
    table: ElementTable, k: int, workers: int | None = None
) -> tuple[list[int], list[int]]:
    """Per-element counts of assignments in which prophet / gambler accept.

    Masks are split into fixed contiguous chunks and reduced independently;
    the integer sums do not depend on the chunking or the worker count.
    """
    n = table.n
    item_idx = np.array([p - 1 for p in table.pair_of], dtype=np.int64)
    is_y = np.array(table.is_y, dtype=np.int8)
    total = 1 << n
    step = 1 << CHUNK_BITS
    bounds = [(lo, min(lo + step, total)) for lo in range(0, total, step)]
    workers = workers or default_workers()

    def job(b):
        return _count_chunk(item_idx, is_y, k, *b)

    if workers == 1 or len(bounds) == 1:
        parts = [job(b) for b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, bounds))
    prophet = np.zeros(table.two_n, dtype=np.int64)
    gambler = np.zeros(table.two_n, dtype=np.int64)
    for p, g in parts:
        prophet += p
        gambler += g
    return [int(x) for x in prophet], [int(x) for x in gambler]


def _result_from_counts(table, k, prophet_counts, gambler_counts) -> ExactResult:
    n = table.n
    denom = 1 << n
    prophet_exp = sum((c * w for c, w in zip(prophet_counts, table.w)), Fraction(0)) / denom
    gambler_exp = sum((c * w for c, w in zip(gambler_counts, table.w)), Fraction(0)) / denom
    return ExactResult(
        table=table,
        k=k,
        prophet_expectation=prophet_exp,
        gambler_expectation=gambler_exp,
        prophet_accept_prob=tuple(DyadicProbability(c, n) for c in prophet_counts),
        gambler_accept_prob=tuple(DyadicProbability(c, n) for c in gambler_counts),
    )


def enumerate_pairwise(
    instance: Instance, cap: int = DEFAULT_CAP, workers: int | None = None
) -> ExactResult:
    if instance.n > cap:
        raise ResourceCapError(
            f"n={instance.n} needs 2^{instance.n} assignments; cap is n <= {cap}"
        )
    table = build_element_table(instance)
    prophet, gambler = acceptance_counts(table, instance.k, workers)
    return _result_from_counts(table, instance.k, prophet, gambler)


def enumerate_pairwise_reference(instance: Instance, cap: int = 12) -> ExactResult:
    """Slow path built from the mechanism functions, one assignment at a time."""
    if instance.n > cap:
        raise ResourceCapError(f"n={instance.n} exceeds reference cap {cap}")
    table = build_element_table(instance)
    k = instance.k
    prophet = [0] * table.two_n
    gambler = [0] * table.two_n
    for bits in range(1 << table.n):
        a = Assignment.from_int(bits, table.n)
        for j in _prophet_elements(table, a, k).accepted:
            prophet[j - 1] += 1
        for j in adversarial_gambler_gain(table, a, k).accepted:
            gambler[j - 1] += 1
    return _result_from_counts(table, k, prophet, gambler)


def competitive_check(instance: Instance, cap: int = DEFAULT_CAP, workers: int | None = None) -> Fraction:
    """Exact ``2 E[gambler] - E[prophet]``."""
    return enumerate_pairwise(instance, cap, workers).margin


def sr_patterns(table: ElementTable) -> np.ndarray:
    """``(2**n, 2n)`` int8 matrix; row ``bits`` marks the R-elements of that assignment."""
    masks = np.arange(1 << table.n, dtype=np.int64)
    item_idx = np.array([p - 1 for p in table.pair_of], dtype=np.int64)
    is_y = np.array(table.is_y, dtype=np.int8)
    return (((masks[:, None] >> item_idx[None, :]) & 1).astype(np.int8)) ^ is_y[None, :]


def _item_view(table: ElementTable, k: int):
    """Per assignment and item: realized value (scaled to ints) and eligibility."""
    n = table.n
    denom = 1
    for w in table.w:
        denom = denom * w.denominator // np.gcd(denom, w.denominator)
    ints = [int(w * denom) for w in table.w]
    if max(ints, default=0) * max(k, 1) >= 1 << 62:
        return None
    w = np.array(ints, dtype=np.int64)
    is_r = sr_patterns(table)
    eligible = is_r & (np.cumsum(1 - is_r, axis=1) < k)
    from_end = np.cumsum(eligible[:, ::-1], axis=1)[:, ::-1]
    adversarial = (eligible & (from_end <= k)) @ w

    value = np.zeros((1 << n, n), dtype=np.int64)
    elig = np.zeros((1 << n, n), dtype=np.int8)
    for j, item in enumerate(table.pair_of):
        value[:, item - 1] += is_r[:, j] * w[j]
        elig[:, item - 1] |= eligible[:, j]
    return value, elig, adversarial


def worst_order_certificate(
    table: ElementTable, k: int, masks=None, batch: int = 1 << 16
) -> list[int]:
    """Masks where min over all n! orders differs from the ascending-eligible gain.

    Vectorized over assignments and permutations; falls back to
    ``worst_order_check`` when scaled values overflow int64.
    """
    n = table.n
    if n > ORDER_CHECK_CAP:
        raise ResourceCapError(f"n={n} exceeds order-check cap {ORDER_CHECK_CAP}")
    masks = np.arange(1 << n) if masks is None else np.asarray(masks, dtype=np.int64)
    view = _item_view(table, k)
    if view is None:
        return [
            int(bits)
            for bits in masks
            if not worst_order_check(table, Assignment.from_int(int(bits), n), k)
        ]
    value, elig, adversarial = (a[masks] for a in view)
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    per = max(1, batch // (len(perms) * n))
    bad = []
    for lo in range(0, len(masks), per):
        v = value[lo : lo + per][:, perms]
        e = elig[lo : lo + per][:, perms]
        taken = e & (np.cumsum(e, axis=2) <= k)
        worst = (taken * v).sum(axis=2).min(axis=1)
        diff = np.nonzero(worst != adversarial[lo : lo + per])[0]
        bad.extend(int(masks[lo + d]) for d in diff)
    return bad


def batch_scaled_gains(values: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Scaled expectations for many instances with integer values at once.

    ``values`` has shape ``(B, n, 2)`` holding ``(y, z)`` per item.  Returns
    ``(prophet, gambler)`` int64 arrays equal to ``2**n`` times each
    expectation, with the same tie order and worst-case adversary as
    ``enumerate_pairwise``.
    """
    values = np.asarray(values, dtype=np.int64)
    b, n, _ = values.shape
    if n > 16:
        raise ResourceCapError(f"batched oracle handles n <= 16, got {n}")
    flat = values.reshape(b, 2 * n)  # column 2i + slot
    order = np.argsort(-flat, axis=1, kind="stable")
    w = np.take_along_axis(flat, order, axis=1)
    item_idx = order // 2
    is_y = (order % 2 == 0).astype(np.int8)

    masks = np.arange(1 << n, dtype=np.int64)
    is_r = (((masks[None, :, None] >> item_idx[:, None, :]) & 1).astype(np.int8)) ^ is_y[:, None, :]
    prophet = is_r & (np.cumsum(is_r, axis=2, dtype=np.int16) <= k)
    eligible = is_r & (np.cumsum(1 - is_r, axis=2, dtype=np.int16) < k)
    from_end = np.cumsum(eligible[:, :, ::-1], axis=2, dtype=np.int16)[:, :, ::-1]
    gambler = eligible & (from_end <= k)
    p_counts = prophet.sum(axis=1, dtype=np.int64)
    g_counts = gambler.sum(axis=1, dtype=np.int64)
    return (p_counts * w).sum(axis=1), (g_counts * w).sum(axis=1)
