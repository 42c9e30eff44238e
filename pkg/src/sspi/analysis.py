"""Deterministic lower-bound construction for rank 2 and a counterexample search.

The lower bound: samples ``(m, m, 0)``, then realizations ``m, m`` arrive
before item 3 is revealed.  A deterministic gambler has already committed to
some number ``beta`` of those two items.  With ``beta <= 1`` the world where
item 3 is always 0 costs a factor 2; with ``beta = 2`` the world where item 3
is 0 or M with equal odds costs a factor approaching 2 as ``M / m`` grows.

The search enumerates pairwise instances with values from a grid and looks
for a negative margin ``2 E[gambler] - E[prophet]`` at a given rank.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .core import Instance, ModelError, Number, to_exact
from .oracle import batch_scaled_gains, default_workers, enumerate_pairwise


@dataclass(frozen=True)
class BadExampleParams:
    m: Fraction
    M: Fraction
    beta: int

    def __post_init__(self):
        object.__setattr__(self, "m", to_exact(self.m))
        object.__setattr__(self, "M", to_exact(self.M))
        if self.beta not in (0, 1, 2):
            raise ModelError(f"beta must be 0, 1 or 2, got {self.beta!r}")
        if self.m <= 0:
            raise ModelError(f"m must be positive, got {self.m}")
        if self.M <= self.m:
            raise ModelError(f"M must exceed m, got M={self.M}, m={self.m}")


def bad_example_gains(params: BadExampleParams) -> tuple[Fraction, Fraction]:
    """(prophet lower bound, gambler upper bound) in the scenario that hurts ``beta``."""
    m, M = params.m, params.M
    if params.beta <= 1:
        return 2 * m, params.beta * m
    # item 3's sample is 0 w.p. 1/2: both m's are taken, then nothing else fits
    # otherwise at best m + M when r3 = M, and 2m when r3 = 0
    gambler = Fraction(1, 2) * (2 * m) + Fraction(1, 2) * (
        Fraction(1, 2) * (2 * m) + Fraction(1, 2) * (m + M)
    )
    return M / 2, gambler


@dataclass(frozen=True)
class BoundCurve:
    m: Fraction
    M: Fraction
    ratios: dict[int, Fraction | None]  # None: the gambler gets 0 (unbounded)
    lower_bound: Fraction
    limit: Fraction = Fraction(2)

    @property
    def statement(self) -> str:
        return (
            f"min over beta of the forced ratio is {float(self.lower_bound):.6f} at "
            f"M/m = {float(self.M / self.m):g}; the beta=2 ratio "
            f"(M/2)/(M/4 + 7m/4) tends to {self.limit} as M/m grows"
        )


def lower_bound_curve(m: Number, M: Number) -> BoundCurve:
    ratios = {}
    for beta in (0, 1, 2):
        prophet, gambler = bad_example_gains(BadExampleParams(m, M, beta))
        ratios[beta] = None if gambler == 0 else prophet / gambler
    finite = [r for r in ratios.values() if r is not None]
    return BoundCurve(to_exact(m), to_exact(M), ratios, min(finite))


def parse_grid(grid: str | Iterable[Number]) -> list[Fraction]:
    if isinstance(grid, str):
        grid = [g for g in grid.split(",") if g.strip()]
    values = sorted({to_exact(g) for g in grid})
    if not values:
        raise ModelError("grid is empty")
    if values[0] < 0:
        raise ModelError(f"grid values must be nonnegative, got {values[0]}")
    if len(values) < 2:
        raise ModelError("grid needs at least two values to form a pair")
    return values


@dataclass
class SearchReport:
    k: int
    max_n: int
    grid: list[Fraction]
    instances_checked: int = 0
    skipped_as_rescaled: int = 0
    per_n: dict[int, int] = field(default_factory=dict)
    violations: list[tuple[Instance, Fraction]] = field(default_factory=list)
    worst_margin_ratio: Fraction | None = None  # min over instances of margin / E[prophet]

    @property
    def grid_description(self) -> str:
        return "{" + ",".join(str(g) for g in self.grid) + "}, all ordered pairs y > z"


def _rescalable(vals: np.ndarray, grid_ints: np.ndarray) -> np.ndarray:
    """Rows whose values, scaled up so the max lands on a larger grid value, stay in the grid."""
    flat = vals.reshape(len(vals), -1)
    top = flat.max(axis=1)
    out = np.zeros(len(vals), dtype=bool)
    for mx in np.unique(top):
        rows = np.nonzero(top == mx)[0]
        sub = flat[rows]
        for g in grid_ints[grid_ints > mx]:
            scaled = sub * g
            ok = (scaled % mx == 0) & np.isin(scaled // mx, grid_ints)
            out[rows[ok.all(axis=1)]] = True
    return out


def _scan_chunk(chunk, k, grid_ints):
    vals = np.array(chunk, dtype=np.int64)
    skip = _rescalable(vals, grid_ints)
    vals = vals[~skip]
    if len(vals) == 0:
        return int(skip.sum()), 0, [], None
    prophet, gambler = batch_scaled_gains(vals, k)
    margin = 2 * gambler - prophet
    bad = [(vals[i].tolist(), int(margin[i])) for i in np.nonzero(margin < 0)[0]]
    # prophet > 0 always holds here: every instance has some y > 0
    rel = margin / prophet
    i = int(np.argmin(rel))
    worst = Fraction(int(margin[i]), int(prophet[i]))
    return int(skip.sum()), len(vals), bad, worst


def conjecture_search(
    k: int,
    max_n: int,
    value_grid: str | Sequence[Number],
    min_n: int = 1,
    chunk_size: int = 20000,
    workers: int | None = None,
) -> SearchReport:
    """Check ``2 E[gambler] >= E[prophet]`` on every grid instance with n <= max_n.

    Instances that are a rescaling of another enumerated instance are skipped;
    both expectations scale linearly, so the margin's sign is unchanged.
    Every negative margin found is recomputed by the exact oracle on its own.
    """
    if k < 1:
        raise ModelError(f"rank k must be positive, got {k}")
    grid = parse_grid(value_grid)
    denom = math.lcm(*(g.denominator for g in grid))
    grid_ints = np.array([int(g * denom) for g in grid], dtype=np.int64)
    pairs = [(y, z) for y in grid_ints.tolist() for z in grid_ints.tolist() if y > z]
    report = SearchReport(k, max_n, grid)
    workers = workers or default_workers()

    for n in range(min_n, max_n + 1):
        product = itertools.product(pairs, repeat=n)
        chunks = iter(lambda: list(itertools.islice(product, chunk_size)), [])
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _scan_chunk(c, k, grid_ints), chunks))
        checked = 0
        for skipped, count, bad, worst in results:
            report.skipped_as_rescaled += skipped
            checked += count
            for vals, _ in bad:
                inst = Instance.from_values(
                    [(Fraction(y, denom), Fraction(z, denom)) for y, z in vals], k
                )
                exact = enumerate_pairwise(inst, workers=1).margin
                report.violations.append((inst, exact))
            if worst is not None and (
                report.worst_margin_ratio is None or worst < report.worst_margin_ratio
            ):
                report.worst_margin_ratio = worst
        report.per_n[n] = checked
        report.instances_checked += checked
    return report
