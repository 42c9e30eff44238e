"""Monte Carlo estimates of prophet and gambler gains for general item distributions.

Each trial draws a sample and a realization per item, sets the threshold from
the samples, and presents the realizations in one of three orders:

* ``fixed``        item order 1..n
* ``random``       a uniformly random permutation per trial
* ``adversarial``  eligible realizations in ascending value (clairvoyant)

Trials are grouped in fixed-size blocks; block ``b`` draws from a Philox
generator keyed on ``(seed, b)``.  Block sums are combined in block order, so
an estimate depends only on ``(spec, k, trials, seed, policy)``.

Equal values follow one global order: larger value, then smaller item id,
then the item's slot 0 before slot 1.  For independent items slot 0 is the
realization; for ``pairwise`` items slot 0 is the larger value ``y``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from statistics import NormalDist
from typing import Union

import numpy as np

from .core import Instance, ModelError, Ranked, to_exact
from .mechanism import compute_threshold, prophet_select, run_gambler
from .oracle import default_workers

SPEC_VERSION = 1
BLOCK_SIZE = 1 << 14
POLICIES = ("fixed", "random", "adversarial")


class SpecError(ModelError):
    """Malformed distribution spec."""


@dataclass(frozen=True)
class Point:
    value: Fraction


@dataclass(frozen=True)
class TwoPoint:
    """``v1`` with probability ``p``, else ``v2``."""

    v1: Fraction
    p: Fraction
    v2: Fraction


@dataclass(frozen=True)
class Uniform:
    lo: Fraction
    hi: Fraction


@dataclass(frozen=True)
class ScaledBernoulli:
    """``value`` with probability ``p``, else 0."""

    value: Fraction
    p: Fraction


@dataclass(frozen=True)
class Pairwise:
    """Sample and realization are ``y`` and ``z`` in a fair random order."""

    y: Fraction
    z: Fraction


Item = Union[Point, TwoPoint, Uniform, ScaledBernoulli, Pairwise]

_FIELDS = {
    "point": (Point, ("value",)),
    "two_point": (TwoPoint, ("v1", "p", "v2")),
    "uniform": (Uniform, ("lo", "hi")),
    "bernoulli": (ScaledBernoulli, ("value", "p")),
    "pairwise": (Pairwise, ("y", "z")),
}
_KIND_OF = {cls: kind for kind, (cls, _) in _FIELDS.items()}


def _check_item(item: Item, where: str) -> None:
    def nonneg(name):
        if getattr(item, name) < 0:
            raise SpecError(f"{where}.{name}: must be nonnegative, got {getattr(item, name)}")

    def prob(name):
        if not 0 <= getattr(item, name) <= 1:
            raise SpecError(f"{where}.{name}: must be in [0, 1], got {getattr(item, name)}")

    kind = _KIND_OF[type(item)]
    for name in _FIELDS[kind][1]:
        (prob if name == "p" else nonneg)(name)
    if isinstance(item, Uniform) and item.hi < item.lo:
        raise SpecError(f"{where}: need lo <= hi, got lo={item.lo}, hi={item.hi}")
    if isinstance(item, Pairwise) and item.y < item.z:
        raise SpecError(f"{where}: need y >= z, got y={item.y}, z={item.z}")


@dataclass(frozen=True)
class DistributionSpec:
    items: tuple[Item, ...]
    k: int

    def __post_init__(self):
        if not self.items:
            raise SpecError("spec needs at least one item")
        if not isinstance(self.k, int) or self.k < 1:
            raise SpecError(f"k: must be a positive integer, got {self.k!r}")
        for i, item in enumerate(self.items):
            _check_item(item, f"items[{i}]")

    @property
    def n(self) -> int:
        return len(self.items)

    @property
    def is_pairwise(self) -> bool:
        return all(isinstance(it, Pairwise) for it in self.items)

    def as_instance(self) -> Instance:
        if not self.is_pairwise:
            raise SpecError("only all-pairwise specs correspond to an instance")
        return Instance.from_values([(it.y, it.z) for it in self.items], self.k)

    @classmethod
    def from_instance(cls, instance: Instance) -> "DistributionSpec":
        return cls(tuple(Pairwise(p.y, p.z) for p in instance.pairs), instance.k)

    def to_dict(self) -> dict:
        items = []
        for it in self.items:
            kind = _KIND_OF[type(it)]
            entry = {"kind": kind}
            for name in _FIELDS[kind][1]:
                v = getattr(it, name)
                entry[name] = str(v)
            items.append(entry)
        return {"version": SPEC_VERSION, "k": self.k, "items": items}


def spec_from_dict(doc, source: str = "<spec>") -> DistributionSpec:
    if not isinstance(doc, dict):
        raise SpecError(f"{source}: top level must be an object")
    version = doc.get("version", SPEC_VERSION)
    if version != SPEC_VERSION:
        raise SpecError(f"{source}: version: unsupported {version!r} (expected {SPEC_VERSION})")
    if "k" not in doc:
        raise SpecError(f"{source}: k: missing")
    if not isinstance(doc.get("items"), list):
        raise SpecError(f"{source}: items: missing or not an array")
    items = []
    for i, entry in enumerate(doc["items"]):
        where = f"{source}: items[{i}]"
        if not isinstance(entry, dict):
            raise SpecError(f"{where}: must be an object")
        kind = entry.get("kind")
        if kind not in _FIELDS:
            raise SpecError(f"{where}.kind: unknown kind {kind!r}; expected one of {sorted(_FIELDS)}")
        cls, names = _FIELDS[kind]
        extra = set(entry) - set(names) - {"kind"}
        if extra:
            raise SpecError(f"{where}: unexpected field(s) {sorted(extra)}")
        args = []
        for name in names:
            if name not in entry:
                raise SpecError(f"{where}.{name}: missing")
            try:
                args.append(to_exact(entry[name]))
            except ModelError as exc:
                raise SpecError(f"{where}.{name}: {exc}") from exc
        items.append(cls(*args))
    try:
        return DistributionSpec(tuple(items), doc["k"])
    except SpecError as exc:
        raise SpecError(f"{source}: {exc}") from exc


def load_spec(path: str | Path) -> DistributionSpec:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return spec_from_dict(doc, source=str(path))


@dataclass(frozen=True)
class Draws:
    """One block of trials.

    ``col0``/``col1`` are each item's slot-0 and slot-1 values;
    ``sample_in_col0`` says which of them is the sample.  ``perm`` is the
    arrival order under the random policy (``None`` otherwise).
    """

    col0: np.ndarray
    col1: np.ndarray
    sample_in_col0: np.ndarray
    perm: np.ndarray | None

    @property
    def samples(self) -> np.ndarray:
        return np.where(self.sample_in_col0, self.col0, self.col1)

    @property
    def realizations(self) -> np.ndarray:
        return np.where(self.sample_in_col0, self.col1, self.col0)


def _draw_value(item: Item, rng: np.random.Generator, size: int) -> np.ndarray:
    if isinstance(item, Point):
        return np.full(size, float(item.value))
    if isinstance(item, TwoPoint):
        return np.where(rng.random(size) < float(item.p), float(item.v1), float(item.v2))
    if isinstance(item, ScaledBernoulli):
        return np.where(rng.random(size) < float(item.p), float(item.value), 0.0)
    if isinstance(item, Uniform):
        return rng.uniform(float(item.lo), float(item.hi), size)
    raise TypeError(item)


def draw_block(spec: DistributionSpec, rng: np.random.Generator, size: int, policy: str) -> Draws:
    n = spec.n
    col0 = np.empty((size, n))
    col1 = np.empty((size, n))
    in0 = np.zeros((size, n), dtype=bool)
    for i, item in enumerate(spec.items):
        if isinstance(item, Pairwise):
            col0[:, i] = float(item.y)
            col1[:, i] = float(item.z)
            in0[:, i] = rng.random(size) < 0.5
        else:
            col1[:, i] = _draw_value(item, rng, size)  # sample
            col0[:, i] = _draw_value(item, rng, size)  # realization
    perm = np.argsort(rng.random((size, n)), axis=1) if policy == "random" else None
    return Draws(col0, col1, in0, perm)


def block_gains(draws: Draws, k: int, policy: str) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial (gambler, prophet) gains for a block, vectorized."""
    size, n = draws.col0.shape
    flat = np.empty((size, 2 * n))
    flat[:, 0::2] = draws.col0
    flat[:, 1::2] = draws.col1
    order = np.argsort(-flat, axis=1, kind="stable")
    rank = np.empty_like(order)
    np.put_along_axis(rank, order, np.arange(2 * n)[None, :].repeat(size, 0), axis=1)
    in0 = draws.sample_in_col0
    s_rank = np.where(in0, rank[:, 0::2], rank[:, 1::2])
    r_rank = np.where(in0, rank[:, 1::2], rank[:, 0::2])
    r = draws.realizations

    if n >= k:
        t_rank = np.sort(s_rank, axis=1)[:, k - 1]
    else:
        t_rank = np.full(size, 2 * n)  # floor below every value
    eligible = r_rank < t_rank[:, None]

    prophet = np.sort(r, axis=1)[:, -k:].sum(axis=1)
    if policy == "adversarial":
        key = np.where(eligible, r_rank, -1)
        idx = np.argsort(key, axis=1)[:, -k:]
        taken = np.take_along_axis(key, idx, axis=1) >= 0
        gambler = (np.take_along_axis(r, idx, axis=1) * taken).sum(axis=1)
    else:
        if policy == "random":
            eligible = np.take_along_axis(eligible, draws.perm, axis=1)
            r = np.take_along_axis(r, draws.perm, axis=1)
        taken = eligible & (np.cumsum(eligible, axis=1) <= k)
        gambler = (r * taken).sum(axis=1)
    return gambler, prophet


@dataclass(frozen=True)
class TrialOutcome:
    samples: tuple[float, ...]
    realizations: tuple[float, ...]
    gambler_gain: float
    prophet_gain: float


def _check_policy(policy):
    if policy not in POLICIES:
        raise ModelError(f"order policy must be one of {POLICIES}, got {policy!r}")


def sample_trial(
    spec: DistributionSpec, k: int, order_policy: str, rng: np.random.Generator
) -> TrialOutcome:
    """One trial, evaluated with the scalar mechanism functions."""
    _check_policy(order_policy)
    d = draw_block(spec, rng, 1, order_policy)
    in0 = d.sample_in_col0[0]
    s_ranked, r_ranked = [], []
    for i in range(spec.n):
        a = Ranked(Fraction(float(d.col0[0, i])), i + 1, 0)
        b = Ranked(Fraction(float(d.col1[0, i])), i + 1, 1)
        s, r = (a, b) if in0[i] else (b, a)
        s_ranked.append(s)
        r_ranked.append(r)
    t = compute_threshold(s_ranked, k)
    arrivals = [(i + 1, r_ranked[i]) for i in range(spec.n)]
    if order_policy == "random":
        arrivals = [arrivals[j] for j in d.perm[0]]
    elif order_policy == "adversarial":
        eligible = sorted((a for a in arrivals if t.exceeded_by(a[1])), key=lambda a: a[1])
        arrivals = eligible + [a for a in arrivals if not t.exceeded_by(a[1])]
    gambler = run_gambler(t, arrivals, k).gain
    prophet = prophet_select(r_ranked, k).gain
    return TrialOutcome(
        tuple(float(s.value) for s in s_ranked),
        tuple(float(r.value) for r in r_ranked),
        float(gambler),
        float(prophet),
    )


def block_rng(seed: int, block: int) -> np.random.Generator:
    if not 0 <= seed < 1 << 64:
        raise ModelError(f"seed must be in [0, 2^64), got {seed}")
    return np.random.Generator(np.random.Philox(key=(block << 64) | seed))


@dataclass(frozen=True)
class RatioEstimate:
    mean_prophet: float
    mean_gambler: float
    ratio: float | None  # None when the gambler mean is 0
    unbounded: bool
    se_prophet: float
    se_gambler: float
    confidence_level: float
    ratio_half_width: float | None
    trials: int
    seed: int
    policy: str

    @property
    def confidence_interval(self) -> tuple[float, float | None]:
        return self.confidence_level, self.ratio_half_width


@dataclass
class _Moments:
    n: int = 0
    mean_g: float = 0.0
    mean_p: float = 0.0
    m2_g: float = 0.0
    m2_p: float = 0.0
    c_gp: float = 0.0

    @classmethod
    def of(cls, g: np.ndarray, p: np.ndarray) -> "_Moments":
        mg, mp = g.mean(), p.mean()
        dg, dp = g - mg, p - mp
        return cls(len(g), mg, mp, (dg * dg).sum(), (dp * dp).sum(), (dg * dp).sum())

    def merge(self, o: "_Moments") -> "_Moments":
        # pairwise update of centered moments (Chan et al.)
        if self.n == 0:
            return o
        n = self.n + o.n
        dg, dp = o.mean_g - self.mean_g, o.mean_p - self.mean_p
        f = self.n * o.n / n
        return _Moments(
            n,
            self.mean_g + dg * o.n / n,
            self.mean_p + dp * o.n / n,
            self.m2_g + o.m2_g + dg * dg * f,
            self.m2_p + o.m2_p + dp * dp * f,
            self.c_gp + o.c_gp + dg * dp * f,
        )


def _block_moments(spec, k, policy, seed, block, size) -> _Moments:
    d = draw_block(spec, block_rng(seed, block), size, policy)
    g, p = block_gains(d, k, policy)
    return _Moments.of(g, p)


def estimate_ratio(
    spec: DistributionSpec,
    k: int | None = None,
    trials: int = 100_000,
    seed: int = 0,
    order_policy: str = "adversarial",
    level: float = 0.95,
    workers: int | None = None,
) -> RatioEstimate:
    _check_policy(order_policy)
    if trials < 1:
        raise ModelError(f"trials must be >= 1, got {trials}")
    k = spec.k if k is None else k
    blocks = [
        (b, min(BLOCK_SIZE, trials - b * BLOCK_SIZE))
        for b in range(math.ceil(trials / BLOCK_SIZE))
    ]
    workers = workers or default_workers()

    def job(bs):
        return _block_moments(spec, k, order_policy, seed, *bs)

    if workers == 1 or len(blocks) == 1:
        parts = [job(bs) for bs in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, blocks))
    m = _Moments()
    for part in parts:  # fixed block order keeps the float result reproducible
        m = m.merge(part)

    n = trials
    mg, mp = float(m.mean_g), float(m.mean_p)
    dof = max(n - 1, 1)
    var_g, var_p, cov = float(m.m2_g) / dof, float(m.m2_p) / dof, float(m.c_gp) / dof
    z = NormalDist().inv_cdf(0.5 + level / 2)

    ratio = half = None
    if mg > 0:
        ratio = mp / mg
        var_ratio = max(var_p - 2 * ratio * cov + ratio * ratio * var_g, 0.0) / (mg * mg * n)
        half = z * math.sqrt(var_ratio)
    return RatioEstimate(
        mean_prophet=mp,
        mean_gambler=mg,
        ratio=ratio,
        unbounded=bool(mg == 0 and mp > 0),
        se_prophet=math.sqrt(var_p / n),
        se_gambler=math.sqrt(var_g / n),
        confidence_level=level,
        ratio_half_width=half,
        trials=trials,
        seed=seed,
        policy=order_policy,
    )


def bad_example_spec(m, M) -> DistributionSpec:
    """Two point masses at m and a fair coin between 0 and M, rank 2."""
    m, M = to_exact(m), to_exact(M)
    return DistributionSpec((Point(m), Point(m), TwoPoint(M, Fraction(1, 2), Fraction(0))), 2)
