"""Pairwise sample/realization model: values, tie order, element table.

Every item ``i`` carries two values ``y_i > z_i``.  A fair coin decides
whether ``(s_i, r_i) = (y_i, z_i)`` or ``(z_i, y_i)``.  All 2n values are
laid out in one strictly decreasing sequence ``w_1 > ... > w_2n``; positions
in that sequence are called *elements* and are 1-based throughout.

Equal values are separated by a fixed rule: larger value first, then the
smaller item id, then the Y value of an item before its Z value.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from numbers import Rational
from pathlib import Path
from typing import Iterable, Sequence, Union

Number = Union[int, Fraction, Decimal, str, float]

Y = 0
Z = 1


class ModelError(ValueError):
    """Invalid input to the pairwise model."""


def to_exact(x: Number) -> Fraction:
    """Convert ``x`` to an exact Fraction.

    Strings are parsed as decimals or ``p/q``; floats are converted by their
    exact binary value.
    """
    if isinstance(x, bool):
        raise ModelError(f"boolean is not a value: {x!r}")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, Decimal):
        if not x.is_finite():
            raise ModelError(f"value must be finite, got {x}")
        return Fraction(x)
    if isinstance(x, float):
        if x != x or x in (float("inf"), float("-inf")):
            raise ModelError(f"value must be finite, got {x}")
        return Fraction(x)
    if isinstance(x, str):
        s = x.strip()
        try:
            if "/2^" in s:
                num, exp = s.split("/2^")
                return Fraction(int(num), 2 ** int(exp))
            return Fraction(s)
        except (ValueError, ZeroDivisionError) as exc:
            raise ModelError(f"cannot parse value {x!r}") from exc
    raise ModelError(f"unsupported value type {type(x).__name__}")


def _nonneg(x: Number, what: str = "value") -> Fraction:
    v = to_exact(x)
    if v < 0:
        raise ModelError(f"{what} must be nonnegative, got {v}")
    return v


@functools.total_ordering
@dataclass(frozen=True)
class DyadicProbability:
    """Exact probability ``numerator / 2**log2_denominator``.

    The representation is not reduced; equality and ordering compare values.
    """

    numerator: int
    log2_denominator: int

    def __post_init__(self):
        if self.numerator < 0 or self.log2_denominator < 0:
            raise ModelError(f"invalid dyadic {self.numerator}/2^{self.log2_denominator}")

    @classmethod
    def of(cls, numerator: int, exponent: int) -> "DyadicProbability":
        """Build ``numerator / 2**exponent``, absorbing a negative exponent."""
        if exponent < 0:
            return cls(numerator << -exponent, 0)
        return cls(numerator, exponent)

    @classmethod
    def zero(cls) -> "DyadicProbability":
        return cls(0, 0)

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.log2_denominator)

    def _aligned(self, other: "DyadicProbability") -> tuple[int, int, int]:
        e = max(self.log2_denominator, other.log2_denominator)
        a = self.numerator << (e - self.log2_denominator)
        b = other.numerator << (e - other.log2_denominator)
        return a, b, e

    def __add__(self, other):
        if not isinstance(other, DyadicProbability):
            return NotImplemented
        a, b, e = self._aligned(other)
        return DyadicProbability(a + b, e)

    def __sub__(self, other):
        if not isinstance(other, DyadicProbability):
            return NotImplemented
        a, b, e = self._aligned(other)
        if a < b:
            raise ModelError("dyadic difference would be negative")
        return DyadicProbability(a - b, e)

    def scale(self, value: Number) -> Fraction:
        """Probability times a value, exactly."""
        return self.fraction * to_exact(value)

    def __eq__(self, other):
        if isinstance(other, DyadicProbability):
            a, b, _ = self._aligned(other)
            return a == b
        if isinstance(other, (int, Fraction)):
            return self.fraction == other
        return NotImplemented

    def __lt__(self, other):
        if isinstance(other, DyadicProbability):
            a, b, _ = self._aligned(other)
            return a < b
        if isinstance(other, (int, Fraction)):
            return self.fraction < other
        return NotImplemented

    def __hash__(self):
        return hash(self.fraction)

    def __float__(self):
        return self.numerator / (1 << self.log2_denominator)

    def __str__(self):
        return f"{self.numerator}/2^{self.log2_denominator}"

    @classmethod
    def parse(cls, text: str) -> "DyadicProbability":
        num, _, exp = text.partition("/2^")
        if not exp:
            raise ModelError(f"not a dyadic string: {text!r}")
        return cls(int(num), int(exp))


@functools.total_ordering
@dataclass(frozen=True)
class Ranked:
    """A value together with its tie-breaking identity.

    ``a > b`` iff ``a`` sits higher in the global strict order: larger value,
    then smaller item id, then smaller slot (slot 0 outranks slot 1).
    """

    value: Fraction
    item_id: int
    slot: int = Y

    @property
    def key(self) -> tuple:
        # ascending key == descending rank
        return (-self.value, self.item_id, self.slot)

    def __lt__(self, other):
        if not isinstance(other, Ranked):
            return NotImplemented
        return self.key > other.key

    def __eq__(self, other):
        if not isinstance(other, Ranked):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)


def tiebreak_order(values: Iterable[tuple]) -> list[Ranked]:
    """Sort ``(value, item_id, flag)`` triples from highest to lowest rank.

    ``flag`` is ``"Y"``/``"Z"`` or the slot integers ``Y``/``Z``.
    """
    out = []
    for value, item_id, flag in values:
        if isinstance(flag, str):
            if flag.upper() not in ("Y", "Z"):
                raise ModelError(f"flag must be Y or Z, got {flag!r}")
            slot = Y if flag.upper() == "Y" else Z
        else:
            slot = int(flag)
        out.append(Ranked(_nonneg(value), int(item_id), slot))
    return sorted(out, reverse=True)


@dataclass(frozen=True)
class ItemPair:
    y: Fraction
    z: Fraction
    item_id: int

    def __post_init__(self):
        object.__setattr__(self, "y", _nonneg(self.y, "y"))
        object.__setattr__(self, "z", _nonneg(self.z, "z"))
        if self.y < self.z:
            raise ModelError(f"item {self.item_id}: y={self.y} < z={self.z}")
        if self.item_id < 1:
            raise ModelError(f"item_id must be >= 1, got {self.item_id}")


@dataclass(frozen=True)
class Instance:
    """``n`` value pairs and the matroid rank ``k``.

    ``y == z`` is accepted; the tie order puts Y above Z.
    """

    pairs: tuple[ItemPair, ...]
    k: int

    def __post_init__(self):
        if len(self.pairs) < 1:
            raise ModelError("an instance needs at least one pair")
        if not isinstance(self.k, int) or self.k < 1:
            raise ModelError(f"rank k must be a positive integer, got {self.k!r}")
        ids = [p.item_id for p in self.pairs]
        if ids != list(range(1, len(ids) + 1)):
            raise ModelError(f"item ids must be 1..n in order, got {ids}")

    @classmethod
    def from_values(cls, pairs: Iterable[Sequence[Number]], k: int) -> "Instance":
        items = []
        for i, pair in enumerate(pairs, start=1):
            if len(pair) != 2:
                raise ModelError(f"pair {i} must have two values, got {pair!r}")
            items.append(ItemPair(to_exact(pair[0]), to_exact(pair[1]), i))
        return cls(tuple(items), k)

    @property
    def n(self) -> int:
        return len(self.pairs)

    def values(self) -> list[tuple[Fraction, Fraction]]:
        return [(p.y, p.z) for p in self.pairs]

    def to_dict(self) -> dict:
        return {"k": self.k, "pairs": [[_num_str(p.y), _num_str(p.z)] for p in self.pairs]}


def _num_str(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def load_instance(path: str | Path) -> Instance:
    """Read an instance document: ``{"k": 2, "pairs": [["4", "3"], [2, 1]]}``."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return instance_from_dict(doc, source=str(path))


def instance_from_dict(doc: dict, source: str = "<instance>") -> Instance:
    if not isinstance(doc, dict):
        raise ModelError(f"{source}: top level must be an object")
    for field in ("k", "pairs"):
        if field not in doc:
            raise ModelError(f"{source}: missing field '{field}'")
    if not isinstance(doc["pairs"], list):
        raise ModelError(f"{source}: field 'pairs' must be an array")
    try:
        return Instance.from_values(doc["pairs"], doc["k"])
    except (ModelError, TypeError) as exc:
        raise ModelError(f"{source}: {exc}") from exc


@dataclass(frozen=True)
class ElementTable:
    """The 2n values in descending tie-broken order with their pair links.

    Element indices are 1-based.  ``k_star`` and ``k_y`` equal ``2n + 1``
    when there is a single pair.
    """

    w: tuple[Fraction, ...]
    pair_of: tuple[int, ...]
    is_y: tuple[bool, ...]
    j_star: int
    k_star: int
    j_y: int
    k_y: int

    @property
    def two_n(self) -> int:
        return len(self.w)

    @property
    def n(self) -> int:
        return len(self.w) // 2

    def element_of(self, item_id: int, y: bool) -> int:
        for j in range(1, self.two_n + 1):
            if self.pair_of[j - 1] == item_id and self.is_y[j - 1] == y:
                return j
        raise KeyError((item_id, y))

    def partner(self, j: int) -> int:
        return self.element_of(self.pair_of[j - 1], not self.is_y[j - 1])


def build_element_table(instance: Instance) -> ElementTable:
    entries = []
    for p in instance.pairs:
        entries.append(Ranked(p.y, p.item_id, Y))
        entries.append(Ranked(p.z, p.item_id, Z))
    entries.sort(reverse=True)

    w = tuple(e.value for e in entries)
    pair_of = tuple(e.item_id for e in entries)
    is_y = tuple(e.slot == Y for e in entries)
    y_pos = {e.item_id: j for j, e in enumerate(entries, start=1) if e.slot == Y}
    z_positions = [j for j, e in enumerate(entries, start=1) if e.slot == Z]

    sentinel = len(entries) + 1
    j_star = z_positions[0]
    j_y = y_pos[pair_of[j_star - 1]]
    if len(z_positions) > 1:
        k_star = z_positions[1]
        k_y = y_pos[pair_of[k_star - 1]]
    else:
        k_star = k_y = sentinel
    return ElementTable(w, pair_of, is_y, j_star, k_star, j_y, k_y)


@dataclass(frozen=True)
class Assignment:
    """One S/R labelling; ``mask[i]`` true means item ``i+1`` samples its y."""

    mask: tuple[bool, ...]

    @classmethod
    def from_int(cls, bits: int, n: int) -> "Assignment":
        return cls(tuple(bool(bits >> i & 1) for i in range(n)))

    def to_int(self) -> int:
        return sum(1 << i for i, b in enumerate(self.mask) if b)

    @property
    def weight(self) -> DyadicProbability:
        return DyadicProbability(1, len(self.mask))


def all_assignments(n: int) -> Iterable[Assignment]:
    for bits in range(1 << n):
        yield Assignment.from_int(bits, n)


def classify_assignment(table: ElementTable, a: Assignment) -> tuple[bool, ...]:
    """Per-element labels; ``True`` marks an S-element, ``False`` an R-element."""
    if len(a.mask) != table.n:
        raise ModelError(f"assignment has {len(a.mask)} items, table has {table.n}")
    return tuple(a.mask[item - 1] == y for item, y in zip(table.pair_of, table.is_y))


def ranked_elements(table: ElementTable) -> list[Ranked]:
    """Element ``j`` as a Ranked value (list index ``j - 1``)."""
    return [
        Ranked(v, item, Y if y else Z)
        for v, item, y in zip(table.w, table.pair_of, table.is_y)
    ]


def enumerate_order_types(n: int) -> Iterable[tuple[tuple[int, int], ...]]:
    """All ways to split positions 1..2n into (y_pos, z_pos) pairs, y_pos < z_pos.

    Pairs come out sorted by y_pos.  There are (2n-1)!! of them; together they
    cover every instance up to order-isomorphism of the 2n values.
    """

    def rec(free: tuple[int, ...]):
        if not free:
            yield ()
            return
        head, rest = free[0], free[1:]
        for idx, partner in enumerate(rest):
            for tail in rec(rest[:idx] + rest[idx + 1 :]):
                yield ((head, partner),) + tail

    yield from rec(tuple(range(1, 2 * n + 1)))


def instance_from_order_type(
    pairs: Sequence[tuple[int, int]], k: int, base: int = 2
) -> Instance:
    """Instance whose element ``j`` has value ``base**(2n - j)``.

    With ``base=2`` distinct element sets have distinct value sums.
    """
    two_n = 2 * len(pairs)
    return Instance.from_values(
        [(base ** (two_n - jy), base ** (two_n - jz)) for jy, jz in pairs], k
    )
