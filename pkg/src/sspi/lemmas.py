"""Closed-form acceptance probabilities for rank 2 and the prefix checks.

``prophet_prob`` is exact: it is the probability that the prophet, taking the
two largest realizations, takes element ``j``.  ``gambler_prob_lb`` is a lower
bound on the probability that the threshold gambler takes element ``j`` under
the worst arrival order; it is only defined for ``j < k_star``.

Both depend on the instance only through the positions
``(two_n, j_star, k_star, j_y, k_y)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .core import DyadicProbability, ElementTable, ModelError

DEFAULT_MAX_TWO_N = 40

D = DyadicProbability.of


@dataclass(frozen=True)
class Configuration:
    two_n: int
    j_star: int
    k_star: int
    j_y: int
    k_y: int

    def __post_init__(self):
        problems = configuration_problems(self)
        if problems:
            raise ModelError(f"invalid configuration {self}: {'; '.join(problems)}")

    @classmethod
    def from_table(cls, table: ElementTable) -> "Configuration":
        return cls(table.two_n, table.j_star, table.k_star, table.j_y, table.k_y)

    @property
    def n(self) -> int:
        return self.two_n // 2


def configuration_problems(c: Configuration) -> list[str]:
    """Reasons ``c`` cannot come from any instance (empty when valid)."""
    out = []
    if c.two_n < 2 or c.two_n % 2:
        out.append("two_n must be even and >= 2")
        return out
    if c.two_n == 2:
        # single pair: k_star / k_y are the sentinel 2n + 1
        if (c.j_y, c.j_star, c.k_star, c.k_y) != (1, 2, 3, 3):
            out.append("single pair must be (j_y, j*, k*, k_y) = (1, 2, 3, 3)")
        return out
    if not 1 <= c.j_y < c.j_star < c.k_star <= c.two_n:
        out.append("need 1 <= j_y < j* < k* <= 2n")
    if not 1 <= c.k_y < c.k_star:
        out.append("need 1 <= k_y < k*")
    if len({c.j_star, c.k_star, c.j_y, c.k_y}) != 4:
        out.append("j*, k*, j_y, k_y must be distinct")
    # Y-elements before k* other than j_y, k_y need Z partners after k*.
    if c.k_star - 4 > c.n - 2:
        out.append("k* too large: not enough Z-elements after k*")
    return out


def prophet_prob(j: int, c: Configuration) -> DyadicProbability:
    if not 1 <= j <= c.two_n:
        raise ModelError(f"element {j} outside 1..{c.two_n}")
    if j < c.j_star:
        return D(j, j)
    if j == c.j_star:
        return D(j - 1, j - 1)
    if j < c.k_star:
        return D(1, j - 2)
    if j == c.k_star:
        return D(1, j - 3)
    return DyadicProbability.zero()


def gambler_prob_lb(j: int, c: Configuration) -> DyadicProbability:
    if not 1 <= j <= c.two_n:
        raise ModelError(f"element {j} outside 1..{c.two_n}")
    if j >= c.k_star:
        raise ModelError(f"no lower bound for element {j} >= k* = {c.k_star}")
    js, ks = c.j_star, c.k_star
    if j <= js - 2:
        return D(3 * j - 1, j + 2)
    if j == js - 1:
        if ks == js + 1:
            return D(4 * j, j + 2)
        if j == c.j_y:
            return D(4 * j - 2, j + 2)
        return D(4 * j - 3, j + 2)
    if j == js:
        return D(4 if ks == js + 1 else 3, j + 1)
    # j* < j < k*; the k*-1 row overrides the generic one
    if j == ks - 1:
        return D(1, j - 2)
    return D(3, j)


@dataclass(frozen=True)
class ProbabilityTables:
    p: tuple[DyadicProbability, ...]
    q: tuple[DyadicProbability | None, ...]  # None where undefined (j >= k*)


def probability_tables(c: Configuration) -> ProbabilityTables:
    p = tuple(prophet_prob(j, c) for j in range(1, c.two_n + 1))
    q = tuple(
        gambler_prob_lb(j, c) if j < c.k_star else None for j in range(1, c.two_n + 1)
    )
    return ProbabilityTables(p, q)


def enumerate_configs(two_n: int) -> Iterator[Configuration]:
    """Every realizable configuration for ``two_n`` elements."""
    if two_n < 4 or two_n % 2:
        raise ModelError(f"two_n must be even and >= 4, got {two_n}")
    n = two_n // 2
    for k_star in range(4, min(two_n, n + 2) + 1):
        for j_star in range(2, k_star):
            for j_y in range(1, j_star):
                for k_y in range(1, k_star):
                    if k_y in (j_y, j_star):
                        continue
                    yield Configuration(two_n, j_star, k_star, j_y, k_y)


def _p(c, j):
    return prophet_prob(j, c).fraction


def _q(c, j):
    # q at k* is never bounded; 0 is the trivial bound used in prefix sums
    return gambler_prob_lb(j, c).fraction if j < c.k_star else Fraction(0)


def _scaled_tables(c: Configuration) -> tuple[int, list[int], list[int]]:
    """(e, P, Q) with P[j] = p_j * 2**e, Q[j] = q_j * 2**e as integers, j = 1..k*."""
    e = c.two_n + 3
    last = min(c.k_star, c.two_n)
    P = [0] * (last + 1)
    Q = [0] * (last + 1)
    for j in range(1, last + 1):
        p = prophet_prob(j, c)
        P[j] = p.numerator << (e - p.log2_denominator)
        if j < c.k_star:
            q = gambler_prob_lb(j, c)
            Q[j] = q.numerator << (e - q.log2_denominator)
    return e, P, Q


def claim_blocks(c: Configuration) -> list[tuple[int, ...]]:
    """Partition of 1..k* into the element blocks the claims bound.

    Singletons are bounded termwise; ``(j*-1, j*)`` (plus ``k*`` when
    ``k* = j*+1``) is the pair block; ``(k*-1, k*)`` closes the prefix when
    ``k* > j*+1``.
    """
    js, ks = c.j_star, c.k_star
    last = min(ks, c.two_n)
    out = []
    j = 1
    while j <= last:
        if j == js - 1:
            block = (js - 1, js, ks) if ks == js + 1 and ks <= last else (js - 1, js)
        elif j == ks - 1 and ks > js + 1 and ks <= last:
            block = (ks - 1, ks)
        else:
            block = (j,)
        out.append(block)
        j = block[-1] + 1
    return out


def prefix_blocks(c: Configuration, i: int) -> list[tuple[int, ...]]:
    """Claim blocks covering the prefix 1..i; a block cut by ``i`` is truncated."""
    out = []
    for block in claim_blocks(c):
        if block[0] > i:
            break
        out.append(tuple(t for t in block if t <= i))
    return out


def block_slack(c: Configuration, terms: tuple[int, ...]) -> Fraction:
    """``2 * sum q - sum p`` over ``terms`` (q at k* counts as 0)."""
    return sum((2 * _q(c, t) - _p(c, t) for t in terms), Fraction(0))


@dataclass
class PrefixReport:
    """Slacks are integers in units of ``2**-log2_scale``."""

    config: Configuration
    ok: bool
    first_violation: int | None
    log2_scale: int = 0
    # slack[i-1] = 2 * sum_{j<=i} q_j - sum_{j<=i} p_j, for i = 1..k*
    slack: list[int] = field(default_factory=list)
    # slack of every block used by some prefix decomposition
    blocks: dict[tuple[int, ...], int] = field(default_factory=dict)

    def exact(self, scaled: int) -> Fraction:
        return Fraction(scaled, 1 << self.log2_scale)

    @property
    def slack_fractions(self) -> list[Fraction]:
        return [self.exact(s) for s in self.slack]


def check_prefix_inequality(c: Configuration, _tables=None) -> PrefixReport:
    """Check ``2 * sum_{j<=i} q_j >= sum_{j<=i} p_j`` for every i <= k*, exactly.

    A prefix passes when its slack is nonnegative and every block of its claim
    decomposition has nonnegative slack too.
    """
    e, P, Q = _tables or _scaled_tables(c)
    report = PrefixReport(c, True, None, e)

    def slack_of(terms):
        s = sum(2 * Q[t] - P[t] for t in terms)
        report.blocks[terms] = s
        return s

    running = 0
    closed_ok = True  # all full blocks ending at or before i
    blocks = claim_blocks(c)
    b = 0
    for i in range(1, len(P)):
        running += 2 * Q[i] - P[i]
        report.slack.append(running)
        block = blocks[b]
        if i == block[-1]:
            closed_ok = closed_ok and slack_of(block) >= 0
            b += 1
            prefix_ok = closed_ok
        else:
            partial = tuple(t for t in block if t <= i)
            prefix_ok = closed_ok and slack_of(partial) >= 0
        if (running < 0 or not prefix_ok) and report.ok:
            report.ok = False
            report.first_violation = i
    return report


@dataclass
class ClaimReport:
    """Block inequalities ``2 * sum q >= sum p``.

    ``termwise``: single elements below k* other than j*.
    ``closing_pair``: the block (k*-1, k*) when k* > j*+1.
    ``jstar_pair``: the block (j*-1, j*); ``jstar_triple`` adds k* when k* = j*+1.
    """

    config: Configuration
    termwise: dict[int, bool]
    closing_pair: bool | None  # None when k* = j* + 1 (block does not occur)
    closing_pair_equality: bool | None
    jstar_pair: bool
    jstar_triple: bool | None  # None unless k* = j* + 1
    jstar_triple_equality: bool | None  # equality of the strengthened form

    @property
    def ok(self) -> bool:
        return (
            all(self.termwise.values())
            and self.closing_pair is not False
            and self.jstar_pair
            and self.jstar_triple is not False
        )


def check_claims(c: Configuration, _tables=None) -> ClaimReport:
    _, P, Q = _tables or _scaled_tables(c)
    js, ks = c.j_star, c.k_star
    termwise = {j: 2 * Q[j] >= P[j] for j in range(1, min(ks, len(P))) if j != js}
    closing_pair = closing_eq = None
    if ks > js + 1:
        lhs = 2 * Q[ks - 1]
        rhs = P[ks] + P[ks - 1]
        closing_pair, closing_eq = lhs >= rhs, lhs == rhs
    lhs3 = 2 * (Q[js - 1] + Q[js])
    jstar_pair = lhs3 >= P[js - 1] + P[js]
    strong = strong_eq = None
    if ks == js + 1 and ks < len(P):
        rhs = P[js - 1] + P[js] + P[ks]
        strong, strong_eq = lhs3 >= rhs, lhs3 == rhs
    return ClaimReport(c, termwise, closing_pair, closing_eq, jstar_pair, strong, strong_eq)


@dataclass
class ConfigSweep:
    max_two_n: int
    configs: int = 0
    prefix_violations: list[tuple[Configuration, int]] = field(default_factory=list)
    claim_violations: list[Configuration] = field(default_factory=list)
    mass_violations: list[Configuration] = field(default_factory=list)
    closing_pair_checked: int = 0
    closing_pair_equalities: int = 0
    triple_checked: int = 0
    triple_equalities: int = 0
    closing_pair_witness: Configuration | None = None
    triple_witness: Configuration | None = None

    @property
    def ok(self) -> bool:
        return not (self.prefix_violations or self.claim_violations or self.mass_violations)


def sweep_configs(max_two_n: int = DEFAULT_MAX_TWO_N, min_two_n: int = 4) -> ConfigSweep:
    """Run the prophet-mass, prefix and claim checks on every configuration."""
    out = ConfigSweep(max_two_n)
    for two_n in range(min_two_n, max_two_n + 1, 2):
        for c in enumerate_configs(two_n):
            out.configs += 1
            tables = _scaled_tables(c)
            e, P, _ = tables
            # p vanishes past k*, so the whole mass sits in P
            if sum(P) != 2 << e:
                out.mass_violations.append(c)
            pr = check_prefix_inequality(c, tables)
            if not pr.ok:
                out.prefix_violations.append((c, pr.first_violation))
            cl = check_claims(c, tables)
            if not cl.ok:
                out.claim_violations.append(c)
            if cl.closing_pair is not None:
                out.closing_pair_checked += 1
                out.closing_pair_equalities += cl.closing_pair_equality
                out.closing_pair_witness = out.closing_pair_witness or c
            if cl.jstar_triple is not None:
                out.triple_checked += 1
                out.triple_equalities += cl.jstar_triple_equality
                out.triple_witness = out.triple_witness or c
    return out
