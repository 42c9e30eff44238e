import itertools
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sspi.core import Y, Z, Assignment, ModelError, Ranked, build_element_table
from sspi.mechanism import Threshold, compute_threshold, prophet_select, run_gambler

from conftest import instances


class TestThreshold:
    def test_second_largest(self):
        assert compute_threshold([5, 2, 7], 2).value == 5

    def test_too_few_samples(self):
        t = compute_threshold([3], 2)
        assert t.value == 0 and t.rank is None
        # the floor sits below a realization of value 0 as well
        assert t.exceeded_by(Ranked(0, 1, Y))

    def test_tied_samples(self):
        m = Fraction(3)
        t = compute_threshold([m, m, 0], 2)
        assert t.value == m and t.rank.item_id == 2

    def test_bad_rank(self):
        with pytest.raises(ModelError):
            compute_threshold([1, 2], 0)

    def test_negative_sample(self):
        with pytest.raises(ModelError):
            compute_threshold([1, -2], 1)


class TestGambler:
    def test_first_two_eligible(self):
        sel = run_gambler(compute_threshold([5, 1, 0], 1), [(1, 7), (2, 6), (3, 9)], 2)
        assert sel.accepted == (1, 2) and sel.gain == 13

    def test_nothing_eligible(self):
        sel = run_gambler(compute_threshold([5, 9], 2), [(1, 3), (2, 4)], 2)
        assert sel.accepted == () and sel.gain == 0

    def test_strict_comparison_uses_tie_order(self):
        # equal value: item 1's realization outranks item 2's sample, not item 1's own sample
        t = Threshold(Fraction(4), Ranked(4, 2, Z))
        assert run_gambler(t, [(1, 4)], 1).accepted == (1,)
        t = Threshold(Fraction(4), Ranked(4, 1, Z))
        assert run_gambler(t, [(2, 4)], 1).accepted == ()

    def test_worked_assignment(self, worked):
        # mask (T, T): samples 4 and 2, realizations 3 and 1
        samples = [Ranked(4, 1, Y), Ranked(2, 2, Y)]
        t = compute_threshold(samples, 2)
        assert t.value == 2
        arrivals = [(2, Ranked(1, 2, Z)), (1, Ranked(3, 1, Z))]
        sel = run_gambler(t, arrivals, 2)
        assert sel.accepted == (1,) and sel.gain == 3

    def test_duplicate_arrival(self):
        with pytest.raises(ModelError):
            run_gambler(Threshold(Fraction(0)), [(1, 2), (1, 3)], 2)


class TestProphet:
    def test_top_two(self):
        assert prophet_select([4, 1, 3], 2).gain == 7

    def test_fewer_items_than_rank(self):
        assert prophet_select([5], 2).gain == 5


def _realize(inst, bits):
    t = build_element_table(inst)
    a = Assignment.from_int(bits, inst.n)
    samples, reals = [], []
    for p, s_is_y in zip(inst.pairs, a.mask):
        ry, rz = Ranked(p.y, p.item_id, Y), Ranked(p.z, p.item_id, Z)
        samples.append(ry if s_is_y else rz)
        reals.append(rz if s_is_y else ry)
    return t, samples, reals


@given(instances(max_n=5), st.data())
def test_gambler_invariants_every_order(inst, data):
    bits = data.draw(st.integers(0, (1 << inst.n) - 1))
    _, samples, reals = _realize(inst, bits)
    k = inst.k
    thr = compute_threshold(samples, k)
    best = prophet_select(reals, k).gain
    eligible = sum(thr.exceeded_by(r) for r in reals)
    for perm in itertools.permutations(range(inst.n)):
        sel = run_gambler(thr, [(i + 1, reals[i]) for i in perm], k)
        assert len(sel.accepted) == min(k, eligible)
        assert all(thr.exceeded_by(reals[i - 1]) for i in sel.accepted)
        assert sel.gain <= best


@given(instances(max_n=5, k=1), st.data())
def test_rank_one_is_max_sample_rule(inst, data):
    bits = data.draw(st.integers(0, (1 << inst.n) - 1))
    _, samples, reals = _realize(inst, bits)
    top = max(samples)
    order = data.draw(st.permutations(range(inst.n)))
    sel = run_gambler(compute_threshold(samples, 1), [(i + 1, reals[i]) for i in order], 1)
    first = next((i + 1 for i in order if reals[i] > top), None)
    assert sel.accepted == (() if first is None else (first,))
