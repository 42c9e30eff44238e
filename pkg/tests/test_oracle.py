import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sspi.core import Assignment, DyadicProbability, Instance, build_element_table
from sspi.oracle import (
    ResourceCapError,
    acceptance_counts,
    adversarial_gambler_gain,
    batch_scaled_gains,
    competitive_check,
    enumerate_pairwise,
    enumerate_pairwise_reference,
    worst_order_certificate,
    worst_order_check,
)

from conftest import instances, random_instance


class TestWorkedInstance:
    @pytest.mark.parametrize(
        "mask, accepted, gain",
        [
            ((True, False), (2, 3), 5),  # S={4,1}: T=1, both 3 and 2 taken
            ((True, True), (2,), 3),  # S={4,2}: T=2, only 3 is above
            ((False, True), (1,), 4),  # S={3,2}: T=2, the realized 4 is taken
            ((False, False), (1, 3), 6),
        ],
    )
    def test_adversarial_gain_per_mask(self, worked, mask, accepted, gain):
        sel = adversarial_gambler_gain(build_element_table(worked), Assignment(mask), 2)
        assert sorted(sel.accepted) == list(accepted) and sel.gain == gain

    def test_expectations(self, worked):
        res = enumerate_pairwise(worked)
        assert res.prophet_expectation == 5
        assert res.gambler_expectation == Fraction(9, 2)
        assert res.ratio == Fraction(10, 9)
        assert res.margin == competitive_check(worked) == 4
        half = DyadicProbability(1, 1)
        assert res.prophet_accept_prob == (half,) * 4
        assert res.gambler_accept_prob == (half, half, half, DyadicProbability(0, 0))

    def test_probabilities_keep_denominator(self, worked):
        res = enumerate_pairwise(worked)
        assert all(p.log2_denominator == 2 for p in res.prophet_accept_prob + res.gambler_accept_prob)


def test_nothing_eligible_gains_zero():
    # k=1, mask True: the sample y is the threshold and the realization z is below it
    t = build_element_table(Instance.from_values([(5, 3)], 1))
    assert adversarial_gambler_gain(t, Assignment((True,)), 1).gain == 0


@pytest.mark.parametrize("y, z", [(2, 1), (7, 0), (3, 3)])
def test_single_pair_rank_two(y, z):
    res = enumerate_pairwise(Instance.from_values([(y, z)], 2))
    assert res.prophet_expectation == res.gambler_expectation == Fraction(y + z, 2)


def test_single_pair_rank_one_pairwise_values():
    # Coupled model: the realization is taken exactly when the sample is z.
    # (With an independent sample, the gambler would get 1/4 here.)
    res = enumerate_pairwise(Instance.from_values([(1, 0)], 1))
    assert res.prophet_expectation == Fraction(1, 2)
    assert res.gambler_expectation == Fraction(1, 2)
    assert res.margin == Fraction(1, 2)


def test_all_tied_pairs():
    assert competitive_check(Instance.from_values([(1, 0), (1, 0)], 2)) >= 0
    assert competitive_check(Instance.from_values([(1, 1), (1, 1)], 2)) >= 0


def test_zero_gambler_flags_unbounded():
    res = enumerate_pairwise(Instance.from_values([(0, 0), (0, 0)], 1))
    assert res.ratio is None and not res.unbounded
    res = enumerate_pairwise(Instance.from_values([(1, 0)] * 2, 1))
    assert res.ratio is not None


def test_cap():
    inst = Instance.from_values([(2, 1)] * 5, 2)
    with pytest.raises(ResourceCapError):
        enumerate_pairwise(inst, cap=4)


@settings(max_examples=60, deadline=None)
@given(instances(max_n=7))
def test_vectorized_matches_reference(inst):
    a = enumerate_pairwise(inst, workers=1)
    b = enumerate_pairwise_reference(inst)
    assert a == b


@settings(max_examples=40, deadline=None)
@given(instances(max_n=8))
def test_expectation_is_probability_weighted_sum(inst):
    res = enumerate_pairwise(inst)
    w = res.table.w
    assert res.prophet_expectation == sum(p.scale(v) for p, v in zip(res.prophet_accept_prob, w))
    assert res.gambler_expectation == sum(q.scale(v) for q, v in zip(res.gambler_accept_prob, w))
    mass = sum((p.fraction for p in res.prophet_accept_prob), Fraction(0))
    assert mass == min(inst.k, inst.n)


@settings(max_examples=50, deadline=None)
@given(instances(max_n=8, k=2))
def test_rank_two_margin(inst):
    assert competitive_check(inst) >= 0


@settings(max_examples=50, deadline=None)
@given(instances(max_n=8, k=1))
def test_rank_one_margin(inst):
    assert competitive_check(inst) >= 0


def test_chunking_and_workers_do_not_matter(monkeypatch):
    import sspi.oracle as oracle

    inst = random_instance(random.Random(3), 17, 2)
    t = build_element_table(inst)
    base = acceptance_counts(t, 2, workers=1)
    assert acceptance_counts(t, 2, workers=4) == base
    monkeypatch.setattr(oracle, "CHUNK_BITS", 11)
    assert acceptance_counts(t, 2, workers=3) == base


def test_mask_order_does_not_matter():
    inst = random_instance(random.Random(5), 6, 2)
    t = build_element_table(inst)
    order = list(range(1 << 6))
    random.Random(1).shuffle(order)
    total = Fraction(0)
    for bits in order:
        total += adversarial_gambler_gain(t, Assignment.from_int(bits, 6), 2).gain
    assert total / 64 == enumerate_pairwise(inst).gambler_expectation


class TestWorstOrder:
    def test_worked_and_small(self, worked):
        for inst in (worked, Instance.from_values([(5, 2)], 1), Instance.from_values([(9, 1), (8, 2), (7, 3)], 2)):
            t = build_element_table(inst)
            for bits in range(1 << inst.n):
                assert worst_order_check(t, Assignment.from_int(bits, inst.n), inst.k)

    @settings(max_examples=40, deadline=None)
    @given(instances(max_n=5))
    def test_certificate_matches_scalar(self, inst):
        t = build_element_table(inst)
        scalar = [
            bits
            for bits in range(1 << inst.n)
            if not worst_order_check(t, Assignment.from_int(bits, inst.n), inst.k)
        ]
        assert worst_order_certificate(t, inst.k) == scalar == []

    def test_certificate_huge_values_falls_back(self):
        inst = Instance.from_values([(2**70, 2**69), (3, 1), (2, 0)], 2)
        assert worst_order_certificate(build_element_table(inst), 2) == []

    def test_cap(self):
        t = build_element_table(Instance.from_values([(2, 1)] * 9, 2))
        with pytest.raises(ResourceCapError):
            worst_order_check(t, Assignment.from_int(0, 9), 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(1, 5), st.data())
def test_batched_gains_match_oracle(k, n, data):
    batch = []
    for _ in range(4):
        pairs = []
        for _ in range(n):
            a, b = data.draw(st.integers(0, 9)), data.draw(st.integers(0, 9))
            pairs.append((max(a, b), min(a, b)))
        batch.append(pairs)
    prophet, gambler = batch_scaled_gains(np.array(batch), k)
    for row, p, g in zip(batch, prophet, gambler):
        res = enumerate_pairwise(Instance.from_values(row, k))
        assert Fraction(int(p), 1 << n) == res.prophet_expectation
        assert Fraction(int(g), 1 << n) == res.gambler_expectation
