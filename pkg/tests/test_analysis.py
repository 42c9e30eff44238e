from fractions import Fraction

import pytest

from sspi.analysis import (
    BadExampleParams,
    bad_example_gains,
    conjecture_search,
    lower_bound_curve,
    parse_grid,
)
from sspi.core import Instance, ModelError
from sspi.oracle import competitive_check

F = Fraction


class TestBadExample:
    def test_one_early_acceptance(self):
        assert bad_example_gains(BadExampleParams(1, 1000, 1)) == (2, 1)

    def test_two_early_acceptances(self):
        prophet, gambler = bad_example_gains(BadExampleParams(1, 1000, 2))
        assert prophet == 500 and gambler == F(1007, 4)
        assert str(gambler) == "1007/4"

    def test_no_early_acceptance(self):
        assert bad_example_gains(BadExampleParams(F(3, 2), 10, 0)) == (3, 0)
        assert lower_bound_curve(1, 10).ratios[0] is None

    @pytest.mark.parametrize("m, M", [(1, 10), (F(1, 3), 7), (2, 10**6)])
    def test_closed_forms(self, m, M):
        for beta in (0, 1):
            assert bad_example_gains(BadExampleParams(m, M, beta)) == (2 * F(m), beta * F(m))
        assert bad_example_gains(BadExampleParams(m, M, 2)) == (F(M) / 2, F(M) / 4 + 7 * F(m) / 4)

    @pytest.mark.parametrize("kw", [dict(m=1, M=10, beta=3), dict(m=0, M=10, beta=1), dict(m=5, M=5, beta=2)])
    def test_invalid(self, kw):
        with pytest.raises(ModelError):
            BadExampleParams(**kw)


class TestCurve:
    def test_large_gap(self):
        c = lower_bound_curve(1, 10**6)
        assert c.ratios[2] == F(2000000, 1000007)
        assert c.lower_bound == c.ratios[2] > F(19999, 10000)
        assert c.ratios[1] == 2

    def test_small_gap(self):
        assert lower_bound_curve(1, 10).ratios[2] == F(20, 17)

    def test_monotone_to_two(self):
        rs = [lower_bound_curve(1, M).ratios[2] for M in (10, 10**3, 10**6, 10**9)]
        assert rs == sorted(rs) and len(set(rs)) == len(rs)
        assert all(r < 2 for r in rs)
        assert "tends to 2" in lower_bound_curve(1, 10).statement


class TestGrid:
    def test_parse(self):
        assert parse_grid("4,0, 1,1") == [0, 1, 4]
        assert parse_grid([F(1, 2), 3]) == [F(1, 2), 3]

    @pytest.mark.parametrize("bad", ["", "5", "-1,2", "a,b"])
    def test_bad(self, bad):
        with pytest.raises(ModelError):
            parse_grid(bad)


class TestSearch:
    def test_counts(self):
        # grid {0,1,2}: pairs (1,0),(2,0),(2,1); n=1 keeps only rows whose max is 2
        r = conjecture_search(2, 2, "0,1,2")
        assert r.per_n[1] == 2 and r.skipped_as_rescaled >= 1
        assert r.instances_checked == sum(r.per_n.values())
        assert not r.violations

    @pytest.mark.parametrize("k", [1, 2])
    def test_controls(self, k):
        r = conjecture_search(k, 4, "0,1,3,9")
        assert r.violations == [] and r.worst_margin_ratio >= 0

    def test_rank_one_is_tight(self):
        assert conjecture_search(1, 2, "0,1,2").worst_margin_ratio == 0

    def test_rank_three_small(self):
        r = conjecture_search(3, 4, "0,1,2,4,8,16")
        assert r.violations == [] and r.worst_margin_ratio > 0

    def test_fractional_grid(self):
        r = conjecture_search(2, 2, [0, F(1, 2), 1])
        assert r.instances_checked > 0 and not r.violations

    def test_workers_do_not_change_report(self):
        a = conjecture_search(3, 3, "0,1,2,4", workers=1)
        b = conjecture_search(3, 3, "0,1,2,4", workers=4, chunk_size=7)
        assert (a.per_n, a.worst_margin_ratio, a.skipped_as_rescaled) == (b.per_n, b.worst_margin_ratio, b.skipped_as_rescaled)

    def test_violations_are_recomputed(self, monkeypatch):
        # force a fake negative margin from the batched route; the report must
        # carry the oracle's own margin for that instance
        import sspi.analysis as analysis

        real = analysis.batch_scaled_gains

        def skewed(values, k):
            p, g = real(values, k)
            return p * 3, g

        monkeypatch.setattr(analysis, "batch_scaled_gains", skewed)
        r = analysis.conjecture_search(2, 1, "0,1")
        assert len(r.violations) == 1
        inst, margin = r.violations[0]
        assert inst == Instance.from_values([(1, 0)], 2)
        assert margin == competitive_check(inst) >= 0

    def test_bad_rank(self):
        with pytest.raises(ModelError):
            conjecture_search(0, 2, "0,1")
