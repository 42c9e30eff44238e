"""Command-line entry point.

Exit codes: 0 all checks passed, 1 a check failed or a violation was found,
2 usage or input error, 3 an enumeration cap was exceeded.
"""

from __future__ import annotations

import argparse
import math
import os
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import analysis, lemmas, montecarlo, oracle
from .core import Instance, ModelError, load_instance
from .report import RunReport, element_csv, exact_entry, exact_str

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3
MAX_REPORTED_FAILURES = 20


def _random_instance(rng: random.Random, n: int, k: int) -> Instance:
    # small value range on purpose: ties across and within items are common
    hi = rng.choice((3, 10, 100, 10**6))
    pairs = [sorted((rng.randint(0, hi), rng.randint(0, hi)), reverse=True) for _ in range(n)]
    return Instance.from_values(pairs, k)


def _lemma_failures(res: oracle.ExactResult) -> list[str]:
    c = lemmas.Configuration.from_table(res.table)
    out = []
    for j in range(1, res.table.two_n + 1):
        got = res.prophet_accept_prob[j - 1]
        want = lemmas.prophet_prob(j, c)
        if got != want:
            out.append(f"prophet prob of element {j}: oracle {got} != table {want}")
        if j < c.k_star:
            got_g = res.gambler_accept_prob[j - 1]
            lb = lemmas.gambler_prob_lb(j, c)
            if got_g < lb:
                out.append(f"gambler prob of element {j}: oracle {got_g} < bound {lb}")
    return out


def cmd_verify(args, report: RunReport) -> int:
    if args.max_n > args.cap:
        raise oracle.ResourceCapError(f"--max-n {args.max_n} exceeds the enumeration cap {args.cap}")
    rng = random.Random(args.seed)
    lemma_mode = args.k == 2
    checked = 0
    worst = None
    per_n = {}
    for n in range(args.min_n, args.max_n + 1):
        for _ in range(args.trials_per_n):
            inst = _random_instance(rng, n, args.k)
            res = oracle.enumerate_pairwise(inst, cap=args.cap, workers=args.threads)
            checked += 1
            problems = _lemma_failures(res) if lemma_mode else []
            if res.margin < 0:
                problems.append(f"margin {exact_str(res.margin)} < 0")
            if res.prophet_expectation > 0:
                rel = res.margin / res.prophet_expectation
                worst = rel if worst is None else min(worst, rel)
            for p in problems:
                if len(report.failures) < MAX_REPORTED_FAILURES:
                    report.fail(f"{inst.to_dict()}: {p}")
                else:
                    report.passed = False
        per_n[n] = args.trials_per_n
    report.results = {
        "instances_checked": checked,
        "per_n": per_n,
        "checks": (
            ["prophet table equality", "gambler lower bound", "margin >= 0"]
            if lemma_mode
            else ["margin >= 0"]
        ),
        "min_margin_over_prophet": exact_entry(worst),
    }
    return EXIT_OK if report.passed else EXIT_VIOLATION


def cmd_configs(args, report: RunReport) -> int:
    if args.max_2n < 4 or args.max_2n % 2:
        raise ModelError(f"--max-2n must be even and >= 4, got {args.max_2n}")
    sweep = lemmas.sweep_configs(args.max_2n)

    def cfg(c):
        return None if c is None else vars(c).copy()

    for c in sweep.mass_violations[:MAX_REPORTED_FAILURES]:
        report.fail(f"prophet mass != 2 at {cfg(c)}")
    for c, i in sweep.prefix_violations[:MAX_REPORTED_FAILURES]:
        report.fail(f"prefix inequality fails at i={i} for {cfg(c)}")
    for c in sweep.claim_violations[:MAX_REPORTED_FAILURES]:
        report.fail(f"claim check fails for {cfg(c)}")
    report.passed = sweep.ok

    witnesses = {}
    if sweep.closing_pair_witness:
        c = sweep.closing_pair_witness
        witnesses["closing_pair"] = {
            "config": cfg(c),
            "2*q[k*-1]": exact_entry(2 * lemmas.gambler_prob_lb(c.k_star - 1, c).fraction),
            "p[k*-1]+p[k*]": exact_entry(
                lemmas.prophet_prob(c.k_star - 1, c).fraction + lemmas.prophet_prob(c.k_star, c).fraction
            ),
        }
    if sweep.triple_witness:
        c = sweep.triple_witness
        js = c.j_star
        witnesses["triple_(j*-1,j*,k*)"] = {
            "config": cfg(c),
            "2*(q[j*-1]+q[j*])": exact_entry(
                2 * (lemmas.gambler_prob_lb(js - 1, c).fraction + lemmas.gambler_prob_lb(js, c).fraction)
            ),
            "p[j*-1]+p[j*]+p[k*]": exact_entry(
                sum(lemmas.prophet_prob(j, c).fraction for j in (js - 1, js, c.k_star))
            ),
        }
    report.results = {
        "configurations_checked": sweep.configs,
        "prefix_violations": len(sweep.prefix_violations),
        "claim_violations": len(sweep.claim_violations),
        "prophet_mass_violations": len(sweep.mass_violations),
        "closing_pair_applicable": sweep.closing_pair_checked,
        "closing_pair_equalities": sweep.closing_pair_equalities,
        "triple_(j*-1,j*,k*)_applicable": sweep.triple_checked,
        "triple_(j*-1,j*,k*)_equalities": sweep.triple_equalities,
        "equality_witnesses": witnesses,
    }
    return EXIT_OK if report.passed else EXIT_VIOLATION


def _z(estimate: float, exact: Fraction, se: float) -> float | None:
    diff = estimate - float(exact)
    if se == 0:
        return 0.0 if diff == 0 else math.copysign(math.inf, diff)
    return diff / se


def _exact_rows(res: oracle.ExactResult) -> list[dict]:
    c = lemmas.Configuration.from_table(res.table) if res.k == 2 else None
    rows = []
    for j in range(1, res.table.two_n + 1):
        row = {
            "element": j,
            "value": exact_str(res.table.w[j - 1]),
            "item": res.table.pair_of[j - 1],
            "yz": "Y" if res.table.is_y[j - 1] else "Z",
            "prophet_prob": str(res.prophet_accept_prob[j - 1]),
            "gambler_prob": str(res.gambler_accept_prob[j - 1]),
        }
        if c is not None:
            row["p_table"] = str(lemmas.prophet_prob(j, c))
            row["q_bound"] = str(lemmas.gambler_prob_lb(j, c)) if j < c.k_star else ""
        rows.append(row)
    return rows


def _exact_summary(res: oracle.ExactResult) -> dict:
    t = res.table
    return {
        "prophet_expectation": exact_entry(res.prophet_expectation),
        "gambler_expectation": exact_entry(res.gambler_expectation),
        "ratio": exact_entry(res.ratio) if res.ratio is not None else ("unbounded" if res.unbounded else None),
        "margin": exact_entry(res.margin),
        "positions": {"j_star": t.j_star, "k_star": t.k_star, "j_y": t.j_y, "k_y": t.k_y},
    }


def _write_csv(path, rows):
    if path:
        Path(path).write_text(element_csv(rows))


def cmd_simulate(args, report: RunReport) -> int:
    spec = montecarlo.load_spec(args.spec)
    k = args.k or spec.k
    est = montecarlo.estimate_ratio(
        spec, k, trials=args.trials, seed=args.seed, order_policy=args.order, workers=args.threads
    )
    report.results = {
        "n": spec.n,
        "k": k,
        "mean_prophet": est.mean_prophet,
        "mean_gambler": est.mean_gambler,
        "se_prophet": est.se_prophet,
        "se_gambler": est.se_gambler,
        "ratio": est.ratio,
        "ratio_unbounded": est.unbounded,
        "confidence_interval": {"level": est.confidence_level, "ratio_half_width": est.ratio_half_width},
        "zero_variance": est.se_prophet == 0 and est.se_gambler == 0,
        "trials": est.trials,
    }
    if spec.is_pairwise and spec.n <= args.cap:
        inst = spec.as_instance()
        if k != inst.k:
            inst = Instance(inst.pairs, k)
        res = oracle.enumerate_pairwise(inst, cap=args.cap, workers=args.threads)
        oracle_part = _exact_summary(res)
        # the oracle's gambler faces the worst order; only comparable then
        oracle_part["z_prophet"] = _z(est.mean_prophet, res.prophet_expectation, est.se_prophet)
        if args.order == "adversarial":
            zg = _z(est.mean_gambler, res.gambler_expectation, est.se_gambler)
            oracle_part["z_gambler"] = zg
            if abs(zg) > 3:
                report.fail(f"gambler mean z-score {zg:.3f} outside +-3")
        if abs(oracle_part["z_prophet"]) > 3:
            report.fail(f"prophet mean z-score {oracle_part['z_prophet']:.3f} outside +-3")
        report.results["oracle"] = oracle_part
        _write_csv(args.csv, _exact_rows(res))
    return EXIT_OK if report.passed else EXIT_VIOLATION


def cmd_exact(args, report: RunReport) -> int:
    inst = load_instance(args.instance)
    if args.k:
        inst = Instance(inst.pairs, args.k)
    res = oracle.enumerate_pairwise(inst, cap=args.cap, workers=args.threads)
    report.results = _exact_summary(res)
    rows = _exact_rows(res)
    report.results["elements"] = rows
    if inst.k == 2:
        for p in _lemma_failures(res):
            report.fail(p)
    if inst.k <= 2 and res.margin < 0:
        report.fail(f"margin {exact_str(res.margin)} < 0")
    _write_csv(args.csv, rows)
    return EXIT_OK if report.passed else EXIT_VIOLATION


def cmd_badexample(args, report: RunReport) -> int:
    curve = analysis.lower_bound_curve(args.m, args.M)
    per_beta = {}
    for beta in (0, 1, 2):
        prophet, gambler = analysis.bad_example_gains(analysis.BadExampleParams(args.m, args.M, beta))
        r = curve.ratios[beta]
        per_beta[str(beta)] = {
            "prophet_lower_bound": exact_entry(prophet),
            "gambler_upper_bound": exact_entry(gambler),
            "ratio": exact_entry(r) if r is not None else "unbounded",
        }
    report.results = {
        "per_beta": per_beta,
        "lower_bound": exact_entry(curve.lower_bound),
        "limit": exact_entry(curve.limit),
        "statement": curve.statement,
    }
    return EXIT_OK


def cmd_search(args, report: RunReport) -> int:
    if args.max_n > args.cap:
        raise oracle.ResourceCapError(f"--max-n {args.max_n} exceeds the enumeration cap {args.cap}")
    res = analysis.conjecture_search(args.k, args.max_n, args.grid, min_n=args.min_n, workers=args.threads)
    violations = []
    for inst, margin in res.violations:
        again = oracle.competitive_check(inst, workers=1)
        violations.append(
            {"instance": inst.to_dict(), "margin": exact_entry(margin), "reproduced": again == margin}
        )
        report.fail(f"negative margin {exact_str(margin)} on {inst.to_dict()}")
    report.results = {
        "k": res.k,
        "max_n": res.max_n,
        "grid": res.grid_description,
        "instances_checked": res.instances_checked,
        "per_n": res.per_n,
        "skipped_as_rescaled": res.skipped_as_rescaled,
        "min_margin_over_prophet": exact_entry(res.worst_margin_ratio),
        "violations": violations,
    }
    return EXIT_OK if report.passed else EXIT_VIOLATION


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sspi",
        description="Exact and sampling checks for the single-sample threshold mechanism.",
    )
    ap.add_argument(
        "--threads",
        type=_positive_int,
        default=None,
        help=f"worker cap (default: ${oracle.THREADS_ENV} or CPU count)",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="random instances: oracle vs probability tables and margin")
    p.add_argument("--k", type=_positive_int, default=2)
    p.add_argument("--min-n", type=_positive_int, default=1)
    p.add_argument("--max-n", type=_positive_int, default=10)
    p.add_argument("--trials-per-n", type=_positive_int, default=100)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--cap", type=_positive_int, default=oracle.DEFAULT_CAP)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("configs", help="prefix inequality and claims over all configurations")
    p.add_argument("--max-2n", type=int, default=lemmas.DEFAULT_MAX_TWO_N)
    p.set_defaults(func=cmd_configs)

    p = sub.add_parser("simulate", help="Monte Carlo estimate for a distribution spec file")
    p.add_argument("--spec", required=True)
    p.add_argument("--trials", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--order", choices=montecarlo.POLICIES, default="adversarial")
    p.add_argument("--k", type=_positive_int, default=None, help="override the spec's k")
    p.add_argument("--cap", type=_positive_int, default=oracle.DEFAULT_CAP)
    p.add_argument("--csv", default=None, help="per-element table of the oracle comparison")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("exact", help="exact oracle on an instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--k", type=_positive_int, default=None, help="override the file's k")
    p.add_argument("--cap", type=_positive_int, default=oracle.DEFAULT_CAP)
    p.add_argument("--csv", default=None, help="write per-element probabilities here")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("badexample", help="rank-2 deterministic lower-bound arithmetic")
    p.add_argument("--m", default="1")
    p.add_argument("--M", default="1000000")
    p.set_defaults(func=cmd_badexample)

    p = sub.add_parser("search", help="grid search for negative margins")
    p.add_argument("--k", type=_positive_int, default=3)
    p.add_argument("--min-n", type=_positive_int, default=1)
    p.add_argument("--max-n", type=_positive_int, default=5)
    p.add_argument("--grid", default="0,1,2,4,8,16")
    p.add_argument("--cap", type=_positive_int, default=8)
    p.set_defaults(func=cmd_search)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.threads is None:
        args.threads = oracle.default_workers()
    params = {k: v for k, v in vars(args).items() if k not in ("func",)}
    report = RunReport(args.command, params, seed=getattr(args, "seed", None))
    start = time.perf_counter()
    try:
        code = args.func(args, report)
    except oracle.ResourceCapError as exc:
        print(f"sspi {args.command}: resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ModelError, OSError) as exc:
        print(f"sspi {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report.elapsed_seconds = time.perf_counter() - start
    print(report.to_json())
    return code


if __name__ == "__main__":
    sys.exit(main())
