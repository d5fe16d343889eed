"""Command-line entry point: ``fwheb run | check | suite``.

Exit codes: 0 success, 1 runtime failure, 2 invalid problem spec,
3 solver configuration error, 4 failed scientific check, 5 partial suite
failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import analysis as an
from .errors import ConfigError, DimensionError, InvalidInputError, NotApplicableError, TooFewPointsError
from .formats import load_problem_spec, to_jsonable, write_json, write_trace_csv
from .geometry import certify_strong_convexity, lmo_bruteforce
from .objectives import gradient_check
from .problems import CANNED_KINDS, Problem, make_problem
from .solver import SolverConfig, StepRule, fw_solve

log = logging.getLogger("fwheb")

EXIT_OK, EXIT_RUNTIME, EXIT_SPEC, EXIT_CONFIG, EXIT_CHECK, EXIT_SUITE = 0, 1, 2, 3, 4, 5
ALL_CHECKS = ("lmo", "set_sc", "grad", "heb", "lemma1", "lemma2", "envelope")


def default_seed() -> int:
    return int(os.environ.get("FWHEB_SEED", "0"))


def resolve_problem(name: str, dim: Optional[int], seed: int) -> Problem:
    if name in CANNED_KINDS:
        if dim is None:
            dim = 3 if name == "simplex_control" else 2
        return make_problem(name, dim, seed)
    path = Path(name)
    if not path.is_file():
        raise InvalidInputError(f"{name!r} is neither a canned problem nor a spec file")
    return load_problem_spec(path)


# ---------------------------------------------------------------------------
# run


def solve_and_summarize(problem: Problem, rule: str, max_iters: int, stop_gap: float):
    cfg = SolverConfig(step_rule=StepRule.parse(rule), max_iters=max_iters, stop_gap=stop_gap)
    trace = fw_solve(problem, cfg)
    last = trace.records[-1]
    summary: dict[str, Any] = {
        "problem": problem.name,
        "dim": problem.dim,
        "seed": problem.seed,
        "step_rule": cfg.step_rule.value,
        "termination": trace.termination.value,
        "iters": trace.iters,
        "final_gap": last.dual_gap,
        "final_f": last.f,
        "final_h": last.h,
        "fit": None,
    }
    if problem.f_star is not None:
        try:
            summary["fit"] = an.fit_rate(trace).to_dict()
        except TooFewPointsError as e:
            summary["fit_error"] = str(e)
    return trace, summary


def cmd_run(args) -> int:
    problem = resolve_problem(args.problem, args.dim, args.seed)
    trace, summary = solve_and_summarize(problem, args.option, args.max_iters, args.stop_gap)
    if args.trace:
        write_trace_csv(trace, args.trace)
    if args.summary:
        write_json(summary, args.summary)
    log.info("%s: %s after %d iterations, gap %.3e", problem.name, summary["termination"],
             summary["iters"], summary["final_gap"])
    return EXIT_OK


# ---------------------------------------------------------------------------
# check


def _check_lmo(problem: Problem, seed: int) -> an.CheckReport:
    s = problem.set
    rng = np.random.default_rng(seed)
    D = s.diameter()
    excess, infeasible = [], 0
    for i in range(1000):
        g = rng.standard_normal(s.dim)
        y = s.lmo(g)
        infeasible += not s.contains(y)
        yb = lmo_bruteforce(s, g, 10_000, seed + i)
        excess.append(g @ y - g @ yb - 1e-9 * np.linalg.norm(g) * D)
    rep = an.report_from_excess("lmo", np.array(excess), 0.0, n_gradients=1000, brute_samples=10_000)
    if infeasible:
        return an.CheckReport("lmo", rep.violations + infeasible, rep.worst, rep.first_violation_t,
                              dict(rep.params, infeasible=infeasible))
    return rep


def _check_set_sc(problem: Problem, seed: int, alpha_claim: Optional[float]) -> an.CheckReport:
    alpha = problem.set.strong_convexity_param() if alpha_claim is None else alpha_claim
    cert = certify_strong_convexity(problem.set, alpha, 10_000, seed)
    params = {"alpha_claim": alpha, "n_probes": cert.n_probes}
    if cert.counterexample is not None:
        params["counterexample"] = cert.counterexample.to_dict()
    return an.CheckReport("set_sc", 0 if cert.passed else 1, cert.worst_violation, None, params)


def _check_grad(problem: Problem, seed: int) -> an.CheckReport:
    pts = problem.set.sample(np.random.default_rng(seed), 100)
    errs = np.array([gradient_check(problem.objective, p, 1e-5) for p in pts])
    return an.report_from_excess("grad", errs, 1e-6, n_points=100)


def _check_heb(problem: Problem, seed: int) -> an.CheckReport:
    heb = problem.heb
    if heb is None:
        raise NotApplicableError(f"{problem.name} carries no HEB constants")
    est = an.estimate_heb(problem, 10_000, seed)
    dtheta = abs(est.theta_hat - heb.theta) - 0.05
    dc = abs(est.c_hat / heb.c - 1.0) - 0.10
    rep = an.report_from_excess("heb", np.array([dtheta, dc]), 0.0, theta=heb.theta, c=heb.c, **est.to_dict())
    return rep


def _check_lemma1(problem: Problem, seed: int) -> an.CheckReport:
    pts = an.heb_sample_points(problem, 10_000, seed)
    return an.lemma1_check(problem, pts)


def _runs(problem: Problem, max_iters: int):
    for rule in (StepRule.OPTION_I, StepRule.OPTION_II):
        yield rule, fw_solve(problem, SolverConfig(rule, max_iters))


def _merge(name: str, reports: dict) -> an.CheckReport:
    bad = sum(r.violations for r in reports.values())
    worst = max(r.worst for r in reports.values())
    first = next((r.first_violation_t for r in reports.values() if r.first_violation_t is not None), None)
    return an.CheckReport(name, bad, worst, first, {k: r.to_dict() for k, r in reports.items()})


def _check_lemma2(problem: Problem, max_iters: int) -> an.CheckReport:
    reps = {rule.value: an.lemma2_check(tr, problem.alpha, problem.L_f, problem.f_star)
            for rule, tr in _runs(problem, max_iters)}
    return _merge("lemma2", reps)


def envelope_constants(problem: Problem):
    """``(theta, constants)`` of the envelope that applies to ``problem``."""
    gt = problem.ground_truth
    if problem.f_star is None:
        raise NotApplicableError("envelope needs the optimal value")
    if problem.alpha <= 0:
        raise NotApplicableError("envelope needs a strongly convex set")
    if problem.heb is not None and problem.heb.theta < 1.0:
        heb = problem.heb
        return heb.theta, an.theorem_constants(heb.theta, heb.c, problem.alpha, problem.L_f, problem.D)
    if gt is not None and gt.grad_min:
        return 1.0, an.linear_branch_constants(problem.alpha, 1.0 / gt.grad_min, problem.L_f)
    raise NotApplicableError("no error-bound exponent or gradient lower bound available")


def _check_envelope(problem: Problem, max_iters: int) -> an.CheckReport:
    theta, tc = envelope_constants(problem)
    reps = {rule.value: an.envelope_check(tr, tc, theta, problem.f_star)
            for rule, tr in _runs(problem, max_iters)}
    return _merge("envelope", reps)


def run_check(name: str, problem: Problem, args) -> an.CheckReport:
    if name == "lmo":
        return _check_lmo(problem, args.seed)
    if name == "set_sc":
        return _check_set_sc(problem, args.seed, args.alpha_claim)
    if name == "grad":
        return _check_grad(problem, args.seed)
    if name == "heb":
        return _check_heb(problem, args.seed)
    if name == "lemma1":
        return _check_lemma1(problem, args.seed)
    if name == "lemma2":
        return _check_lemma2(problem, args.max_iters)
    if name == "envelope":
        return _check_envelope(problem, args.max_iters)
    raise InvalidInputError(f"unknown check {name!r}")


def cmd_check(args) -> int:
    problem = resolve_problem(args.problem, args.dim, args.seed)
    names = [c.strip() for c in args.checks.split(",") if c.strip()]
    unknown = [n for n in names if n not in ALL_CHECKS]
    if unknown:
        raise InvalidInputError(f"unknown checks: {', '.join(unknown)}")
    results = []
    for name in names:
        try:
            rep = run_check(name, problem, args)
            entry = dict(rep.to_dict(), status="pass" if rep.passed else "fail")
        except NotApplicableError as e:
            entry = {"check": name, "status": "not_applicable", "reason": str(e)}
        results.append(entry)
        log.info("check %-8s %s", name, entry["status"])
    # a check that does not apply to the instance is reported, not failed
    passed = all(r["status"] != "fail" for r in results)
    report = {"problem": problem.name, "seed": args.seed, "passed": passed, "checks": results}
    if args.report:
        write_json(report, args.report)
    else:
        print(json.dumps(to_jsonable(report), indent=2))
    return EXIT_OK if passed else EXIT_CHECK


# ---------------------------------------------------------------------------
# suite


def load_suite_config(config: str) -> dict:
    if config == "default":
        text = resources.files("fwheb").joinpath("default_suite.json").read_text()
    else:
        text = Path(config).read_text()
    cfg = json.loads(text)
    runs = cfg.get("runs")
    if not isinstance(runs, list) or not runs:
        raise InvalidInputError("suite config needs a non-empty 'runs' list")
    for r in runs:
        if "problem" not in r:
            raise InvalidInputError("every suite run needs a 'problem'")
    return cfg


def _suite_entry(job: tuple[int, dict, str, int]) -> dict:
    idx, run, out, default_seed_ = job
    name = run["problem"]
    rule = StepRule.parse(run.get("step_rule", "I"))
    seed = run.get("seed", default_seed_)
    stem = f"{idx:02d}_{Path(name).stem}_{rule.value}"
    entry: dict[str, Any] = {
        "problem": name,
        "step_rule": rule.value,
        "max_iters": run.get("max_iters", 1000),
        "stop_gap": run.get("stop_gap", 0.0),
        "seed": seed,
    }
    try:
        problem = resolve_problem(name, run.get("dim"), seed)
        trace, summary = solve_and_summarize(problem, rule, entry["max_iters"], entry["stop_gap"])
        trace_path, summary_path = Path(out) / f"{stem}.csv", Path(out) / f"{stem}.json"
        write_trace_csv(trace, trace_path)
        write_json(summary, summary_path)
        theta = problem.heb.theta if problem.heb is not None else None
        fit = summary["fit"]
        entry.update(
            status="ok",
            termination=summary["termination"],
            iters=summary["iters"],
            final_gap=summary["final_gap"],
            theta=theta,
            predicted_exponent=None if theta is None or theta >= 1 else -1.0 / (1.0 - theta),
            fitted_exponent=None if fit is None else fit["power_exponent"],
            fit=fit,
            trace=trace_path.name,
            summary=summary_path.name,
        )
        if "fit_error" in summary:
            entry["fit_error"] = summary["fit_error"]
    except Exception as e:  # reported per entry, suite continues
        entry.update(status="error", error=f"{type(e).__name__}: {e}")
    return entry


def cmd_suite(args) -> int:
    cfg = load_suite_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = args.jobs if args.jobs is not None else int(cfg.get("jobs", 1))
    work = [(i, run, str(out), args.seed) for i, run in enumerate(cfg["runs"])]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            entries = list(ex.map(_suite_entry, work))
    else:
        entries = [_suite_entry(w) for w in work]
    ok = all(e["status"] == "ok" for e in entries)
    write_json({"all_ok": ok, "entries": entries}, out / "index.json")
    return EXIT_OK if ok else EXIT_SUITE


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fwheb", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--problem", required=True, help="canned problem name or spec JSON path")
        p.add_argument("--dim", type=int, default=None, help="dimension of a canned problem")
        p.add_argument("--seed", type=int, default=default_seed())

    p = sub.add_parser("run", help="run Frank-Wolfe and write trace/summary")
    common(p)
    p.add_argument("--option", default="I", choices=["I", "II", "fixed"])
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--stop-gap", type=float, default=0.0)
    p.add_argument("--trace", help="trace CSV path")
    p.add_argument("--summary", help="summary JSON path")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", help="run numerical checks; exit 4 on any failure")
    common(p)
    p.add_argument("--checks", default=",".join(ALL_CHECKS))
    p.add_argument("--report", help="report JSON path (stdout if omitted)")
    p.add_argument("--alpha-claim", type=float, default=None,
                   help="strong-convexity parameter to certify instead of the set's own")
    p.add_argument("--max-iters", type=int, default=2000, help="iterations for trace-based checks")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("suite", help="run a batch of problems")
    p.add_argument("--config", default="default", help="suite JSON path or 'default'")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--seed", type=int, default=default_seed())
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InvalidInputError, DimensionError) as e:
        log.error("invalid problem spec: %s", e)
        return EXIT_SPEC
    except ConfigError as e:
        log.error("solver configuration error: %s", e)
        return EXIT_CONFIG
    except Exception as e:
        log.error("%s: %s", type(e).__name__, e)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
