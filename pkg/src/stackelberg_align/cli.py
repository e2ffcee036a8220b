"""Command-line front end.

Exit codes: 0 success, 2 usage, 3 validation, 4 solver failure, 5 oracle
failure.  Failures also print one JSON line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from . import algo_policy, oracle
from .domain import (
    Content,
    Entry,
    EntryMode,
    Scenario,
    StrategyProfile,
    load_profile,
    load_scenario,
    profile_to_dict,
    scenario_to_dict,
)
from .equilibrium import (
    EquilibriumResult,
    SelectionRule,
    SolverConfig,
    critical_gamma,
    solve_equilibrium,
    user_q_closed_form,
)
from .errors import AlignError, OracleError, SolverError
from .simulator import regret_curve

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_SOLVER, EXIT_ORACLE = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


def fmt(x: Optional[float]) -> str:
    """Shortest decimal that round-trips the double (at most 17 digits)."""
    if x is None:
        return ""
    return repr(float(x))


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _scenario(args) -> Scenario:
    path = Path(args.scenario)
    if not path.is_file():
        raise UsageError(f"scenario file not found: {path}")
    sc = load_scenario(path)
    changes = {}
    if getattr(args, "gamma_user", None) is not None:
        changes["gamma_user"] = args.gamma_user
    if getattr(args, "cost", None) is not None:
        changes["cost"] = args.cost
    if getattr(args, "entry", None) is not None:
        mode = EntryMode(args.entry)
        p1 = args.p1_a if mode is EntryMode.RE else None
        if mode is EntryMode.RE and p1 is None:
            p1 = sc.entry.p1_a
            if p1 is None:
                raise UsageError("--entry re needs --p1-a")
        changes["entry"] = Entry(mode, p1)
    return sc.with_(**changes) if changes else sc


def _profile(path: str, scenario: Scenario) -> StrategyProfile:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"profile file not found: {p}")
    return load_profile(p, scenario)


def _solver_cfg(args) -> SolverConfig:
    return SolverConfig(max_iters=getattr(args, "max_iters", 100))


def _selection(args) -> Optional[SelectionRule]:
    sel = getattr(args, "selection", None)
    return SelectionRule(sel) if sel else None


# ------------------------------------------------------------------ commands


def result_to_dict(scenario: Scenario, result: EquilibriumResult) -> dict:
    return {
        "gamma_user": scenario.gamma_user,
        "entry": scenario_to_dict(scenario)["entry"],
        "cost": scenario.cost,
        "converged": result.converged,
        "iterations": result.iterations,
        "profile": profile_to_dict(result.profile),
        "margins": result.margins,
        "rationale": {
            k: {"kind": r.rationale.value, "point": list(r.point)} for k, r in result.responses.items()
        },
    }


def cmd_solve(args) -> int:
    sc = _scenario(args)
    result = solve_equilibrium(sc, _selection(args), _solver_cfg(args))
    _emit(json.dumps(result_to_dict(sc, result), indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_thresholds(args) -> int:
    sc = _scenario(args)
    rows = []
    for t in sc.types:
        cg = critical_gamma(sc, t.id)
        rows.append([t.id, fmt(cg.no_signal), fmt(cg.with_signal), fmt(cg.reduction)])
    header = ["type_id", "gamma_crit_nosig", "gamma_crit_sig", "reduction"]
    _emit(_csv_text(header, rows), args.out)
    return EXIT_OK


def simplex_grid(n: int, points: int) -> Iterator[tuple[float, ...]]:
    """Beliefs with coordinates k/(points-1); the first coordinate varies slowest."""
    m = points - 1

    def rec(left: int, k: int) -> Iterator[tuple[int, ...]]:
        if k == 1:
            yield (left,)
            return
        for a in range(left + 1):
            for rest in rec(left - a, k - 1):
                yield (a,) + rest

    for combo in rec(m, n):
        yield tuple(c / m for c in combo)


def cmd_boundary(args) -> int:
    sc = _scenario(args)
    if args.grid < 2:
        raise UsageError("--grid must be at least 2")
    profile = _profile(args.profile, sc)
    h = algo_policy.classifier_weights(sc, profile)
    rows = []
    for lam in simplex_grid(sc.n_types, args.grid):
        score = float(np.dot(lam, h))
        rows.append([fmt(x) for x in lam] + [fmt(score), "A" if score >= 0 else "B"])
    header = [f"lambda_{j + 1}" for j in range(sc.n_types)] + ["margin", "choice"]
    _emit(_csv_text(header, rows), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = _scenario(args)
    if args.steps < 0 or args.reps < 1:
        raise UsageError("--steps must be >= 0 and --reps >= 1")
    sc.index(args.type)
    if args.profile == "solve":
        profile = solve_equilibrium(sc, _selection(args), _solver_cfg(args)).profile
    else:
        profile = _profile(args.profile, sc)
    curve = regret_curve(
        sc, None, args.steps, args.reps, args.seed, _selection(args),
        type_ids=[args.type], actual_profile=profile, solver_cfg=_solver_cfg(args),
    )[args.type]
    rows = [
        [str(int(t)), fmt(a), fmt(b), fmt(r)]
        for t, a, b, r in zip(curve.t, curve.value_actual, curve.value_baseline, curve.regret)
    ]
    _emit(_csv_text(["t", "value_actual", "value_baseline", "regret"], rows), args.out)
    return EXIT_OK


def run_checks(
    scenario: Scenario,
    profile: StrategyProfile,
    cfg: oracle.OracleConfig,
    sweep: int = 21,
) -> list[tuple[str, bool, float, float]]:
    """Oracle checks on one scenario; rows are (name, passed, observed, limit)."""
    rows = []
    n = scenario.n_types
    beliefs = [scenario.prior_array] + [np.eye(n)[j] for j in range(n)]

    worst, limit = -1.0, 1.0
    for b in beliefs:
        res = oracle.value_iterate(scenario, profile, b, cfg)
        lim = cfg.tolerance + res.error_bound
        for s in Content:
            err = abs(algo_policy.qa_value(scenario, profile, b, s) - res.q[0, int(s)])
            if err / lim > worst / limit:
                worst, limit = err, lim
    rows.append(("closed_form_vs_value_iteration", worst <= limit, worst, limit))

    worst = 0.0
    for hz in range(1, oracle.MAX_ENUMERATION_HORIZON + 1):
        res = oracle.value_iterate(scenario, profile, scenario.prior_array, oracle.OracleConfig(horizon=hz))
        for s in Content:
            e = oracle.enumerate_qa_over_histories(scenario, profile, s, hz)
            worst = max(worst, abs(e - res.q[0, int(s)]))
    rows.append(("history_sufficiency", worst <= 1e-12, worst, 1e-12))

    grid = [np.array(b) for b in simplex_grid(n, sweep)]
    checks = oracle.policy_agreement(scenario, profile, grid, cfg)
    bad = sum(
        1 for c in checks if abs(c.score) > 10 * cfg.tolerance and c.closed_form is not c.oracle
    )
    rows.append(("classifier_agreement", bad == 0, float(bad), 0.0))

    if scenario.entry.mode is EntryMode.AE:
        worst = 0.0
        entry = algo_policy.best_content(scenario, profile, scenario.prior_array)
        for t in scenario.types:
            if scenario.prior[scenario.index(t.id)] == 0:
                continue
            hz = oracle.user_horizon(scenario, cfg.tolerance)
            rec = oracle.value_iterate_user(scenario, profile, t.id, entry, hz)
            q = user_q_closed_form(scenario, t.id, profile[t.id])
            cf = q.q_preferred if entry is t.preferred else q.q_other
            worst = max(worst, abs(rec - cf))
        rows.append(("user_closed_form", worst <= 2 * cfg.tolerance, worst, 2 * cfg.tolerance))

    report = oracle.verify_no_deviation(scenario, profile, cfg, tolerance=1e-9, raise_on_failure=False)
    rows.append(("no_profitable_deviation", report.passed, report.max_improvement, 1e-9))
    return rows


def cmd_verify(args) -> int:
    sc = _scenario(args)
    if args.profile:
        profile = _profile(args.profile, sc)
    else:
        profile = solve_equilibrium(sc, _selection(args), _solver_cfg(args)).profile
    cfg = oracle.OracleConfig(tolerance=args.tolerance, deviation_grid=args.grid, method=args.method)
    rows = run_checks(sc, profile, cfg, sweep=args.sweep)
    width = max(len(r[0]) for r in rows)
    out = [f"{'check':<{width}}  status  observed                 limit"]
    for name, ok, obs, lim in rows:
        out.append(f"{name:<{width}}  {'PASS' if ok else 'FAIL':<6}  {obs:<23.17g}  {lim:.17g}")
    _emit("\n".join(out) + "\n", args.out)
    return EXIT_OK if all(r[1] for r in rows) else EXIT_ORACLE


# -------------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors get the JSON line too
        self.print_usage(sys.stderr)
        _error_line("UsageError", message, EXIT_USAGE)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stackelberg-align", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out=True):
        sp.add_argument("--scenario", required=True, help="scenario JSON file")
        if out:
            sp.add_argument("--out", help="output file (default: stdout)")

    def solver_flags(sp):
        sp.add_argument("--gamma-user", type=float, help="override the user discount")
        sp.add_argument("--cost", type=float, help="override or set the signaling cost")
        sp.add_argument("--entry", choices=["ae", "re"], help="override the entry mode")
        sp.add_argument("--p1-a", type=float, help="random-entry probability of A")
        sp.add_argument("--selection", choices=["min", "max"], help="point chosen in a steerable set")
        sp.add_argument("--max-iters", type=int, default=100)

    sp = sub.add_parser("solve", help="solve the user equilibrium")
    common(sp)
    solver_flags(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("thresholds", help="critical user discounts per type")
    common(sp)
    sp.add_argument("--cost", type=float, help="signaling cost")
    sp.set_defaults(func=cmd_thresholds)

    sp = sub.add_parser("boundary", help="algorithm choice over a belief grid")
    common(sp)
    sp.add_argument("--profile", required=True, help="strategy profile JSON file")
    sp.add_argument("--grid", type=int, default=101, help="points per simplex edge")
    sp.set_defaults(func=cmd_boundary)

    sp = sub.add_parser("simulate", help="value and regret curves by simulation")
    common(sp)
    solver_flags(sp)
    sp.add_argument("--profile", required=True, help="profile JSON file, or 'solve'")
    sp.add_argument("--type", required=True, help="simulated type id")
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--reps", type=int, default=1000)
    sp.add_argument("--seed", type=int, required=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="check closed forms against the oracles")
    common(sp)
    solver_flags(sp)
    sp.add_argument("--profile", help="profile to check (default: solved equilibrium)")
    sp.add_argument("--tolerance", type=float, default=1e-6)
    sp.add_argument("--grid", type=int, default=201, help="deviation grid points")
    sp.add_argument("--sweep", type=int, default=21, help="belief grid points per edge")
    sp.add_argument("--method", choices=list(oracle.METHODS), default="vectors", help="value-iteration route")
    sp.set_defaults(func=cmd_verify)
    return p


def _error_line(code: str, message: str, status: int) -> None:
    sys.stderr.write(json.dumps({"error": code, "message": message, "exit": status}) + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers: list[tuple[type, int]] = [
        (UsageError, EXIT_USAGE),
        (SolverError, EXIT_SOLVER),
        (OracleError, EXIT_ORACLE),
        (AlignError, EXIT_VALIDATION),
    ]
    try:
        return args.func(args)
    except tuple(h[0] for h in handlers) as exc:
        status = next(code for cls, code in handlers if isinstance(exc, cls))
        name = type(exc).__name__
        _error_line(name, str(exc), status)
        return status


if __name__ == "__main__":
    sys.exit(main())
