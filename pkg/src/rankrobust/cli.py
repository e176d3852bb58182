"""Command-line front end: scenario ingestion, preference configuration, and
report emission.

Scenario files are JSON for two-stage variables (``{"states": {id: {"probs":
[...], "payoffs": [...]}}}``) and CSV for scenario panels (header
``state,prob,outcome,asset_1,...``).  Reports echo the fully resolved
preference triple and, with ``--output json``, are byte-identical across
runs with the same configuration and seed.

Exit codes: 0 success, 2 validation failure, 3 property-violation findings.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys

import numpy as np

from . import __version__
from .ambiguity import (
    UtilityGrid,
    c_min_bruteforce,
    parse_penalty,
    parse_prior,
)
from .distortion import identity as identity_distortion, parse_distortion
from .distribution import TwoStageVariable, dominance
from .errors import DomainError, ScenarioError, ShapeError, SpecStringError
from .evaluator import (
    BatterySpec,
    Preference,
    ambiguity_aversion_check,
    ellsberg_demo,
    evaluate,
    prefer,
    reduction_suite,
)
from .portfolio import ScenarioPanel, mean_risk_components, optimize
from .utility import identity_utility, parse_utility

# ValueError covers the package's validation exceptions plus raw parse
# failures (bad numbers in user files); anything else is a real bug and
# should traceback.
_VALIDATION_ERRORS = (ValueError, LookupError, OSError)


def parse_scenario(path: str) -> TwoStageVariable:
    """Load a two-stage variable from its JSON schema with precise diagnostics."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot read scenario: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("states"), dict) or not doc["states"]:
        raise ScenarioError(f"{path}: scenario must be an object with a non-empty 'states' mapping")
    ids, probs, payoffs = [], [], []
    width = None
    for sid, entry in doc["states"].items():
        if not isinstance(entry, dict) or "probs" not in entry or "payoffs" not in entry:
            raise ScenarioError(f"{path}: state {sid!r} must carry 'probs' and 'payoffs' lists")
        p = entry["probs"]
        x = entry["payoffs"]
        if len(p) != len(x):
            raise ScenarioError(
                f"{path}: state {sid!r} has {len(p)} probs but {len(x)} payoffs"
            )
        if width is None:
            width = len(p)
        elif len(p) != width:
            raise ScenarioError(
                f"{path}: state {sid!r} has {len(p)} outcomes, earlier states have {width}"
            )
        total = math.fsum(float(q) for q in p)
        if abs(total - 1.0) > 1e-12:
            raise ScenarioError(
                f"{path}: probabilities in state {sid!r} sum to {total!r}, not 1"
            )
        if any(float(q) < 0.0 for q in p):
            raise ScenarioError(f"{path}: state {sid!r} has a negative probability")
        ids.append(sid)
        probs.append([float(q) for q in p])
        payoffs.append([float(t) for t in x])
    try:
        return TwoStageVariable(ids, probs, payoffs)
    except (DomainError, ShapeError) as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def parse_panel(path: str) -> ScenarioPanel:
    """Load a scenario panel from CSV (state,prob,outcome,asset_1,...)."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot read panel: {exc}") from exc
    if not rows or len(rows[0]) < 4 or rows[0][:3] != ["state", "prob", "outcome"]:
        raise ScenarioError(
            f"{path}: panel header must start with 'state,prob,outcome' followed by asset columns"
        )
    assets = rows[0][3:]
    state_order: list[str] = []
    per_state: dict[str, list[tuple[float, list[float]]]] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3 + len(assets):
            raise ScenarioError(f"{path}: line {lineno}: expected {3 + len(assets)} fields, got {len(row)}")
        state = row[0]
        try:
            prob = float(row[1])
            rets = [float(x) for x in row[3:]]
        except ValueError as exc:
            raise ScenarioError(f"{path}: line {lineno}: {exc}") from exc
        if state not in per_state:
            state_order.append(state)
            per_state[state] = []
        per_state[state].append((prob, rets))
    if not state_order:
        raise ScenarioError(f"{path}: panel has no data rows")
    counts = {len(v) for v in per_state.values()}
    if len(counts) != 1:
        raise ScenarioError(f"{path}: states have differing outcome counts {sorted(counts)}")
    probs = np.array([[p for p, _ in per_state[s]] for s in state_order])
    rets = np.array([[r for _, r in per_state[s]] for s in state_order])
    for s in state_order:
        total = math.fsum(p for p, _ in per_state[s])
        if abs(total - 1.0) > 1e-12:
            raise ScenarioError(f"{path}: probabilities in state {s!r} sum to {total!r}, not 1")
    try:
        return ScenarioPanel(assets, state_order, probs, rets)
    except (DomainError, ShapeError) as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def _resolve_preference(args, state_ids) -> Preference:
    phi = parse_utility(args.utility) if args.utility else identity_utility()
    psi = parse_distortion(args.distortion) if args.distortion else identity_distortion()
    if not args.penalty:
        raise SpecStringError("--penalty is required for this command")
    amb = parse_penalty(args.penalty, state_ids)
    return Preference(phi, psi, amb, state_ids)


def _emit(report: dict, args) -> None:
    if args.output == "json":
        print(json.dumps(report, indent=2, sort_keys=True))
        return
    _print_text(report)


def _print_text(report: dict, indent: int = 0) -> None:
    pad = "  " * indent
    for key, value in report.items():
        if isinstance(value, dict):
            print(f"{pad}{key}:")
            _print_text(value, indent + 1)
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            print(f"{pad}{key}: [{len(value)} entries]")
        else:
            print(f"{pad}{key}: {value}")


def _cmd_evaluate(args) -> int:
    v = parse_scenario(args.scenario)
    pref = _resolve_preference(args, v.state_ids)
    ev = evaluate(v, pref)
    report = {
        "command": args.command,
        "scenario": args.scenario,
        "preference": pref.describe(),
        "seed": args.seed,
        "result": ev.to_dict(),
    }
    if args.command == "ce":
        report["result"] = {"certainty_equivalent": ev.certainty_equivalent}
    _emit(report, args)
    return 0


def _cmd_compare(args) -> int:
    if not args.scenario2:
        raise SpecStringError("compare needs --scenario2")
    v1 = parse_scenario(args.scenario)
    v2 = parse_scenario(args.scenario2)
    pref = _resolve_preference(args, v1.state_ids)
    rel = prefer(v1, v2, pref)
    wording = {">": "first strictly preferred", "<": "second strictly preferred", "~": "indifferent"}
    report = {
        "command": "compare",
        "scenario": args.scenario,
        "scenario2": args.scenario2,
        "preference": pref.describe(),
        "seed": args.seed,
        "result": {
            "relation": rel,
            "verdict": wording[rel],
            "value_1": evaluate(v1, pref).value_utils,
            "value_2": evaluate(v2, pref).value_utils,
        },
    }
    _emit(report, args)
    return 0


def _cmd_dominance(args) -> int:
    if not args.scenario2:
        raise SpecStringError("dominance needs --scenario2")
    v1 = parse_scenario(args.scenario)
    v2 = parse_scenario(args.scenario2)
    if v1.n_states != 1 or v2.n_states != 1:
        raise ScenarioError("dominance compares one-stage laws; scenarios must have a single state")
    phi = parse_utility(args.utility) if args.utility else None
    report_obj = dominance(
        v1.marginal(v1.state_ids[0]),
        v2.marginal(v2.state_ids[0]),
        args.order,
        phi=phi,
    )
    report = {
        "command": "dominance",
        "scenario": args.scenario,
        "scenario2": args.scenario2,
        "order": args.order,
        "utility": phi.describe() if phi else None,
        "seed": args.seed,
        "result": report_obj.to_dict(),
    }
    _emit(report, args)
    return 0


def _cmd_cmin(args) -> int:
    if not args.penalty:
        raise SpecStringError("cmin needs --penalty")
    if not args.prior:
        raise SpecStringError("cmin needs --prior (the prior at which to bound the penalty)")
    try:
        state_ids = _infer_state_ids(args.penalty)
    except SpecStringError:
        text = args.prior.strip()
        if "=" in text:
            state_ids = [p.partition("=")[0].strip() for p in text.split(",")]
        elif text.lower() != "uniform":
            state_ids = [f"w{i}" for i in range(len(text.split(",")))]
        else:
            raise SpecStringError(
                "cannot infer the state count; name the prior weights (w1=p1,...)"
            ) from None
    amb = parse_penalty(args.penalty, state_ids)
    q = parse_prior(args.prior, state_ids)
    lo, hi, step = (float(x) for x in args.grid.split(","))
    grid = UtilityGrid(lo, hi, step)
    bound = c_min_bruteforce(amb.robust_values, q, grid)
    direct = amb.penalty(q)
    report = {
        "command": "cmin",
        "penalty": amb.describe(),
        "prior": [float(x) for x in q.weights],
        "grid": {"low": lo, "high": hi, "step": step},
        "seed": args.seed,
        "result": {
            "dual_lower_bound": bound,
            "direct_penalty": direct if math.isfinite(direct) else "inf",
            "gap": (direct - bound) if math.isfinite(direct) else "inf",
        },
    }
    _emit(report, args)
    return 0


def _infer_state_ids(penalty_spec: str) -> list[str]:
    """Recover the ordered state names from `name=value` tokens in a penalty spec."""
    names: list[str] = []
    for match in re.finditer(r"([A-Za-z_]\w*)\s*=", penalty_spec):
        name = match.group(1)
        if name not in names:
            names.append(name)
    if not names:
        raise SpecStringError(
            "battery needs a penalty spec with named priors (w1=p1,...) to fix the state set"
        )
    return names


def _cmd_battery(args) -> int:
    if not args.penalty:
        raise SpecStringError("battery needs --penalty (state names fix the dimension)")
    state_ids = _infer_state_ids(args.penalty)
    pref = _resolve_preference(args, state_ids)
    spec = BatterySpec(n_cases=args.cases, seed=args.seed)
    reductions = reduction_suite(pref, spec)
    aversion = ambiguity_aversion_check(pref, spec)
    violations = (
        sum(len(reductions[k]["violations"]) for k in (
            "expectation_reduction", "affine_equivariance", "maxmin_reduction", "single_state_rdu"))
        + len(aversion["violations"])
    )
    report = {
        "command": "battery",
        "preference": pref.describe(),
        "seed": args.seed,
        "cases": args.cases,
        "result": {
            "reductions": reductions,
            "ambiguity_aversion": aversion,
            "total_violations": violations,
        },
    }
    _emit(report, args)
    return 3 if violations else 0


def _cmd_portfolio(args) -> int:
    panel = parse_panel(args.scenario)
    pref = _resolve_preference(args, panel.state_ids)
    if not args.mean_prior:
        raise SpecStringError("portfolio needs --mean-prior (the measure for the mean term)")
    p_mean = parse_prior(args.mean_prior, panel.state_ids)
    result = optimize(panel, p_mean, pref, budget=args.budget)
    mean, rho = mean_risk_components(panel, result.weights, p_mean, pref)
    report = {
        "command": "portfolio",
        "scenario": args.scenario,
        "preference": pref.describe(),
        "mean_prior": [float(x) for x in p_mean.weights],
        "seed": args.seed,
        "budget": args.budget,
        "result": {
            "assets": list(panel.assets),
            "weights": [float(x) for x in result.weights.values],
            "objective": result.objective,
            "mean_term": mean,
            "risk_term": rho,
            "evaluations": len(result.trace),
        },
    }
    _emit(report, args)
    return 0


def _cmd_demo(args) -> int:
    if args.topic != "ellsberg":
        raise SpecStringError(f"unknown demo {args.topic!r}; available: ellsberg")
    demo = ellsberg_demo()
    report = {"command": "demo", "topic": "ellsberg", "seed": args.seed, "result": demo}
    if args.output == "json":
        _emit(report, args)
    else:
        for name, value in demo["values"].items():
            print(f"{name} = {value:g}")
        print(demo["isolated_preference"])
        print(demo["combined_preference"])
        print("PASS" if demo["passed"] else "FAIL")
    return 0 if demo["passed"] else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankrobust",
        description="Evaluate risky and ambiguous prospects with rank-dependent "
        "distorted expectations and penalized worst-case priors.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True, help="scenario file (JSON variable or CSV panel)")
        p.add_argument("--scenario2", help="second scenario for compare/dominance")
        p.add_argument("--utility", help="utility spec: affine:a,b | exp:a | power:r | pwl:x1,y1;...")
        p.add_argument("--distortion", help="distortion spec: identity | power:a | prelec:a,b | tk:g | es:l | var:l | dualpower:k | pwl:p1,y1;...")
        p.add_argument("--penalty", help="penalty spec: maxmin:[prior;...] | entropic:theta@prior | gini:theta@prior | table:file.csv")
        p.add_argument("--order", default="fsd", choices=["fsd", "ssd", "phissd"], help="dominance order")
        p.add_argument("--mean-prior", dest="mean_prior", help="prior for the portfolio mean term")
        p.add_argument("--seed", type=int, default=0, help="seed echoed in reports and used by batteries")
        p.add_argument("--output", default="text", choices=["text", "json"])
        p.add_argument("--budget", type=int, default=2000, help="evaluation budget for portfolio search")

    for name in ("evaluate", "ce", "compare", "dominance"):
        common(sub.add_parser(name))
    p_cmin = sub.add_parser("cmin")
    common(p_cmin, scenario=False)
    p_cmin.add_argument("--prior", help="prior at which to lower-bound the penalty")
    p_cmin.add_argument("--grid", default="-5,5,0.25", help="utility lattice low,high,step")
    p_batt = sub.add_parser("battery")
    common(p_batt, scenario=False)
    p_batt.add_argument("--cases", type=int, default=200)
    common(sub.add_parser("portfolio"))
    p_demo = sub.add_parser("demo")
    p_demo.add_argument("topic", help="demo name (ellsberg)")
    p_demo.add_argument("--seed", type=int, default=0)
    p_demo.add_argument("--output", default="text", choices=["text", "json"])
    return parser


_DISPATCH = {
    "evaluate": _cmd_evaluate,
    "ce": _cmd_evaluate,
    "compare": _cmd_compare,
    "dominance": _cmd_dominance,
    "cmin": _cmd_cmin,
    "battery": _cmd_battery,
    "portfolio": _cmd_portfolio,
    "demo": _cmd_demo,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
