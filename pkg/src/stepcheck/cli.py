"""Command-line interface.

    stepcheck check MODEL [--name N] [options]     run declared checks
    stepcheck lts MODEL --system S [options]       export a state space
    stepcheck derive-ab MODEL --wso NAME [options] derive an activity base

Exit codes: 0 all checks hold, 1 some check fails, 2 usage or model error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

from . import composition
from .dsl import ParseError, ResolutionError, parse_model
from .equivalence import check_relation, minimize
from .model import Model, RELATIONS
from .semantics import (
    Config,
    SemanticsError,
    StepLTS,
    Var,
    generate_lts,
    label_str,
    prune_dead,
)

_OVERRIDE_KEYS = {
    "comm": "comm_policy",
    "step": "step_mode",
    "round": "round_mode",
    "shadow": "shadow_policy",
}


_FLAG_DEFAULTS = {
    "comm_policy": "chained",
    "step_mode": "step",
    "round_mode": "overlap",
    "shadow_policy": "strict",
    "max_states": 100000,
}


def _config_from_args(args, overrides=None) -> Config:
    # precedence: explicit command-line flag > check option > default
    values = dict(_FLAG_DEFAULTS)
    for key, value in (overrides or {}).items():
        if key in _OVERRIDE_KEYS:
            values[_OVERRIDE_KEYS[key]] = value
        elif key == "max_states":
            values["max_states"] = int(value)
        else:
            raise SemanticsError(f"unknown check option {key}")
    for field in _FLAG_DEFAULTS:
        flag = getattr(args, field)
        if flag is not None:
            values[field] = flag
    return Config(**values)


def _add_config_args(p):
    p.add_argument("--comm-policy", choices=("binary", "chained"))
    p.add_argument("--step-mode", choices=("interleave", "step"))
    p.add_argument("--round-mode", choices=("overlap", "barrier"))
    p.add_argument("--shadow-policy", choices=("strict", "loose"))
    p.add_argument("--max-states", type=int)


def _load_model(path: str) -> Model:
    with open(path, "r", encoding="utf-8") as fh:
        source = fh.read()
    model = parse_model(source)
    violations = model.validate()
    if violations:
        lines = "\n".join(f"  {v.kind}: {v.message}" for v in violations)
        raise SemanticsError(f"model is not well-formed:\n{lines}")
    return model


def _side_lts(model: Model, name: str, config: Config) -> StepLTS:
    if name in model.systems:
        return prune_dead(generate_lts(model.systems[name], model, config))
    return generate_lts(Var(name), model, config)


def _run_checks(model: Model, args) -> int:
    goals = model.checks
    if args.name:
        goals = tuple(g for g in goals if g.name == args.name)
        if not goals:
            raise SemanticsError(f"no check named {args.name}")
    if not goals:
        raise SemanticsError("the model declares no checks")
    reports = []
    worst = 0
    for goal in goals:
        config = _config_from_args(args, goal.overrides)
        start = time.monotonic()
        left = _side_lts(model, goal.left, config)
        right = _side_lts(model, goal.right, config)
        verdict = check_relation(goal.relation, left, right)
        if args.rooted and goal.relation == "branching-bisim":
            from .equivalence import rooted_branching_bisim
            verdict = rooted_branching_bisim(left, right)
        elapsed = time.monotonic() - start
        reports.append((goal, verdict, left, right, elapsed))
        if not verdict.holds:
            worst = 1
    if args.json:
        out = []
        for goal, verdict, left, right, _ in reports:
            entry = {
                "check": goal.name,
                "left": goal.left,
                "right": goal.right,
                "relation": goal.relation,
                "holds": verdict.holds,
                "left_states": left.num_states,
                "right_states": right.num_states,
            }
            cx = verdict.counterexample
            if cx is not None:
                entry["counterexample"] = {
                    "kind": type(cx).__name__,
                    "trace": [label_str(l) for l in cx.trace],
                    "detail": cx.pretty(),
                }
            out.append(entry)
        print(json.dumps(out, indent=2, sort_keys=True))
    else:
        for goal, verdict, left, right, elapsed in reports:
            status = "holds" if verdict.holds else "FAILS"
            print(f"{goal.name}: {goal.left} vs {goal.right} "
                  f"({goal.relation}) {status} "
                  f"[{left.num_states}/{right.num_states} states, "
                  f"{elapsed:.2f}s]")
            if verdict.counterexample is not None:
                print(f"  {verdict.counterexample.pretty()}")
    return worst


def _lts_json(lts: StepLTS) -> dict:
    dead = set(lts.deadlock_states())
    return {
        "initial": lts.initial,
        "states": [{"id": i, "deadlock": i in dead}
                   for i in range(lts.num_states)],
        "transitions": [
            {"from": s,
             "label": [l.pretty() for l in a] or ["tau"],
             "to": t}
            for s, a, t in lts.transitions],
    }


def _lts_dot(lts: StepLTS, name: str) -> str:
    lines = [f'digraph "{name}" {{', "  rankdir=LR;",
             '  node [shape=circle];']
    dead = set(lts.deadlock_states())
    for i in range(lts.num_states):
        attrs = []
        if i == lts.initial:
            attrs.append("shape=doublecircle")
        if i in dead:
            attrs.append('style=filled fillcolor=lightgray')
        lines.append(f'  {i} [{" ".join(attrs) or "shape=circle"}];')
    for s, a, t in lts.transitions:
        lines.append(f'  {s} -> {t} [label="{label_str(a)}"];')
    lines.append("}")
    return "\n".join(lines)


def _run_lts(model: Model, args) -> int:
    config = _config_from_args(args)
    name = args.system
    if name in model.systems:
        lts = generate_lts(model.systems[name], model, config)
    elif name in model.equations():
        lts = generate_lts(Var(name), model, config)
    else:
        raise SemanticsError(f"no system or process named {name}")
    if args.prune_dead:
        lts = prune_dead(lts)
    if args.minimize:
        lts = minimize(lts, "branching")
    if args.format == "json":
        print(json.dumps(_lts_json(lts), indent=2, sort_keys=True))
    else:
        print(_lts_dot(lts, name))
    return 0


def _run_derive_ab(model: Model, args) -> int:
    config = _config_from_args(args)
    internal = None
    if args.internal:
        if args.internal in model.action_sets:
            internal = model.action_sets[args.internal]
        else:
            internal = frozenset(
                s.strip() for s in args.internal.split(",") if s.strip())
    ab = composition.derive_ab(model, args.wso, internal, config)
    if args.json:
        out = {
            "name": ab.name,
            "source": ab.source,
            "internal": sorted(ab.internal),
            "states": ab.lts.num_states,
            "equations": (None if ab.spec is None else {
                n: _rhs_str(rhs) for n, rhs in ab.spec.equations.items()}),
            "notes": list(ab.notes),
        }
        print(json.dumps(out, indent=2, sort_keys=True))
    else:
        print(f"{ab.name} (from {ab.source}, hiding "
              f"{{{', '.join(sorted(ab.internal))}}})")
        print(ab.pretty_equations())
        for note in ab.notes:
            print(f"note: {note}")
    return 0


def _rhs_str(rhs) -> str:
    from .terms import term_to_str
    return term_to_str(rhs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stepcheck",
        description="verify step-semantics process models")
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="run the model's declared checks")
    p_check.add_argument("model")
    p_check.add_argument("--name", help="run only the named check")
    p_check.add_argument("--rooted", action="store_true",
                         help="use the rooted variant of branching checks")
    p_check.add_argument("--json", action="store_true")
    _add_config_args(p_check)

    p_lts = sub.add_parser("lts", help="export a state space")
    p_lts.add_argument("model")
    p_lts.add_argument("--system", required=True,
                       help="system or process name")
    p_lts.add_argument("--format", choices=("dot", "json"), default="dot")
    p_lts.add_argument("--minimize", action="store_true")
    p_lts.add_argument("--prune-dead", action="store_true")
    _add_config_args(p_lts)

    p_ab = sub.add_parser("derive-ab", help="derive an activity base")
    p_ab.add_argument("model")
    p_ab.add_argument("--wso", required=True, help="orchestration name")
    p_ab.add_argument("--internal",
                      help="comma-separated action names or a set name")
    p_ab.add_argument("--json", action="store_true")
    _add_config_args(p_ab)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        model = _load_model(args.model)
        if args.command == "check":
            return _run_checks(model, args)
        if args.command == "lts":
            return _run_lts(model, args)
        return _run_derive_ab(model, args)
    except (ParseError, ResolutionError, SemanticsError, OSError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
