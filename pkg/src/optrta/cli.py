"""Command-line entry point: ``optrta <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .demos import DEMOS
from .errors import ConfigError, InternalGuardError, PreconditionError
from .fixtures import FIXTURES, PlantSpec, fixture, load_plant
from .lookahead import recoverable_set
from .plant import RewardStructure
from .scenarios.config import CHECK_SETS, resolve_config
from .solver import save_policy, synthesize_spec

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_GUARD = 0, 2, 3, 4


def _plant(ref: str) -> PlantSpec:
    if ref in FIXTURES:
        return fixture(ref)
    if not Path(ref).exists():
        raise ConfigError(f"plant file not found: {ref}")
    return load_plant(ref)


def cmd_synthesize(args) -> int:
    spec = _plant(args.plant)
    if args.gamma is not None:
        if not 0.0 < args.gamma < 1.0:
            raise ConfigError(f"--gamma must lie in (0, 1), got {args.gamma}")
        spec = PlantSpec(spec.model, spec.unsafe, RewardStructure(spec.reward.table, args.gamma), spec.goal, spec.name)
    res = synthesize_spec(spec)
    m = spec.model
    print(f"verdict: {res.verdict}")
    print(f"policy: {json.dumps(res.policy.named(m))}")
    print(f"value: {res.unshaped_value!r}")
    print(f"shaped value: {res.shaped_value!r} (penalty {res.shaped.penalty!r})")
    if not m.deterministic:
        print(f"linear-solve residual: {res.residual:.3e}")
    if args.out:
        save_policy(m, res, args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_recoverable(args) -> int:
    spec = _plant(args.plant)
    R = recoverable_set(spec.model, spec.unsafe)
    names = [spec.model.states[q] for q in R]
    print(f"recoverable set: {{{', '.join(names)}}}")
    print(f"iterations: {R.iterations}")
    return EXIT_OK


def cmd_train(args) -> int:
    from .tabular import train

    cfg = resolve_config(args.config)
    t0 = time.perf_counter()
    res = train(cfg, episodes=args.episodes, seed=args.seed)
    print(f"trained {args.episodes} episodes in {time.perf_counter() - t0:.1f} s")
    print(f"checkpoint violations: {res.checkpoint_violations}")
    print(f"selected checkpoint: episode {res.checkpoint}" + ("" if res.selected_safe else " (none violation-free)"))
    res.table.save(args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from .evaluation import evaluate
    from .tabular import QTable

    cfg = resolve_config(args.config)
    table = None
    if args.table:
        if not Path(args.table).exists():
            raise ConfigError(f"table file not found: {args.table}")
        table = QTable.load(args.table)
    rep = evaluate(cfg, args.rta, args.episodes, args.seed, table, args.check_set, args.export_dir)
    for k, v in rep.aggregates.items():
        print(f"{k}: {v}")
    if args.report:
        rep.save(args.report)
        print(f"wrote {args.report}")
    return EXIT_OK


def cmd_demo(args) -> int:
    print("\n".join(DEMOS[args.fixture]()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="optrta", description="Safe-optimal runtime assurance switching.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synthesize", help="shaped synthesis of a safe-optimal switching policy")
    s.add_argument("--plant", required=True, help="plant file or built-in fixture name")
    s.add_argument("--gamma", type=float, help="override the plant's discount factor")
    s.add_argument("--out", help="policy output file (.json or .yaml)")
    s.set_defaults(fn=cmd_synthesize)

    s = sub.add_parser("recoverable", help="print the largest recoverable set")
    s.add_argument("--plant", required=True)
    s.set_defaults(fn=cmd_recoverable)

    s = sub.add_parser("train", help="Q-learning on a scenario")
    s.add_argument("--config", required=True, help="scenario file or fixture name")
    s.add_argument("--episodes", type=int, default=20000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="Q-table output (.npz)")
    s.set_defaults(fn=cmd_train)

    s = sub.add_parser("evaluate", help="run episodes under a switching decider")
    s.add_argument("--config", required=True)
    s.add_argument("--rta", required=True, choices=("sim", "reach", "qtable", "always_s", "always_u"))
    s.add_argument("--table")
    s.add_argument("--check-set", choices=CHECK_SETS)
    s.add_argument("--episodes", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--report", help="report output (.json or .yaml)")
    s.add_argument("--export-dir", help="write one trajectory CSV per episode here")
    s.set_defaults(fn=cmd_evaluate)

    s = sub.add_parser("demo", help="print a worked counterexample")
    s.add_argument("--fixture", required=True, choices=tuple(DEMOS))
    s.set_defaults(fn=cmd_demo)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as exc:
        print(f"precondition error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except InternalGuardError as exc:
        print(f"internal guard tripped: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
