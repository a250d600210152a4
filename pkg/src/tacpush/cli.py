"""Command-line front end: run scenarios, reproduce the experiment grids,
validate scenario files and render trajectory plots."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import exp_harness
from .scenario import ScenarioError, load_scenario
from .scene import builtin_shapes, shape_to_dict


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--workers", type=int, default=1, help="trial worker processes")


def _finish(metrics, records, out_dir: Path) -> int:
    paths = exp_harness.export(records, out_dir)
    exp_harness.plot(records, out_dir / "trajectories.svg")
    print(
        f"{metrics.n_trials} trials, success rate {metrics.success_rate:.1%}, "
        f"mean y_targ "
        + (f"{metrics.mean_y_targ:.2f} mm" if metrics.mean_y_targ is not None else "n/a")
    )
    print(f"wrote {paths['records']}, {paths['taps']}, {paths['metrics']}")
    return 0


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, rng_seed=args.seed)
    if args.noise is not None:
        scenario = dataclasses.replace(
            scenario,
            noise=dataclasses.replace(scenario.noise, enabled=args.noise == "on"),
        )
    scenarios = [scenario]
    for t in range(1, args.trials):
        scenarios.append(
            dataclasses.replace(
                scenario,
                name=f"{scenario.name}_t{t}",
                rng_seed=exp_harness.derive_seed(scenario.rng_seed, t),
            )
        )
    records = exp_harness.run_trials(scenarios, args.workers)
    return _finish(exp_harness.compute_metrics(records), records, args.out)


def _cmd_exp(args, which: int) -> int:
    if which == 1:
        metrics, records = exp_harness.run_experiment_1(
            trials_per_cell=args.trials, master_seed=args.seed, workers=args.workers
        )
    elif which == 2:
        metrics, records = exp_harness.run_experiment_2(
            trials_per_cell=args.trials, master_seed=args.seed, workers=args.workers
        )
    else:
        metrics, records = exp_harness.run_experiment_3(
            trials_per_shape=args.trials, master_seed=args.seed, workers=args.workers
        )
    return _finish(metrics, records, args.out)


def _cmd_plot(args) -> int:
    data = json.loads(Path(args.records).read_text())
    records = data["records"] if isinstance(data, dict) else data
    path = exp_harness.plot(records, args.out)
    print(f"wrote {path}")
    return 0


def _cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    print(
        f"OK: {scenario.name} (object {scenario.object.name}, "
        f"max_taps {scenario.max_taps}, seed {scenario.rng_seed})"
    )
    return 0


def _cmd_shapes(args) -> int:
    payload = {name: shape_to_dict(s) for name, s in builtin_shapes().items()}
    text = json.dumps(payload, indent=1)
    if args.out is not None:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tacpush",
        description="Planar pushing simulator with a tactile dual-loop push controller",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run trials of a scenario file")
    p.add_argument("--scenario", type=Path, required=True)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--noise", choices=("on", "off"), default=None)
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_run)

    for n, trials in ((1, 10), (2, 10), (3, 10)):
        p = sub.add_parser(f"exp{n}", help=f"run the experiment-{n} grid")
        p.add_argument("--trials", type=int, default=trials, help="trials per cell")
        _add_common(p)
        p.set_defaults(func=lambda a, which=n: _cmd_exp(a, which))

    p = sub.add_parser("plot", help="render a records.json to SVG")
    p.add_argument("--records", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_plot)

    p = sub.add_parser("validate", help="parse and validate a scenario file")
    p.add_argument("--scenario", type=Path, required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("shapes", help="export the built-in shape catalog as JSON")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=_cmd_shapes)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
