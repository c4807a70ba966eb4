"""Command-line entry point: run experiments, validate the energy model,
and solve tiny instances exactly."""

from __future__ import annotations

import argparse
import sys


from . import __version__
from .harness import ConfigError, load_config, run_experiment, validate_energy_model
from .policies import value_iteration


def _parse_eta_list(text: str):
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aoicache",
                                     description="Edge-cache update simulator and DQN toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one policy over an eta grid")
    run.add_argument("--config", required=True, help="JSON config file")
    run.add_argument("--policy", choices=["dqn", "mpu", "ou", "ru"])
    run.add_argument("--eta", type=_parse_eta_list, metavar="LIST",
                     help="comma-separated eta values (overrides eta_sweep)")
    run.add_argument("--epochs", type=int)
    run.add_argument("--reps", type=int, dest="replications")
    run.add_argument("--seed", type=int)
    run.add_argument("--profile", choices=["desk", "paper"])
    run.add_argument("--out", dest="out_dir")
    run.add_argument("--workers", type=int)

    val = sub.add_parser("validate-energy", help="closed form vs Monte-Carlo energy check")
    val.add_argument("--config", required=True)
    val.add_argument("--samples", type=int, default=1_000_000)
    val.add_argument("--out", help="CSV report path")

    tiny = sub.add_parser("solve-tiny", help="exact value iteration on the tiny instance")
    tiny.add_argument("--config", required=True)
    tiny.add_argument("--out", help="CSV export of values and greedy actions")

    sub.add_parser("version", help="print the package version")
    return parser


def _cmd_run(args) -> int:
    overrides = {
        "policy": args.policy,
        "eta_sweep": args.eta,
        "epochs": args.epochs,
        "replications": args.replications,
        "seed": args.seed,
        "profile": args.profile,
        "out_dir": args.out_dir,
        "workers": args.workers,
    }
    config = load_config(args.config, overrides)
    rows = run_experiment(config)
    for (policy, eta), row in sorted(rows.items(), key=lambda kv: kv[0][1]):
        print(f"{policy} eta={eta:g}: reward {row['reward_mean']:.4f} "
              f"(±{row['reward_ci95']:.4f}), aoi {row['aoi_mean']:.4f}, "
              f"energy {row['energy_j_mean']:.4f} J")
    return 0


def _cmd_validate_energy(args) -> int:
    config = load_config(args.config)
    report = validate_energy_model(config, n_samples=args.samples, out_path=args.out)
    for row in report["sensors"]:
        print(f"sensor {row['sensor']:>2}: d={row['distance_m']:7.2f} m  "
              f"beta={row['beta']:10.2f}  outage={row['outage_probability']:.4f}  "
              f"E={row['energy_j']:.4f} J  E_mc={row['energy_mc_j']:.4f} J  "
              f"rel_dev={row['rel_dev_closed_vs_mc']:.5f}  "
              f"alt/closed={row['alt_over_closed']:.4f}")
    verdict = "PASS" if report["passed"] else "FAIL"
    print(f"{verdict}: max closed-vs-MC relative deviation "
          f"{report['max_rel_dev']:.5f} (tolerance {report['tolerance']})")
    return 0 if report["passed"] else 1


def _cmd_solve_tiny(args) -> int:
    config = load_config(args.config)
    spec = config.tiny_spec()
    solution = value_iteration(spec, tolerance=config.tiny_tolerance)
    print(f"states: {spec.state_count} (ages {spec.num_age_states} x "
          f"request support {len(spec.request_vectors)}), "
          f"converged in {solution.iterations} sweeps")
    print(f"optimal return from fresh start: {solution.optimal_return():.6f}")
    for ages, action, value in zip(solution.ages, solution.greedy, solution.values):
        print(f"ages {tuple(int(a) for a in ages)}: update {int(action)}  value {value:.6f}")
    if args.out:
        num_actions = spec.num_sensors + 1
        with open(args.out, "w", newline="") as fh:
            age_cols = ",".join(f"age_{f + 1}" for f in range(spec.num_sensors))
            q_cols = ",".join(f"q_{a}" for a in range(num_actions))
            fh.write(f"{age_cols},greedy_action,value,{q_cols}\n")
            for i, ages in enumerate(solution.ages):
                fields = [str(int(a)) for a in ages]
                fields.append(str(int(solution.greedy[i])))
                fields.append(format(float(solution.values[i]), ".17g"))
                fields.extend(format(float(q), ".17g") for q in solution.q_values[i])
                fh.write(",".join(fields) + "\n")
        print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "validate-energy":
            return _cmd_validate_energy(args)
        if args.command == "solve-tiny":
            return _cmd_solve_tiny(args)
        if args.command == "version":
            print(__version__)
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
