"""Command line front end.

    quadswarm run CONFIG [--mode M] [--dt D] [--out DIR]
    quadswarm validate CONFIG
    quadswarm list-scenarios

Exit codes: 0 on success, 2 for config parse or validation problems,
1 for any other failure. The output root defaults to $SWARM_OUT_DIR
(falling back to the working directory); --out overrides it.
"""

import argparse
import sys
from dataclasses import replace
from importlib import resources

from .errors import ParseError, SwarmError, ValidationError
from .mission import load_config, run_mission


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="quadswarm",
        description="Multi-agent rendezvous simulator: agreement "
                    "protocols on communication graphs driving "
                    "quadcopter flight plans.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a mission config")
    p_run.add_argument("config", help="path to a mission .cfg file")
    p_run.add_argument("--mode", choices=("particle", "quad", "compare"),
                       help="override the mission mode")
    p_run.add_argument("--dt", type=float, help="override the step size")
    p_run.add_argument("--out", help="output root directory "
                                     "(default: $SWARM_OUT_DIR or .)")

    p_val = sub.add_parser("validate",
                           help="parse a mission config and report problems")
    p_val.add_argument("config", help="path to a mission .cfg file")

    sub.add_parser("list-scenarios", help="list the bundled scenario files")
    return parser


def _cmd_run(args):
    config = load_config(args.config)
    if args.mode is not None:
        config = replace(config, mode=args.mode)
    if args.dt is not None:
        if not args.dt > 0.0:
            raise ValidationError(f"dt must be positive, got {args.dt}")
        config = replace(config, dt=args.dt)
    report = run_mission(config, out_dir=args.out)
    if report.rendezvous_point is not None:
        x, y, z = report.rendezvous_point
        print(f"rendezvous point: ({x:.6f}, {y:.6f}, {z:.6f})")
    for a in report.agents:
        bits = [f"agent {a.agent}:"]
        if a.particle_final_error is not None:
            bits.append(f"particle err {a.particle_final_error:.3e}")
        if a.quad_final_error is not None:
            bits.append(f"quad err {a.quad_final_error:.3e}")
        if a.max_cross_track is not None:
            bits.append(f"cross-track {a.max_cross_track:.3e}")
        if a.flight_time is not None:
            bits.append(f"flight {a.flight_time:.2f} s")
        print(" ".join(bits))
    return 0


def _cmd_validate(args):
    config = load_config(args.config)
    net = config.network
    print(f"OK: mode={config.mode} agents={net.n} "
          f"edges={len(net.edges)} policy={type(net.policy).__name__}")
    return 0


def _cmd_list_scenarios():
    base = resources.files("quadswarm") / "scenarios"
    names = sorted(entry.name for entry in base.iterdir()
                   if entry.name.endswith(".cfg"))
    for name in names:
        print(base / name)
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "validate":
            return _cmd_validate(args)
        return _cmd_list_scenarios()
    except (ParseError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (SwarmError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
