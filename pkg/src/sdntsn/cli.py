"""Command line front end: run, gcl-calc, report, export-launch-config, case-study-file."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .casestudy import case_study
from .engine import US, format_duration, parse_duration
from .scenario import Network, ScenarioConfig, ScenarioError
from .schedule import InfeasibleSchedule, gcl_calc
from .srpdemo import srp_scenario
from .trace import read_trace, report, report_to_csv

BUILTIN = {"case-study": case_study, "srp": srp_scenario}


def load_scenario(name: str) -> ScenarioConfig:
    if name in BUILTIN:
        return BUILTIN[name]()
    return ScenarioConfig.load(name)


def _us(value: str) -> int:
    return parse_duration(value if value[-1].isalpha() else f"{value}us")


def cmd_run(args) -> int:
    cfg = load_scenario(args.scenario)
    if args.seed is not None:
        cfg = cfg.with_params(seed=args.seed)
    result = Network(cfg).run()
    trace_path, log_path = result.write(args.out)
    cuts = sorted({t for t in cfg.timeline.instants() if 0 < t < cfg.duration})
    print(f"# {cfg.name}: {len(result.trace)} frames delivered, "
          f"{result.network.sim.executed} events, seed {cfg.seed}")
    print(f"# trace: {trace_path}\n# control log: {log_path}")
    sys.stdout.write(report_to_csv(report(result.trace, cuts, t_end=cfg.duration)))
    return 0


def cmd_gcl_calc(args) -> int:
    phases = gcl_calc(args.max_frame, args.hp_frame, args.rate, _us(args.cycle),
                      _us(args.margin), step_rounding=args.paper_rounding)
    for label, ns in (("t_red", phases.t_red), ("t_green", phases.t_green),
                      ("t_yellow", phases.t_yellow), ("cycle", phases.cycle)):
        print(f"{label}={format_duration(ns)}")
    print(f"gcl={phases.gcl_text()}")
    return 0


def cmd_report(args) -> int:
    cuts = [parse_duration(c) for c in args.cuts.split(",") if c] if args.cuts else []
    sys.stdout.write(report_to_csv(report(read_trace(args.trace), cuts)))
    return 0


def cmd_export(args) -> int:
    net = Network(load_scenario(args.scenario))
    if args.switch not in net.switches:
        print(f"no switch {args.switch!r}; have {sorted(net.switches)}", file=sys.stderr)
        return 2
    sys.stdout.write(net.switches[args.switch].export_launch_config().to_text())
    return 0


def cmd_case_study_file(args) -> int:
    text = case_study().to_yaml()
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sdntsn", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario file or a built-in scenario")
    r.add_argument("scenario", help="path to a scenario YAML file, or one of: "
                   + ", ".join(BUILTIN))
    r.add_argument("--seed", type=int)
    r.add_argument("--out", default="out")
    r.set_defaults(func=cmd_run)

    g = sub.add_parser("gcl-calc", help="red/green/yellow phase calculator")
    g.add_argument("--max-frame", type=int, required=True, help="bytes")
    g.add_argument("--hp-frame", type=int, required=True, help="bytes")
    g.add_argument("--rate", type=int, required=True, help="bit/s")
    g.add_argument("--cycle", required=True, help="us (or with a unit suffix)")
    g.add_argument("--margin", required=True, help="us (or with a unit suffix)")
    g.add_argument("--paper-rounding", action="store_true",
                   help="round serialization terms to 5 us before adding the margin")
    g.set_defaults(func=cmd_gcl_calc)

    rp = sub.add_parser("report", help="per-flow, per-interval latency statistics")
    rp.add_argument("trace")
    rp.add_argument("--cuts", default="2s,4s,6s,8s")
    rp.set_defaults(func=cmd_report)

    e = sub.add_parser("export-launch-config", help="print a switch's launch configuration")
    e.add_argument("scenario")
    e.add_argument("switch")
    e.set_defaults(func=cmd_export)

    c = sub.add_parser("case-study-file", help="write the built-in case study as YAML")
    c.add_argument("output", nargs="?")
    c.set_defaults(func=cmd_case_study_file)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, InfeasibleSchedule, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
