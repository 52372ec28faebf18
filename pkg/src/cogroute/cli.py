"""Command line interface: run scenarios, validate them, trace predictions."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import netsim
from .scenario import Scenario, ScenarioError, bundled_scenario_path, load_scenario


@dataclass
class RunConfig:
    scenario_path: str
    epochs: int
    seeds: list[int]
    mode: str
    output_dir: str
    report_format: str


def parse_seeds(spec: str) -> list[int]:
    """Expand a seed spec like '7', '1..10' or '1,3,9..11' into a list."""
    seeds: list[int] = []
    for token in spec.split(","):
        token = token.strip()
        if not token:
            continue
        if ".." in token:
            lo_s, hi_s = token.split("..", 1)
            lo, hi = int(lo_s), int(hi_s)
            if hi < lo:
                raise ValueError(f"bad seed range {token!r}")
            seeds.extend(range(lo, hi + 1))
        else:
            seeds.append(int(token))
    if not seeds:
        raise ValueError("seed spec expands to nothing")
    return seeds


def _resolve_scenario(path_arg: str) -> Scenario:
    path = Path(path_arg)
    if not path.exists():
        bundled = bundled_scenario_path(path_arg)
        if bundled.exists():
            path = bundled
    return load_scenario(path)


def cmd_run(config: RunConfig) -> int:
    try:
        scenario = _resolve_scenario(config.scenario_path)
    except ScenarioError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=sys.stderr)
        return 2

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = []
    for seed in config.seeds:
        report = netsim.run(scenario, config.epochs, seed, config.mode)
        reports.append(report)
        parts = []
        for mode in sorted(report.modes):
            r = report.modes[mode]
            parts.append(f"{mode} delivery_ratio={r.delivery_ratio:.4f} "
                         f"retx={r.total_retransmissions}")
        print(f"seed {seed}: " + " | ".join(parts))

    if config.report_format in ("csv", "both"):
        lines = [netsim.CSV_HEADER]
        for report in reports:
            lines.extend(netsim.csv_rows(report))
        (out_dir / "report.csv").write_text("\n".join(lines) + "\n",
                                            encoding="utf-8")
    if config.report_format in ("json", "both"):
        payload = {"scenario": scenario.name, "epochs": config.epochs,
                   "reports": [netsim.report_payload(r) for r in reports]}
        with (out_dir / "report.json").open("w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def cmd_validate(scenario_path: str) -> int:
    try:
        _resolve_scenario(scenario_path)
    except ScenarioError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=sys.stderr)
        return 2
    print("OK")
    return 0


def cmd_trace(scenario_path: str, router_id: int, neighbor_id: int | None,
              epochs: int, seed: int, out_path: str | None) -> int:
    """Write the router's predicted health byte per learned neighbor per
    gossip round, one CSV row per neighbor."""
    try:
        scenario = _resolve_scenario(scenario_path)
    except ScenarioError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=sys.stderr)
        return 2
    if router_id not in scenario.topology.routers:
        print(f"error: unknown router id {router_id}", file=sys.stderr)
        return 2

    world = netsim.World(scenario, seed, netsim.MODE_COGNITIVE)
    interval = scenario.params.cognitive_interval
    rounds: list[dict[int, int]] = []
    for epoch in range(epochs):
        world.step()
        if interval > 0 and epoch % interval == 0:
            rounds.append(dict(world.domains[router_id].predictions))

    neighbors = sorted({n for snapshot in rounds for n in snapshot})
    if neighbor_id is not None:
        if neighbor_id not in neighbors:
            print(f"error: router {router_id} has no learned neighbor "
                  f"{neighbor_id}", file=sys.stderr)
            return 2
        neighbors = [neighbor_id]

    lines = ["router," + ",".join(f"t{i + 1}" for i in range(len(rounds)))]
    for neighbor in neighbors:
        values = [str(snapshot.get(neighbor, "")) for snapshot in rounds]
        lines.append(f"{neighbor}," + ",".join(values))
    text = "\n".join(lines) + "\n"
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cogroute",
        description="Simulate blind vs prediction-guided packet routing.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario and write reports")
    p_run.add_argument("--scenario", required=True,
                       help="scenario file, or a bundled name like 'default20'")
    p_run.add_argument("--epochs", type=int, default=500)
    p_run.add_argument("--seeds", default="1",
                       help="e.g. '7', '1..10' or '1,3,9..11'")
    p_run.add_argument("--mode", default=netsim.MODE_COMPARE,
                       choices=[netsim.MODE_BLIND, netsim.MODE_COGNITIVE,
                                netsim.MODE_COMPARE])
    p_run.add_argument("--out", default="out")
    p_run.add_argument("--format", default="both",
                       choices=["csv", "json", "both"])

    p_val = sub.add_parser("validate", help="check a scenario file")
    p_val.add_argument("--scenario", required=True)

    p_trace = sub.add_parser(
        "trace", help="dump predicted health bytes per neighbor per round")
    p_trace.add_argument("--scenario", required=True)
    p_trace.add_argument("--router", type=int, required=True)
    p_trace.add_argument("--neighbor", type=int, default=None)
    p_trace.add_argument("--epochs", type=int, default=100)
    p_trace.add_argument("--seed", type=int, default=1)
    p_trace.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            if args.epochs < 0:
                print("error: epochs must be >= 0", file=sys.stderr)
                return 2
            config = RunConfig(scenario_path=args.scenario,
                               epochs=args.epochs,
                               seeds=parse_seeds(args.seeds),
                               mode=args.mode,
                               output_dir=args.out,
                               report_format=args.format)
            return cmd_run(config)
        if args.command == "validate":
            return cmd_validate(args.scenario)
        if args.command == "trace":
            return cmd_trace(args.scenario, args.router, args.neighbor,
                             args.epochs, args.seed, args.out)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
