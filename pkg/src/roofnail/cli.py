"""Command-line entry point: ``roofnail {plan,simulate,analyze,sweep,traj dump}``.

Exit status: 0 on success, 1 if any run aborted on the watchdog or faulted,
2 on invalid input (scenario, override, axis or plan validation). Nails
that fail to deploy are results, not errors.

The default output root is ``$ROOFNAIL_OUT`` if set, otherwise the
scenario's ``output_dir``. Relative paths resolve against the working
directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, Sequence

import yaml

from . import __version__
from .analysis import RunEntry, emit_report
from .experiment import build_plan, deployment_table, load_run, simulate, sweep, write_run
from .scenario import Scenario, loads, parse_override, parse_scenario
from .sim.vehicle import SimulationFault

ENV_OUT = "ROOFNAIL_OUT"

EXIT_OK = 0
EXIT_ABORTED = 1
EXIT_INVALID = 2


def _load(args: argparse.Namespace) -> Scenario:
    overrides = dict(parse_override(o) for o in args.override)
    sc = parse_scenario(args.scenario, overrides) if args.scenario else loads("{}", "<defaults>", overrides)
    if getattr(args, "seed", None) is not None:
        sc = sc.replace(seed=args.seed)
    return sc


def _out_dir(args: argparse.Namespace, sc: Scenario | None, name: str) -> Path:
    if args.out:
        return Path(args.out)
    root = os.environ.get(ENV_OUT) or (sc.output_dir if sc is not None else "runs")
    return Path(root) / name


def write_trajectory_csv(plan, path: Path | None, rate_hz: float) -> None:
    """t, x, y, z, vx, vy, vz, ax, ay, az, phase; ``path=None`` writes to stdout."""
    ts, rows, labels = plan.trajectory.sample(rate_hz)
    fh = open(path, "w", newline="") if path is not None else sys.stdout
    try:
        fh.write("t,x,y,z,vx,vy,vz,ax,ay,az,phase\n")
        fmt = ",".join(["%.17g"] * 10)
        for t, r, lab in zip(ts, rows, labels):
            fh.write(fmt % (t, *r) + "," + lab + "\n")
    finally:
        if path is not None:
            fh.close()


def _manifest_only(sc: Scenario, out: Path, extra: dict[str, Any]) -> None:
    man = {"version": __version__, "seed": sc.seed, "scenario": sc.to_dict(), **extra}
    (out / "manifest.json").write_text(json.dumps(man, indent=2))


# ------------------------------------------------------------------------- commands


def cmd_plan(args: argparse.Namespace) -> int:
    sc = _load(args)
    plan = build_plan(sc)
    out = _out_dir(args, sc, "plan")
    out.mkdir(parents=True, exist_ok=True)
    summary = plan.summary()
    (out / "plan.yaml").write_text(yaml.safe_dump(summary, sort_keys=False))
    write_trajectory_csv(plan, out / "trajectory.csv", args.rate)
    sc.save(out / "scenario.yaml")
    _manifest_only(sc, out, {"command": "plan", "duration_s": plan.duration})
    print(yaml.safe_dump(summary, sort_keys=False), end="")
    return EXIT_OK


def cmd_traj_dump(args: argparse.Namespace) -> int:
    sc = _load(args)
    plan = build_plan(sc)
    if args.out in (None, "-"):
        write_trajectory_csv(plan, None, args.rate)
        return EXIT_OK
    path = Path(args.out)
    if path.suffix.lower() != ".csv":
        path.mkdir(parents=True, exist_ok=True)
        _manifest_only(sc, path, {"command": "traj dump", "rate_hz": args.rate})
        path = path / "trajectory.csv"
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(plan, path, args.rate)
    return EXIT_OK


def _describe(result) -> str:
    s = f"seed {result.seed}: {result.deployed}/{len(result.nails)} nails deployed"
    if result.aborted:
        s += f", ABORTED ({result.abort_reason})"
    return s


def cmd_simulate(args: argparse.Namespace) -> int:
    sc = _load(args)
    out = _out_dir(args, sc, f"sim-seed{sc.seed}")
    result = simulate(sc)
    write_run(sc, result, out)
    print(_describe(result))
    for n in result.nails:
        if n.deployed:
            print(f"  nail {n.index}: t={n.t_fire:.3f}s x_a={100 * n.x_a:.2f}cm y_a={100 * n.y_a:.2f}cm")
        else:
            print(f"  nail {n.index}: not deployed")
    print(f"wrote {out}")
    return EXIT_ABORTED if result.aborted else EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    entries = []
    aborted = False
    strides = []
    for i, d in enumerate(args.runs):
        sc, res = load_run(d)
        aborted |= res.aborted
        strides.append(sc.sim.log_stride)
        entries.append(RunEntry(Path(d).name or f"run{i}", math.radians(sc.roof.alpha_deg), res, sc.layout()))
    out = Path(args.out) if args.out else Path(os.environ.get(ENV_OUT) or "runs") / "report"
    # Logs on disk are already decimated; aim for ~100 Hz series.
    stride = max(1, 10 // max(strides)) if strides else 10
    report = emit_report(entries, out, stride)
    for a, s in report["angles"].items():
        print(
            f"alpha {a} deg: {s['count']} nails, {s['failures']} failed, "
            f"e_v mean {s['e_v']['mean']:.3f} cm, e_h mean {s['e_h']['mean']:.3f} cm"
        )
    print(f"wrote {out}")
    return EXIT_ABORTED if aborted else EXIT_OK


def _parse_values(text: str) -> list[Any]:
    return [yaml.safe_load(v) for v in text.split(",") if v.strip()]


def cmd_sweep(args: argparse.Namespace) -> int:
    sc = _load(args)
    values = _parse_values(args.values)
    if not values:
        raise ValueError("--values is empty")
    runs = sweep(sc, args.axis, values, jobs=args.jobs)
    out = _out_dir(args, sc, f"sweep-{args.axis}")
    out.mkdir(parents=True, exist_ok=True)
    for i, r in enumerate(runs):
        write_run(r.scenario.replace(seed=r.seed), r.result, out / f"run{i:03d}")
    table = deployment_table(runs, args.axis)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(table[0]))
        w.writeheader()
        w.writerows(table)
    (out / "summary.json").write_text(json.dumps(table, indent=2))
    _manifest_only(sc, out, {"command": "sweep", "axis": args.axis, "values": values})
    width = max(len(args.axis), 8)
    print(f"{args.axis:>{width}}  seed  deployed/attempted  aborted")
    for row in table:
        print(
            f"{row[args.axis]!s:>{width}}  {row['seed']:4d}  "
            f"{row['nails_deployed']:>8d}/{row['nails_attempted']:<9d}  {row['aborted']}"
        )
    print(f"wrote {out}")
    return EXIT_ABORTED if any(r.result.aborted for r in runs) else EXIT_OK


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="roofnail", description="Roof-nailing multirotor planning and simulation.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser, seed: bool = True) -> None:
        sp.add_argument("--scenario", help="scenario YAML file (defaults used if omitted)")
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE", help="dotted-path override")
        sp.add_argument("--out", help="output directory")
        if seed:
            sp.add_argument("--seed", type=int, help="random seed (overrides the scenario)")

    sp = sub.add_parser("plan", help="plan a mission; write plan.yaml and trajectory.csv")
    common(sp, seed=False)
    sp.add_argument("--rate", type=float, default=1000.0, help="trajectory sample rate in Hz")
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("simulate", help="fly one closed-loop mission")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("analyze", help="error statistics and report over run directories")
    sp.add_argument("runs", nargs="+", help="run directories written by simulate or sweep")
    sp.add_argument("--out", help="report directory")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("sweep", help="one run per value of a scenario parameter")
    common(sp)
    sp.add_argument("--axis", required=True, help="dotted key or unique leaf name, e.g. alpha_deg")
    sp.add_argument("--values", required=True, help="comma-separated values")
    sp.add_argument("--jobs", type=int, default=1, help="parallel runs")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("traj", help="trajectory utilities")
    tsub = sp.add_subparsers(dest="traj_command", required=True)
    dp = tsub.add_parser("dump", help="sample the planned trajectory to CSV")
    common(dp, seed=False)
    dp.add_argument("--rate", type=float, default=1000.0, help="sample rate in Hz")
    dp.set_defaults(func=cmd_traj_dump)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        # Output piped into e.g. ``head``; silence the flush at exit too.
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK
    except SimulationFault as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ABORTED
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
