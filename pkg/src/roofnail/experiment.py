"""Deterministic experiment orchestration: single runs, sweeps, bias-corrected pairs.

A run directory holds everything needed to reproduce and analyse it:

    manifest.json   scenario snapshot, seed, package version, outcome
    scenario.yaml   the resolved scenario (loadable with ``--scenario``)
    plan.json       mission plan summary
    simlog.csv      time series, every ``sim.log_stride``-th step
    nails.json      nail records
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .analysis import bias_correction, nail_errors, summarize
from .mission import MissionPlan, build_mission
from .scenario import Scenario, from_dict, resolve_key
from .sim.engine import NailRecord, RunResult, SimLog, run


def build_plan(sc: Scenario) -> MissionPlan:
    return build_mission(sc.roof_model(), sc.layout(), sc.nailgun_mount(), sc.guidance_params())


def simulate(sc: Scenario, seed: int | None = None) -> RunResult:
    return run(build_plan(sc), sc.sim_config(), sc.seed if seed is None else seed)


def manifest(sc: Scenario, result: RunResult) -> dict[str, Any]:
    return {
        "version": __version__,
        "seed": result.seed,
        "scenario": sc.to_dict(),
        "aborted": result.aborted,
        "abort_reason": result.abort_reason,
        "phase_trace": result.phase_trace,
        "attempted": len(result.nails),
        "deployed": result.deployed,
    }


def write_run(sc: Scenario, result: RunResult, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(json.dumps(manifest(sc, result), indent=2))
    sc.save(out / "scenario.yaml")
    (out / "plan.json").write_text(json.dumps(result.plan.summary(), indent=2))
    (out / "nails.json").write_text(json.dumps([n.as_dict() for n in result.nails], indent=2))
    result.log.write_csv(out / "simlog.csv", sc.sim.log_stride)
    return out


def load_run(run_dir: str | Path) -> tuple[Scenario, RunResult]:
    d = Path(run_dir)
    man = json.loads((d / "manifest.json").read_text())
    sc = from_dict(man["scenario"], source=str(d / "manifest.json"))
    nails = [NailRecord.from_dict(n) for n in json.loads((d / "nails.json").read_text())]
    log = SimLog.read_csv(d / "simlog.csv")
    res = RunResult(log, nails, build_plan(sc), man["phase_trace"], man["aborted"], man["abort_reason"], man["seed"])
    return sc, res


# -------------------------------------------------------------------------- sweeps


@dataclass
class SweepRun:
    value: Any
    seed: int
    scenario: Scenario
    result: RunResult


def _run_one(args: tuple[dict, int]) -> RunResult:
    d, seed = args
    return simulate(from_dict(d), seed)


def sweep(base: Scenario, axis: str, values: Sequence[Any], jobs: int = 1) -> list[SweepRun]:
    """One run per value; run ``i`` uses seed ``base.seed + i``."""
    key = resolve_key(axis)
    scenarios = [base.replace(**{key: v}) for v in values]
    seeds = [base.seed + i for i in range(len(values))]
    work = [(sc.to_dict(), s) for sc, s in zip(scenarios, seeds)]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_one, work))
    else:
        results = [_run_one(w) for w in work]
    return [SweepRun(v, s, sc, r) for v, s, sc, r in zip(values, seeds, scenarios, results)]


def deployment_table(runs: Sequence[SweepRun], axis: str) -> list[dict[str, Any]]:
    return [
        {
            axis: r.value,
            "seed": r.seed,
            "nails_deployed": r.result.deployed,
            "nails_attempted": len(r.result.nails),
            "aborted": r.result.aborted,
        }
        for r in runs
    ]


# --------------------------------------------------------------- bias correction


@dataclass
class CorrectedPair:
    first: RunResult
    second: RunResult
    shift: tuple[float, float]
    mean_e_v: tuple[float, float]


def bias_corrected_pair(sc: Scenario, horizontal: bool = False) -> CorrectedPair:
    """Fly, measure the mean vertical error, shift setpoints, fly again.

    Both runs are scored against the scenario's desired layout, so the second
    run's error shows whether the shift removed the bias.
    """
    layout = sc.layout()
    alpha = math.radians(sc.roof.alpha_deg)
    first = simulate(sc, sc.seed)
    errs1, _ = nail_errors(first.nails, layout, alpha, "run1")
    s1 = summarize(errs1)[round(sc.roof.alpha_deg, 6)]
    dx, dy = bias_correction(s1, horizontal)
    shifted = sc.replace(**{"guidance.setpoint_shift": [sc.guidance.setpoint_shift[0] - dx, sc.guidance.setpoint_shift[1] - dy]})
    second = simulate(shifted, sc.seed + 1)
    errs2, _ = nail_errors(second.nails, layout, alpha, "run2")
    m2 = summarize(errs2)[round(sc.roof.alpha_deg, 6)].e_v.mean if errs2 else math.nan
    return CorrectedPair(first, second, (dx, dy), (s1.e_v.mean, m2))
