"""Nail placement errors, per-angle statistics, bias correction and reports.

Errors are desired minus actual in the roof frame: ``e_h`` along y (eave
direction) and ``e_v`` along x (up-slope). Metres in code, centimetres in
reports. Quartiles use linear interpolation between order statistics.
"""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .mission import ShingleLayout
from .sim.engine import NailRecord, RunResult

QUARTILE_METHOD = "linear"


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class NailError:
    e_h: float
    e_v: float
    alpha: float
    test_id: str
    index: int


@dataclass(frozen=True)
class Stats:
    count: int
    mean: float
    median: float
    min: float
    max: float
    range: float
    q1: float
    q3: float


@dataclass(frozen=True)
class ErrorSummary:
    alpha_deg: float
    e_h: Stats
    e_v: Stats
    count: int
    failures: int = 0


def nail_errors(
    records: Sequence[NailRecord],
    desired: ShingleLayout,
    alpha: float = 0.0,
    test_id: str = "",
) -> tuple[list[NailError], int]:
    """Per-nail errors for deployed nails plus the count of undeployed ones."""
    out = []
    failures = 0
    for rec in records:
        if not 0 <= rec.index < len(desired):
            raise AnalysisError(f"record index {rec.index} has no desired nail point")
        if not rec.deployed:
            failures += 1
            continue
        x_d, y_d = desired.points[rec.index]
        out.append(NailError(float(y_d - rec.y_a), float(x_d - rec.x_a), alpha, test_id, rec.index))
    return out, failures


def describe(values: Iterable[float]) -> Stats:
    v = np.asarray(list(values), dtype=np.float64)
    if v.size == 0:
        raise AnalysisError("cannot summarise an empty group")
    q1, med, q3 = np.percentile(v, [25, 50, 75], method=QUARTILE_METHOD)
    lo, hi = float(v.min()), float(v.max())
    return Stats(int(v.size), float(v.mean()), float(med), lo, hi, hi - lo, float(q1), float(q3))


def summarize(errors: Sequence[NailError], failures: dict[float, int] | None = None) -> dict[float, ErrorSummary]:
    """Group by slope (degrees, rounded to 1e-6) and summarise each group."""
    groups: dict[float, list[NailError]] = defaultdict(list)
    for e in errors:
        groups[round(math.degrees(e.alpha), 6)].append(e)
    failures = failures or {}
    return {
        a: ErrorSummary(a, describe(e.e_h for e in g), describe(e.e_v for e in g), len(g), failures.get(a, 0))
        for a, g in sorted(groups.items())
    }


def bias_correction(summary: ErrorSummary, horizontal: bool = False) -> tuple[float, float]:
    """Estimated systematic placement offset ``(dx, dy)`` in the roof frame.

    Equals minus the mean error, i.e. how far nails landed from their targets.
    Subtract it from the desired point to get the corrected setpoint.
    """
    if summary.count == 0:
        raise AnalysisError("no deployed nails to correct from")
    return -summary.e_v.mean, (-summary.e_h.mean if horizontal else 0.0)


def amplification_check(
    records: Sequence[NailRecord], desired: ShingleLayout, e_x: float, alpha: float
) -> float:
    """Measured up-slope placement shift divided by the injected horizontal error ``e_x``."""
    if e_x == 0:
        raise AnalysisError("injected offset must be nonzero")
    if not alpha < math.pi / 2:
        raise AnalysisError("slope must be below 90 deg")
    errs, _ = nail_errors(records, desired, alpha)
    if not errs:
        raise AnalysisError("no deployed nails")
    return -float(np.mean([e.e_v for e in errs])) / e_x


def predicted_amplification(alpha: float) -> float:
    return 1.0 / math.cos(alpha)


# ------------------------------------------------------------------------ reports


def _cm(s: Stats) -> dict:
    d = asdict(s)
    return {k: (v if k == "count" else 100.0 * v) for k, v in d.items()}


@dataclass
class RunEntry:
    """A completed run reduced to what the report needs."""

    test_id: str
    alpha: float
    result: RunResult
    desired: ShingleLayout


def emit_report(entries: Sequence[RunEntry], out_dir: str | Path, stride: int = 10) -> dict:
    """Write ``report.json`` plus plot-ready CSV series into ``out_dir``; return the report.

    Time series keep every ``stride``-th logged row.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not entries:
        report = {"empty": True, "runs": [], "angles": {}}
        (out / "report.json").write_text(json.dumps(report, indent=2))
        return report

    errors: list[NailError] = []
    fails: dict[float, int] = defaultdict(int)
    runs = []
    scatter = []
    for ent in entries:
        errs, nfail = nail_errors(ent.result.nails, ent.desired, ent.alpha, ent.test_id)
        errors.extend(errs)
        fails[round(math.degrees(ent.alpha), 6)] += nfail
        runs.append(
            {
                "test_id": ent.test_id,
                "alpha_deg": math.degrees(ent.alpha),
                "seed": ent.result.seed,
                "attempted": len(ent.result.nails),
                "deployed": ent.result.deployed,
                "aborted": ent.result.aborted,
            }
        )
        for rec in ent.result.nails:
            x_d, y_d = ent.desired.points[rec.index]
            scatter.append(
                (ent.test_id, math.degrees(ent.alpha), rec.index, int(rec.deployed),
                 100 * x_d, 100 * y_d, 100 * rec.x_a, 100 * rec.y_a,
                 100 * ent.desired.band_lower, 100 * ent.desired.band_upper)
            )  # fmt: skip
        _write_timeseries(ent, out / f"timeseries_{ent.test_id}.csv", stride)

    summaries = summarize(errors, dict(fails))
    report = {
        "empty": False,
        "units": "cm",
        "quartile_method": QUARTILE_METHOD,
        "runs": runs,
        "angles": {
            f"{a:g}": {"count": s.count, "failures": s.failures, "e_h": _cm(s.e_h), "e_v": _cm(s.e_v)}
            for a, s in summaries.items()
        },
    }
    (out / "report.json").write_text(json.dumps(report, indent=2))

    with open(out / "boxplot_stats.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha_deg", "component", "count", "mean", "median", "min", "max", "range", "q1", "q3"])
        for a, s in summaries.items():
            for name, st in (("e_h", s.e_h), ("e_v", s.e_v)):
                c = _cm(st)
                w.writerow([a, name, st.count, c["mean"], c["median"], c["min"], c["max"], c["range"], c["q1"], c["q3"]])
    with open(out / "nail_scatter.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["test_id", "alpha_deg", "index", "deployed", "x_d_cm", "y_d_cm", "x_a_cm", "y_a_cm", "band_lower_cm", "band_upper_cm"])
        w.writerows(scatter)
    return report


def _write_timeseries(ent: RunEntry, path: Path, stride: int = 10) -> None:
    log = ent.result.log
    cols = ["t", "x", "y", "z", "ref_x", "ref_y", "ref_z", "vx", "vy", "vz", "ref_vx", "ref_vy", "ref_vz",
            "roll", "pitch", "yaw", "roll_cmd", "pitch_cmd", "yaw_cmd"]  # fmt: skip
    idx = [log.columns.index(c) for c in cols]
    labels = log.phase_labels()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols + ["phase"])
        for i in range(0, len(log.data), stride):
            w.writerow([repr(float(log.data[i, j])) for j in idx] + [labels[i]])
