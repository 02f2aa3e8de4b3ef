"""Closed-loop mission execution.

The state machine walks the plan's phases in order. A phase ends when its
reference trajectory is exhausted; NailApproach also ends as soon as the gun
fires, in which case the following Retreat is re-planned from the reference
position at the firing instant. ReturnLand additionally waits for touchdown.
Any phase running past ``watchdog_factor`` times its nominal duration aborts
the run.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from ..mission import MissionPlan, retreat_from, tooltip_offset
from ..trajectory import LinearTrajectory3D, QuinticSegment, Segment
from .contact import ContactModel, ContactState, NailgunTrigger, contact_update
from .vehicle import (
    Gains,
    PositionController,
    Reference,
    VehicleParams,
    VehicleState,
    plant_step,
    rot,
    rotate,
)
from .wind import WindConfig, WindModel
from ..frames import EulerAngles

LOG_COLUMNS = (
    "t", "x", "y", "z", "vx", "vy", "vz", "ax", "ay", "az",
    "ref_x", "ref_y", "ref_z", "ref_vx", "ref_vy", "ref_vz", "ref_ax", "ref_ay", "ref_az",
    "roll", "pitch", "yaw", "roll_cmd", "pitch_cmd", "yaw_cmd", "thrust",
    "tip_x", "tip_y", "tip_z", "wind_x", "wind_y",
    "compression_m", "switch", "armed", "fx", "fy", "fz", "phase",
)  # fmt: skip


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.001
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    gains: Gains = field(default_factory=Gains)
    k: float = 3500.0
    threshold: float = 0.007
    hold_time: float = 0.5
    mu: float = 0.9
    trigger_latency: float = 0.0
    wind: WindConfig = field(default_factory=WindConfig)
    position_noise: float = 0.0
    velocity_noise: float = 0.0
    watchdog_factor: float = 3.0
    landing_tolerance: float = 0.02
    landing_speed: float = 0.02


@dataclass(frozen=True)
class NailRecord:
    index: int
    t_fire: float
    x_a: float
    y_a: float
    deployed: bool

    def as_dict(self) -> dict:
        return {
            "index": self.index,
            "t_fire": None if math.isnan(self.t_fire) else self.t_fire,
            "x_a": None if math.isnan(self.x_a) else self.x_a,
            "y_a": None if math.isnan(self.y_a) else self.y_a,
            "deployed": self.deployed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> NailRecord:
        nan = float("nan")
        return cls(
            int(d["index"]),
            nan if d["t_fire"] is None else float(d["t_fire"]),
            nan if d["x_a"] is None else float(d["x_a"]),
            nan if d["y_a"] is None else float(d["y_a"]),
            bool(d["deployed"]),
        )


@dataclass
class SimLog:
    """Per-step time series; ``data[:, -1]`` indexes into ``phases``."""

    data: NDArray[np.float64]
    phases: list[str]
    columns: tuple[str, ...] = LOG_COLUMNS

    def column(self, name: str) -> NDArray[np.float64]:
        return self.data[:, self.columns.index(name)]

    def phase_labels(self) -> list[str]:
        return [self.phases[int(i)] for i in self.data[:, -1]]

    def write_csv(self, path: str | Path, stride: int = 1) -> None:
        """Write every ``stride``-th row; %.17g keeps float64 values exact."""
        if stride < 1:
            raise ValueError("stride must be >= 1")
        fmt = ",".join("%d" if c in ("switch", "armed") else "%.17g" for c in self.columns[:-1])
        with open(path, "w", newline="") as fh:
            fh.write(",".join(self.columns) + "\n")
            for row in self.data[::stride]:
                fh.write(fmt % tuple(row[:-1]) + "," + self.phases[int(row[-1])] + "\n")

    @classmethod
    def read_csv(cls, path: str | Path) -> SimLog:
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            cols = tuple(next(r))
            phases: list[str] = []
            rows = []
            for rec in r:
                lab = rec[-1]
                if lab not in phases:
                    phases.append(lab)
                rows.append([float(v) for v in rec[:-1]] + [phases.index(lab)])
        return cls(np.array(rows, dtype=np.float64).reshape(-1, len(cols)), phases, cols)


@dataclass
class RunResult:
    log: SimLog
    nails: list[NailRecord]
    plan: MissionPlan
    phase_trace: list[str]
    aborted: bool = False
    abort_reason: str = ""
    seed: int = 0

    @property
    def deployed(self) -> int:
        return sum(n.deployed for n in self.nails)


# ------------------------------------------------------------------ reference eval


def fast_reference(seg: Segment) -> Callable[[float], Reference]:
    """Float-only evaluator of ``seg`` on local time ``[0, duration]``."""
    if isinstance(seg, QuinticSegment):
        c = np.asarray(seg.coeffs).reshape(6, -1)
        cols = [tuple(float(v) for v in c[:, j]) for j in range(c.shape[1])]
        t0 = seg.t0

        def quintic(t: float) -> Reference:
            tt = t0 + t
            p, v, a = [], [], []
            for a0, a1, a2, a3, a4, a5 in cols:
                p.append(((((a5 * tt + a4) * tt + a3) * tt + a2) * tt + a1) * tt + a0)
                v.append((((5 * a5 * tt + 4 * a4) * tt + 3 * a3) * tt + 2 * a2) * tt + a1)
                a.append(((20 * a5 * tt + 12 * a4) * tt + 6 * a3) * tt + 2 * a2)
            return Reference(tuple(p), tuple(v), tuple(a))

        return quintic
    if isinstance(seg, LinearTrajectory3D):
        pr = seg.profile
        b3, b4, t1, vf, s1 = pr.b3, pr.b4, pr.t1, pr.v_f, pr.s1
        ax_, ay_, az_ = (float(x) for x in seg.r_a)
        ux, uy, uz = (float(x) for x in seg.direction)

        def linear(t: float) -> Reference:
            if t < t1:
                s = b3 * t**3 + b4 * t**4
                sd = 3 * b3 * t * t + 4 * b4 * t**3
                sdd = 6 * b3 * t + 12 * b4 * t * t
            else:
                s, sd, sdd = s1 + vf * (t - t1), vf, 0.0
            return Reference(
                (ax_ + s * ux, ay_ + s * uy, az_ + s * uz),
                (sd * ux, sd * uy, sd * uz),
                (sdd * ux, sdd * uy, sdd * uz),
            )

        return linear

    def generic(t: float) -> Reference:
        p, v, a = seg.eval(seg.t_start + t)
        return Reference(tuple(map(float, p)), tuple(map(float, v)), tuple(map(float, a)))

    return generic


# ------------------------------------------------------------------------- runner


def contact_model_for(plan: MissionPlan, cfg: SimConfig) -> ContactModel:
    roof = plan.roof
    R = roof.pose.rotation
    return ContactModel(
        plane_point=tuple(roof.origin),
        normal=tuple(float(v) for v in R[:, 2]),
        k=cfg.k,
        threshold=cfg.threshold,
        hold_time=cfg.hold_time,
        mu=cfg.mu,
        trigger_latency=cfg.trigger_latency,
        x_axis=tuple(float(v) for v in R[:, 0]),
        y_axis=tuple(float(v) for v in R[:, 1]),
        bounds=(0.0, roof.height, 0.0, roof.width),
    )


def run(plan: MissionPlan, cfg: SimConfig | None = None, seed: int = 0) -> RunResult:
    """Fly ``plan`` in closed loop; deterministic for a given ``seed``."""
    cfg = cfg or SimConfig()
    dt = cfg.dt
    params = cfg.vehicle
    ss = np.random.SeedSequence(seed)
    wind_rng, noise_rng = (np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(2))
    wind = WindModel(cfg.wind, wind_rng)
    ctrl = PositionController(cfg.gains, params)
    contact = contact_model_for(plan, cfg)
    trigger = NailgunTrigger(contact)
    roof_inv = plan.roof.pose.inverse()
    r_t = tuple(float(v) for v in tooltip_offset(plan.mount))
    yaw_cmd = plan.attitude.yaw
    noisy = cfg.position_noise > 0 or cfg.velocity_noise > 0

    launch = tuple(float(v) for v in plan.launch)
    state = VehicleState(launch, (0.0, 0.0, 0.0), EulerAngles(0.0, params.hover_trim, yaw_cmd), time=0.0)
    cstate = ContactState()

    phases = list(plan.phases)
    labels: list[str] = []
    rows: list[tuple] = []
    nails: dict[int, NailRecord] = {}
    trace: list[str] = []
    aborted, reason = False, ""
    step = 0
    prev_tip: tuple[float, float, float] | None = None

    k = 0
    while k < len(phases):
        phase = phases[k]
        trace.append(phase.label)
        if phase.label not in labels:
            labels.append(phase.label)
        pid = labels.index(phase.label)
        ref_fn = fast_reference(phase.trajectory)
        dur = phase.duration
        n_nominal = max(1, int(round(dur / dt)))
        n_abort = int(math.ceil(cfg.watchdog_factor * n_nominal))
        armed = phase.armed
        if armed:
            trigger.rearm()
        fired = None
        fired_ref = None
        j = 0
        while True:
            t = step * dt
            ref = ref_fn(min(j * dt, dur))
            meas = state
            if noisy:
                dp = noise_rng.standard_normal(3) * cfg.position_noise
                dv = noise_rng.standard_normal(3) * cfg.velocity_noise
                meas = VehicleState(
                    tuple(a + float(b) for a, b in zip(state.position, dp)),
                    tuple(a + float(b) for a, b in zip(state.velocity, dv)),
                    state.attitude,
                    state.attitude_rate,
                    state.time,
                )
            cmd = ctrl.update(meas, ref, dt, yaw_cmd)

            att = state.attitude
            R = rot(att.roll, att.pitch, att.yaw)
            off = rotate(R, r_t)
            p = state.position
            tip = (p[0] + off[0], p[1] + off[1], p[2] + off[2])
            tip_v = (0.0, 0.0, 0.0) if prev_tip is None else tuple((a - b) / dt for a, b in zip(tip, prev_tip))
            prev_tip = tip
            f_c, cstate = contact_update(tip, tip_v, contact, cstate, armed, dt)
            event = trigger.update(cstate, t) if armed else None
            f_w = wind.update(dt)

            v, a = state.velocity, state.acceleration
            rows.append(
                (t, *p, *v, *a, *ref.position, *ref.velocity, *ref.acceleration,
                 att.roll, att.pitch, att.yaw, cmd.roll, cmd.pitch, cmd.yaw, cmd.thrust,
                 *tip, f_w[0], f_w[1], cstate.compression, float(cstate.switch), float(armed),
                 *f_c, float(pid))
            )  # fmt: skip

            ext = (f_c[0] + f_w[0], f_c[1] + f_w[1], f_c[2] + f_w[2])
            state = plant_step(state, cmd, ext, params, dt)
            step += 1
            j += 1

            if event is not None:
                x_a, y_a, _ = (float(c) for c in roof_inv.apply(event.point))
                nails[phase.nail] = NailRecord(phase.nail, event.time, x_a, y_a, True)
                fired, fired_ref = event, ref
                break
            if j >= n_nominal:
                if phase.kind != "ReturnLand":
                    break
                speed = math.sqrt(sum(c * c for c in state.velocity))
                if abs(state.position[2] - launch[2]) <= cfg.landing_tolerance and speed < cfg.landing_speed:
                    break
            if j > n_abort:
                aborted, reason = True, f"watchdog: {phase.label} exceeded {cfg.watchdog_factor}x nominal"
                break
        if aborted:
            break
        if phase.kind == "NailApproach":
            if fired is None:
                nails[phase.nail] = NailRecord(phase.nail, math.nan, math.nan, math.nan, False)
            else:
                nxt = phases[k + 1]
                assert nxt.kind == "Retreat" and nxt.nail == phase.nail
                seg = retreat_from(plan, phase.nail, fired_ref.position)
                phases[k + 1] = type(nxt)(nxt.kind, nxt.nail, seg, nxt.armed)
        k += 1

    for tgt in plan.targets:
        nails.setdefault(tgt.index, NailRecord(tgt.index, math.nan, math.nan, math.nan, False))
    data = np.array(rows, dtype=np.float64).reshape(-1, len(LOG_COLUMNS))
    return RunResult(
        SimLog(data, labels),
        [nails[i] for i in sorted(nails)],
        plan,
        trace,
        aborted,
        reason,
        seed,
    )
