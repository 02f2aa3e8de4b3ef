"""Nailing mission planning.

Turns a roof pose, a shingle nail layout and the nailgun mount geometry into
tooltip waypoints, the matching vehicle waypoints and a phase-by-phase
reference trajectory with arming windows.

Phase sequence for N nails::

    Takeoff, [TraverseToSafety(i), NailApproach(i), Retreat(i)] * N, ReturnLand

Takeoff climbs to a hold point above the launch position. TraverseToSafety(1)
flies from the hold point to the first safety point; later traverses are
station-keeping holds because Retreat(i) already ends at safety point i+1
(the last retreat backs out to its own safety point).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .frames import EulerAngles, RigidTransform, rotation_from_euler, transform_point
from .trajectory import (
    LinearTrajectory3D,
    PiecewiseTrajectory,
    QuinticSegment,
    Segment,
    project_to_line,
    ramp_cruise,
    rest_to_rest,
    stitch,
)

log = logging.getLogger(__name__)

MAX_ROOF_SLOPE = math.radians(45.0)
MOUNT_ANGLES_DEG = (0.0, 15.0, 30.0, 45.0)

# Three-tab shingle, four-nail pattern (roof-frame metres).
SHINGLE_WIDTH = 0.914
SHINGLE_HEIGHT = 0.305
DEFAULT_NAIL_Y = (0.025, 0.330, 0.584, 0.889)
DEFAULT_BAND = (0.235, 0.265)


class MissionError(ValueError):
    """Invalid geometry or planning parameters."""


# ------------------------------------------------------------------------- geometry


@dataclass(frozen=True)
class RoofModel:
    """Deck pose in the ground frame; ``alpha`` is the slope (pitch of the roof frame)."""

    alpha: float
    origin: tuple[float, float, float] = (2.0, 0.0, -0.8)
    yaw: float = 0.0
    roll: float = 0.0
    width: float = 1.22
    height: float = 0.61

    def __post_init__(self) -> None:
        if not (-1e-12 <= self.alpha <= MAX_ROOF_SLOPE + 1e-12):
            raise MissionError(
                f"roof slope {math.degrees(self.alpha):.3f} deg outside [0, 45] deg"
            )
        if math.isclose(self.alpha, MAX_ROOF_SLOPE, abs_tol=1e-9):
            log.warning("45 deg roof: tooltip slip and rotor clearance make nailing unreliable")
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))

    @classmethod
    def from_degrees(cls, alpha_deg: float, **kw) -> RoofModel:
        return cls(math.radians(alpha_deg), **kw)

    @property
    def attitude(self) -> EulerAngles:
        return EulerAngles(self.roll, self.alpha, self.yaw)

    @property
    def pose(self) -> RigidTransform:
        """Roof-to-ground transform."""
        return RigidTransform.from_euler(self.attitude, self.origin)

    @property
    def inward_normal(self) -> NDArray[np.float64]:
        """Unit roof z axis in the ground frame (points into the deck)."""
        return np.array(self.pose.rotation[:, 2])

    def to_roof(self, p_ground: ArrayLike) -> NDArray[np.float64]:
        return transform_point(self.pose.inverse(), p_ground)


@dataclass(frozen=True)
class ShingleLayout:
    """Nail points ``(x, y)`` in the roof frame and the legal vertical band ``[lower, upper]``."""

    points: NDArray[np.float64]
    band_lower: float = DEFAULT_BAND[0]
    band_upper: float = DEFAULT_BAND[1]

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=np.float64).reshape(-1, 2)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if not self.band_upper > self.band_lower:
            raise MissionError("band upper edge must lie above the lower edge")

    @classmethod
    def default(cls) -> ShingleLayout:
        x = 0.5 * (DEFAULT_BAND[0] + DEFAULT_BAND[1])
        return cls(np.array([[x, y] for y in DEFAULT_NAIL_Y]))

    def __len__(self) -> int:
        return len(self.points)

    def validate(self) -> None:
        x, y = self.points[:, 0], self.points[:, 1]
        bad = np.flatnonzero((x < self.band_lower - 1e-12) | (x > self.band_upper + 1e-12))
        if bad.size:
            raise MissionError(
                f"nail {int(bad[0])} at x={x[bad[0]]:.4f} m is outside the legal band "
                f"[{self.band_lower}, {self.band_upper}]"
            )
        if np.any(np.diff(y) < 0):
            raise MissionError("nail points must be ordered left to right (nondecreasing y)")


@dataclass(frozen=True)
class NailgunMount:
    """Tooltip lever geometry: forward offset ``w``, gun length ``l``, drop ``h``, tilt ``delta``."""

    w: float = 0.10
    l: float = 0.40
    h: float = 0.15
    delta: float = 0.0
    allow_arbitrary_delta: bool = False

    def __post_init__(self) -> None:
        if not self.allow_arbitrary_delta:
            deg = math.degrees(self.delta)
            if not any(math.isclose(deg, a, abs_tol=1e-6) for a in MOUNT_ANGLES_DEG):
                raise MissionError(
                    f"mount angle {deg:.3f} deg is not one of {MOUNT_ANGLES_DEG}; "
                    "set allow_arbitrary_delta to permit it"
                )


def tooltip_offset(mount: NailgunMount) -> NDArray[np.float64]:
    """Tooltip position in the vehicle frame."""
    w, l, h, d = mount.w, mount.l, mount.h, mount.delta
    return np.array([w * math.cos(d) + l * math.sin(d), 0.0, h - w * math.sin(d) + l * math.cos(d)])


def nail_point_ground(roof: RoofModel, layout: ShingleLayout, i: int) -> NDArray[np.float64]:
    if not 0 <= i < len(layout):
        raise IndexError(f"nail index {i} out of range for {len(layout)} nails")
    x, y = layout.points[i]
    return transform_point(roof.pose, [x, y, 0.0])


def vehicle_position_for_tooltip(
    tooltip_ground: ArrayLike, attitude: EulerAngles, mount: NailgunMount
) -> NDArray[np.float64]:
    """Vehicle origin that puts the tooltip at ``tooltip_ground`` under ``attitude``."""
    return np.asarray(tooltip_ground, dtype=np.float64) - rotation_from_euler(attitude) @ tooltip_offset(mount)


def vehicle_position_for_nailing(
    roof: RoofModel, layout: ShingleLayout, i: int, attitude: EulerAngles, mount: NailgunMount
) -> NDArray[np.float64]:
    return vehicle_position_for_tooltip(nail_point_ground(roof, layout, i), attitude, mount)


def safety_beyond_points(
    nail: ArrayLike, d_s: float, d_b: float
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Safety point ``d_s`` off the deck and beyond point ``d_b`` into it (roof frame)."""
    n = np.asarray(nail, dtype=np.float64)
    if n.shape == (2,):
        n = np.append(n, 0.0)
    return n - np.array([0.0, 0.0, d_s]), n + np.array([0.0, 0.0, d_b])


def desired_nailing_velocity(k: float, m: float, c: float) -> float:
    """Approach speed whose kinetic energy compresses a spring ``k`` by ``c``."""
    if k <= 0 or m <= 0:
        raise MissionError("stiffness and mass must be positive")
    if c < 0:
        raise MissionError("compression must be nonnegative")
    return math.sqrt(k / m) * c


# ------------------------------------------------------------------------- planning


@dataclass(frozen=True)
class GuidanceParams:
    v_f: float = 0.15
    a_max: float = 0.10
    d_s: float = 1.0
    d_b: float = 0.24
    hover_pitch: float = math.radians(-2.0)
    takeoff_altitude: float = 1.5
    transit_speed: float = 0.5
    retreat_min_duration: float = 3.0
    retreat_duration_factor: float = 1.5
    settle_time: float = 2.0
    allow_mount_mismatch: bool = False
    # Commanded-setpoint adjustments (roof frame, metres); exempt from band validation.
    setpoint_shift: tuple[float, float] = (0.0, 0.0)
    # Injected systematic errors.
    roof_offset: tuple[float, float] = (0.0, 0.0)
    ground_x_offset: float = 0.0


PHASE_KINDS = ("Takeoff", "TraverseToSafety", "NailApproach", "Retreat", "ReturnLand")


@dataclass(frozen=True)
class MissionPhase:
    kind: str
    nail: int | None
    trajectory: Segment
    armed: bool

    @property
    def label(self) -> str:
        return self.kind if self.nail is None else f"{self.kind}({self.nail + 1})"

    @property
    def duration(self) -> float:
        return self.trajectory.duration


@dataclass(frozen=True)
class NailTarget:
    """Per-nail waypoints; tooltip points and vehicle points are ground frame."""

    index: int
    desired_roof: NDArray[np.float64]
    commanded_roof: NDArray[np.float64]
    safety: NDArray[np.float64]
    nail: NDArray[np.float64]
    beyond: NDArray[np.float64]
    vehicle_safety: NDArray[np.float64]
    vehicle_nail: NDArray[np.float64]
    vehicle_beyond: NDArray[np.float64]


@dataclass(frozen=True)
class MissionPlan:
    phases: tuple[MissionPhase, ...]
    attitude: EulerAngles
    targets: tuple[NailTarget, ...]
    launch: NDArray[np.float64]
    roof: RoofModel
    mount: NailgunMount
    params: GuidanceParams
    trajectory: PiecewiseTrajectory = field(repr=False)

    @property
    def duration(self) -> float:
        return self.trajectory.duration

    def approach(self, i: int) -> MissionPhase:
        for ph in self.phases:
            if ph.kind == "NailApproach" and ph.nail == i:
                return ph
        raise IndexError(i)

    def nail_crossing_time(self, i: int) -> float:
        """Time into NailApproach(i) at which the tooltip reaches the deck."""
        traj = self.approach(i).trajectory
        assert isinstance(traj, LinearTrajectory3D)
        p = traj.profile
        if self.params.d_s <= p.s1:
            # Still ramping: invert the quartic numerically.
            lo, hi = 0.0, p.t1
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                lo, hi = (mid, hi) if p.eval(mid)[0] < self.params.d_s else (lo, mid)
            return 0.5 * (lo + hi)
        return p.t1 + (self.params.d_s - p.s1) / p.v_f

    def armed_windows(self) -> list[tuple[float, float]]:
        out = []
        for ph, t0 in zip(self.phases, self.trajectory.starts):
            if ph.armed:
                out.append((t0, t0 + ph.duration))
        return out

    def summary(self) -> dict:
        """Plain-data description for serialization."""
        return {
            "attitude_deg": {
                "roll": math.degrees(self.attitude.roll),
                "pitch": math.degrees(self.attitude.pitch),
                "yaw": math.degrees(self.attitude.yaw),
            },
            "launch": self.launch.tolist(),
            "duration_s": self.duration,
            "phases": [
                {"label": ph.label, "start_s": t0, "duration_s": ph.duration, "armed": ph.armed}
                for ph, t0 in zip(self.phases, self.trajectory.starts)
            ],
            "nails": [
                {
                    "index": t.index,
                    "desired_roof": t.desired_roof.tolist(),
                    "commanded_roof": t.commanded_roof.tolist(),
                    "safety": t.safety.tolist(),
                    "nail": t.nail.tolist(),
                    "beyond": t.beyond.tolist(),
                    "vehicle_safety": t.vehicle_safety.tolist(),
                    "vehicle_nail": t.vehicle_nail.tolist(),
                    "vehicle_beyond": t.vehicle_beyond.tolist(),
                }
                for t in self.targets
            ],
        }


def transit_duration(distance: float, speed: float, minimum: float, factor: float = 1.5) -> float:
    return max(minimum, factor * distance / speed)


def _plane_x_shift(roof: RoofModel, e_x: float) -> NDArray[np.float64]:
    """Displacement in the deck plane whose ground-frame horizontal part is ``e_x`` along x."""
    n = roof.inward_normal
    return np.array([e_x, 0.0, -e_x * n[0] / n[2]])


def build_mission(
    roof: RoofModel,
    layout: ShingleLayout,
    mount: NailgunMount,
    params: GuidanceParams | None = None,
    launch: ArrayLike = (0.0, 0.0, 0.0),
) -> MissionPlan:
    params = params or GuidanceParams()
    if not math.isclose(mount.delta, roof.alpha, abs_tol=1e-9):
        msg = (
            f"mount angle {math.degrees(mount.delta):.2f} deg differs from roof slope "
            f"{math.degrees(roof.alpha):.2f} deg"
        )
        if not params.allow_mount_mismatch:
            raise MissionError(msg)
        log.warning("%s; planning anyway", msg)
    layout.validate()

    attitude = EulerAngles(0.0, params.hover_pitch, roof.yaw)
    launch = np.asarray(launch, dtype=np.float64)
    pose = roof.pose
    plane_shift = _plane_x_shift(roof, params.ground_x_offset)
    shift = np.add(params.setpoint_shift, params.roof_offset)

    targets = []
    for i, desired in enumerate(layout.points):
        cmd = np.append(desired + shift, 0.0)
        r_s, r_b = safety_beyond_points(cmd, params.d_s, params.d_b)
        s_g, n_g, b_g = (transform_point(pose, p) + plane_shift for p in (r_s, cmd, r_b))
        targets.append(
            NailTarget(
                index=i,
                desired_roof=np.array(desired),
                commanded_roof=cmd[:2],
                safety=s_g,
                nail=n_g,
                beyond=b_g,
                vehicle_safety=vehicle_position_for_tooltip(s_g, attitude, mount),
                vehicle_nail=vehicle_position_for_tooltip(n_g, attitude, mount),
                vehicle_beyond=vehicle_position_for_tooltip(b_g, attitude, mount),
            )
        )

    def quintic(a: NDArray, b: NDArray, speed: float, minimum: float) -> QuinticSegment:
        dur = transit_duration(float(np.linalg.norm(b - a)), speed, minimum, params.retreat_duration_factor)
        return rest_to_rest(a, b, dur)

    hold = launch + np.array([0.0, 0.0, -params.takeoff_altitude])
    phases = [MissionPhase("Takeoff", None, quintic(launch, hold, params.transit_speed, 3.0), False)]
    profile = ramp_cruise(params.v_f, params.a_max, params.d_s + params.d_b) if targets else None
    for k, tgt in enumerate(targets):
        if k == 0:
            traverse = quintic(hold, tgt.vehicle_safety, params.transit_speed, 3.0)
        else:
            traverse = rest_to_rest(tgt.vehicle_safety, tgt.vehicle_safety, params.settle_time)
        phases.append(MissionPhase("TraverseToSafety", k, traverse, False))
        approach = project_to_line(profile, tgt.vehicle_safety, tgt.vehicle_beyond)
        phases.append(MissionPhase("NailApproach", k, approach, True))
        nxt = targets[k + 1] if k + 1 < len(targets) else tgt
        retreat = quintic(tgt.vehicle_beyond, nxt.vehicle_safety, params.v_f, params.retreat_min_duration)
        phases.append(MissionPhase("Retreat", k, retreat, False))
    start = targets[-1].vehicle_safety if targets else hold
    phases.append(MissionPhase("ReturnLand", None, quintic(start, launch, params.transit_speed, 3.0), False))

    traj = stitch([p.trajectory for p in phases], [p.label for p in phases])
    return MissionPlan(tuple(phases), attitude, tuple(targets), launch, roof, mount, params, traj)


def retreat_from(plan: MissionPlan, nail: int, start: ArrayLike) -> QuinticSegment:
    """Re-plan Retreat(nail) from ``start`` (used when an approach ends at deployment)."""
    tgts = plan.targets
    end = tgts[nail + 1].vehicle_safety if nail + 1 < len(tgts) else tgts[nail].vehicle_safety
    start = np.asarray(start, dtype=np.float64)
    p = plan.params
    dur = transit_duration(float(np.linalg.norm(end - start)), p.v_f, p.retreat_min_duration, p.retreat_duration_factor)
    return rest_to_rest(start, end, dur)
