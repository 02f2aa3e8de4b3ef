"""Multirotor surrogate plant and cascaded PID position controller.

The plant is a point mass with a first-order lag from commanded to actual
attitude. Thrust acts along the negative thrust axis, which is pitched by
``hover_trim`` relative to the body frame: with the trim at -2 deg the body
hovers nose-down by 2 deg while thrust stays vertical, the way an
off-centre nailgun leaves the airframe trimmed.

Vectors in the hot loop are plain ``(x, y, z)`` float tuples in the NED
ground frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from ..frames import EulerAngles

Vec3 = tuple[float, float, float]


class SimulationFault(RuntimeError):
    """Non-finite state or input reached the integrator."""


@dataclass(frozen=True)
class VehicleParams:
    m_o: float = 4.8
    m_b: float = 1.4
    m_n: float = 3.0
    tau_att: float = 0.15
    g: float = 9.80665
    thrust_min: float = 0.0
    thrust_max: float = 180.0
    hover_trim: float = math.radians(-2.0)

    @property
    def m(self) -> float:
        return self.m_o + self.m_b + self.m_n


@dataclass(frozen=True)
class Gains:
    kp_xy: float = 16.0
    ki_xy: float = 2.0
    kd_xy: float = 6.0
    kp_z: float = 16.0
    ki_z: float = 2.0
    kd_z: float = 6.0
    i_limit: float = 0.5
    max_tilt: float = math.radians(35.0)


@dataclass(frozen=True)
class VehicleState:
    position: Vec3 = (0.0, 0.0, 0.0)
    velocity: Vec3 = (0.0, 0.0, 0.0)
    attitude: EulerAngles = EulerAngles()
    attitude_rate: Vec3 = (0.0, 0.0, 0.0)
    time: float = 0.0
    acceleration: Vec3 = (0.0, 0.0, 0.0)


class Command(NamedTuple):
    roll: float
    pitch: float
    yaw: float
    thrust: float
    saturated: bool


class Reference(NamedTuple):
    position: Vec3
    velocity: Vec3
    acceleration: Vec3


_last_rot: list = [None, None]


def rot(roll: float, pitch: float, yaw: float) -> tuple[float, ...]:
    """Row-major entries of ``Rz(yaw) Ry(pitch) Rx(roll)``."""
    key = (roll, pitch, yaw)
    if _last_rot[0] == key:
        return _last_rot[1]
    cf, sf = math.cos(roll), math.sin(roll)
    ct, st = math.cos(pitch), math.sin(pitch)
    cp, sp = math.cos(yaw), math.sin(yaw)
    R = (
        cp * ct, cp * st * sf - cf * sp, sp * sf + cp * cf * st,
        ct * sp, cp * cf + sp * st * sf, cf * sp * st - cp * sf,
        -st, ct * sf, ct * cf,
    )  # fmt: skip
    _last_rot[0], _last_rot[1] = key, R
    return R


def rotate(R: tuple[float, ...], v: Vec3) -> Vec3:
    x, y, z = v
    return (
        R[0] * x + R[1] * y + R[2] * z,
        R[3] * x + R[4] * y + R[5] * z,
        R[6] * x + R[7] * y + R[8] * z,
    )


def _wrap(a: float) -> float:
    return (a + math.pi) % (2 * math.pi) - math.pi


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def controller_update(
    state: VehicleState,
    ref: Reference,
    gains: Gains,
    params: VehicleParams,
    integral: Vec3,
    dt: float,
    yaw: float = 0.0,
) -> tuple[Command, Vec3]:
    """One tick of the position loop.

    Commanded acceleration is feedforward plus PID on position error; it is
    turned into a thrust magnitude and a body attitude at the requested yaw.
    Returns the command and the updated (clamped) integral of position error.
    """
    p, v = state.position, state.velocity
    rp, rv, ra = ref
    lim = gains.i_limit
    ex, ey, ez = rp[0] - p[0], rp[1] - p[1], rp[2] - p[2]
    ix = _clamp(integral[0] + ex * dt, -lim, lim)
    iy = _clamp(integral[1] + ey * dt, -lim, lim)
    iz = _clamp(integral[2] + ez * dt, -lim, lim)
    ax = ra[0] + gains.kp_xy * ex + gains.kd_xy * (rv[0] - v[0]) + gains.ki_xy * ix
    ay = ra[1] + gains.kp_xy * ey + gains.kd_xy * (rv[1] - v[1]) + gains.ki_xy * iy
    az = ra[2] + gains.kp_z * ez + gains.kd_z * (rv[2] - v[2]) + gains.ki_z * iz

    m, g = params.m, params.g
    # Required thrust vector F: m a = F + m g z_hat.
    fx, fy, fz = m * ax, m * ay, m * (az - g)
    # Upward thrust only; limit tilt by shrinking the horizontal part.
    fz = min(fz, -1e-6 * m * g)
    horiz = math.hypot(fx, fy)
    max_h = -fz * math.tan(gains.max_tilt)
    saturated = False
    if horiz > max_h:
        fx, fy = fx * max_h / horiz, fy * max_h / horiz
        saturated = True
    mag = math.sqrt(fx * fx + fy * fy + fz * fz)
    thrust = _clamp(mag, params.thrust_min, params.thrust_max)
    saturated = saturated or thrust != mag

    # Thrust axis (body-z of the thrust frame) points along -F.
    bx, by, bz = -fx / mag, -fy / mag, -fz / mag
    cy, sy = math.cos(yaw), math.sin(yaw)
    bxp, byp = cy * bx + sy * by, -sy * bx + cy * by
    roll_t = math.asin(_clamp(-byp, -1.0, 1.0))
    pitch_t = math.atan2(bxp, bz)
    roll, pitch = roll_t, pitch_t
    if params.hover_trim:
        # Body = thrust frame rotated by the trim about its y axis; only the
        # rotation entries needed for the Euler extraction are formed.
        cf, sf = math.cos(roll_t), math.sin(roll_t)
        ct, st = math.cos(pitch_t), math.sin(pitch_t)
        c, s = math.cos(params.hover_trim), math.sin(params.hover_trim)
        r20 = -st * c - ct * cf * s
        r21 = ct * sf
        r22 = -st * s + ct * cf * c
        r00 = cy * ct * c - (sy * sf + cy * cf * st) * s
        r10 = ct * sy * c - (cf * sy * st - cy * sf) * s
        pitch = -math.asin(_clamp(r20, -1.0, 1.0))
        roll = math.atan2(r21, r22)
        yaw = math.atan2(r10, r00)
    return Command(roll, pitch, yaw, thrust, saturated), (ix, iy, iz)


def thrust_axis(attitude: EulerAngles, params: VehicleParams) -> Vec3:
    """Unit thrust-frame z axis in the ground frame (thrust acts along its negative)."""
    R = rot(attitude.roll, attitude.pitch, attitude.yaw)
    tr = params.hover_trim
    return rotate(R, (-math.sin(tr), 0.0, math.cos(tr)))


def plant_step(
    state: VehicleState,
    command: Command,
    external_force: Vec3,
    params: VehicleParams,
    dt: float,
) -> VehicleState:
    """Advance the plant by ``dt`` with semi-implicit Euler."""
    if not 0.0 < dt <= 0.01:
        raise ValueError(f"dt={dt} outside (0, 0.01] s")
    vals = (*state.position, *state.velocity, *external_force, command.roll, command.pitch, command.yaw, command.thrust)
    if not all(map(math.isfinite, vals)):
        raise SimulationFault(f"non-finite input at t={state.time:.4f}s")

    att = state.attitude
    k = 1.0 - math.exp(-dt / params.tau_att)
    d_roll = k * (command.roll - att.roll)
    d_pitch = k * (command.pitch - att.pitch)
    d_yaw = k * _wrap(command.yaw - att.yaw)
    new_att = EulerAngles(att.roll + d_roll, att.pitch + d_pitch, _wrap(att.yaw + d_yaw))

    ux, uy, uz = thrust_axis(new_att, params)
    m, T = params.m, command.thrust
    fx, fy, fz = external_force
    ax = (-T * ux + fx) / m
    ay = (-T * uy + fy) / m
    az = (-T * uz + fz) / m + params.g
    vx, vy, vz = state.velocity
    vx, vy, vz = vx + ax * dt, vy + ay * dt, vz + az * dt
    px, py, pz = state.position
    px, py, pz = px + vx * dt, py + vy * dt, pz + vz * dt
    if pz > 0.0:
        # Ground contact: no penetration, no sliding.
        pz, vx, vy, vz = 0.0, 0.0, 0.0, min(vz, 0.0)
    return VehicleState(
        (px, py, pz),
        (vx, vy, vz),
        new_att,
        (d_roll / dt, d_pitch / dt, d_yaw / dt),
        state.time + dt,
        (ax, ay, az),
    )


class PositionController:
    """Stateful wrapper holding the integrator between ticks."""

    def __init__(self, gains: Gains, params: VehicleParams):
        self.gains = gains
        self.params = params
        self.integral: Vec3 = (0.0, 0.0, 0.0)

    def reset(self) -> None:
        self.integral = (0.0, 0.0, 0.0)

    def update(self, state: VehicleState, ref: Reference, dt: float, yaw: float = 0.0) -> Command:
        cmd, self.integral = controller_update(state, ref, self.gains, self.params, self.integral, dt, yaw)
        return cmd
