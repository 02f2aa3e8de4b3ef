"""Tooltip spring contact, limit switch and nailgun trigger.

The tooltip is a penalty spring against the deck plane. Normal force is
``k * depth`` along the outward normal (pushing the vehicle off the deck).
Tangentially the tip is tied to an anchor on the deck by a stiff spring; the
anchor holds while the tangential force stays within ``mu * normal`` and
slides otherwise. The anchor is where a nail would go in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .vehicle import Vec3


@dataclass(frozen=True)
class ContactModel:
    plane_point: Vec3
    normal: Vec3
    k: float = 3500.0
    threshold: float = 0.007
    hold_time: float = 0.5
    mu: float = 0.9
    k_tangent: float = 2.0e4
    c_tangent: float = 300.0
    trigger_latency: float = 0.0
    # Deck extent: in-plane axes and (x_min, x_max, y_min, y_max); None means unbounded.
    x_axis: Vec3 | None = None
    y_axis: Vec3 | None = None
    bounds: tuple[float, float, float, float] | None = None
    max_depth: float = 0.1

    def __post_init__(self) -> None:
        if self.k <= 0:
            raise ValueError("spring constant must be positive")
        n = math.sqrt(sum(c * c for c in self.normal))
        object.__setattr__(self, "normal", tuple(c / n for c in self.normal))
        object.__setattr__(self, "plane_point", tuple(float(c) for c in self.plane_point))
        if self.bounds is not None and (self.x_axis is None or self.y_axis is None):
            raise ValueError("deck bounds need in-plane axes")

    def on_deck(self, d: Vec3) -> bool:
        """Whether offset ``d`` from the plane point lies over the deck."""
        if self.bounds is None:
            return True
        ax, ay = self.x_axis, self.y_axis
        u = d[0] * ax[0] + d[1] * ax[1] + d[2] * ax[2]
        v = d[0] * ay[0] + d[1] * ay[1] + d[2] * ay[2]
        x0, x1, y0, y1 = self.bounds
        return x0 <= u <= x1 and y0 <= v <= y1


@dataclass(frozen=True)
class ContactState:
    compression: float = 0.0
    switch: bool = False
    timer: float = 0.0
    armed: bool = False
    slip: float = 0.0
    anchor: Vec3 | None = None


class Deployment(NamedTuple):
    time: float
    point: Vec3  # ground frame, on the deck


def contact_update(
    tip: Vec3,
    tip_velocity: Vec3,
    model: ContactModel,
    state: ContactState,
    armed: bool,
    dt: float,
) -> tuple[Vec3, ContactState]:
    """Contact force on the vehicle and the new contact state."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    nx, ny, nz = model.normal
    qx, qy, qz = model.plane_point
    dx, dy, dz = tip[0] - qx, tip[1] - qy, tip[2] - qz
    depth = dx * nx + dy * ny + dz * nz
    if depth <= 0.0 or depth > model.max_depth or not model.on_deck((dx, dy, dz)):
        return (0.0, 0.0, 0.0), ContactState(0.0, False, 0.0, armed, state.slip, None)

    fn = model.k * depth
    # Foot of the tip on the deck plane.
    px, py, pz = tip[0] - depth * nx, tip[1] - depth * ny, tip[2] - depth * nz
    ftx = fty = ftz = 0.0
    slip = state.slip
    if model.mu <= 0.0:
        anchor = (px, py, pz)
    else:
        anchor = state.anchor if state.anchor is not None else (px, py, pz)
        ux, uy, uz = px - anchor[0], py - anchor[1], pz - anchor[2]
        vx, vy, vz = tip_velocity
        vn = vx * nx + vy * ny + vz * nz
        vx, vy, vz = vx - vn * nx, vy - vn * ny, vz - vn * nz
        kt, ct = model.k_tangent, model.c_tangent
        ftx, fty, ftz = -kt * ux - ct * vx, -kt * uy - ct * vy, -kt * uz - ct * vz
        ft = math.sqrt(ftx * ftx + fty * fty + ftz * ftz)
        limit = model.mu * fn
        if ft > limit:
            # Slide: anchor trails the tip so the spring carries exactly the friction limit.
            d = math.sqrt(ux * ux + uy * uy + uz * uz)
            if d > 0.0:
                r = limit / kt / d
                new = (px - r * ux, py - r * uy, pz - r * uz)
                slip += math.dist(new, anchor)
                anchor = new
            scale = limit / ft
            ftx, fty, ftz = ftx * scale, fty * scale, ftz * scale

    pressed = depth >= model.threshold
    # Time since the switch closed under an armed relay; zero on the closing step.
    if pressed and armed:
        timer = state.timer + dt if (state.switch and state.armed) else 0.0
    else:
        timer = 0.0
    force = (-fn * nx + ftx, -fn * ny + fty, -fn * nz + ftz)
    return force, ContactState(depth, pressed, timer, armed, slip, anchor)


class NailgunTrigger:
    """Relay logic: fires once per arming window after a continuous press."""

    def __init__(self, model: ContactModel):
        self.model = model
        self.fired = False

    def rearm(self) -> None:
        self.fired = False

    def update(self, state: ContactState, time: float) -> Deployment | None:
        return nailgun_update(state, self, time)


def nailgun_update(state: ContactState, trigger: NailgunTrigger, time: float) -> Deployment | None:
    """Fire when armed and the switch has been held for the hold time (plus latency)."""
    if trigger.fired or not (state.armed and state.switch):
        return None
    if state.timer + 1e-9 < trigger.model.hold_time + trigger.model.trigger_latency:
        return None
    trigger.fired = True
    assert state.anchor is not None
    return Deployment(time, state.anchor)
