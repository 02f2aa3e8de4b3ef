"""Reference trajectory generation.

Two segment types are provided: per-axis quintic boundary-value polynomials
and a straight-line ramp-cruise motion (smooth cubic-quartic acceleration to a
cruise speed, then constant velocity). Segments are stitched into a
:class:`PiecewiseTrajectory` evaluated analytically on demand.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

State = tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]


class TrajectoryError(ValueError):
    """Base class for trajectory construction and evaluation failures."""


class DegenerateDurationError(TrajectoryError):
    pass


class OutOfRangeError(TrajectoryError):
    pass


class InsufficientDistanceError(TrajectoryError):
    pass


class DegenerateDirectionError(TrajectoryError):
    pass


class InconsistentLengthError(TrajectoryError):
    pass


class StitchError(TrajectoryError):
    pass


# Time tolerance when checking that t lies inside a span.
_T_EPS = 1e-9


def _check_span(t: float, t0: float, tf: float) -> None:
    if not (t0 - _T_EPS <= t <= tf + _T_EPS):
        raise OutOfRangeError(f"t={t!r} outside [{t0!r}, {tf!r}]")


class Segment(Protocol):
    @property
    def t_start(self) -> float: ...

    @property
    def duration(self) -> float: ...

    def eval(self, t: float) -> State: ...


# --------------------------------------------------------------------------- quintic


def _hermite_rows(t: float) -> NDArray[np.float64]:
    return np.array(
        [
            [1.0, t, t**2, t**3, t**4, t**5],
            [0.0, 1.0, 2 * t, 3 * t**2, 4 * t**3, 5 * t**4],
            [0.0, 0.0, 2.0, 6 * t, 12 * t**2, 20 * t**3],
        ]
    )


@dataclass(frozen=True)
class QuinticSegment:
    """Fifth-order polynomial per axis on ``[t0, tf]``.

    ``coeffs`` has shape ``(6,)`` for a scalar axis or ``(6, d)`` for ``d``
    axes; row j multiplies ``t**j`` with ``t`` in absolute time.
    """

    coeffs: NDArray[np.float64]
    t0: float
    tf: float

    def __post_init__(self) -> None:
        if not self.tf > self.t0:
            raise DegenerateDurationError(f"tf ({self.tf}) must exceed t0 ({self.t0})")
        c = np.array(self.coeffs, dtype=np.float64)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def t_start(self) -> float:
        return self.t0

    @property
    def duration(self) -> float:
        return self.tf - self.t0

    def eval(self, t: float) -> State:
        _check_span(t, self.t0, self.tf)
        a = self.coeffs
        # Horner on position, velocity, acceleration.
        p = a[5]
        for j in (4, 3, 2, 1, 0):
            p = p * t + a[j]
        v = 5 * a[5]
        for j in (4, 3, 2, 1):
            v = v * t + j * a[j]
        acc = 20 * a[5]
        for j in (4, 3, 2):
            acc = acc * t + j * (j - 1) * a[j]
        return np.asarray(p), np.asarray(v), np.asarray(acc)


def solve_quintic(
    t0: float,
    tf: float,
    r0: ArrayLike,
    v0: ArrayLike,
    a0: ArrayLike,
    rf: ArrayLike,
    vf: ArrayLike,
    af: ArrayLike,
) -> QuinticSegment:
    """Solve the 6x6 Hermite system for position/velocity/acceleration at both ends.

    Boundary values may be scalars or equal-length vectors (one column per axis).
    """
    if not (math.isfinite(t0) and math.isfinite(tf)) or not tf > t0:
        raise DegenerateDurationError(f"degenerate duration: t0={t0}, tf={tf}")
    rhs = np.array(np.broadcast_arrays(*map(np.asarray, (r0, v0, a0, rf, vf, af))), dtype=np.float64)
    if not np.all(np.isfinite(rhs)):
        raise TrajectoryError("boundary values must be finite")
    M = np.vstack([_hermite_rows(t0), _hermite_rows(tf)])
    coeffs = np.linalg.solve(M, rhs)
    return QuinticSegment(coeffs, float(t0), float(tf))


def rest_to_rest(r0: ArrayLike, rf: ArrayLike, duration: float) -> QuinticSegment:
    """Quintic from ``r0`` to ``rf`` with zero end velocities and accelerations."""
    r0 = np.asarray(r0, dtype=np.float64)
    z = np.zeros_like(r0)
    return solve_quintic(0.0, duration, r0, z, z, rf, z, z)


# ---------------------------------------------------------------------- ramp-cruise


@dataclass(frozen=True)
class RampCruiseProfile:
    """1D motion ``s(t)``: ``b3 t^3 + b4 t^4`` up to ``t1``, then cruise at ``v_f``."""

    b3: float
    b4: float
    t1: float
    tf: float
    v_f: float
    a_max: float
    delta_s: float

    @property
    def duration(self) -> float:
        return self.tf

    @property
    def t_ext(self) -> float:
        """Time of peak acceleration during the ramp."""
        return -self.b3 / (4.0 * self.b4)

    @property
    def s1(self) -> float:
        """Distance covered by the end of the ramp."""
        t = self.t1
        return self.b3 * t**3 + self.b4 * t**4

    def eval(self, t: float) -> tuple[float, float, float]:
        _check_span(t, 0.0, self.tf)
        if t < self.t1:
            return (
                self.b3 * t**3 + self.b4 * t**4,
                3 * self.b3 * t**2 + 4 * self.b4 * t**3,
                6 * self.b3 * t + 12 * self.b4 * t**2,
            )
        return self.s1 + self.v_f * (t - self.t1), self.v_f, 0.0


def ramp_cruise(v_f: float, a_max: float, delta_s: float) -> RampCruiseProfile:
    """Build the ramp-cruise profile reaching ``v_f`` under ``a_max`` over ``delta_s``.

    Raises:
        InsufficientDistanceError: ``delta_s`` is shorter than the ramp itself.
    """
    if not (v_f > 0 and a_max > 0):
        raise TrajectoryError("v_f and a_max must be positive")
    b3 = 4 * a_max**2 / (9 * v_f)
    b4 = -4 * a_max**3 / (27 * v_f**2)
    t1 = 3 * v_f / (2 * a_max)
    s1 = b3 * t1**3 + b4 * t1**4
    if delta_s < s1:
        raise InsufficientDistanceError(
            f"distance {delta_s} m is shorter than the {s1} m needed to reach cruise"
        )
    tf = t1 + (delta_s - s1) / v_f
    return RampCruiseProfile(b3, b4, t1, tf, v_f, a_max, delta_s)


@dataclass(frozen=True)
class LinearTrajectory3D:
    """Ramp-cruise profile laid along the segment ``r_a -> r_b``."""

    r_a: NDArray[np.float64]
    r_b: NDArray[np.float64]
    profile: RampCruiseProfile
    direction: NDArray[np.float64] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        r_a = np.array(self.r_a, dtype=np.float64)
        r_b = np.array(self.r_b, dtype=np.float64)
        d = r_b - r_a
        n = float(np.linalg.norm(d))
        if n == 0.0:
            raise DegenerateDirectionError("r_a and r_b coincide")
        if abs(n - self.profile.delta_s) > 1e-9:
            raise InconsistentLengthError(
                f"segment length {n} m differs from profile distance {self.profile.delta_s} m"
            )
        for name, arr in (("r_a", r_a), ("r_b", r_b), ("direction", d / n)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    t_start = 0.0

    @property
    def duration(self) -> float:
        return self.profile.tf

    def eval(self, t: float) -> State:
        s, sd, sdd = self.profile.eval(t)
        u = self.direction
        return self.r_a + s * u, sd * u, sdd * u


def project_to_line(profile: RampCruiseProfile, r_a: ArrayLike, r_b: ArrayLike) -> LinearTrajectory3D:
    return LinearTrajectory3D(np.asarray(r_a), np.asarray(r_b), profile)


# ------------------------------------------------------------------------ piecewise


@dataclass(frozen=True)
class PiecewiseTrajectory:
    """Segments laid end to end on a cumulative time base starting at 0."""

    segments: tuple[Segment, ...]
    labels: tuple[str, ...]
    starts: tuple[float, ...]

    @property
    def duration(self) -> float:
        return self.starts[-1] + self.segments[-1].duration

    def segment_index(self, t: float) -> int:
        _check_span(t, 0.0, self.duration)
        return max(0, min(len(self.segments) - 1, bisect_right(self.starts, t) - 1))

    def eval(self, t: float) -> State:
        k = self.segment_index(t)
        seg = self.segments[k]
        local = min(max(t - self.starts[k], 0.0), seg.duration)
        return seg.eval(seg.t_start + local)

    def label_at(self, t: float) -> str:
        return self.labels[self.segment_index(t)]

    def sample(self, rate_hz: float = 1000.0) -> tuple[NDArray[np.float64], NDArray[np.float64], list[str]]:
        """Evaluate on a uniform grid; returns times, (n, 9) [pos|vel|acc], labels."""
        n = int(math.floor(self.duration * rate_hz + 1e-9)) + 1
        ts = np.arange(n) / rate_hz
        out = np.empty((n, 9))
        labels = []
        for i, t in enumerate(ts):
            p, v, a = self.eval(float(t))
            out[i, 0:3], out[i, 3:6], out[i, 6:9] = p, v, a
            labels.append(self.label_at(float(t)))
        return ts, out, labels


def stitch(segments: Sequence[Segment], labels: Sequence[str] | None = None, tol: float = 1e-6) -> PiecewiseTrajectory:
    """Join segments in order, checking position continuity at each joint."""
    if not segments:
        raise StitchError("no segments to stitch")
    labels = tuple(labels) if labels is not None else tuple(f"seg{i}" for i in range(len(segments)))
    if len(labels) != len(segments):
        raise StitchError("one label per segment required")
    starts = [0.0]
    for k in range(1, len(segments)):
        prev, cur = segments[k - 1], segments[k]
        end = np.asarray(prev.eval(prev.t_start + prev.duration)[0])
        begin = np.asarray(cur.eval(cur.t_start)[0])
        gap = float(np.max(np.abs(end - begin)))
        if gap > tol:
            raise StitchError(f"joint {k} ({labels[k - 1]} -> {labels[k]}): position jump {gap:.3g}")
        starts.append(starts[-1] + prev.duration)
    return PiecewiseTrajectory(tuple(segments), labels, tuple(starts))
