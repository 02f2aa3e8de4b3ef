"""Rigid-body transforms and Z-Y-X Euler rotations.

Conventions:
    - A transform ``T_ab = (R_ab, t_ab)`` maps a point expressed in frame b
      into frame a: ``p_a = R_ab @ p_b + t_ab``.
    - Ground frame G is North-East-Down; altitude above ground is negative z.
    - Roof frame R: x up-slope, y along the eave, z into the deck.
    - Euler angles are applied yaw about z, then pitch about y, then roll
      about x, so ``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

#: Pitch magnitudes at or above this are rejected (gimbal lock).
PITCH_LIMIT = math.pi / 2 - 1e-6


class FrameError(ValueError):
    """Invalid rotation, Euler triple or transform."""


def _frozen(a: ArrayLike, shape: tuple[int, ...]) -> NDArray[np.float64]:
    arr = np.array(a, dtype=np.float64)
    if arr.shape != shape:
        raise FrameError(f"expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise FrameError("non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EulerAngles:
    """Roll, pitch, yaw in radians."""

    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0

    def __post_init__(self) -> None:
        for name in ("roll", "pitch", "yaw"):
            if not math.isfinite(getattr(self, name)):
                raise FrameError(f"{name} is not finite")
        if abs(self.pitch) >= PITCH_LIMIT:
            raise FrameError(f"pitch {self.pitch!r} rad is inside the gimbal-lock region")

    @classmethod
    def from_degrees(cls, roll: float = 0.0, pitch: float = 0.0, yaw: float = 0.0) -> EulerAngles:
        return cls(math.radians(roll), math.radians(pitch), math.radians(yaw))

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.roll, self.pitch, self.yaw])


def rotation_from_euler(angles: EulerAngles) -> NDArray[np.float64]:
    """Return ``Rz(yaw) Ry(pitch) Rx(roll)`` written out entry by entry."""
    cf, sf = math.cos(angles.roll), math.sin(angles.roll)
    ct, st = math.cos(angles.pitch), math.sin(angles.pitch)
    cp, sp = math.cos(angles.yaw), math.sin(angles.yaw)
    R = np.array(
        [
            [cp * ct, cp * st * sf - cf * sp, sp * sf + cp * cf * st],
            [ct * sp, cp * cf + sp * st * sf, cf * sp * st - cp * sf],
            [-st, ct * sf, ct * cf],
        ]
    )
    R.setflags(write=False)
    return R


def euler_from_rotation(R: ArrayLike) -> EulerAngles:
    """Inverse of :func:`rotation_from_euler` away from gimbal lock."""
    R = np.asarray(R, dtype=np.float64)
    pitch = -math.asin(max(-1.0, min(1.0, R[2, 0])))
    roll = math.atan2(R[2, 1], R[2, 2])
    yaw = math.atan2(R[1, 0], R[0, 0])
    return EulerAngles(roll, pitch, yaw)


def is_rotation(R: ArrayLike, tol: float = 1e-9) -> bool:
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3):
        return False
    return bool(
        np.all(np.abs(R.T @ R - np.eye(3)) <= tol) and abs(np.linalg.det(R) - 1.0) <= tol
    )


@dataclass(frozen=True)
class RigidTransform:
    """Rotation followed by translation; immutable."""

    rotation: NDArray[np.float64] = field(default_factory=lambda: np.eye(3))
    translation: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        R = _frozen(self.rotation, (3, 3))
        if not is_rotation(R):
            raise FrameError("rotation is not orthonormal with det +1")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", _frozen(self.translation, (3,)))

    @classmethod
    def identity(cls) -> RigidTransform:
        return cls()

    @classmethod
    def from_euler(cls, angles: EulerAngles, translation: ArrayLike = (0.0, 0.0, 0.0)) -> RigidTransform:
        return cls(rotation_from_euler(angles), np.asarray(translation, dtype=np.float64))

    def apply(self, p: ArrayLike) -> NDArray[np.float64]:
        return transform_point(self, p)

    def inverse(self) -> RigidTransform:
        return invert(self)

    def __matmul__(self, other: RigidTransform) -> RigidTransform:
        return compose(self, other)


def transform_point(T: RigidTransform, p: ArrayLike) -> NDArray[np.float64]:
    """Map point(s) ``p`` (shape (3,) or (n, 3)) through ``T``."""
    p = np.asarray(p, dtype=np.float64)
    return p @ T.rotation.T + T.translation


def invert(T: RigidTransform) -> RigidTransform:
    Rt = T.rotation.T
    return RigidTransform(Rt, -(Rt @ T.translation))


def compose(T_ab: RigidTransform, T_bc: RigidTransform) -> RigidTransform:
    """Return ``T_ac`` such that applying it equals ``T_ab(T_bc(p))``.

    Frame chaining is the caller's responsibility; nothing here checks labels.
    """
    return RigidTransform(
        T_ab.rotation @ T_bc.rotation,
        T_ab.rotation @ T_bc.translation + T_ab.translation,
    )
