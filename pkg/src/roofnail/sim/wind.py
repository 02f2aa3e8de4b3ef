"""Horizontal gust force as first-order (Ornstein-Uhlenbeck) colored noise."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .vehicle import Vec3

_BLOCK = 4096


@dataclass(frozen=True)
class WindConfig:
    enabled: bool = False
    sigma: float = 1.0  # stationary std dev per horizontal axis, N
    tau: float = 2.0  # correlation time, s
    mean: tuple[float, float] = (0.0, 0.0)


class WindModel:
    """Exact discretization of an OU process; draws are pre-generated in blocks."""

    def __init__(self, cfg: WindConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.state = (0.0, 0.0)
        self._buf = np.empty((0, 2))
        self._i = 0
        if cfg.enabled and cfg.sigma > 0:
            # Start in the stationary distribution.
            x, y = rng.standard_normal(2) * cfg.sigma
            self.state = (float(x), float(y))

    def update(self, dt: float) -> Vec3:
        return wind_update(self, dt)


def wind_update(model: WindModel, dt: float) -> Vec3:
    cfg = model.cfg
    if not cfg.enabled or cfg.sigma == 0.0:
        return (0.0, 0.0, 0.0)
    if dt <= 0:
        raise ValueError("dt must be positive")
    if model._i >= len(model._buf):
        model._buf = model.rng.standard_normal((_BLOCK, 2))
        model._i = 0
    w0, w1 = model._buf[model._i]
    model._i += 1
    a = math.exp(-dt / cfg.tau)
    b = cfg.sigma * math.sqrt(1.0 - a * a)
    x, y = model.state
    x, y = a * x + b * float(w0), a * y + b * float(w1)
    model.state = (x, y)
    return (x + cfg.mean[0], y + cfg.mean[1], 0.0)
