from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache

import pytest
from hypothesis import settings

from roofnail.experiment import simulate
from roofnail.scenario import Scenario, loads
from roofnail.sim.engine import RunResult

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")


@dataclass(frozen=True)
class TimedRun:
    scenario: Scenario
    result: RunResult
    wall: float


@lru_cache(maxsize=None)
def closed_loop(alpha_deg: float, seed: int = 0, overrides: tuple = ()) -> TimedRun:
    """One closed-loop mission, cached across the session."""
    sc = loads("{}", "<test>", {"roof.alpha_deg": alpha_deg, **dict(overrides)})
    t0 = time.perf_counter()
    res = simulate(sc, seed)
    return TimedRun(sc, res, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def run_at():
    return closed_loop
