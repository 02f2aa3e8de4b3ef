from __future__ import annotations

import math
import re

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from roofnail.frames import EulerAngles
from roofnail.mission import NailgunMount, RoofModel, ShingleLayout, build_mission
from roofnail.sim import (
    Command,
    ContactModel,
    ContactState,
    Gains,
    NailgunTrigger,
    Reference,
    SimConfig,
    SimLog,
    SimulationFault,
    VehicleParams,
    VehicleState,
    WindConfig,
    WindModel,
    contact_update,
    controller_update,
    plant_step,
    run,
    wind_update,
)

FLAT = ContactModel(plane_point=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0), mu=0.0)
GRAMMAR = re.compile(r"^Takeoff(,TraverseToSafety\((\d+)\),NailApproach\(\2\),Retreat\(\2\))*(,ReturnLand)?$")


def empty_plan():
    return build_mission(RoofModel.from_degrees(0), ShingleLayout(np.empty((0, 2))), NailgunMount())


def press(model: ContactModel, pattern, armed=True, dt=0.001):
    """Drive contact + trigger through (duration, depth) segments; return deployment times."""
    trig = NailgunTrigger(model)
    cs = ContactState()
    t, fired = 0.0, []
    for dur, depth in pattern:
        for _ in range(int(round(dur / dt))):
            _, cs = contact_update((0.0, 0.0, depth), (0.0, 0.0, 0.0), model, cs, armed, dt)
            ev = trig.update(cs, t)
            if ev is not None:
                fired.append(ev.time)
            t += dt
    return fired


class TestContact:
    def test_no_contact(self):
        f, cs = contact_update((0.0, 0.0, 0.0), (0, 0, 0), FLAT, ContactState(), True, 0.001)
        assert f == (0.0, 0.0, 0.0) and not cs.switch

    def test_full_compression_force(self):
        f, cs = contact_update((0.0, 0.0, 0.007), (0, 0, 0), FLAT, ContactState(), True, 0.001)
        assert -f[2] == pytest.approx(24.5, abs=1e-9)
        assert cs.switch

    def test_partial_compression_force(self):
        f, cs = contact_update((0.0, 0.0, 0.002), (0, 0, 0), FLAT, ContactState(), True, 0.001)
        assert -f[2] == pytest.approx(7.0, abs=1e-9)
        assert not cs.switch

    @given(
        st.floats(-1, 1), st.floats(-1, 1), st.floats(0.2, 1),
        st.floats(1e-4, 0.05), st.floats(-0.3, 0.3), st.floats(-0.3, 0.3),
    )  # fmt: skip
    def test_frictionless_force_along_normal(self, nx, ny, nz, depth, u, v):
        model = ContactModel((1.0, 2.0, -0.5), (nx, ny, nz), mu=0.0)
        n = np.array(model.normal)
        # Any in-plane offset plus the depth along the normal.
        tang = np.cross(n, [u, v, 1.0])
        tip = np.array(model.plane_point) + tang + depth * n
        f, cs = contact_update(tuple(tip), (0.1, -0.2, 0.3), model, ContactState(), True, 0.001)
        np.testing.assert_allclose(f, -model.k * depth * n, atol=1e-9)
        assert cs.switch == (cs.compression >= model.threshold)

    def test_off_deck_ignored(self):
        model = ContactModel((0, 0, 0), (0, 0, 1), x_axis=(1, 0, 0), y_axis=(0, 1, 0), bounds=(0, 1, 0, 1))
        f, _ = contact_update((2.0, 0.5, 0.01), (0, 0, 0), model, ContactState(), True, 0.001)
        assert f == (0.0, 0.0, 0.0)

    def test_stick_then_slip(self):
        model = ContactModel((0, 0, 0), (0, 0, 1), mu=0.5)
        cs = ContactState()
        f, cs = contact_update((0.0, 0.0, 0.01), (0, 0, 0), model, cs, True, 0.001)
        anchor = cs.anchor
        # Small sideways drift: the anchor holds and the spring pulls back.
        f, cs = contact_update((1e-5, 0.0, 0.01), (0, 0, 0), model, cs, True, 0.001)
        assert cs.anchor == anchor and f[0] < 0
        # Large drift: force saturates at mu * N and the anchor slides.
        f, cs = contact_update((0.05, 0.0, 0.01), (0, 0, 0), model, cs, True, 0.001)
        assert math.hypot(f[0], f[1]) == pytest.approx(0.5 * model.k * 0.01, rel=1e-9)
        assert cs.slip > 0 and cs.anchor != anchor


class TestTrigger:
    def test_held_half_second(self):
        fired = press(FLAT, [(0.6, 0.008)])
        assert len(fired) == 1
        assert fired[0] == pytest.approx(0.5, abs=1e-9)

    def test_interrupted_press(self):
        assert press(FLAT, [(0.3, 0.008), (0.05, 0.0), (0.3, 0.008)]) == []

    def test_disarmed(self):
        assert press(FLAT, [(0.6, 0.008)], armed=False) == []

    def test_below_threshold(self):
        assert press(FLAT, [(1.0, 0.0069)]) == []

    def test_fires_once_per_window(self):
        assert len(press(FLAT, [(2.0, 0.008)])) == 1

    def test_latency(self):
        model = ContactModel((0, 0, 0), (0, 0, 1), mu=0.0, trigger_latency=0.1)
        fired = press(model, [(1.0, 0.008)])
        assert fired[0] == pytest.approx(0.6, abs=1e-9)


class TestPlant:
    params = VehicleParams()

    def hover_state(self):
        return VehicleState((0.0, 0.0, -1.0), (0.1, -0.2, 0.0), EulerAngles(0.0, self.params.hover_trim, 0.0))

    def test_equilibrium(self):
        p = self.params
        s = self.hover_state()
        cmd = Command(0.0, p.hover_trim, 0.0, p.m * p.g, False)
        for _ in range(100):
            s = plant_step(s, cmd, (0.0, 0.0, 0.0), p, 0.001)
        np.testing.assert_allclose(s.velocity, (0.1, -0.2, 0.0), atol=1e-12)

    def test_free_fall(self):
        p = self.params
        s = self.hover_state()
        s2 = plant_step(s, Command(0.0, p.hover_trim, 0.0, 0.0, False), (0.0, 0.0, 0.0), p, 0.001)
        assert s2.velocity[2] - s.velocity[2] == pytest.approx(p.g * 0.001, abs=1e-15)

    def test_attitude_lag(self):
        p = self.params
        s = self.hover_state()
        cmd = Command(0.1, p.hover_trim, 0.0, p.m * p.g, False)
        for _ in range(150):
            s = plant_step(s, cmd, (0.0, 0.0, 0.0), p, 0.001)
        # After one time constant the roll has covered 1 - 1/e of the step.
        assert s.attitude.roll == pytest.approx(0.1 * (1 - math.exp(-1)), rel=1e-9)

    def test_ground_clamp(self):
        p = self.params
        s = VehicleState((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), EulerAngles(0.0, p.hover_trim, 0.0))
        s = plant_step(s, Command(0.0, p.hover_trim, 0.0, 0.0, False), (0.0, 0.0, 0.0), p, 0.001)
        assert s.position[2] == 0.0 and s.velocity[2] == 0.0

    def test_rejects_bad_input(self):
        s = self.hover_state()
        cmd = Command(0.0, 0.0, 0.0, 0.0, False)
        with pytest.raises(ValueError):
            plant_step(s, cmd, (0.0, 0.0, 0.0), self.params, 0.02)
        with pytest.raises(SimulationFault):
            plant_step(s, cmd, (float("nan"), 0.0, 0.0), self.params, 0.001)

    def test_static_force_balance(self):
        """Closed loop with P-D only settles where the gun push balances Kp * m * e."""
        p = VehicleParams()
        g = Gains(ki_xy=0.0, ki_z=0.0)
        F = 24.5
        up = np.array([0.0, -math.sin(math.radians(30)), -math.cos(math.radians(30))])
        ext = tuple(F * up)
        ref = Reference((0.0, 0.0, -1.0), (0.0, 0.0, 0.0), (0.0, 0.0, 0.0))
        s = VehicleState(ref.position, (0.0, 0.0, 0.0), EulerAngles(0.0, p.hover_trim, 0.0))
        integ = (0.0, 0.0, 0.0)
        for _ in range(20_000):
            cmd, integ = controller_update(s, ref, g, p, integ, 0.001)
            s = plant_step(s, cmd, ext, p, 0.001)
        expect = np.array(ref.position) + F * up / (p.m * np.array([g.kp_xy, g.kp_xy, g.kp_z]))
        np.testing.assert_allclose(s.position, expect, atol=1e-5)


class TestController:
    p0 = VehicleParams(hover_trim=0.0)

    def test_hover(self):
        p = VehicleParams()
        s = VehicleState((1.0, 2.0, -1.0), (0.0, 0.0, 0.0), EulerAngles(0.0, p.hover_trim, 0.0))
        ref = Reference(s.position, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0))
        cmd, _ = controller_update(s, ref, Gains(), p, (0.0, 0.0, 0.0), 0.001)
        assert cmd.thrust == pytest.approx(p.m * p.g, rel=1e-12)
        assert cmd.roll == pytest.approx(0.0, abs=1e-15)
        assert cmd.pitch == pytest.approx(p.hover_trim, abs=1e-15)
        assert not cmd.saturated

    @pytest.mark.parametrize("e", [0.01, 0.05, 0.2])
    def test_pitch_from_x_error(self, e):
        g = Gains(ki_xy=0.0, kd_xy=0.0, ki_z=0.0, kd_z=0.0)
        s = VehicleState((0.0, 0.0, -1.0))
        ref = Reference((e, 0.0, -1.0), (0.0, 0.0, 0.0), (0.0, 0.0, 0.0))
        cmd, _ = controller_update(s, ref, g, self.p0, (0.0, 0.0, 0.0), 0.001)
        # In NED a nose-down (negative) pitch tilts thrust toward +x.
        assert cmd.pitch == pytest.approx(-math.atan(g.kp_xy * e / self.p0.g), rel=1e-12)
        assert cmd.roll == pytest.approx(0.0, abs=1e-15)

    def test_trim_offsets_pitch(self):
        p = VehicleParams()
        g = Gains(ki_xy=0.0, kd_xy=0.0)
        s = VehicleState((0.0, 0.0, -1.0))
        ref = Reference((0.05, 0.0, -1.0), (0.0, 0.0, 0.0), (0.0, 0.0, 0.0))
        cmd, _ = controller_update(s, ref, g, p, (0.0, 0.0, 0.0), 0.001)
        assert cmd.pitch == pytest.approx(-math.atan(g.kp_xy * 0.05 / p.g) + p.hover_trim, rel=1e-12)

    def test_integrator_clamp(self):
        g = Gains()
        s = VehicleState((0.0, 0.0, -1.0))
        ref = Reference((1.0, -1.0, -2.0), (0.0, 0.0, 0.0), (0.0, 0.0, 0.0))
        integ = (0.0, 0.0, 0.0)
        for _ in range(10_000):
            _, integ = controller_update(s, ref, g, self.p0, integ, 0.01)
        assert max(abs(c) for c in integ) == pytest.approx(g.i_limit)

    def test_tilt_saturation(self):
        g = Gains()
        s = VehicleState((0.0, 0.0, -1.0))
        ref = Reference((100.0, 0.0, -1.0), (0.0, 0.0, 0.0), (0.0, 0.0, 0.0))
        cmd, _ = controller_update(s, ref, g, self.p0, (0.0, 0.0, 0.0), 0.001)
        assert cmd.saturated
        assert abs(cmd.pitch) == pytest.approx(g.max_tilt, rel=1e-9)


class TestEnergy:
    def test_coast_in_reaches_design_compression(self):
        p = VehicleParams(hover_trim=0.0)
        c = 0.007
        v1 = math.sqrt(3500.0 / p.m) * c
        deck = ContactModel((0.0, 0.0, -0.5), (0.0, 0.0, 1.0), mu=0.0)
        s = VehicleState((0.0, 0.0, -0.501), (0.0, 0.0, v1), EulerAngles())
        hover = Command(0.0, 0.0, 0.0, p.m * p.g, False)
        cs = ContactState()
        peak = 0.0
        for _ in range(2000):
            f, cs = contact_update(s.position, s.velocity, deck, cs, False, 0.001)
            peak = max(peak, cs.compression)
            s = plant_step(s, hover, f, p, 0.001)
            if s.velocity[2] < 0 and cs.compression == 0.0:
                break
        assert peak == pytest.approx(c, rel=0.02)


class TestWind:
    def test_disabled(self):
        m = WindModel(WindConfig(enabled=False), np.random.default_rng(0))
        assert wind_update(m, 0.001) == (0.0, 0.0, 0.0)

    def test_zero_sigma(self):
        m = WindModel(WindConfig(enabled=True, sigma=0.0), np.random.default_rng(0))
        assert wind_update(m, 0.001) == (0.0, 0.0, 0.0)

    def test_stationary_std(self):
        m = WindModel(WindConfig(enabled=True, sigma=1.0, tau=0.05), np.random.default_rng(42))
        xs = np.array([wind_update(m, 0.01)[:2] for _ in range(100_000)])
        np.testing.assert_allclose(xs.std(axis=0), 1.0, rtol=0.05)

    def test_correlation_time(self):
        tau, dt = 0.5, 0.01
        m = WindModel(WindConfig(enabled=True, sigma=1.0, tau=tau), np.random.default_rng(1))
        x = np.array([wind_update(m, dt)[0] for _ in range(200_000)])
        lag = int(tau / dt)
        r = np.corrcoef(x[:-lag], x[lag:])[0, 1]
        assert r == pytest.approx(math.exp(-1), abs=0.05)


class TestRun:
    def test_empty_layout(self):
        res = run(empty_plan(), SimConfig(), seed=0)
        assert res.phase_trace == ["Takeoff", "ReturnLand"]
        assert res.nails == [] and not res.aborted

    def test_determinism_and_seed_sensitivity(self):
        cfg = SimConfig(wind=WindConfig(enabled=True, sigma=0.5), position_noise=1e-3)
        a = run(empty_plan(), cfg, seed=7)
        b = run(empty_plan(), cfg, seed=7)
        c = run(empty_plan(), cfg, seed=8)
        assert np.array_equal(a.log.data, b.log.data) and a.log.phases == b.log.phases
        assert not np.array_equal(a.log.data, c.log.data)

    def test_watchdog(self):
        res = run(empty_plan(), SimConfig(landing_speed=0.0), seed=0)
        assert res.aborted and "ReturnLand" in res.abort_reason
        assert GRAMMAR.match(",".join(res.phase_trace))

    def test_csv_roundtrip(self, tmp_path):
        res = run(empty_plan(), SimConfig(), seed=0)
        res.log.write_csv(tmp_path / "log.csv")
        back = SimLog.read_csv(tmp_path / "log.csv")
        assert np.array_equal(back.data, res.log.data)
        assert back.phase_labels() == res.log.phase_labels()
        res.log.write_csv(tmp_path / "dec.csv", stride=10)
        dec = SimLog.read_csv(tmp_path / "dec.csv")
        assert np.array_equal(dec.data, res.log.data[::10])

    def test_closed_loop_30(self, run_at):
        res = run_at(30.0).result
        assert res.deployed == 4
        assert [n.index for n in res.nails] == [0, 1, 2, 3]
        assert GRAMMAR.match(",".join(res.phase_trace))

    @pytest.mark.parametrize("alpha", [0.0, 15.0, 30.0])
    def test_log_contracts(self, run_at, alpha):
        log = run_at(alpha).result.log
        comp, sw, armed = log.column("compression_m"), log.column("switch"), log.column("armed")
        assert np.array_equal(sw == 1.0, comp >= 0.007)
        labels = np.array(log.phase_labels())
        is_approach = np.char.startswith(labels, "NailApproach")
        assert np.array_equal(armed == 1.0, is_approach)
        # Logged times are a uniform 1 kHz grid.
        t = log.column("t")
        np.testing.assert_allclose(np.diff(t), 0.001, atol=1e-9)
