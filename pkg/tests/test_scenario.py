from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from roofnail.mission import DEFAULT_NAIL_Y
from roofnail.scenario import Scenario, ScenarioError, loads, parse_override, parse_scenario, resolve_key


def test_minimal_file(tmp_path):
    p = tmp_path / "s.yaml"
    p.write_text("roof:\n  alpha_deg: 30\n")
    sc = parse_scenario(p)
    assert sc.mount.delta_deg == 30.0
    assert [pt[1] for pt in sc.shingle.nail_points] == list(DEFAULT_NAIL_Y)
    assert sc.guidance.v_f == 0.15 and sc.guidance.d_b == 0.24
    assert sc.contact.k == 3500.0 and sc.seed == 0
    assert math.degrees(sc.nailgun_mount().delta) == pytest.approx(30.0)


def test_alpha_out_of_envelope():
    with pytest.raises(ScenarioError, match=r"<s>:2: .*alpha_deg"):
        loads("roof:\n  alpha_deg: 50\n", "<s>")


def test_unknown_key_has_line():
    text = "seed: 3\nroof:\n  alpha_deg: 15\n  colour: red\n"
    with pytest.raises(ScenarioError) as exc:
        loads(text, "f.yaml")
    assert exc.value.line == 4 and "roof.colour" in str(exc.value)


def test_unknown_section():
    with pytest.raises(ScenarioError, match="unknown key rotor"):
        loads("rotor: {}\n")


def test_malformed_syntax():
    with pytest.raises(ScenarioError, match="malformed") as exc:
        loads("roof:\n  alpha_deg: [1, 2\n")
    assert exc.value.line is not None


def test_missing_file(tmp_path):
    with pytest.raises(ScenarioError, match="not found"):
        parse_scenario(tmp_path / "nope.yaml")


def test_wrong_type():
    with pytest.raises(ScenarioError, match="expected"):
        loads("guidance:\n  v_f: fast\n")


def test_invariant_violation_names_section_line():
    text = "seed: 1\nshingle:\n  nail_points: [[0.40, 0.1]]\n"
    with pytest.raises(ScenarioError, match="band") as exc:
        loads(text)
    assert exc.value.line == 2


def test_log_stride_validated():
    with pytest.raises(ScenarioError):
        loads("sim:\n  log_stride: 0\n")


def test_comments_allowed():
    sc = loads("# grid\nroof:\n  alpha_deg: 15  # slope\n")
    assert sc.roof.alpha_deg == 15.0


def test_round_trip(tmp_path):
    sc = loads("roof:\n  alpha_deg: 15\nwind:\n  enabled: true\nseed: 9\n")
    p = tmp_path / "a.yaml"
    sc.save(p)
    again = parse_scenario(p)
    assert again == sc
    again.save(tmp_path / "b.yaml")
    assert (tmp_path / "a.yaml").read_text() == (tmp_path / "b.yaml").read_text()


@given(
    st.sampled_from([0.0, 15.0, 30.0]),
    st.floats(0.05, 0.3),
    st.integers(0, 2**32),
    st.booleans(),
    st.floats(-0.05, 0.05),
)
def test_round_trip_property(alpha, v_f, seed, wind, shift):
    sc = Scenario().replace(
        **{"roof.alpha_deg": alpha, "guidance.v_f": v_f, "seed": seed, "wind.enabled": wind,
           "guidance.setpoint_shift": [shift, 0.0]}
    )  # fmt: skip
    assert loads(sc.dumps()) == sc


def test_overrides():
    sc = loads("roof:\n  alpha_deg: 0\n", overrides={"alpha_deg": 30, "contact.mu": 0.5})
    assert sc.roof.alpha_deg == 30 and sc.mount.delta_deg == 30 and sc.contact.mu == 0.5
    with pytest.raises(ScenarioError):
        loads("{}", overrides={"nonsense": 1})


def test_replace_keeps_independent_delta():
    sc = loads("roof:\n  alpha_deg: 30\nmount:\n  delta_deg: 30\n")
    assert sc.replace(**{"roof.alpha_deg": 15}).mount.delta_deg == 15
    fixed = loads("roof:\n  alpha_deg: 30\nmount:\n  delta_deg: 0\nguidance:\n  allow_mount_mismatch: true\n")
    assert fixed.replace(**{"roof.alpha_deg": 15}).mount.delta_deg == 0


def test_parse_override():
    assert parse_override("roof.alpha_deg=15") == ("roof.alpha_deg", 15)
    assert parse_override("guidance.setpoint_shift=[0.01, 0]") == ("guidance.setpoint_shift", [0.01, 0])
    with pytest.raises(ScenarioError):
        parse_override("novalue")


def test_resolve_key():
    assert resolve_key("alpha_deg") == "roof.alpha_deg"
    assert resolve_key("wind.enabled") == "wind.enabled"
    assert resolve_key("enabled") == "wind.enabled"
    with pytest.raises(ScenarioError, match="unknown or ambiguous"):
        resolve_key("k_p")


def test_domain_objects():
    sc = loads("roof:\n  alpha_deg: 15\ncontroller:\n  kp_xy: 10\n")
    cfg = sc.sim_config()
    assert cfg.gains.kp_xy == 10.0
    assert cfg.vehicle.m == pytest.approx(9.2)
    assert sc.roof_model().alpha == pytest.approx(math.radians(15))
    assert sc.guidance_params().hover_pitch == pytest.approx(math.radians(-2))
