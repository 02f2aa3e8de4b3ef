"""Scenario files: hierarchical YAML with comments, strict keys, full defaults.

A scenario is resolved on load: every field holds a concrete value (the
mount angle defaults to the roof slope, the nail layout to the standard
four-nail pattern), so dumping and reloading is lossless.
"""

from __future__ import annotations

import copy
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .mission import (
    DEFAULT_BAND,
    GuidanceParams,
    MissionError,
    NailgunMount,
    RoofModel,
    ShingleLayout,
)
from .sim.engine import SimConfig
from .sim.vehicle import Gains, VehicleParams
from .sim.wind import WindConfig


class ScenarioError(ValueError):
    def __init__(self, msg: str, line: int | None = None, source: str = "<scenario>"):
        self.line = line
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + msg)


@dataclass
class RoofSection:
    alpha_deg: float = 0.0
    origin: list[float] = field(default_factory=lambda: [2.0, 0.0, -0.8])
    yaw_deg: float = 0.0
    roll_deg: float = 0.0
    width: float = 1.22
    height: float = 0.61


@dataclass
class ShingleSection:
    nail_points: list[list[float]] | None = None
    band_lower: float = DEFAULT_BAND[0]
    band_upper: float = DEFAULT_BAND[1]


@dataclass
class MountSection:
    w: float = 0.10
    l: float = 0.40
    h: float = 0.15
    delta_deg: float | None = None
    allow_arbitrary_delta: bool = False


@dataclass
class GuidanceSection:
    v_f: float = 0.15
    a_max: float = 0.10
    d_s: float = 1.0
    d_b: float = 0.24
    hover_pitch_deg: float = -2.0
    takeoff_altitude: float = 1.5
    transit_speed: float = 0.5
    retreat_min_duration: float = 3.0
    retreat_duration_factor: float = 1.5
    settle_time: float = 2.0
    allow_mount_mismatch: bool = False
    setpoint_shift: list[float] = field(default_factory=lambda: [0.0, 0.0])


@dataclass
class ControllerSection:
    kp_xy: float = Gains.kp_xy
    ki_xy: float = Gains.ki_xy
    kd_xy: float = Gains.kd_xy
    kp_z: float = Gains.kp_z
    ki_z: float = Gains.ki_z
    kd_z: float = Gains.kd_z
    i_limit: float = Gains.i_limit
    max_tilt_deg: float = 35.0


@dataclass
class VehicleSection:
    m_o: float = 4.8
    m_b: float = 1.4
    m_n: float = 3.0
    tau_att: float = 0.15
    g: float = 9.80665
    thrust_max: float = 180.0
    hover_trim_deg: float = -2.0


@dataclass
class ContactSection:
    k: float = 3500.0
    threshold: float = 0.007
    hold_time: float = 0.5
    mu: float = 0.9
    trigger_latency: float = 0.0


@dataclass
class WindSection:
    enabled: bool = False
    sigma: float = 1.0
    tau: float = 2.0
    mean: list[float] = field(default_factory=lambda: [0.0, 0.0])


@dataclass
class BiasSection:
    ground_x_offset: float = 0.0
    roof_offset: list[float] = field(default_factory=lambda: [0.0, 0.0])


@dataclass
class SimSection:
    dt: float = 0.001
    position_noise: float = 0.0
    velocity_noise: float = 0.0
    watchdog_factor: float = 3.0
    landing_tolerance: float = 0.02
    landing_speed: float = 0.02
    log_stride: int = 10


SECTIONS: dict[str, type] = {
    "roof": RoofSection,
    "shingle": ShingleSection,
    "mount": MountSection,
    "guidance": GuidanceSection,
    "controller": ControllerSection,
    "vehicle": VehicleSection,
    "contact": ContactSection,
    "wind": WindSection,
    "bias": BiasSection,
    "sim": SimSection,
}
TOP_LEVEL = ("seed", "output_dir")


class _Dumper(yaml.SafeDumper):
    """Block-style sections with inline lists."""


_Dumper.add_representer(
    list, lambda d, v: d.represent_sequence("tag:yaml.org,2002:seq", v, flow_style=True)
)


@dataclass
class Scenario:
    roof: RoofSection = field(default_factory=RoofSection)
    shingle: ShingleSection = field(default_factory=ShingleSection)
    mount: MountSection = field(default_factory=MountSection)
    guidance: GuidanceSection = field(default_factory=GuidanceSection)
    controller: ControllerSection = field(default_factory=ControllerSection)
    vehicle: VehicleSection = field(default_factory=VehicleSection)
    contact: ContactSection = field(default_factory=ContactSection)
    wind: WindSection = field(default_factory=WindSection)
    bias: BiasSection = field(default_factory=BiasSection)
    sim: SimSection = field(default_factory=SimSection)
    seed: int = 0
    output_dir: str = "runs"

    # ---- conversion to domain objects

    def roof_model(self) -> RoofModel:
        r = self.roof
        return RoofModel(
            math.radians(r.alpha_deg),
            tuple(r.origin),
            math.radians(r.yaw_deg),
            math.radians(r.roll_deg),
            r.width,
            r.height,
        )

    def layout(self) -> ShingleLayout:
        s = self.shingle
        return ShingleLayout(s.nail_points or [], s.band_lower, s.band_upper)

    def nailgun_mount(self) -> NailgunMount:
        m = self.mount
        return NailgunMount(m.w, m.l, m.h, math.radians(m.delta_deg), m.allow_arbitrary_delta)

    def guidance_params(self) -> GuidanceParams:
        g = self.guidance
        return GuidanceParams(
            v_f=g.v_f,
            a_max=g.a_max,
            d_s=g.d_s,
            d_b=g.d_b,
            hover_pitch=math.radians(g.hover_pitch_deg),
            takeoff_altitude=g.takeoff_altitude,
            transit_speed=g.transit_speed,
            retreat_min_duration=g.retreat_min_duration,
            retreat_duration_factor=g.retreat_duration_factor,
            settle_time=g.settle_time,
            allow_mount_mismatch=g.allow_mount_mismatch,
            setpoint_shift=tuple(g.setpoint_shift),
            roof_offset=tuple(self.bias.roof_offset),
            ground_x_offset=self.bias.ground_x_offset,
        )

    def sim_config(self) -> SimConfig:
        c, v, k = self.controller, self.vehicle, self.contact
        gains = Gains(c.kp_xy, c.ki_xy, c.kd_xy, c.kp_z, c.ki_z, c.kd_z, c.i_limit, math.radians(c.max_tilt_deg))
        vehicle = VehicleParams(
            v.m_o, v.m_b, v.m_n, v.tau_att, v.g, 0.0, v.thrust_max, math.radians(v.hover_trim_deg)
        )
        w = self.wind
        return SimConfig(
            dt=self.sim.dt,
            vehicle=vehicle,
            gains=gains,
            k=k.k,
            threshold=k.threshold,
            hold_time=k.hold_time,
            mu=k.mu,
            trigger_latency=k.trigger_latency,
            wind=WindConfig(w.enabled, w.sigma, w.tau, tuple(w.mean)),
            position_noise=self.sim.position_noise,
            velocity_noise=self.sim.velocity_noise,
            watchdog_factor=self.sim.watchdog_factor,
            landing_tolerance=self.sim.landing_tolerance,
            landing_speed=self.sim.landing_speed,
        )

    # ---- serialization

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def dumps(self) -> str:
        return yaml.dump(self.to_dict(), Dumper=_Dumper, sort_keys=False)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    def replace(self, **dotted: Any) -> Scenario:
        """Copy with dotted-path overrides, e.g. ``replace(**{"roof.alpha_deg": 15})``."""
        d = self.to_dict()
        if (
            "roof.alpha_deg" in dotted
            and "mount.delta_deg" not in dotted
            and self.mount.delta_deg == self.roof.alpha_deg
        ):
            # Mount follows the roof unless set independently.
            dotted = {**dotted, "mount.delta_deg": dotted["roof.alpha_deg"]}
        for key, value in dotted.items():
            _set_dotted(d, key, value)
        return from_dict(d)


# --------------------------------------------------------------------------- parsing


def _set_dotted(d: dict, key: str, value: Any) -> None:
    parts = key.split(".")
    cur = d
    for p in parts[:-1]:
        if p not in cur or not isinstance(cur[p], dict):
            raise ScenarioError(f"unknown key {key!r}", source="override")
        cur = cur[p]
    if parts[-1] not in cur:
        raise ScenarioError(f"unknown key {key!r}", source="override")
    cur[parts[-1]] = value


def scenario_keys() -> list[str]:
    keys = [f"{s}.{f.name}" for s, cls in SECTIONS.items() for f in dataclasses.fields(cls)]
    return keys + list(TOP_LEVEL)


def resolve_key(name: str) -> str:
    """Accept a full dotted key or an unambiguous leaf name."""
    keys = scenario_keys()
    if name in keys:
        return name
    hits = [k for k in keys if k.split(".")[-1] == name]
    if len(hits) == 1:
        return hits[0]
    raise ScenarioError(f"unknown or ambiguous parameter {name!r}", source="override")


def _lines(node: yaml.Node) -> dict[tuple[str, ...], int]:
    """Map key paths to 1-based line numbers."""
    out: dict[tuple[str, ...], int] = {}

    def walk(n: yaml.Node, path: tuple[str, ...]) -> None:
        if isinstance(n, yaml.MappingNode):
            for k, v in n.value:
                p = path + (str(k.value),)
                out[p] = k.start_mark.line + 1
                walk(v, p)

    walk(node, ())
    return out


def _coerce(value: Any, default: Any, ftype: str, where: str, line: int | None, source: str) -> Any:
    def bad(expect: str) -> ScenarioError:
        return ScenarioError(f"{where}: expected {expect}, got {value!r}", line, source)

    if value is None:
        if "None" in ftype:
            return None
        raise bad("a value")
    if "bool" in ftype:
        if not isinstance(value, bool):
            raise bad("true/false")
        return value
    if ftype == "int":
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise bad("a nonnegative integer")
        return value
    if ftype == "str":
        if not isinstance(value, str):
            raise bad("a string")
        return value
    if "list[list[float]]" in ftype:
        if not isinstance(value, list) or not all(
            isinstance(p, list) and len(p) == 2 and all(_is_num(c) for c in p) for p in value
        ):
            raise bad("a list of [x, y] pairs")
        return [[float(c) for c in p] for p in value]
    if "list[float]" in ftype:
        n = len(default) if default is not None else None
        if not isinstance(value, list) or not all(_is_num(c) for c in value) or (n and len(value) != n):
            raise bad(f"a list of {n} numbers")
        return [float(c) for c in value]
    if "float" in ftype:
        if not _is_num(value) or not math.isfinite(float(value)):
            raise bad("a number")
        return float(value)
    raise AssertionError(ftype)


def _is_num(x: Any) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def from_dict(raw: dict[str, Any], lines: dict[tuple[str, ...], int] | None = None, source: str = "<scenario>") -> Scenario:
    lines = lines or {}
    if not isinstance(raw, dict):
        raise ScenarioError("top level must be a mapping", 1, source)
    kwargs: dict[str, Any] = {}
    for key, value in raw.items():
        line = lines.get((key,))
        if key in SECTIONS:
            cls = SECTIONS[key]
            if value is None:
                value = {}
            if not isinstance(value, dict):
                raise ScenarioError(f"section {key!r} must be a mapping", line, source)
            fields = {f.name: f for f in dataclasses.fields(cls)}
            defaults = cls()
            vals = {}
            for sub, v in value.items():
                sline = lines.get((key, sub), line)
                if sub not in fields:
                    raise ScenarioError(f"unknown key {key}.{sub}", sline, source)
                f = fields[sub]
                vals[sub] = _coerce(v, getattr(defaults, sub), str(f.type), f"{key}.{sub}", sline, source)
            kwargs[key] = cls(**vals)
        elif key in TOP_LEVEL:
            ftype = "int" if key == "seed" else "str"
            kwargs[key] = _coerce(value, None, ftype, key, line, source)
        else:
            raise ScenarioError(f"unknown key {key}", line, source)
    sc = Scenario(**kwargs)
    _resolve(sc, lines, source)
    return sc


def _resolve(sc: Scenario, lines: dict[tuple[str, ...], int], source: str) -> None:
    def at(*path: str) -> int | None:
        while path:
            if path in lines:
                return lines[path]
            path = path[:-1]
        return None

    a = sc.roof.alpha_deg
    if not 0.0 <= a <= 45.0:
        raise ScenarioError(f"roof.alpha_deg={a} outside the [0, 45] deg envelope", at("roof", "alpha_deg"), source)
    if sc.mount.delta_deg is None:
        sc.mount.delta_deg = a
    if sc.shingle.nail_points is None:
        sc.shingle.nail_points = ShingleLayout.default().points.tolist()
    if not 0.0 < sc.sim.dt <= 0.01:
        raise ScenarioError(f"sim.dt={sc.sim.dt} outside (0, 0.01] s", at("sim", "dt"), source)
    if sc.sim.log_stride < 1:
        raise ScenarioError("sim.log_stride must be >= 1", at("sim", "log_stride"), source)
    # Domain invariants; report against the owning section.
    for section, build in (
        ("roof", sc.roof_model),
        ("shingle", lambda: sc.layout().validate()),
        ("mount", sc.nailgun_mount),
        ("guidance", sc.guidance_params),
        ("vehicle", sc.sim_config),
    ):
        try:
            build()
        except (MissionError, ValueError) as exc:
            raise ScenarioError(str(exc), at(section), source) from None


def loads(text: str, source: str = "<scenario>", overrides: dict[str, Any] | None = None) -> Scenario:
    try:
        node = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark else None
        raise ScenarioError(f"malformed syntax: {exc.problem}", line, source) from None
    raw = raw if raw is not None else {}
    lines = _lines(node) if node is not None else {}
    if overrides:
        raw = copy.deepcopy(raw)
        for key, value in overrides.items():
            key = resolve_key(key)
            if "." in key:
                section, sub = key.split(".", 1)
                if not isinstance(raw.get(section), dict):
                    raw[section] = {}
                raw[section][sub] = value
            else:
                raw[key] = value
    return from_dict(raw, lines, source)


def parse_scenario(path: str | Path, overrides: dict[str, Any] | None = None) -> Scenario:
    p = Path(path)
    if not p.is_file():
        raise ScenarioError("file not found", source=str(p))
    return loads(p.read_text(), str(p), overrides)


def parse_override(item: str) -> tuple[str, Any]:
    """``key=value`` with the value read as a YAML scalar or flow list."""
    if "=" not in item:
        raise ScenarioError(f"override {item!r} is not key=value", source="override")
    key, text = item.split("=", 1)
    try:
        value = yaml.safe_load(text)
    except yaml.YAMLError:
        raise ScenarioError(f"cannot parse override value {text!r}", source="override") from None
    return key.strip(), value
