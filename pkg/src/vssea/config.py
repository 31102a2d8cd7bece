"""Flat dotted-key run configuration.

A configuration is a stack of layers, each a flat ``{"section.key": value}``
mapping: built-in defaults, then a file, then command-line overrides.  Later
layers win.  Files are TOML restricted to one level of sections, so both
``vsam.moment_arm = 0.04`` and a ``[vsam]`` table work.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .beam import BeamSpec, SolverSettings
from .dynamics import ActuatorParams
from .errors import InfeasibleGeometry, ParseError, UnknownKey, ValidationError
from .vsam import StiffnessModelKind, calibrate

OUT_DIR_ENV = "VSSEA_OUT_DIR"

DEFAULTS = {
    "beam.youngs_modulus": 200e9,
    "beam.full_length": 0.1,
    "vsam.k_soft": 21.0,
    "vsam.k_stiff": 985.0,
    "vsam.spring_count": 8,
    "vsam.moment_arm": 0.015,
    "vsam.screw_lead": 0.01,
    "vsam.deflection_limit_deg": 25.0,
    "actuator.model": "small",
    "actuator.J_m1": 3e-4,
    "actuator.J_g": 1e-5,
    "actuator.J_m2": 8e-5,
    "actuator.J_l": 0.05,
    "actuator.b_m1": 1e-4,
    "actuator.b_g": 1e-4,
    "actuator.b_m2": 1e-4,
    "actuator.b_l": 0.01,
    "actuator.gear_ratio": 100.0,
    "actuator.tau_m1_max": 1.1,
    "actuator.tau_m2_max": 0.4,
    "actuator.env_stiffness": 0.0,
    "actuator.env_damping": 0.0,
    "solver.residual_tol": 1e-10,
    "solver.max_iterations": 200,
    "solver.quadrature_points": 64,
    "sim.physics_dt": 1e-4,
    "sim.control_dt": 1e-3,
    "sim.scenario": "",
    "sim.out_dir": "",
    "sim.workers": 1,
}


@dataclass(frozen=True)
class RunConfig:
    values: dict
    params: ActuatorParams
    settings: SolverSettings
    physics_dt: float
    control_dt: float
    scenario: str
    out_dir: Path
    workers: int

    def __getitem__(self, key):
        return self.values[key]


def _flatten(doc: dict, where: str = "") -> dict:
    flat = {}
    for key, value in doc.items():
        name = f"{where}.{key}" if where else key
        if isinstance(value, dict):
            if where:
                raise UnknownKey(f"{name}: sections nest only one level deep")
            flat.update(_flatten(value, name))
        else:
            flat[name] = value
    return flat


def _check_types(layer: dict) -> dict:
    out = {}
    for key, value in layer.items():
        if key not in DEFAULTS:
            raise UnknownKey(f"unknown configuration key {key!r}")
        default = DEFAULTS[key]
        if isinstance(default, bool) or isinstance(value, bool):
            raise ValidationError(f"{key}: booleans are not accepted", key.split(".")[0], "type")
        if isinstance(default, str):
            if not isinstance(value, str):
                raise ValidationError(f"{key} must be a string", key.split(".")[0], "type")
        elif isinstance(default, int):
            if not isinstance(value, int):
                raise ValidationError(f"{key} must be an integer", key.split(".")[0], "type")
        else:
            if not isinstance(value, (int, float)):
                raise ValidationError(f"{key} must be a number", key.split(".")[0], "type")
            value = float(value)
            if not math.isfinite(value):
                raise ValidationError(f"{key} must be finite", key.split(".")[0], "finite")
        out[key] = value
    return out


def parse_layer(text: str) -> dict:
    """Parse one configuration document into a checked flat layer."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(str(exc), getattr(exc, "lineno", None), getattr(exc, "colno", None)) from exc
    return _check_types(_flatten(doc))


def parse_override(item: str) -> dict:
    """``"section.key=value"`` from the command line, value in TOML syntax.

    Bare words that are not valid TOML values are taken as strings.
    """
    key, sep, raw = item.partition("=")
    if not sep:
        raise ParseError(f"override {item!r} is not of the form key=value", 1, 1)
    key, raw = key.strip(), raw.strip()
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return _check_types({key: value})


def merge_layers(*layers: dict) -> dict:
    merged = {}
    for layer in layers:
        merged.update(layer)
    return merged


def _positive(values: dict, *keys):
    for key in keys:
        if not values[key] > 0:
            raise ValidationError(f"{key} must be > 0 (got {values[key]!r})",
                                  key.split(".")[0], "positivity")


def build(values: dict) -> RunConfig:
    """Validate a merged flat mapping and assemble the run objects."""
    values = merge_layers(DEFAULTS, _check_types(values))
    _positive(values, "beam.youngs_modulus", "beam.full_length", "vsam.k_soft", "vsam.k_stiff",
              "vsam.moment_arm", "vsam.screw_lead", "vsam.deflection_limit_deg",
              "sim.physics_dt", "sim.control_dt")
    try:
        settings = SolverSettings(values["solver.residual_tol"], values["solver.max_iterations"],
                                  values["solver.quadrature_points"])
    except ValueError as exc:
        raise ValidationError(str(exc), "solver", "settings") from exc
    try:
        vsam = calibrate(
            BeamSpec(values["beam.youngs_modulus"], 1.0, values["beam.full_length"]),
            values["vsam.k_soft"], values["vsam.k_stiff"],
            spring_count=values["vsam.spring_count"],
            moment_arm=values["vsam.moment_arm"],
            screw_lead=values["vsam.screw_lead"],
            deflection_limit=math.radians(values["vsam.deflection_limit_deg"]),
        )
    except InfeasibleGeometry as exc:
        raise ValidationError(str(exc), "vsam", "minimum roller position") from exc
    except ValueError as exc:
        raise ValidationError(str(exc), "vsam", "geometry") from exc
    try:
        model = StiffnessModelKind.parse(values["actuator.model"])
        params = ActuatorParams(
            vsam=vsam, model=model, settings=settings,
            **{key.split(".", 1)[1]: values[key] for key in DEFAULTS
               if key.startswith("actuator.") and key != "actuator.model"},
        )
    except ValueError as exc:
        raise ValidationError(str(exc), "dynamics", "actuator parameters") from exc

    physics_dt, control_dt = values["sim.physics_dt"], values["sim.control_dt"]
    ratio = control_dt / physics_dt
    if round(ratio) < 1 or abs(ratio - round(ratio)) > 1e-9 * ratio:
        raise ValidationError(
            f"sim.control_dt = {control_dt!r} is not an integer multiple of "
            f"sim.physics_dt = {physics_dt!r}", "sim", "integer step ratio")
    if values["sim.workers"] < 1:
        raise ValidationError("sim.workers must be >= 1", "sim", "positivity")
    out_dir = values["sim.out_dir"] or os.environ.get(OUT_DIR_ENV, "") or "."
    return RunConfig(values, params, settings, physics_dt, control_dt,
                     values["sim.scenario"], Path(out_dir), values["sim.workers"])


def load_config(path=None, overrides=()) -> RunConfig:
    """Defaults, then the file at ``path`` (if any), then ``key=value`` overrides."""
    layers = []
    if path is not None:
        layers.append(parse_layer(Path(path).read_text(encoding="utf-8")))
    layers.extend(parse_override(item) for item in overrides)
    return build(merge_layers(*layers))


def dump(values: dict) -> str:
    """Render a flat mapping as a dotted-key document that :func:`parse_layer` reads back."""
    lines = []
    for key in sorted(values):
        value = values[key]
        if isinstance(value, str):
            text = '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
