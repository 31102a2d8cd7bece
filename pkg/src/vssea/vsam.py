"""Variable stiffness actuation mechanism: n radial leaf springs and a roller.

The roller rides on every spring at arc length ``x_r = eta * q_m2`` from the
clamp (``eta = lead / 2 pi``).  A link deflection ``q`` relative to the
gearbox output bends each spring laterally at the roller; all springs see the
same deflection, so the mechanism torque is ``n * F_y * r``.

Two force laws are available.  ``SMALL`` uses the linear cantilever law and
gives closed forms for torque, stiffness and stored energy.  ``LARGE`` solves
the elastica with :mod:`vssea.beam`; its stiffness and stored energy are
obtained numerically.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .beam import (
    DEFAULT_SETTINGS,
    BeamSpec,
    SolverSettings,
    small_deflection_force,
    solve_force_for_deflection,
    solve_tip_slope,
)
from .errors import DeflectionLimitExceeded, InfeasibleGeometry

#: Closest the roller may sit to the clamp.
MIN_ROLLER_POSITION = 0.005
STIFFNESS_FD_STEP = 1e-5
ENERGY_PANELS = 64


class StiffnessModelKind(enum.Enum):
    LARGE = "large"
    SMALL = "small"

    @classmethod
    def parse(cls, value) -> "StiffnessModelKind":
        if isinstance(value, cls):
            return value
        aliases = {"large": cls.LARGE, "ldm": cls.LARGE, "large_deflection": cls.LARGE,
                   "small": cls.SMALL, "sdm": cls.SMALL, "small_deflection": cls.SMALL}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown stiffness model {value!r}") from None


@dataclass(frozen=True)
class VsamConfig:
    beam: BeamSpec
    x_min: float
    x_max: float
    spring_count: int = 8
    moment_arm: float = 0.015
    screw_lead: float = 0.01
    deflection_limit: float = math.radians(25.0)

    def __post_init__(self):
        if self.spring_count < 1:
            raise ValueError("spring_count must be >= 1")
        if not self.moment_arm > 0:
            raise ValueError("moment_arm must be > 0")
        if not self.screw_lead > 0:
            raise ValueError("screw_lead must be > 0")
        if not 0 < self.x_min < self.x_max <= self.beam.full_length:
            raise ValueError("need 0 < x_min < x_max <= beam.full_length")
        if not 0 < self.deflection_limit < 0.5 * math.pi:
            raise ValueError("deflection_limit must be in (0, pi/2)")

    @property
    def eta(self) -> float:
        return self.screw_lead / (2.0 * math.pi)

    @property
    def q_m2_soft(self) -> float:
        """Motor-2 angle that puts the roller at ``x_max``."""
        return self.x_max / self.eta

    @property
    def q_m2_stiff(self) -> float:
        return self.x_min / self.eta


def calibrate(
    beam_family: BeamSpec,
    k_soft: float = 21.0,
    k_stiff: float = 985.0,
    *,
    spring_count: int = 8,
    moment_arm: float = 0.015,
    screw_lead: float = 0.01,
    deflection_limit: float = math.radians(25.0),
) -> VsamConfig:
    """Size the spring cross-section and roller travel for two stiffness endpoints.

    ``beam_family.area_moment`` is ignored: it is solved from the soft
    endpoint at ``x_max = full_length``.  The stiff endpoint then fixes
    ``x_min`` through the cubic dependence of stiffness on roller position.
    """
    if not (k_soft > 0 and k_stiff > 0):
        raise ValueError("stiffness targets must be positive")
    if not k_stiff > k_soft:
        raise ValueError("k_stiff must exceed k_soft")
    length = beam_family.full_length
    n = spring_count
    area_moment = k_soft * length**3 / (3.0 * n * beam_family.youngs_modulus * moment_arm**2)
    x_min = length * (k_soft / k_stiff) ** (1.0 / 3.0)
    if x_min < MIN_ROLLER_POSITION:
        raise InfeasibleGeometry(
            f"x_min = {x_min * 1e3:.3f} mm is closer than "
            f"{MIN_ROLLER_POSITION * 1e3:.0f} mm to the clamp"
        )
    return VsamConfig(
        beam=replace(beam_family, area_moment=area_moment),
        x_min=x_min,
        x_max=length,
        spring_count=n,
        moment_arm=moment_arm,
        screw_lead=screw_lead,
        deflection_limit=deflection_limit,
    )


def default_config() -> VsamConfig:
    """Spring steel, 100 mm springs, calibrated to 21 and 985 Nm/rad."""
    return calibrate(BeamSpec(200e9, 1.0, 0.1))


def roller_position(config: VsamConfig, q_m2: float) -> float:
    return min(max(config.eta * q_m2, config.x_min), config.x_max)


def roller_clamped(config: VsamConfig, q_m2: float) -> bool:
    """True when the nut sits on an end stop at this motor-2 angle."""
    x = config.eta * q_m2
    return x <= config.x_min or x >= config.x_max


def _check(config: VsamConfig, q_l_rel: float) -> None:
    if abs(q_l_rel) > config.deflection_limit * (1.0 + 1e-12):
        raise DeflectionLimitExceeded(
            f"|q_l_rel| = {math.degrees(abs(q_l_rel)):.3f} deg exceeds "
            f"{math.degrees(config.deflection_limit):.1f} deg"
        )


def _lateral(config: VsamConfig, q_l_rel: float) -> float:
    return 2.0 * config.moment_arm * math.sin(0.5 * q_l_rel) * math.cos(q_l_rel)


def spring_deflection(config: VsamConfig, q_l_rel: float) -> float:
    """Lateral spring deflection at the roller for a link deflection ``q_l_rel``."""
    _check(config, q_l_rel)
    return _lateral(config, q_l_rel)


def _elastica_force(config, x, q_l_rel, settings):
    d = _lateral(config, q_l_rel)
    f = solve_force_for_deflection(config.beam, x, abs(d), settings)
    return math.copysign(f, d)


def _sdm_gain(config: VsamConfig, x: float) -> float:
    # n * 3EI / x^3 * r^2: torque = 2 * gain * sin(q/2), stiffness = gain * cos(q/2)
    return 3.0 * config.spring_count * config.beam.flexural_rigidity * config.moment_arm**2 / x**3


def _torque(config, model, x, q_l_rel, settings):
    if model is StiffnessModelKind.SMALL:
        return 2.0 * _sdm_gain(config, x) * math.sin(0.5 * q_l_rel)
    return config.spring_count * _elastica_force(config, x, q_l_rel, settings) * config.moment_arm


def spring_torque(config: VsamConfig, model: StiffnessModelKind, q_m2: float,
                  q_l_rel: float, settings: SolverSettings = DEFAULT_SETTINGS) -> float:
    """Total spring torque on the link; same sign as ``q_l_rel``."""
    _check(config, q_l_rel)
    return _torque(config, model, roller_position(config, q_m2), q_l_rel, settings)


def _stiffness(config, model, x, q_l_rel, settings):
    if model is StiffnessModelKind.SMALL:
        return _sdm_gain(config, x) * math.cos(0.5 * q_l_rel)
    h = STIFFNESS_FD_STEP
    return (_torque(config, model, x, q_l_rel + h, settings)
            - _torque(config, model, x, q_l_rel - h, settings)) / (2.0 * h)


def stiffness(config: VsamConfig, model: StiffnessModelKind, q_m2: float,
              q_l_rel: float, settings: SolverSettings = DEFAULT_SETTINGS) -> float:
    """Tangent torsional stiffness d(tau_s)/d(q_l_rel) in Nm/rad."""
    _check(config, q_l_rel)
    return _stiffness(config, model, roller_position(config, q_m2), q_l_rel, settings)


def disturbance_torque(config: VsamConfig, model: StiffnessModelKind, q_m2: float,
                       q_l_rel: float, settings: SolverSettings = DEFAULT_SETTINGS) -> float:
    """Torque the axial spring reaction ``F_x = F_y tan(phi)`` exerts on motor 2.

    ``phi`` is the spring slope at the roller: the linear-theory estimate
    ``F_y x_r**2 / 2EI`` for ``SMALL``, the elastica tip slope for ``LARGE``.
    The result carries the sign of the spring torque.
    """
    _check(config, q_l_rel)
    if q_l_rel == 0:
        return 0.0
    x = roller_position(config, q_m2)
    beam = config.beam
    if model is StiffnessModelKind.SMALL:
        f_y = small_deflection_force(beam, x, 2.0 * config.moment_arm * math.sin(0.5 * q_l_rel))
        slope = abs(f_y) * x**2 / (2.0 * beam.flexural_rigidity)
    else:
        f_y = _elastica_force(config, x, q_l_rel, settings)
        slope = solve_tip_slope(beam, x, abs(f_y), settings)
    return config.spring_count * f_y * math.tan(slope) * config.moment_arm


def _energy(config, model, x, q_l_rel, settings):
    if model is StiffnessModelKind.SMALL:
        return 4.0 * _sdm_gain(config, x) * (1.0 - math.cos(0.5 * q_l_rel))
    if q_l_rel == 0:
        return 0.0
    # composite Simpson over [0, q]
    m = ENERGY_PANELS
    h = q_l_rel / m
    total = _torque(config, model, x, q_l_rel, settings)
    for i in range(1, m):
        total += (4.0 if i % 2 else 2.0) * _torque(config, model, x, i * h, settings)
    return total * h / 3.0


def stored_energy(config: VsamConfig, model: StiffnessModelKind, q_m2: float,
                  q_l_rel: float, settings: SolverSettings = DEFAULT_SETTINGS) -> float:
    """Elastic energy held by all springs at link deflection ``q_l_rel`` (J)."""
    _check(config, q_l_rel)
    return _energy(config, model, roller_position(config, q_m2), q_l_rel, settings)


def roller_reaction(config: VsamConfig, model: StiffnessModelKind, q_m2: float,
                    q_l_rel: float, settings: SolverSettings = DEFAULT_SETTINGS) -> float:
    """Axial force (N) the deflected springs push the roller with, toward the free end.

    This is ``-dU/dx_r`` at fixed link deflection, so moving the roller
    against it costs exactly the change in stored energy.  It is zero on the
    end stops, which carry the load there.
    """
    _check(config, q_l_rel)
    if q_l_rel == 0:
        return 0.0
    x = config.eta * q_m2
    if model is StiffnessModelKind.SMALL:
        if x <= config.x_min or x >= config.x_max:
            return 0.0
        return 3.0 * _energy(config, model, x, q_l_rel, settings) / x
    h = 1e-6 * config.beam.full_length
    lo, hi = max(x - h, config.x_min), min(x + h, config.x_max)
    if hi <= lo:
        return 0.0
    return -(_energy(config, model, hi, q_l_rel, settings)
             - _energy(config, model, lo, q_l_rel, settings)) / (hi - lo)


def roller_for_stiffness(config: VsamConfig, k: float) -> float:
    """Roller position giving equilibrium stiffness ``k`` under the linear law."""
    x = (3.0 * config.spring_count * config.beam.flexural_rigidity * config.moment_arm**2 / k) ** (1 / 3)
    return min(max(x, config.x_min), config.x_max)
