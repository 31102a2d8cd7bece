"""Three-inertia model of the actuator: motor 1 (through the gearbox), link, motor 2.

Equations of motion, with ``q_g = q_m1 / N`` and ``q_rel = q_l - q_g``::

    J~_m1 qdd_m1 + b~_m1 qd_m1 = tau_m1 + tau_s / N - tau_m1_dis
    J_l   qdd_l  + b_l   qd_l  = -tau_s - tau_env - tau_l_dis
    J_m2  qdd_m2 + b_m2  qd_m2 = tau_m2 + eta * R - tau_m2_dis

``tau_s = spring_torque(q_rel)`` has the sign of ``q_rel``, so it pulls the
link back toward the gearbox output and drags motor 1 along.  ``R`` is the
axial spring reaction on the roller (:func:`vssea.vsam.roller_reaction`),
reflected to motor 2 by the ball screw.  Motor torques are saturated here.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace

from .beam import DEFAULT_SETTINGS, SolverSettings
from .errors import NonFiniteState
from .vsam import (
    StiffnessModelKind,
    VsamConfig,
    default_config,
    roller_reaction,
    spring_torque,
    stored_energy,
)


@dataclass(frozen=True)
class ActuatorParams:
    vsam: VsamConfig = field(default_factory=default_config)
    model: StiffnessModelKind = StiffnessModelKind.SMALL
    J_m1: float = 3e-4
    J_g: float = 1e-5
    J_m2: float = 8e-5
    J_l: float = 0.05
    b_m1: float = 1e-4
    b_g: float = 1e-4
    b_m2: float = 1e-4
    b_l: float = 0.01
    gear_ratio: float = 100.0
    tau_m1_max: float = 1.1
    tau_m2_max: float = 0.4
    # link contact with a stiff environment (spring-damper anchored at q_l = 0)
    env_stiffness: float = 0.0
    env_damping: float = 0.0
    settings: SolverSettings = DEFAULT_SETTINGS

    def __post_init__(self):
        for name in ("J_m1", "J_l", "J_m2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("J_g", "b_m1", "b_g", "b_m2", "b_l", "env_stiffness", "env_damping"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.gear_ratio >= 1:
            raise ValueError("gear_ratio must be >= 1")
        if not (self.tau_m1_max > 0 and self.tau_m2_max > 0):
            raise ValueError("torque limits must be > 0")

    @property
    def J_m1_eff(self) -> float:
        return self.J_m1 + self.J_g / self.gear_ratio**2

    @property
    def b_m1_eff(self) -> float:
        return self.b_m1 + self.b_g / self.gear_ratio**2

    def with_model(self, model) -> "ActuatorParams":
        return replace(self, model=StiffnessModelKind.parse(model))


@dataclass(frozen=True)
class SimState:
    time: float = 0.0
    q_m1: float = 0.0
    q_l: float = 0.0
    q_m2: float = 0.0
    qd_m1: float = 0.0
    qd_l: float = 0.0
    qd_m2: float = 0.0

    def q_g(self, gear_ratio: float) -> float:
        return self.q_m1 / gear_ratio

    def deflection(self, gear_ratio: float) -> float:
        return self.q_l - self.q_m1 / gear_ratio

    def as_tuple(self) -> tuple:
        return (self.q_m1, self.q_l, self.q_m2, self.qd_m1, self.qd_l, self.qd_m2)


class Schedule:
    """Piecewise-linear signal through ``(time, value)`` knots, held constant outside."""

    def __init__(self, knots=((0.0, 0.0),)):
        knots = sorted((float(t), float(v)) for t, v in knots)
        if not knots:
            raise ValueError("schedule needs at least one knot")
        if not all(math.isfinite(t) and math.isfinite(v) for t, v in knots):
            raise ValueError("schedule knots must be finite")
        self.times = [t for t, _ in knots]
        self.values = [v for _, v in knots]

    def __call__(self, t: float) -> float:
        times, values = self.times, self.values
        if t <= times[0]:
            return values[0]
        if t >= times[-1]:
            return values[-1]
        i = bisect.bisect_right(times, t)
        t0, t1 = times[i - 1], times[i]
        if t1 == t0:
            return values[i]
        return values[i - 1] + (values[i] - values[i - 1]) * (t - t0) / (t1 - t0)

    @classmethod
    def ramp_step(cls, magnitude: float, start: float, rise: float = 0.5) -> "Schedule":
        return cls([(0.0, 0.0), (start, 0.0), (start + rise, magnitude)])

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.values)

    def __repr__(self):
        return f"Schedule({list(zip(self.times, self.values))!r})"


ZERO = Schedule()


@dataclass(frozen=True)
class DisturbanceProfile:
    link: Schedule = ZERO
    motor1: Schedule = ZERO
    motor2: Schedule = ZERO


NO_DISTURBANCE = DisturbanceProfile()


def _saturate(value: float, limit: float) -> float:
    return max(-limit, min(limit, value))


def make_rhs(params: ActuatorParams, dist: DisturbanceProfile = NO_DISTURBANCE):
    """Build ``f(t, y, tau_m1, tau_m2) -> dy/dt`` for a fixed plant and disturbance.

    The small-deflection law is inlined; the large-deflection law goes
    through :mod:`vssea.vsam` on every call and is much slower.
    """
    n = params.gear_ratio
    vsam, model, settings = params.vsam, params.model, params.settings
    eta, x_min, x_max = vsam.eta, vsam.x_min, vsam.x_max
    limit = vsam.deflection_limit * (1.0 + 1e-12)
    gain_num = 3.0 * vsam.spring_count * vsam.beam.flexural_rigidity * vsam.moment_arm**2
    j_m1, b_m1 = params.J_m1_eff, params.b_m1_eff
    j_l, b_l, j_m2, b_m2 = params.J_l, params.b_l, params.J_m2, params.b_m2
    k_env, b_env = params.env_stiffness, params.env_damping
    d_m1 = None if dist.motor1.is_zero() else dist.motor1
    d_l = None if dist.link.is_zero() else dist.link
    d_m2 = None if dist.motor2.is_zero() else dist.motor2
    small = model is StiffnessModelKind.SMALL
    sin, cos, isfinite = math.sin, math.cos, math.isfinite

    def rhs(t, y, tau_m1, tau_m2):
        q_m1, q_l, q_m2, qd_m1, qd_l, qd_m2 = y
        q_rel = q_l - q_m1 / n
        if small:
            if abs(q_rel) > limit:
                spring_torque(vsam, model, q_m2, q_rel)  # raises DeflectionLimitExceeded
            x = eta * q_m2
            inside = x_min < x < x_max
            x = x_min if x < x_min else (x_max if x > x_max else x)
            gain = gain_num / (x * x * x)
            tau_s = 2.0 * gain * sin(0.5 * q_rel)
            push = eta * 12.0 * gain * (1.0 - cos(0.5 * q_rel)) / x if inside else 0.0
        else:
            tau_s = spring_torque(vsam, model, q_m2, q_rel, settings)
            push = eta * roller_reaction(vsam, model, q_m2, q_rel, settings)
        a_m1 = tau_m1 - b_m1 * qd_m1 + tau_s / n
        a_l = -tau_s - b_l * qd_l - k_env * q_l - b_env * qd_l
        a_m2 = tau_m2 - b_m2 * qd_m2 + push
        if d_m1 is not None:
            a_m1 -= d_m1(t)
        if d_l is not None:
            a_l -= d_l(t)
        if d_m2 is not None:
            a_m2 -= d_m2(t)
        a_m1 /= j_m1
        a_l /= j_l
        a_m2 /= j_m2
        if not (isfinite(a_m1) and isfinite(a_l) and isfinite(a_m2)
                and isfinite(qd_m1) and isfinite(qd_l) and isfinite(qd_m2)):
            raise NonFiniteState(f"non-finite derivative at t = {t!r}")
        return (qd_m1, qd_l, qd_m2, a_m1, a_l, a_m2)

    return rhs


def derivatives(params: ActuatorParams, state: SimState, tau_m1: float, tau_m2: float,
                dist: DisturbanceProfile = NO_DISTURBANCE) -> tuple:
    """Time derivative of ``(q_m1, q_l, q_m2, qd_m1, qd_l, qd_m2)``."""
    tau_m1 = _saturate(tau_m1, params.tau_m1_max)
    tau_m2 = _saturate(tau_m2, params.tau_m2_max)
    return make_rhs(params, dist)(state.time, state.as_tuple(), tau_m1, tau_m2)


def rk4(rhs, t: float, y: tuple, tau_m1: float, tau_m2: float, dt: float) -> tuple:
    """One classical RK4 step of ``rhs`` with torques held over the step."""
    h2 = 0.5 * dt
    a0, a1, a2, a3, a4, a5 = y
    k1 = rhs(t, y, tau_m1, tau_m2)
    k2 = rhs(t + h2, (a0 + h2 * k1[0], a1 + h2 * k1[1], a2 + h2 * k1[2],
                      a3 + h2 * k1[3], a4 + h2 * k1[4], a5 + h2 * k1[5]), tau_m1, tau_m2)
    k3 = rhs(t + h2, (a0 + h2 * k2[0], a1 + h2 * k2[1], a2 + h2 * k2[2],
                      a3 + h2 * k2[3], a4 + h2 * k2[4], a5 + h2 * k2[5]), tau_m1, tau_m2)
    k4 = rhs(t + dt, (a0 + dt * k3[0], a1 + dt * k3[1], a2 + dt * k3[2],
                      a3 + dt * k3[3], a4 + dt * k3[4], a5 + dt * k3[5]), tau_m1, tau_m2)
    h6 = dt / 6.0
    return tuple(a + h6 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
                 for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4))


def step(params: ActuatorParams, state: SimState, tau_m1: float, tau_m2: float,
         dist: DisturbanceProfile = NO_DISTURBANCE, dt: float = 1e-4) -> SimState:
    """Advance ``state`` by ``dt`` with torques held constant (zero-order hold)."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    tau_m1 = _saturate(tau_m1, params.tau_m1_max)
    tau_m2 = _saturate(tau_m2, params.tau_m2_max)
    y = rk4(make_rhs(params, dist), state.time, state.as_tuple(), tau_m1, tau_m2, dt)
    if not all(map(math.isfinite, y)):
        raise NonFiniteState(f"non-finite state after step at t = {state.time!r}")
    return SimState(state.time + dt, *y)


def mechanical_power_m2(state: SimState, tau_m2: float) -> float:
    return tau_m2 * state.qd_m2


def kinetic_energy(params: ActuatorParams, state: SimState) -> float:
    return 0.5 * (params.J_m1_eff * state.qd_m1**2 + params.J_l * state.qd_l**2
                  + params.J_m2 * state.qd_m2**2)


def total_energy(params: ActuatorParams, state: SimState) -> float:
    """Kinetic energy plus spring energy (mechanism and environment contact)."""
    q_rel = state.deflection(params.gear_ratio)
    u = stored_energy(params.vsam, params.model, state.q_m2, q_rel, params.settings)
    return kinetic_energy(params, state) + u + 0.5 * params.env_stiffness * state.q_l**2


def dissipation_rate(params: ActuatorParams, state: SimState) -> float:
    return (params.b_m1_eff * state.qd_m1**2 + params.b_l * state.qd_l**2
            + params.b_m2 * state.qd_m2**2 + params.env_damping * state.qd_l**2)
