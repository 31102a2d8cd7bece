"""Discrete PID loops for the two motors and the reference signals they track."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float
    kd: float
    output_limit: float
    sample_time: float = 1e-3

    def __post_init__(self):
        if not self.sample_time > 0:
            raise ValueError("sample_time must be > 0")
        if not self.output_limit > 0:
            raise ValueError("output_limit must be > 0")
        if min(self.kp, self.ki, self.kd) < 0:
            raise ValueError("gains must be >= 0")


@dataclass(frozen=True)
class PidState:
    integral_accumulator: float = 0.0
    previous_error: float = 0.0


class ControlTarget(enum.Enum):
    MOTOR_POSITION = "motor_position"          # gearbox angle q_g
    # P and D act on the gearbox angle, I on the link angle q_l
    LINK_POSITION = "link_position"
    DEFLECTION = "deflection"                  # q_l - q_g
    STIFFNESS_MOTOR_POSITION = "stiffness_motor_position"


def pid_update(gains: PidGains, pid: PidState, ref: float, ref_rate: float,
               meas: float, meas_rate: float,
               integral_meas: float | None = None) -> tuple[float, PidState]:
    """One controller tick.

    The derivative term acts on the rate error directly.  The integral uses
    the trapezoidal rule and is frozen while the output is saturated and the
    error pushes it further into saturation; ``ki * I`` is additionally kept
    within the output limit.  ``integral_meas``, when given, replaces
    ``meas`` in the integral channel only.
    """
    e = ref - meas
    e_int = e if integral_meas is None else ref - integral_meas
    e_rate = ref_rate - meas_rate
    limit = gains.output_limit
    integral = pid.integral_accumulator + 0.5 * gains.sample_time * (e_int + pid.previous_error)
    if gains.ki > 0:
        bound = limit / gains.ki
        integral = max(-bound, min(bound, integral))
    u = gains.kp * e + gains.ki * integral + gains.kd * e_rate
    if abs(u) > limit and e_int * u > 0:
        integral = pid.integral_accumulator
        u = gains.kp * e + gains.ki * integral + gains.kd * e_rate
    u = max(-limit, min(limit, u))
    return u, PidState(integral, e_int)


def reference_trajectory(amplitude: float, frequency: float, t: float,
                         start: float = 1.0) -> tuple[float, float]:
    """Raised-cosine link reference ``K (1 - cos(2 pi f (t - start)))`` and its rate."""
    if t < start:
        return 0.0, 0.0
    w = 2.0 * math.pi * frequency
    phase = w * (t - start)
    return amplitude * (1.0 - math.cos(phase)), amplitude * w * math.sin(phase)


#: Amplitudes used for the tracking experiments.
TRACKING_AMPLITUDES = (0.5 * math.pi, 2.0 * math.pi)


def _preset_table(link_limit: float, m2_limit: float) -> dict:
    # Motor-1 presets act on link-side quantities and command link-side
    # torque; the executor divides by the gear ratio.
    return {
        "fig9_motor_pid": PidGains(kp=15000.0, ki=75.0, kd=500.0, output_limit=link_limit),
        "fig10_link_pid": PidGains(kp=5000.0, ki=35.0, kd=95.0, output_limit=link_limit),
        "fig12_force_pid": PidGains(kp=2500.0, ki=15.0, kd=85.0, output_limit=link_limit),
        "stiffness_servo": PidGains(kp=3.0, ki=1.0, kd=0.025, output_limit=m2_limit),
    }


PRESET_NAMES = tuple(_preset_table(1.0, 1.0))


def preset(name: str, tau_m1_max: float = 1.1, gear_ratio: float = 100.0,
           tau_m2_max: float = 0.4) -> PidGains:
    """Named gain set; output limits follow the actuator torque limits."""
    table = _preset_table(tau_m1_max * gear_ratio, tau_m2_max)
    try:
        return table[name]
    except KeyError:
        raise KeyError(f"unknown controller preset {name!r}; choose from {PRESET_NAMES}") from None


class CosineKnots:
    """Signal through ``(time, value)`` knots with raised-cosine blends between them.

    Returns ``(value, rate)``; the rate is zero at every knot, so chained
    segments are C1.
    """

    def __init__(self, knots):
        knots = sorted((float(t), float(v)) for t, v in knots)
        if not knots:
            raise ValueError("need at least one knot")
        self.knots = tuple(knots)

    def __call__(self, t: float) -> tuple[float, float]:
        knots = self.knots
        if t <= knots[0][0]:
            return knots[0][1], 0.0
        for (t0, v0), (t1, v1) in zip(knots, knots[1:]):
            if t < t1:
                if t1 == t0:
                    continue
                w = math.pi / (t1 - t0)
                s = w * (t - t0)
                return (v0 + 0.5 * (v1 - v0) * (1.0 - math.cos(s)),
                        0.5 * (v1 - v0) * w * math.sin(s))
        return knots[-1][1], 0.0

    def __repr__(self):
        return f"CosineKnots({list(self.knots)!r})"


class RaisedCosine:
    """Link tracking reference of the form used by :func:`reference_trajectory`."""

    def __init__(self, amplitude: float, frequency: float, start: float = 1.0):
        self.amplitude = amplitude
        self.frequency = frequency
        self.start = start

    def __call__(self, t: float) -> tuple[float, float]:
        return reference_trajectory(self.amplitude, self.frequency, t, self.start)

    def __repr__(self):
        return f"RaisedCosine({self.amplitude!r}, {self.frequency!r}, start={self.start!r})"


class Sinusoid:
    """``offset + amplitude * sin(2 pi f (t - start))`` after ``start``, ``offset`` before."""

    def __init__(self, offset: float, amplitude: float, frequency: float, start: float):
        self.offset, self.amplitude = offset, amplitude
        self.frequency, self.start = frequency, start

    def __call__(self, t: float) -> tuple[float, float]:
        if t < self.start:
            return self.offset, 0.0
        w = 2.0 * math.pi * self.frequency
        return (self.offset + self.amplitude * math.sin(w * (t - self.start)),
                self.amplitude * w * math.cos(w * (t - self.start)))
