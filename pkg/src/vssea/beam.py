"""Planar large-deflection (elastica) solver for a tip-loaded cantilever leaf spring.

The beam is clamped at arc length 0 and loaded by a lateral point force ``F``
at arc length ``x_r`` (the roller).  The exact Euler-Bernoulli solution is
written in terms of the tip slope ``phi_r``::

    s(phi) = sqrt(EI / 2F) * int_0^phi dp / sqrt(sin(phi_r) - sin(p))

with matching integrals for the x and y coordinates.  The integrands have an
inverse square-root singularity at ``p = phi_r``; the substitution
``sin(p) = sin(phi_r) * (1 - t**2)`` maps ``[0, phi_r]`` onto ``t in [0, 1]``
and leaves a smooth, even integrand in ``t``::

    s   = sqrt(2 EI sin(phi_r) / F) * int_0^1 dt / cos(p(t))
    x   = sqrt(2 EI sin(phi_r) / F) * int_0^1 dt
    y   = sqrt(2 EI sin(phi_r) / F) * int_0^1 tan(p(t)) dt

Everything below works with the dimensionless load ``alpha = F x_r**2 / EI``
and lengths scaled by ``x_r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import (
    DeflectionUnreachable,
    NoConvergence,
    QuadratureFailure,
    SlopeOutOfRange,
)

#: Upper end of the tip-slope bracket is pi/2 minus this margin.
SLOPE_MARGIN = 1e-6
MAX_SLOPE = 0.5 * math.pi - SLOPE_MARGIN


@dataclass(frozen=True)
class BeamSpec:
    """Elastic and geometric description of one leaf spring (SI units)."""

    youngs_modulus: float
    area_moment: float
    full_length: float

    def __post_init__(self):
        for name in ("youngs_modulus", "area_moment", "full_length"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"BeamSpec.{name} must be finite and > 0, got {value!r}")

    @property
    def flexural_rigidity(self) -> float:
        return self.youngs_modulus * self.area_moment


@dataclass(frozen=True)
class SolverSettings:
    residual_tol: float = 1e-10
    max_iterations: int = 200
    quadrature_points: int = 64

    def __post_init__(self):
        if not self.residual_tol > 0:
            raise ValueError("residual_tol must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.quadrature_points < 16:
            raise ValueError("quadrature_points must be >= 16")


DEFAULT_SETTINGS = SolverSettings()


@dataclass(frozen=True)
class ElasticaSolution:
    tip_slope: float
    deflection_x: float
    deflection_y: float
    applied_force: float
    effective_length: float

    @property
    def chord_length(self) -> float:
        return math.hypot(self.effective_length - self.deflection_x, self.deflection_y)


@lru_cache(maxsize=None)
def _half_rule(points: int):
    # The substituted integrands are even in t, so the positive half of a
    # 2n-point Gauss-Legendre rule on [-1, 1] integrates them over [0, 1].
    nodes, weights = np.polynomial.legendre.leggauss(2 * points)
    keep = nodes > 0
    return nodes[keep], weights[keep]


def _integrals(tip_slope: float, points: int) -> tuple[float, float, float]:
    """Return ``(G - 1, G, H)`` for the substituted arc-length and y integrals."""
    t, w = _half_rule(points)
    sin_p = math.sin(tip_slope) * (1.0 - t * t)
    cos_p = np.sqrt(1.0 - sin_p * sin_p)
    # 1/cos - 1 written without cancellation for small slopes
    excess = float(w @ (sin_p * sin_p / (cos_p * (1.0 + cos_p))))
    h = float(w @ (sin_p / cos_p))
    g = 1.0 + excess
    if not (math.isfinite(excess) and math.isfinite(h)):
        raise QuadratureFailure(f"non-finite elastica integrals at tip slope {tip_slope!r}")
    return excess, g, h


def load_for_slope(tip_slope: float, points: int = 64) -> float:
    """Dimensionless load ``F x_r**2 / EI`` that produces ``tip_slope``."""
    _, g, _ = _integrals(tip_slope, points)
    return 2.0 * math.sin(tip_slope) * g * g


def deflection_ratio_for_slope(tip_slope: float, points: int = 64) -> float:
    """Tip deflection ``delta_y / x_r`` of the elastica with tip slope ``tip_slope``."""
    _, g, h = _integrals(tip_slope, points)
    return h / g


def _check_length(beam: BeamSpec, effective_length: float) -> None:
    if not 0.0 < effective_length <= beam.full_length * (1.0 + 1e-12):
        raise ValueError(
            f"effective_length must be in (0, {beam.full_length}], got {effective_length!r}"
        )


def _root(func, hi: float, settings: SolverSettings) -> float:
    try:
        root, info = brentq(
            func, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
            maxiter=settings.max_iterations, full_output=True, disp=False,
        )
    except ValueError as exc:  # non-finite function values
        raise QuadratureFailure(str(exc)) from exc
    if not info.converged:
        raise NoConvergence(
            f"bracketed root search stopped after {info.iterations} iterations"
        )
    return root


def solve_tip_slope(
    beam: BeamSpec,
    effective_length: float,
    force: float,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> float:
    """Tip slope at the roller for a lateral force ``force >= 0``."""
    _check_length(beam, effective_length)
    if force < 0:
        raise ValueError(f"force must be >= 0, got {force!r}")
    if force == 0:
        return 0.0
    alpha = force * effective_length**2 / beam.flexural_rigidity
    n = settings.quadrature_points

    def excess(phi):
        return load_for_slope(phi, n) - alpha

    if excess(MAX_SLOPE) < 0:
        raise SlopeOutOfRange(
            f"dimensionless load {alpha:.6g} drives the tip slope to pi/2"
        )
    phi = _root(excess, MAX_SLOPE, settings)
    # relative arc-length residual: s(phi) / x_r - 1
    residual = math.sqrt(load_for_slope(phi, n) / alpha) - 1.0
    if abs(residual) > settings.residual_tol:
        raise NoConvergence(
            f"arc-length residual {residual:.3e} exceeds tolerance {settings.residual_tol:.1e}"
        )
    return phi


def solve_deflection(
    beam: BeamSpec,
    effective_length: float,
    force: float,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> ElasticaSolution:
    """Tip slope and roller-point deflections for a lateral force ``force >= 0``."""
    phi = solve_tip_slope(beam, effective_length, force, settings)
    if phi == 0.0:
        return ElasticaSolution(0.0, 0.0, 0.0, float(force), effective_length)
    excess, g, h = _integrals(phi, settings.quadrature_points)
    # arc length equals x_r at the solution, so the common prefactor is x_r / G
    return ElasticaSolution(
        tip_slope=phi,
        deflection_x=effective_length * excess / g,
        deflection_y=effective_length * h / g,
        applied_force=float(force),
        effective_length=effective_length,
    )


def max_deflection_ratio(settings: SolverSettings = DEFAULT_SETTINGS) -> float:
    """Largest ``delta_y / x_r`` reachable before the tip slope hits its bracket."""
    return deflection_ratio_for_slope(MAX_SLOPE, settings.quadrature_points)


def solve_force_for_deflection(
    beam: BeamSpec,
    effective_length: float,
    target_dy: float,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> float:
    """Lateral force that bends the beam by ``target_dy`` at the roller.

    Solved through the tip slope: ``delta_y / x_r`` depends on the slope
    alone, and the load then follows in closed form from the arc-length
    integral.
    """
    _check_length(beam, effective_length)
    if target_dy < 0 or target_dy >= effective_length:
        raise ValueError(
            f"target_dy must be in [0, {effective_length}), got {target_dy!r}"
        )
    if target_dy == 0:
        return 0.0
    ratio = target_dy / effective_length
    n = settings.quadrature_points
    if ratio > deflection_ratio_for_slope(MAX_SLOPE, n):
        raise DeflectionUnreachable(
            f"deflection ratio {ratio:.6g} exceeds the elastica maximum"
        )

    def gap(phi):
        return deflection_ratio_for_slope(phi, n) - ratio

    phi = _root(gap, MAX_SLOPE, settings)
    residual = deflection_ratio_for_slope(phi, n) / ratio - 1.0
    if abs(residual) > settings.residual_tol:
        raise NoConvergence(
            f"deflection residual {residual:.3e} exceeds tolerance {settings.residual_tol:.1e}"
        )
    return load_for_slope(phi, n) * beam.flexural_rigidity / effective_length**2


def small_deflection_force(beam: BeamSpec, effective_length: float, target_dy: float) -> float:
    """Linear cantilever end-load law ``3 EI d / x_r**3``."""
    if not effective_length > 0:
        raise ValueError(f"effective_length must be > 0, got {effective_length!r}")
    return 3.0 * beam.flexural_rigidity * target_dy / effective_length**3


def small_deflection_slope(beam: BeamSpec, length: float, force: float) -> float:
    """Linear-theory tip slope ``F L**2 / 2EI``."""
    return force * length**2 / (2.0 * beam.flexural_rigidity)
