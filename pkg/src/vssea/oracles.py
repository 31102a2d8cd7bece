"""Independent reference solutions used by the test suite and ``vssea validate``.

The elastica oracle integrates the curvature ODE directly,

    theta''(s) = -alpha * cos(theta),  theta(0) = 0,  theta'(1) = 0,

on a fixed RK4 grid (arc length scaled by x_r) and shoots on theta'(0).  It
shares no code with the quadrature path in :mod:`vssea.beam`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ShootingResult:
    tip_slope: float
    deflection_x: float
    deflection_y: float
    initial_curvature: float


def _integrate(alpha: float, kappa0: float, steps: int):
    h = 1.0 / steps
    th, om, x, y = 0.0, kappa0, 0.0, 0.0
    cos, sin = math.cos, math.sin
    for _ in range(steps):
        k1t, k1o, k1x, k1y = om, -alpha * cos(th), cos(th), sin(th)
        t2 = th + 0.5 * h * k1t
        k2t, k2o, k2x, k2y = om + 0.5 * h * k1o, -alpha * cos(t2), cos(t2), sin(t2)
        t3 = th + 0.5 * h * k2t
        k3t, k3o, k3x, k3y = om + 0.5 * h * k2o, -alpha * cos(t3), cos(t3), sin(t3)
        t4 = th + h * k3t
        k4t, k4o, k4x, k4y = om + h * k3o, -alpha * cos(t4), cos(t4), sin(t4)
        th += h / 6.0 * (k1t + 2 * k2t + 2 * k3t + k4t)
        om += h / 6.0 * (k1o + 2 * k2o + 2 * k3o + k4o)
        x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        y += h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
    return th, om, x, y


def shoot_elastica(alpha: float, steps: int = 10_000, tol: float = 1e-14) -> ShootingResult:
    """Solve the scaled cantilever BVP for dimensionless load ``alpha > 0``.

    Illinois-style false position on the free-end curvature; the bracket
    ``[0, alpha]`` is valid because theta'(1) = kappa0 - alpha * int cos(theta).
    """
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    lo, hi = 0.0, alpha
    f_lo = _integrate(alpha, lo, steps)[1]
    f_hi = _integrate(alpha, hi, steps)[1]
    side = 0
    kappa = hi
    for _ in range(200):
        kappa = (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
        f = _integrate(alpha, kappa, steps)[1]
        if abs(f) <= tol * alpha or hi - lo <= tol * alpha:
            break
        if f * f_hi > 0:
            hi, f_hi = kappa, f
            if side == 1:
                f_lo *= 0.5
            side = 1
        else:
            lo, f_lo = kappa, f
            if side == -1:
                f_hi *= 0.5
            side = -1
    th, _, x, y = _integrate(alpha, kappa, steps)
    return ShootingResult(tip_slope=th, deflection_x=1.0 - x, deflection_y=y,
                          initial_curvature=kappa)


def trapezoid(f, a: float, b: float, steps: int) -> float:
    h = (b - a) / steps
    total = 0.5 * (f(a) + f(b))
    for i in range(1, steps):
        total += f(a + i * h)
    return total * h


def central_difference(f, x: float, h: float) -> float:
    return (f(x + h) - f(x - h)) / (2.0 * h)
