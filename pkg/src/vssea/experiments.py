"""Scripted closed-loop experiments, static model sweeps and energy accounting.

A :class:`Scenario` fixes the plant, the motor-1 loop (what it controls,
its gains and reference), the stiffness schedule tracked by the motor-2
servo, the external disturbances and the horizon.  :func:`run_scenario`
steps the plant with RK4 on the physics grid and updates both controllers
on the coarser control grid, holding their outputs in between.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .beam import DEFAULT_SETTINGS, SolverSettings
from .control import (
    ControlTarget,
    CosineKnots,
    PidGains,
    PidState,
    RaisedCosine,
    pid_update,
    preset,
)
from .dynamics import (
    NO_DISTURBANCE,
    ActuatorParams,
    DisturbanceProfile,
    Schedule,
    make_rhs,
    rk4,
)
from .errors import ConfigInvalid, NonFiniteState, SimulationDiverged
from .vsam import (
    StiffnessModelKind,
    VsamConfig,
    disturbance_torque,
    roller_for_stiffness,
    spring_torque,
    stiffness,
    stored_energy,
)

CHANNELS = (
    "t", "q_m1", "q_g", "q_l", "q_m2", "qd_m1", "qd_l", "qd_m2",
    "tau_m1_cmd", "tau_m2_cmd", "tau_s", "tau_s_dis", "k", "stored_energy", "m2_energy_cost",
)

#: Environment contact used by the force-control experiments (link pressed on a stiff wall).
CONTACT_STIFFNESS = 2e4
CONTACT_DAMPING = 20.0


@dataclass(frozen=True)
class Scenario:
    name: str
    params: ActuatorParams
    target: ControlTarget
    gains: PidGains
    reference: object
    stiffness_knots: tuple
    stiffness_gains: PidGains
    disturbances: DisturbanceProfile = NO_DISTURBANCE
    duration: float = 5.0
    physics_dt: float = 1e-4
    control_dt: float = 1e-3
    description: str = ""

    def validate(self) -> None:
        if not self.duration > 0:
            raise ConfigInvalid(f"{self.name}: duration must be > 0")
        if not (self.physics_dt > 0 and self.control_dt > 0):
            raise ConfigInvalid(f"{self.name}: time steps must be > 0")
        ratio = self.control_dt / self.physics_dt
        if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 1:
            raise ConfigInvalid(
                f"{self.name}: control_dt must be an integer multiple of physics_dt"
            )
        if self.target is ControlTarget.STIFFNESS_MOTOR_POSITION:
            raise ConfigInvalid(f"{self.name}: motor 1 cannot run the stiffness loop")
        for gains in (self.gains, self.stiffness_gains):
            if abs(gains.sample_time - self.control_dt) > 1e-12 * self.control_dt:
                raise ConfigInvalid(f"{self.name}: controller sample time differs from control_dt")
        if not self.stiffness_knots:
            raise ConfigInvalid(f"{self.name}: empty stiffness schedule")
        if any(k <= 0 for _, k in self.stiffness_knots):
            raise ConfigInvalid(f"{self.name}: stiffness knots must be positive")

    def stiffness_reference(self) -> CosineKnots:
        vsam = self.params.vsam
        return CosineKnots([(t, roller_for_stiffness(vsam, k) / vsam.eta)
                            for t, k in self.stiffness_knots])


@dataclass
class ScenarioResult:
    scenario: str
    series: dict
    reference: np.ndarray
    measured: np.ndarray
    m2_saturated: np.ndarray
    metrics: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.series["t"])

    @property
    def time(self) -> np.ndarray:
        return self.series["t"]


def _measure(target, n, y):
    """(value, rate, integral channel value) fed to the motor-1 loop."""
    q_m1, q_l, _, qd_m1, qd_l, _ = y
    if target is ControlTarget.MOTOR_POSITION:
        return q_m1 / n, qd_m1 / n, None
    if target is ControlTarget.LINK_POSITION:
        # a link-position PD through the spring is unstable with the motor
        # inertia dominating, so only the integral sees the link
        return q_m1 / n, qd_m1 / n, q_l
    if target is ControlTarget.DEFLECTION:
        return q_l - q_m1 / n, qd_l - qd_m1 / n, None
    raise ValueError(target)


def _motor1_torque(target, n, u):
    # u is a link-side torque; raising the deflection means driving q_g backwards
    return -u / n if target is ControlTarget.DEFLECTION else u / n


def run_scenario(s: Scenario) -> ScenarioResult:
    s.validate()
    params = s.params
    n = params.gear_ratio
    vsam, model, settings = params.vsam, params.model, params.settings
    rhs = make_rhs(params, s.disturbances)
    m2_ref = s.stiffness_reference()
    sub = int(round(s.control_dt / s.physics_dt))
    h = s.control_dt / sub
    ticks = int(round(s.duration / s.control_dt))

    q_m2_0, _ = m2_ref(0.0)
    ref0, _ = s.reference(0.0)
    # motor 1 starts where its own loop wants it, the link at rest on it
    q_m1_0 = ref0 * n if s.target is ControlTarget.MOTOR_POSITION else 0.0
    q_l_0 = ref0 if s.target is ControlTarget.LINK_POSITION else q_m1_0 / n
    y = (q_m1_0, q_l_0, q_m2_0, 0.0, 0.0, 0.0)

    pid1, pid2 = PidState(), PidState()
    cols = {name: np.empty(ticks + 1) for name in CHANNELS}
    reference = np.empty(ticks + 1)
    measured = np.empty(ticks + 1)
    saturated = np.zeros(ticks + 1, dtype=bool)
    cost = 0.0
    lim1, lim2 = params.tau_m1_max, params.tau_m2_max

    for k in range(ticks + 1):
        t = k * s.control_dt
        r, r_rate = s.reference(t)
        m, m_rate, m_int = _measure(s.target, n, y)
        u1, pid1 = pid_update(s.gains, pid1, r, r_rate, m, m_rate, m_int)
        tau_m1 = max(-lim1, min(lim1, _motor1_torque(s.target, n, u1)))
        r2, r2_rate = m2_ref(t)
        tau_m2, pid2 = pid_update(s.stiffness_gains, pid2, r2, r2_rate, y[2], y[5])
        tau_m2 = max(-lim2, min(lim2, tau_m2))

        q_m1, q_l, q_m2, qd_m1, qd_l, qd_m2 = y
        q_rel = q_l - q_m1 / n
        row = (t, q_m1, q_m1 / n, q_l, q_m2, qd_m1, qd_l, qd_m2, tau_m1, tau_m2,
               spring_torque(vsam, model, q_m2, q_rel, settings),
               disturbance_torque(vsam, model, q_m2, q_rel, settings),
               stiffness(vsam, model, q_m2, q_rel, settings),
               stored_energy(vsam, model, q_m2, q_rel, settings),
               cost)
        for name, value in zip(CHANNELS, row):
            cols[name][k] = value
        reference[k], measured[k] = r, (m if m_int is None else m_int)
        saturated[k] = abs(tau_m2) >= lim2
        if k == ticks:
            break

        p_prev = max(tau_m2 * qd_m2, 0.0)
        try:
            for j in range(sub):
                y = rk4(rhs, t + j * h, y, tau_m1, tau_m2, h)
                p_next = max(tau_m2 * y[5], 0.0)
                cost += 0.5 * h * (p_prev + p_next)
                p_prev = p_next
        except NonFiniteState as exc:
            raise SimulationDiverged(f"{s.name}: {exc}") from exc
        if not all(map(math.isfinite, y)):
            raise SimulationDiverged(f"{s.name}: non-finite state at t = {t + s.control_dt:.4f}")

    result = ScenarioResult(s.name, cols, reference, measured, saturated)
    result.metrics = compute_metrics(result)
    return result


def compute_metrics(result: ScenarioResult, band: float = 0.02) -> dict:
    """Scalar summaries recomputable from the stored series."""
    t = result.series["t"]
    err = result.reference - result.measured
    final_ref = result.reference[-1]
    start = result.measured[0]
    span = final_ref - start
    if span != 0:
        overshoot = max(0.0, float(np.max((result.measured - final_ref) * np.sign(span)))) / abs(span)
        outside = np.nonzero(np.abs(result.measured - final_ref) > band * abs(span))[0]
        settling = float(t[outside[-1]]) if outside.size else 0.0
    else:
        overshoot, settling = 0.0, 0.0
    return {
        "rms_error": float(np.sqrt(np.mean(err**2))),
        "max_overshoot": overshoot,
        "settling_time": settling,
        "peak_tau_s_dis": float(np.max(np.abs(result.series["tau_s_dis"]))),
        "energy_cost": float(result.series["m2_energy_cost"][-1]),
        "max_m2_saturation_run": longest_run(result.m2_saturated, t),
    }


def longest_run(flags: np.ndarray, t: np.ndarray) -> float:
    """Longest stretch of time (s) over which ``flags`` stays true."""
    best, begin = 0.0, None
    for i, flag in enumerate(flags):
        if flag and begin is None:
            begin = t[i]
        elif not flag and begin is not None:
            best = max(best, t[i - 1] - begin)
            begin = None
    if begin is not None:
        best = max(best, t[-1] - begin)
    return float(best)


def energy_report(result: ScenarioResult) -> dict:
    """Motor-2 energy cost of stiffness modulation next to the spring energy it moved."""
    stored = result.series["stored_energy"]
    cost = float(result.series["m2_energy_cost"][-1])
    peak = float(np.max(stored))
    swing = float(np.max(stored) - np.min(stored))
    return {
        "cost": cost,
        "stored": stored,
        "peak_stored": peak,
        "cost_to_peak_stored": cost / peak if peak > 0 else (0.0 if cost == 0 else math.inf),
        "cost_to_stored_swing": cost / swing if swing > 0 else (0.0 if cost == 0 else math.inf),
    }


def run_many(scenarios, workers: int = 1) -> list:
    """Run independent scenarios, optionally in worker processes; order is preserved."""
    scenarios = list(scenarios)
    if workers <= 1 or len(scenarios) < 2:
        return [run_scenario(s) for s in scenarios]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_scenario, scenarios))


# --------------------------------------------------------------------------- catalog


def mode_stiffness(vsam: VsamConfig) -> tuple[float, float]:
    """(soft, stiff) equilibrium stiffness at the two ends of the roller travel."""
    soft = stiffness(vsam, StiffnessModelKind.SMALL, vsam.q_m2_soft, 0.0)
    stiff = stiffness(vsam, StiffnessModelKind.SMALL, vsam.q_m2_stiff, 0.0)
    return soft, stiff


def _gains(params, name, control_dt):
    gains = preset(name, params.tau_m1_max, params.gear_ratio, params.tau_m2_max)
    return replace(gains, sample_time=control_dt)


def _builder(physics_dt, control_dt):
    def build(params, name, target, gains_name, reference, knots, **kw):
        return Scenario(
            name=name, params=params, target=target,
            gains=_gains(params, gains_name, control_dt),
            reference=reference, stiffness_knots=tuple(knots),
            stiffness_gains=_gains(params, "stiffness_servo", control_dt),
            physics_dt=physics_dt, control_dt=control_dt, **kw,
        )
    return build


def _label(value: float) -> str:
    return f"{value:g}".replace(".", "p")


def scenario_catalog(params: ActuatorParams | None = None, physics_dt: float = 1e-4,
                     control_dt: float = 1e-3) -> list[Scenario]:
    params = params or ActuatorParams()
    _scenario = _builder(physics_dt, control_dt)
    soft, stiff = mode_stiffness(params.vsam)
    modes = {"stiff": stiff, "soft": soft}
    half_pi = 0.5 * math.pi
    step_ref = CosineKnots([(0.0, 0.0), (0.5, half_pi)])
    out = []

    loads = {"fig9": {"stiff": 15.0, "soft": 5.0}, "fig10": {"stiff": 10.0, "soft": 1.0}}
    for fig, target, gains in (("fig9", ControlTarget.MOTOR_POSITION, "fig9_motor_pid"),
                               ("fig10", ControlTarget.LINK_POSITION, "fig10_link_pid")):
        for mode, k in modes.items():
            load = loads[fig][mode]
            out.append(_scenario(
                params, f"{fig}_{mode}", target, gains, step_ref, [(0.0, k)],
                disturbances=DisturbanceProfile(link=Schedule.ramp_step(load, 2.0)),
                duration=5.0,
                description=f"{target.value} regulation to pi/2, {load:g} Nm link load at 2 s",
            ))

    for mode, k in modes.items():
        for f in (0.1, 1.0):
            for amp, amp_name in ((0.5 * math.pi, "0p5pi"), (2.0 * math.pi, "2pi")):
                out.append(_scenario(
                    params, f"fig11_{mode}_{_label(f)}hz_k{amp_name}",
                    ControlTarget.LINK_POSITION, "fig10_link_pid",
                    RaisedCosine(amp / params.gear_ratio, f, start=1.0), [(0.0, k)],
                    duration=1.0 + (3.0 if f >= 1 else 10.0),
                    description=f"link tracking, raised cosine f = {f:g} Hz, K given at the motor shaft",
                ))

    contact = replace(params, env_stiffness=CONTACT_STIFFNESS, env_damping=CONTACT_DAMPING)
    force_deflection = {"soft": math.radians(20.0), "stiff": math.radians(2.0)}
    for mode, k in modes.items():
        d = force_deflection[mode]
        out.append(_scenario(
            contact, f"fig12_{mode}_regulation", ControlTarget.DEFLECTION, "fig12_force_pid",
            CosineKnots([(0.5, 0.0), (1.0, d)]), [(0.0, k)], duration=3.0,
            description=f"deflection regulation to {math.degrees(d):g} deg against contact",
        ))
        out.append(_scenario(
            contact, f"fig12_{mode}_tracking", ControlTarget.DEFLECTION, "fig12_force_pid",
            RaisedCosine(0.5 * d, 0.5, start=0.5), [(0.0, k)], duration=4.5,
            description="deflection tracking, 0.5 Hz raised cosine",
        ))

    hold = CosineKnots([(0.0, 0.0)])
    out.append(_scenario(
        params, "fig13_slow", ControlTarget.MOTOR_POSITION, "fig9_motor_pid", hold,
        [(0.0, soft), (1.0, soft), (6.0, stiff), (11.0, soft)], duration=12.0,
        description="full-range stiffness sweep at equilibrium, 0.1 Hz",
    ))
    out.append(_scenario(
        params, "fig13_fast", ControlTarget.MOTOR_POSITION, "fig9_motor_pid", hold,
        [(0.0, soft), (1.0, soft), (1.5, stiff), (2.0, soft)], duration=3.0,
        description="full-range stiffness sweep at equilibrium, 1 Hz",
    ))
    mid = math.sqrt(soft * stiff)
    out.append(_scenario(
        params, "fig13_hold", ControlTarget.MOTOR_POSITION, "fig9_motor_pid", hold,
        [(0.0, mid)], duration=2.0,
        description="fixed stiffness held at equilibrium",
    ))

    for mode, k in modes.items():
        d = force_deflection[mode]
        k_mod = k * (0.9 if mode == "stiff" else 1.1)
        deflect = CosineKnots([(0.0, 0.0), (1.0, d)])
        out.append(_scenario(
            contact, f"fig14_{mode}", ControlTarget.DEFLECTION, "fig12_force_pid", deflect,
            [(0.0, k), (2.0, k), (3.0, k_mod), (4.0, k_mod), (5.0, k)], duration=6.0,
            description=f"10% stiffness modulation at {math.degrees(d):g} deg deflection",
        ))
        out.append(_scenario(
            contact, f"fig15_{mode}_hold", ControlTarget.DEFLECTION, "fig12_force_pid", deflect,
            [(0.0, k)], duration=6.0,
            description=f"fixed stiffness at {math.degrees(d):g} deg deflection",
        ))
    return out


def with_link_load(s: Scenario, magnitude: float, start: float = 2.0) -> Scenario:
    """Copy of ``s`` with its link disturbance replaced by a ramped step load."""
    load = DisturbanceProfile(link=Schedule.ramp_step(magnitude, start),
                              motor1=s.disturbances.motor1, motor2=s.disturbances.motor2)
    return replace(s, name=f"{s.name}_load{_label(magnitude)}", disturbances=load)


def scenario_names() -> list[str]:
    return [s.name for s in scenario_catalog()]


def get_scenario(name: str, params: ActuatorParams | None = None, physics_dt: float = 1e-4,
                 control_dt: float = 1e-3) -> Scenario:
    for s in scenario_catalog(params, physics_dt, control_dt):
        if s.name == name:
            return s
    raise KeyError(f"unknown scenario {name!r}")


# --------------------------------------------------------------------------- statics


@dataclass
class StaticSweep:
    q_l: np.ndarray          # (nq,)
    x_r: np.ndarray          # (nx,)
    tau_ldm: np.ndarray      # (nq, nx)
    tau_sdm: np.ndarray
    k_ldm: np.ndarray
    k_sdm: np.ndarray

    def torque_gap(self) -> np.ndarray:
        """Relative torque difference |LDM - SDM| / |SDM|; zero where both vanish."""
        with np.errstate(invalid="ignore", divide="ignore"):
            gap = np.abs(self.tau_ldm - self.tau_sdm) / np.abs(self.tau_sdm)
        return np.where(self.tau_sdm == 0, 0.0, gap)

    def rows(self):
        for i, q in enumerate(self.q_l):
            for j, x in enumerate(self.x_r):
                yield (q, x, self.tau_ldm[i, j], self.tau_sdm[i, j],
                       self.k_ldm[i, j], self.k_sdm[i, j])


def compare_models_sweep(config: VsamConfig, q_grid, x_grid,
                         settings: SolverSettings = DEFAULT_SETTINGS) -> StaticSweep:
    """Torque and stiffness of both spring models on a (link deflection, roller) grid."""
    q_grid = np.asarray(q_grid, dtype=float)
    x_grid = np.asarray(x_grid, dtype=float)
    shape = (q_grid.size, x_grid.size)
    out = {key: np.empty(shape) for key in ("tau_ldm", "tau_sdm", "k_ldm", "k_sdm")}
    large, small = StiffnessModelKind.LARGE, StiffnessModelKind.SMALL
    for j, x in enumerate(x_grid):
        if not config.x_min * (1 - 1e-12) <= x <= config.x_max * (1 + 1e-12):
            raise ValueError(f"roller position {x!r} outside travel")
        q_m2 = x / config.eta
        for i, q in enumerate(q_grid):
            out["tau_ldm"][i, j] = spring_torque(config, large, q_m2, q, settings)
            out["tau_sdm"][i, j] = spring_torque(config, small, q_m2, q, settings)
            out["k_ldm"][i, j] = stiffness(config, large, q_m2, q, settings)
            out["k_sdm"][i, j] = stiffness(config, small, q_m2, q, settings)
    return StaticSweep(q_grid, x_grid, **out)
