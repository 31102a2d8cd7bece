"""Simulation of a series elastic actuator with a leaf-spring variable stiffness stage."""

from .beam import BeamSpec, ElasticaSolution, SolverSettings, solve_deflection, solve_force_for_deflection, solve_tip_slope
from .config import RunConfig, load_config
from .dynamics import ActuatorParams, DisturbanceProfile, Schedule, SimState, step
from .experiments import Scenario, ScenarioResult, compare_models_sweep, energy_report, run_scenario, scenario_catalog
from .vsam import StiffnessModelKind, VsamConfig, calibrate, default_config, spring_torque, stiffness

__version__ = "0.1.0"
