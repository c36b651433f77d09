"""Numerical laboratory for a damped wave equation coupled to a clamped
plate through a shared wall, with the potential-well energy apparatus and
finite-time-escape diagnostics built in."""

from .blowup import (
    BlowupVerdict,
    analyze_record,
    check_hypotheses,
    comparison_lifespan,
    fit_inequality,
    select_epsilon,
)
from .config import ConfigError, RunConfig, load_config, parse_config
from .functionals import (
    EnergySnapshot,
    classify_well,
    nehari_value,
    potential_energy,
    quadratic_energy,
    source_potential,
    take_snapshot,
    total_energy,
)
from .harness import ScenarioResult, run_scenario, sweep
from .integrator import RunRecord, SolverError, StepReport, advance, simulate
from .mesh import Mesh, MeshError, State, build_mesh, load_state
from .params import InvalidParams, ModelParams, validate_params
from .presets import PresetError, preset_initial_data
from .wellconstants import (
    ConstantsError,
    WellConstants,
    compute_well_constants,
    estimate_embedding_constant,
)

__version__ = "0.1.0"

__all__ = [
    "BlowupVerdict", "ConfigError", "ConstantsError", "EnergySnapshot",
    "InvalidParams", "Mesh", "MeshError", "ModelParams", "PresetError",
    "RunConfig", "RunRecord", "ScenarioResult", "SolverError", "State",
    "StepReport", "WellConstants", "advance", "analyze_record",
    "build_mesh", "check_hypotheses", "classify_well", "comparison_lifespan",
    "compute_well_constants", "estimate_embedding_constant", "fit_inequality",
    "load_config", "load_state", "nehari_value", "parse_config",
    "potential_energy", "preset_initial_data", "quadratic_energy",
    "run_scenario", "select_epsilon", "simulate", "source_potential",
    "sweep", "take_snapshot", "total_energy", "validate_params",
]
