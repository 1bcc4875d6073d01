"""%CAP simulation, fitness and population evaluation against reference data."""

from .driver import CalibrationResult, calibrate
from .evaluate import (
    BASELINES,
    BaselineCache,
    CellFailure,
    Target,
    alteration_grid,
    build_target,
    cap_matrix,
    cell_traces,
    evaluate_population,
    fitness,
    healthy_baseline,
    percent_for_alteration,
    simulate_cell,
    simulate_population,
)
from .matrix import (
    REFERENCE_HEADER,
    CapMatrix,
    FitnessReport,
    ReferenceMatrix,
    default_reference,
    fitness_from_matrix,
    load_reference,
    percent_cap,
)
from .settings import MODES, SimSettings
from ..parallel import Runner

__all__ = [
    "BASELINES", "BaselineCache", "CalibrationResult", "CapMatrix", "CellFailure", "FitnessReport", "MODES", "REFERENCE_HEADER",
    "ReferenceMatrix", "Runner", "SimSettings", "Target", "alteration_grid", "build_target", "calibrate",
    "cap_matrix", "cell_traces", "default_reference", "evaluate_population", "fitness",
    "fitness_from_matrix", "healthy_baseline", "load_reference", "percent_cap",
    "percent_for_alteration", "simulate_cell", "simulate_population",
]
