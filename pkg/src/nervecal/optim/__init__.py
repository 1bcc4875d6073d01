"""Bound-constrained black-box optimizers."""

from .bfgs import bfgs_optimize, fd_gradient
from .common import (
    STRATEGIES,
    Bounds,
    OptimizerConfig,
    OptResult,
    Tracker,
    random_search,
    rastrigin,
    sphere,
    write_log_csv,
)
from .de import crossover_bin, crossover_exp, de_optimize, mutant_rand_1
from .lshade import lshade_optimize


def optimize(objective, bounds, config, evaluate_batch=None, on_batch=None):
    """Run the strategy named in ``config``."""
    if config.strategy == "lshade":
        run = lshade_optimize
    elif config.strategy == "bfgs":
        run = bfgs_optimize
    else:
        run = de_optimize
    return run(objective, bounds, config, evaluate_batch=evaluate_batch, on_batch=on_batch)


__all__ = [
    "Bounds", "OptResult", "OptimizerConfig", "STRATEGIES", "Tracker", "bfgs_optimize",
    "crossover_bin", "crossover_exp", "de_optimize", "fd_gradient", "lshade_optimize",
    "mutant_rand_1", "optimize", "random_search", "rastrigin", "sphere", "write_log_csv",
]
