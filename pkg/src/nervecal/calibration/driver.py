"""Optimizer-driven calibration of the six damage-model parameters."""

import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from ..damage import params_from_vector, search_bounds
from ..optim import Bounds, optimize
from ..parallel import Runner
from .evaluate import BASELINES, build_target, evaluate_population
from .settings import SimSettings

log = logging.getLogger(__name__)


@dataclass
class CalibrationResult:
    opt: object  # OptResult in search coordinates
    best_params: object
    best_report: object
    wall_time: float
    workers: int
    n_failed: int

    @property
    def initial_fitness(self):
        """Fitness of the first population sweep (or first batch for BFGS)."""
        return self.opt.extras.get("initial_fitness", [])


def calibrate(mode, reference, config, settings=SimSettings(), workers=1, on_batch=None,
              runner=None, target=None, cache=BASELINES):
    """Minimize the L1 %CAP misfit against ``reference``.

    The optimizer searches log10(E), log10(k), log10(eta_eq) and the other
    three parameters linearly. Candidates whose simulation fails score +inf.
    """
    lo, hi = search_bounds(settings.eta_upper)
    bounds = Bounds(lo, hi)
    own = runner is None
    runner = runner or Runner(workers)
    target = target or build_target(mode, settings)
    failures = []
    first = []

    def evaluate_batch(X):
        params = [params_from_vector(x) for x in X]
        reports = evaluate_population(params, mode, reference, settings, runner=runner,
                                      target=target, cache=cache)
        for r in reports:
            if not r.ok:
                failures.append(r.error)
                log.warning("candidate failed: %s", r.error)
        f = np.array([r.total for r in reports])
        if not first:
            first.append(f.copy())
        return f

    t0 = time.perf_counter()
    try:
        res = optimize(None, bounds, config, evaluate_batch=evaluate_batch, on_batch=on_batch)
        best_params = params_from_vector(res.best_x)
        best = evaluate_population([best_params], mode, reference, settings, runner=runner,
                                   target=target, cache=cache)[0]
    finally:
        if own:
            runner.close()
    wall = time.perf_counter() - t0
    res.extras["initial_fitness"] = first[0].tolist() if first else []
    log.info("%s finished: best %.4g after %d evaluations in %.1f s", config.strategy,
             res.best_f, res.evals_used, wall)
    if math.isfinite(res.best_f) and best.total != res.best_f:
        log.warning("re-evaluated best fitness %.17g differs from %.17g", best.total, res.best_f)
    return CalibrationResult(opt=res, best_params=best_params, best_report=best,
                             wall_time=wall, workers=runner.workers, n_failed=len(failures))
