"""Box-projected BFGS with central finite-difference gradients and random restarts.

Works in unit-box coordinates so that the finite-difference step and the
initial inverse Hessian are scale free.
"""

import numpy as np

from ..rng import substream
from .common import BudgetExhausted, Tracker

ARMIJO = 1e-4
MIN_ALPHA = 1e-8
MAX_BACKTRACKS = 20
STALL_STEP = 1e-10
STALL_GRAD = 1e-12


def fd_gradient(f_unit, u, h):
    """Central differences in unit coordinates; 2N evaluations in one batch.

    Probes are kept inside [0, 1]; the difference quotient uses the actual
    probe spacing.
    """
    dim = len(u)
    plus = np.minimum(u + h, 1.0)
    minus = np.maximum(u - h, 0.0)
    probes = np.repeat(u[None, :], 2 * dim, axis=0)
    probes[np.arange(dim), np.arange(dim)] = plus
    probes[dim + np.arange(dim), np.arange(dim)] = minus
    f = f_unit(probes)
    return (f[:dim] - f[dim:]) / (plus - minus)


def bfgs_optimize(objective, bounds, config, evaluate_batch=None, on_batch=None):
    track = Tracker(objective, config.max_evals, evaluate_batch, on_batch)
    rng = substream(config.seed, "optimizer")
    restart_rng = substream(config.seed, "restarts")
    lo, width = bounds.lower, bounds.width
    dim = bounds.dim
    h = config.fd_step

    def f_unit(U):
        U = np.atleast_2d(U)
        X = np.clip(lo + np.clip(U, 0.0, 1.0) * width, bounds.lower, bounds.upper)
        f = track(X)
        if len(f) < len(U):
            raise BudgetExhausted
        return f

    restarts = -1
    iterations = 0
    try:
        u = rng.random(dim)
        while True:
            restarts += 1
            fu = float(f_unit(u)[0])
            g = fd_gradient(f_unit, u, h)
            H = np.eye(dim)
            while True:
                if not np.all(np.isfinite(g)) or np.linalg.norm(g) < STALL_GRAD:
                    break
                d = -H @ g
                if g @ d >= 0:  # lost descent direction
                    H = np.eye(dim)
                    d = -g
                alpha = 1.0
                accepted = False
                for _ in range(MAX_BACKTRACKS):
                    u_new = np.clip(u + alpha * d, 0.0, 1.0)
                    step = u_new - u
                    if np.linalg.norm(step) < STALL_STEP or alpha < MIN_ALPHA:
                        break
                    f_new = float(f_unit(u_new)[0])
                    if f_new <= fu + ARMIJO * (g @ step):
                        accepted = True
                        break
                    alpha *= 0.5
                if not accepted:
                    break
                g_new = fd_gradient(f_unit, u_new, h)
                y = g_new - g
                sy = step @ y
                if sy > 1e-12 * np.linalg.norm(step) * np.linalg.norm(y):
                    rho = 1.0 / sy
                    V = np.eye(dim) - rho * np.outer(step, y)
                    H = V @ H @ V.T + rho * np.outer(step, step)
                u, fu, g = u_new, f_new, g_new
                iterations += 1
            u = restart_rng.random(dim)
    except BudgetExhausted:
        pass
    return track.result("bfgs", restarts=max(restarts, 0), extras={"iterations": iterations})
