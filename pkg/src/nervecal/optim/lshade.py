"""LSHADE: success-history parameter adaptation with linear population size reduction."""

import math

import numpy as np

from ..rng import substream
from .common import BudgetExhausted, Tracker
from .de import crossover_bin


def initial_population_size(dim, max_evals):
    return max(4, min(int(round(18 * dim)), max_evals // 3))


def planned_size(n_init, n_min, evals, max_evals):
    return int(round(n_init + (n_min - n_init) * min(evals, max_evals) / max_evals))


def _lehmer(values, weights):
    den = np.sum(weights * values)
    return float(np.sum(weights * values**2) / den) if den > 0 else 0.0


def _sample_F(rng, loc):
    while True:
        f = loc + 0.1 * math.tan(math.pi * (rng.random() - 0.5))
        if f > 0:
            return min(f, 1.0)


def lshade_optimize(objective, bounds, config, evaluate_batch=None, on_batch=None):
    rng = substream(config.seed, "optimizer")
    track = Tracker(objective, config.max_evals, evaluate_batch, on_batch)
    dim = bounds.dim
    H = config.memory_size
    n_init = initial_population_size(dim, config.max_evals)
    n_min = min(config.n_min, n_init)

    m_F = np.full(H, 0.5)
    m_CR = np.full(H, 0.5)
    k = 0
    archive = np.empty((0, dim))

    pop = bounds.sample(rng, n_init)
    fit = np.full(n_init, np.inf)
    sizes = []
    try:
        f0 = track(pop)
        fit[: len(f0)] = f0
        while track.remaining > 0:
            n = len(pop)
            order = np.argsort(fit, kind="stable")
            n_best = max(2, int(round(config.p_best * n)))
            union = np.vstack([pop, archive]) if len(archive) else pop

            r = rng.integers(H, size=n)
            CR = np.where(np.isnan(m_CR[r]), 0.0,
                          np.clip(m_CR[r] + 0.1 * rng.standard_normal(n), 0.0, 1.0))
            F = np.array([_sample_F(rng, m_F[ri]) for ri in r])

            trials = np.empty_like(pop)
            for i in range(n):
                pbest = pop[order[rng.integers(n_best)]]
                r1 = rng.choice(np.delete(np.arange(n), i))
                pool = np.setdiff1d(np.arange(len(union)), [i, r1])
                r2 = rng.choice(pool)
                v = pop[i] + F[i] * (pbest - pop[i]) + F[i] * (pop[r1] - union[r2])
                trials[i] = crossover_bin(pop[i], bounds.reflect(v), CR[i], rng)

            ft = track(trials)
            s_F, s_CR, gain = [], [], []
            for i, f in enumerate(ft):
                if f < fit[i]:
                    archive = np.vstack([archive, pop[i]])
                    s_F.append(F[i])
                    s_CR.append(CR[i])
                    gain.append(fit[i] - f)
                if f <= fit[i]:
                    pop[i] = trials[i]
                    fit[i] = f

            if s_F:
                g = np.asarray(gain)
                g = np.where(np.isfinite(g), g, np.finfo(float).max / len(g))
                w = g / g.sum() if g.sum() > 0 else np.full(len(g), 1.0 / len(g))
                m_F[k] = _lehmer(np.asarray(s_F), w)
                scr = np.asarray(s_CR)
                m_CR[k] = np.nan if np.isnan(m_CR[k]) or scr.max() == 0 else _lehmer(scr, w)
                k = (k + 1) % H

            target = max(n_min, planned_size(n_init, n_min, track.evals, config.max_evals))
            if target < len(pop):
                keep = np.sort(np.argsort(fit, kind="stable")[:target])
                pop, fit = pop[keep], fit[keep]
            cap = int(round(config.archive_rate * len(pop)))
            if len(archive) > cap:
                archive = archive[np.sort(rng.choice(len(archive), cap, replace=False))]
            sizes.append(len(pop))
    except BudgetExhausted:
        pass
    return track.result("lshade", extras={"population_sizes": sizes, "n_init": n_init,
                                          "memory_F": m_F, "memory_CR": m_CR})
