"""Classic differential evolution, DE/rand/1 with binomial or exponential crossover."""

import numpy as np

from ..rng import substream
from .common import BudgetExhausted, Tracker


def crossover_bin(target, mutant, CR, rng):
    """Binomial crossover; gene ``j_rand`` always comes from the mutant."""
    d = len(target)
    take = rng.random(d) < CR
    take[rng.integers(d)] = True
    return np.where(take, mutant, target)


def crossover_exp(target, mutant, CR, rng):
    """Exponential crossover: one circular run of mutant genes.

    The run starts at a random gene and continues with probability ``CR``
    per further gene, up to the full dimension.
    """
    d = len(target)
    trial = np.array(target, dtype=float, copy=True)
    start = int(rng.integers(d))
    length = 1
    while length < d and rng.random() < CR:
        length += 1
    idx = (start + np.arange(length)) % d
    trial[idx] = np.asarray(mutant)[idx]
    return trial


def mutant_rand_1(pop, i, F, rng):
    others = np.delete(np.arange(len(pop)), i)
    r1, r2, r3 = rng.choice(others, 3, replace=False)
    return pop[r1] + F * (pop[r2] - pop[r3])


def de_optimize(objective, bounds, config, evaluate_batch=None, on_batch=None):
    """Minimize ``objective`` over ``bounds``.

    Each generation first draws every trial vector, then evaluates the whole
    batch, then applies greedy selection (``f_trial <= f_target`` replaces),
    so random draws never depend on evaluation order or worker count.
    Initialization counts against ``max_evals``.
    """
    rng = substream(config.seed, "optimizer")
    crossover = crossover_exp if config.strategy == "de_rand_1_exp" else crossover_bin
    track = Tracker(objective, config.max_evals, evaluate_batch, on_batch)
    np_ = config.population_size

    pop = bounds.sample(rng, np_)
    fit = np.full(np_, np.inf)
    generations = 0
    try:
        f0 = track(pop)
        fit[: len(f0)] = f0
        while track.remaining > 0:
            trials = np.empty_like(pop)
            for i in range(np_):
                v = bounds.reflect(mutant_rand_1(pop, i, config.F, rng))
                trials[i] = crossover(pop[i], v, config.CR, rng)
            ft = track(trials)
            for i, f in enumerate(ft):
                if f <= fit[i]:
                    pop[i] = trials[i]
                    fit[i] = f
            generations += 1
    except BudgetExhausted:
        pass
    return track.result(config.strategy, extras={"generations": generations,
                                                 "population": pop, "fitness": fit})
