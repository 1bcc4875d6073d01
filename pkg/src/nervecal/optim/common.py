"""Bounds, configuration, results and budgeted batch evaluation."""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

STRATEGIES = ("de_rand_1_bin", "de_rand_1_exp", "lshade", "bfgs")


@dataclass(frozen=True, eq=False)
class Bounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower and upper must be 1-D vectors of equal length")
        if not np.all(lo < hi):
            raise ValueError("lower must be strictly below upper in every dimension")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def uniform(cls, low, high, dim):
        return cls(np.full(dim, float(low)), np.full(dim, float(high)))

    @property
    def dim(self):
        return len(self.lower)

    @property
    def width(self):
        return self.upper - self.lower

    def contains(self, x):
        x = np.asarray(x)
        return bool(np.all((x >= self.lower) & (x <= self.upper)))

    def sample(self, rng, n):
        return self.lower + rng.random((n, self.dim)) * self.width

    def reflect(self, x):
        """Mirror out-of-box coordinates back across the violated bound.

        Equivalent to reflecting repeatedly until inside: the coordinate is
        folded with period ``2 * width``.
        """
        x = np.array(x, dtype=float)
        w = self.width
        y = np.mod(x - self.lower, 2.0 * w)
        y = np.where(y > w, 2.0 * w - y, y)
        out = self.lower + y
        inside = (x >= self.lower) & (x <= self.upper)
        out = np.where(inside, x, out)
        return np.clip(out, self.lower, self.upper)


@dataclass(frozen=True)
class OptimizerConfig:
    strategy: str = "de_rand_1_exp"
    population_size: int = 15
    F: float = 0.5
    CR: float = 0.5
    max_evals: int = 450
    seed: int = 0
    # LSHADE
    memory_size: int = 6
    p_best: float = 0.11
    archive_rate: float = 2.6
    n_min: int = 4
    # BFGS, finite-difference step as a fraction of the box width
    fd_step: float = 1e-2

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        if not 0 < self.F <= 2:
            raise ValueError("F must lie in (0, 2]")
        if not 0 <= self.CR <= 1:
            raise ValueError("CR must lie in [0, 1]")
        if self.strategy.startswith("de_") and self.population_size < 4:
            raise ValueError("DE needs a population of at least 4")
        if self.max_evals < 1:
            raise ValueError("max_evals must be positive")


@dataclass
class OptResult:
    best_x: np.ndarray
    best_f: float
    history: list  # (eval_index, best_so_far), one entry per evaluation
    evals_used: int
    strategy: str = ""
    restarts: int = 0
    n_nan: int = 0
    log: list = field(default_factory=list)  # (eval_index, x, f, best_so_far)
    extras: dict = field(default_factory=dict)

    def same_as(self, other):
        return (np.array_equal(self.best_x, other.best_x) and self.best_f == other.best_f
                and self.history == other.history and self.evals_used == other.evals_used)


class BudgetExhausted(Exception):
    pass


class Tracker:
    """Counts evaluations against the budget and keeps the incumbent.

    Candidates reach ``evaluate_batch`` as one array per call; results come
    back in candidate order. NaN fitness is recorded as +inf.
    """

    def __init__(self, objective, max_evals, evaluate_batch=None, on_batch=None):
        self.objective = objective
        self.max_evals = max_evals
        self.evaluate_batch = evaluate_batch
        self.on_batch = on_batch
        self.evals = 0
        self.best_x = None
        self.best_f = math.inf
        self.history = []
        self.log = []
        self.n_nan = 0

    @property
    def remaining(self):
        return self.max_evals - self.evals

    def __call__(self, X):
        """Evaluate rows of ``X``; truncates to the remaining budget."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.remaining <= 0:
            raise BudgetExhausted
        X = X[: self.remaining]
        if self.evaluate_batch is not None:
            f = np.asarray(self.evaluate_batch(X), dtype=float)
        else:
            f = np.array([self.objective(x) for x in X], dtype=float)
        if f.shape != (len(X),):
            raise ValueError(f"batch evaluation returned shape {f.shape} for {len(X)} candidates")
        nan = np.isnan(f)
        self.n_nan += int(nan.sum())
        f = np.where(nan, math.inf, f)
        start = self.evals
        for x, fx in zip(X, f):
            self.evals += 1
            if fx < self.best_f or self.best_x is None:
                self.best_f = float(fx)
                self.best_x = x.copy()
            self.history.append((self.evals, self.best_f))
            self.log.append((self.evals, x.copy(), float(fx), self.best_f))
        if self.on_batch is not None:
            self.on_batch(self.log[start:])
        return f

    def result(self, strategy, **kw):
        return OptResult(best_x=self.best_x, best_f=self.best_f, history=self.history,
                         evals_used=self.evals, strategy=strategy, n_nan=self.n_nan,
                         log=self.log, **kw)


def log_header(dim, names=None):
    names = list(names) if names is not None else [f"x{i}" for i in range(dim)]
    return ["eval_index", *names, "fitness", "best_so_far"]


def log_rows(entries):
    for idx, x, f, best in entries:
        yield [idx, *(repr(float(v)) for v in x), repr(f), repr(best)]


def write_log_csv(result, path, names=None):
    dim = len(result.best_x)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(log_header(dim, names))
        w.writerows(log_rows(result.log))


def sphere(x):
    x = np.asarray(x)
    return float(np.sum(x * x))


def rastrigin(x):
    x = np.asarray(x)
    return float(10.0 * len(x) + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x)))


def random_search(objective, bounds, max_evals, rng):
    X = bounds.sample(rng, max_evals)
    f = np.array([objective(x) for x in X])
    i = int(np.argmin(f))
    return X[i], float(f[i])
