import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nervecal.optim import (Bounds, OptimizerConfig, bfgs_optimize, crossover_bin, crossover_exp,
                            de_optimize, fd_gradient, lshade_optimize, mutant_rand_1, optimize,
                            random_search, rastrigin, sphere, write_log_csv)
from nervecal.optim.lshade import initial_population_size
from nervecal.parallel import Runner, batch_evaluator
from nervecal.rng import derive_seed, substream

BOX6 = Bounds.uniform(-5.0, 5.0, 6)
RASTRIGIN_BOX = Bounds.uniform(-5.12, 5.12, 6)
STRATS = ["de_rand_1_exp", "de_rand_1_bin", "lshade", "bfgs"]


class Counter:
    def __init__(self, fn):
        self.fn = fn
        self.calls = 0
        self.points = []

    def __call__(self, x):
        self.calls += 1
        self.points.append(np.array(x))
        return self.fn(x)


# -- configuration and bounds -------------------------------------------------------

@pytest.mark.parametrize("kw", [{"F": 0.0}, {"F": 2.5}, {"CR": 1.5}, {"population_size": 3},
                                {"strategy": "pso"}, {"max_evals": 0}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        OptimizerConfig(**kw)


def test_config_defaults():
    c = OptimizerConfig()
    assert (c.strategy, c.population_size, c.F, c.CR, c.max_evals) == ("de_rand_1_exp", 15, 0.5, 0.5, 450)


def test_bounds_validation():
    with pytest.raises(ValueError):
        Bounds(np.zeros(2), np.array([1.0, 0.0]))


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3))
def test_reflect_lands_inside(x):
    b = Bounds(np.array([-1.0, 0.0, 2.0]), np.array([1.0, 0.5, 7.0]))
    y = b.reflect(np.array(x))
    assert b.contains(y)


def test_reflect_mirrors_once():
    b = Bounds.uniform(0.0, 1.0, 2)
    np.testing.assert_allclose(b.reflect([1.25, -0.25]), [0.75, 0.25])
    np.testing.assert_allclose(b.reflect([0.3, 0.7]), [0.3, 0.7])


# -- operators ----------------------------------------------------------------------

def test_crossover_bin_limits(rng):
    t, m = np.zeros(6), np.ones(6)
    assert np.array_equal(crossover_bin(t, m, 1.0, rng), m)
    for _ in range(50):
        assert crossover_bin(t, m, 0.0, rng).sum() == 1


def test_crossover_exp_limits(rng):
    t, m = np.zeros(6), np.ones(6)
    for _ in range(50):
        assert crossover_exp(t, m, 0.0, rng).sum() == 1
    assert np.array_equal(crossover_exp(t, m, 1.0, rng), m)


def test_crossover_exp_block_is_contiguous(rng):
    t, m = np.zeros(6), np.ones(6)
    for _ in range(200):
        y = crossover_exp(t, m, 0.5, rng)
        # a circular run has exactly one 0->1 edge unless it covers everything
        edges = np.sum((np.roll(y, 1) == 0) & (y == 1))
        assert edges == 1 or y.sum() == 6


def test_crossover_bin_mean_count():
    rng = substream(0, "optimizer")
    t, m = np.zeros(6), np.ones(6)
    counts = [crossover_bin(t, m, 0.5, rng).sum() for _ in range(100_000)]
    assert abs(np.mean(counts) - (1 + 5 * 0.5)) <= 0.1


# mean block length for d=6, CR=0.5: sum_{l<6} l 0.5^l + 6 * 0.5^5
EXP_MEAN_D6_CR05 = 1.96875


def test_crossover_exp_mean_length():
    rng = substream(1, "optimizer")
    t, m = np.zeros(6), np.ones(6)
    counts = [crossover_exp(t, m, 0.5, rng).sum() for _ in range(100_000)]
    closed = sum(l * 0.5 ** (l - 1) * 0.5 for l in range(1, 6)) + 6 * 0.5**5
    assert closed == EXP_MEAN_D6_CR05
    assert abs(np.mean(counts) - closed) <= 0.05


def test_zero_F_mutant_is_base_vector(rng):
    pop = rng.normal(size=(8, 3))
    v = mutant_rand_1(pop, 2, 0.0, substream(3, "optimizer"))
    assert any(np.array_equal(v, p) for i, p in enumerate(pop) if i != 2)


def test_mutant_uses_distinct_indices():
    pop = np.eye(5)
    rng = substream(4, "optimizer")
    for _ in range(100):
        v = mutant_rand_1(pop, 0, 1.0, rng)
        # x_r1 + (x_r2 - x_r3) with distinct unit vectors never touches coordinate 0
        assert v[0] == 0.0
        assert sorted(v[1:]) == [-1.0, 0.0, 1.0, 1.0]


# -- budget and bookkeeping ----------------------------------------------------------

def test_de_budget_exact():
    f = Counter(sphere)
    res = de_optimize(f, BOX6, OptimizerConfig())
    assert f.calls == 450 == res.evals_used
    assert res.extras["generations"] == 29  # 15 initial + 29 x 15 trials


@pytest.mark.parametrize("strategy", STRATS)
@pytest.mark.parametrize("fn,box", [(sphere, BOX6), (rastrigin, RASTRIGIN_BOX)])
def test_history_non_increasing_and_inside_box(strategy, fn, box):
    f = Counter(fn)
    res = optimize(f, box, OptimizerConfig(strategy=strategy, seed=3))
    best = [b for _, b in res.history]
    assert all(a >= b for a, b in zip(best, best[1:]))
    assert [i for i, _ in res.history] == list(range(1, res.evals_used + 1))
    assert res.evals_used <= 450 and f.calls == res.evals_used
    assert all(box.contains(p) for p in f.points)
    assert res.best_f == min(fn(p) for p in f.points)


@pytest.mark.parametrize("strategy", STRATS)
def test_seed_determinism(strategy):
    a = optimize(rastrigin, RASTRIGIN_BOX, OptimizerConfig(strategy=strategy, seed=11))
    b = optimize(rastrigin, RASTRIGIN_BOX, OptimizerConfig(strategy=strategy, seed=11))
    c = optimize(rastrigin, RASTRIGIN_BOX, OptimizerConfig(strategy=strategy, seed=12))
    assert a.same_as(b)
    assert not a.same_as(c)


def test_worker_count_does_not_change_result():
    cfg = OptimizerConfig(seed=5)
    ref = de_optimize(rastrigin, RASTRIGIN_BOX, cfg)
    with Runner(2) as runner:
        par = de_optimize(rastrigin, RASTRIGIN_BOX, cfg, evaluate_batch=batch_evaluator(rastrigin, runner))
    assert ref.same_as(par)


def test_nan_is_treated_as_inf():
    def f(x):
        return math.nan if x[0] > 0 else sphere(x)

    res = de_optimize(f, BOX6, OptimizerConfig(max_evals=60, seed=1))
    assert res.n_nan > 0
    assert math.isfinite(res.best_f) and res.best_x[0] <= 0


def test_on_batch_sees_every_evaluation():
    seen = []
    res = de_optimize(sphere, BOX6, OptimizerConfig(max_evals=40), on_batch=seen.extend)
    assert [e[0] for e in seen] == list(range(1, 41))
    assert res.log == seen


def test_log_csv(tmp_path):
    res = de_optimize(sphere, BOX6, OptimizerConfig(max_evals=30))
    p = tmp_path / "log.csv"
    write_log_csv(res, p)
    rows = p.read_text().splitlines()
    assert rows[0] == "eval_index,x0,x1,x2,x3,x4,x5,fitness,best_so_far"
    assert len(rows) == 31


# -- LSHADE --------------------------------------------------------------------------

def test_lshade_population_schedule():
    res = lshade_optimize(sphere, BOX6, OptimizerConfig(strategy="lshade"))
    sizes = res.extras["population_sizes"]
    assert res.extras["n_init"] == initial_population_size(6, 450) == 108
    assert sizes[-1] == 4
    assert all(a >= b for a, b in zip(sizes, sizes[1:]))
    assert res.evals_used == 450


def test_lshade_sane_against_de_on_sphere():
    de = [de_optimize(sphere, BOX6, OptimizerConfig(seed=s)).best_f for s in range(25)]
    ls = [lshade_optimize(sphere, BOX6, OptimizerConfig(strategy="lshade", seed=s)).best_f
          for s in range(25)]
    assert np.median(ls) <= 10 * np.median(de)


# -- BFGS ----------------------------------------------------------------------------

def test_fd_gradient_of_sphere():
    u = np.array([0.2, 0.4, 0.5, 0.7, 0.9, 0.35])

    def f_unit(U):
        return np.array([sphere(row) for row in np.atleast_2d(U)])

    g = fd_gradient(f_unit, u, 1e-2)
    np.testing.assert_allclose(g, 2 * u, rtol=1e-4)


def test_bfgs_quadratic():
    center = np.array([1.0, -2.0, 0.5, 3.0, -1.0, 2.0])
    scale = np.array([1.0, 4.0, 0.5, 2.0, 1.0, 3.0])

    def quad(x):
        return float(np.sum(scale * (x - center) ** 2))

    res = bfgs_optimize(quad, BOX6, OptimizerConfig(strategy="bfgs"))
    assert np.max(np.abs(res.best_x - center)) < 1e-6
    assert res.evals_used == 450


def test_bfgs_restarts_and_budget():
    f = Counter(rastrigin)
    res = bfgs_optimize(f, RASTRIGIN_BOX, OptimizerConfig(strategy="bfgs", seed=2))
    assert res.restarts >= 1
    assert f.calls == res.evals_used == 450


# -- random search baseline and seeds --------------------------------------------------

def test_de_beats_random_search_on_sphere():
    de, rs = [], []
    for r in range(25):
        seed = derive_seed(0, "runs", r)
        de.append(de_optimize(sphere, BOX6, OptimizerConfig(seed=seed)).best_f)
        rs.append(random_search(sphere, BOX6, 450, substream(seed, "optimizer"))[1])
    assert np.median(de) < np.median(rs)


def test_substreams_are_independent():
    a = substream(1, "optimizer").random(4)
    b = substream(1, "bundle", 0).random(4)
    c = substream(1, "optimizer").random(4)
    assert np.array_equal(a, c) and not np.array_equal(a, b)
    assert derive_seed(1, "runs", 0) != derive_seed(1, "runs", 1)
    assert 0 <= derive_seed(1, "runs", 0) < 2**63
    with pytest.raises(KeyError):
        substream(1, "nope")
