import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nervecal.damage import (BUNDLE_CALIBRATED, DE_MODEL_1, DE_MODEL_2, MANUAL_MODEL, PARAM_NAMES,
                             SEARCH_BOX, TIME_POINTS, DamageState, ModelParams, catalog_cases,
                             damage_at, params_from_vector, search_bounds, to_alteration,
                             vector_from_params)
from nervecal.errors import ParamsOutOfBox

CASES = catalog_cases()


def params_in_box():
    def log_uniform(lo, hi):
        return st.floats(math.log10(lo), math.log10(hi)).map(lambda x: 10.0 ** x)

    return st.builds(
        ModelParams,
        E=log_uniform(*SEARCH_BOX["E"]),
        k=log_uniform(*SEARCH_BOX["k"]),
        eta_eq=log_uniform(*SEARCH_BOX["eta_eq"]),
        eps_tilde=st.floats(*SEARCH_BOX["eps_tilde"]),
        kappa=st.floats(*SEARCH_BOX["kappa"]),
        gamma=st.floats(*SEARCH_BOX["gamma"]),
    ).filter(lambda p: all(SEARCH_BOX[n][0] <= getattr(p, n) <= SEARCH_BOX[n][1] for n in PARAM_NAMES))


# -- catalog and presets ----------------------------------------------------------

def test_catalog():
    assert [c.id for c in CASES] == [1, 2, 3, 4, 5, 6]
    assert (CASES[0].label, CASES[0].eps_max) == ("slow-mild", 0.25)
    assert (CASES[5].label, CASES[5].eps_max) == ("fast-severe", 1.00)
    assert CASES[0].strain_rate == pytest.approx(0.007)
    assert CASES[3].strain_rate == pytest.approx(437.0)
    assert [c.eps_max for c in CASES] == [0.25, 0.5, 1.0] * 2


def test_catalog_rate_override():
    cases = catalog_cases(slow_rate=0.006, fast_rate=519.0)
    assert cases[0].strain_rate == 0.006 and cases[5].strain_rate == 519.0


@pytest.mark.parametrize("p", [MANUAL_MODEL, DE_MODEL_1, DE_MODEL_2, BUNDLE_CALIBRATED])
def test_presets_inside_box(p):
    p.check_box()


def test_manual_preset_values():
    assert MANUAL_MODEL.as_dict() == {"E": 1.66e5, "k": 1.85e5, "eta_eq": 1.85e7,
                                      "eps_tilde": 0.1, "kappa": 0.5, "gamma": 2.0}


def test_out_of_box():
    with pytest.raises(ParamsOutOfBox):
        damage_at(replace(MANUAL_MODEL, kappa=1.5), CASES[0], 0)
    with pytest.raises(ParamsOutOfBox):
        damage_at(MANUAL_MODEL, CASES[0], 0, eta_upper=1e7)


def test_search_coordinates_round_trip():
    lo, hi = search_bounds()
    np.testing.assert_allclose(lo, [3, 3, 6, 0, 0, 1])
    np.testing.assert_allclose(hi, [6, 7, 8, 0.4, 1, 4])
    assert search_bounds(1e7)[1][2] == pytest.approx(7.0)
    x = vector_from_params(MANUAL_MODEL)
    back = params_from_vector(x)
    for n in PARAM_NAMES:
        assert getattr(back, n) == pytest.approx(getattr(MANUAL_MODEL, n), rel=1e-12)


# -- formula oracle ----------------------------------------------------------------
# Frozen values from a separate 30-digit evaluation of the rate amplification,
# initial damage and relaxation formulas for the manual preset.

ORACLE = [
    # case id, t (min), eps_peak, D, residual strain
    (1, 0, 0.35294117647058824, 0.055791622215449137, 0.25294117647058824),
    (1, 10, 0.35294117647058824, 0.028023864593369838, 0.12705114133671129),
    (1, 30, 0.35294117647058824, 0.027895813806061804, 0.12647060046868271),
    (6, 0, 1.9999771172284387, 0.96080339800118216, 1.8999771172284387),
    (6, 10, 1.9999771172284387, 0.48260694450606774, 0.95434940497154183),
    (6, 30, 1.9999771172284387, 0.48040174546942425, 0.94998865050577581),
]


@pytest.mark.parametrize("case_id,t,eps_peak,D,residual", ORACLE)
def test_manual_model_formula_oracle(case_id, t, eps_peak, D, residual):
    s = damage_at(MANUAL_MODEL, CASES[case_id - 1], t)
    assert s.eps_peak == pytest.approx(eps_peak, rel=1e-13)
    assert s.D == pytest.approx(D, rel=1e-12)
    assert s.residual_strain == pytest.approx(residual, rel=1e-12)


# -- structural properties ----------------------------------------------------------

def test_subthreshold_gives_no_damage():
    p = replace(MANUAL_MODEL, eps_tilde=0.4, eta_eq=1e6, k=1e7)  # mild peak stays below 0.4
    for t in TIME_POINTS:
        s = damage_at(p, CASES[0], t)
        assert s.D == 0.0 and s.residual_strain == 0.0
        assert to_alteration(s).is_identity


def test_kappa_one_means_no_recovery():
    p = replace(MANUAL_MODEL, kappa=1.0)
    d = [damage_at(p, c, t).D for c in CASES for t in TIME_POINTS]
    for c in CASES:
        d0 = damage_at(p, c, 0).D
        assert all(damage_at(p, c, t).D == d0 for t in TIME_POINTS)
    assert max(d) > 0


@given(params_in_box())
@settings(max_examples=200, deadline=None)
def test_damage_state_invariants(p):
    for c in CASES:
        prev = None
        for t in TIME_POINTS:
            s = damage_at(p, c, t)
            assert 0.0 <= s.D <= 1.0
            assert s.residual_strain >= 0.0
            if prev is not None:
                assert s.D <= prev
            prev = s.D


@given(params_in_box())
@settings(max_examples=200, deadline=None)
def test_monotone_in_severity_and_rate(p):
    for t in TIME_POINTS:
        d = [damage_at(p, c, t).D for c in CASES]
        assert d[0] <= d[1] <= d[2]
        assert d[3] <= d[4] <= d[5]
        for slow, fast in zip(d[:3], d[3:]):
            assert fast >= slow


def test_strict_increase_above_threshold():
    for t in TIME_POINTS:
        d = [damage_at(MANUAL_MODEL, c, t).D for c in CASES]
        assert d[0] < d[1] < d[2]
        assert d[3] < d[4] < d[5]
        assert all(f > s for s, f in zip(d[:3], d[3:]))


def test_recovery_limit_is_kappa_fraction():
    p = MANUAL_MODEL
    c = CASES[2]
    d0 = damage_at(p, c, 0).D
    late = damage_at(p, c, 1e6).D
    assert late == pytest.approx(p.kappa * d0, rel=1e-12)
    ds = [damage_at(p, c, t).D for t in TIME_POINTS]
    assert all(a > b for a, b in zip(ds, ds[1:]))


def test_damage_continuous_at_threshold():
    c = CASES[0]
    base = replace(MANUAL_MODEL, k=1e7, eta_eq=1e6)  # almost no rate amplification
    peak = damage_at(base, c, 0).eps_peak
    below = damage_at(replace(base, eps_tilde=peak - 1e-9), c, 0).D
    above = damage_at(replace(base, eps_tilde=min(peak + 1e-9, 0.4)), c, 0).D
    assert below < 1e-8 and above == 0.0


def test_amplification_at_most_double():
    p = replace(MANUAL_MODEL, eta_eq=1e8, k=1e3)
    s = damage_at(p, CASES[5], 0)
    assert 1.0 < s.eps_peak / CASES[5].eps_max <= 2.0


# -- alteration ---------------------------------------------------------------------

def test_identity_alteration():
    assert to_alteration(DamageState(0, 0.1, 0.0, 0.0)).is_identity


def test_residual_stretch():
    a = to_alteration(DamageState(0, 0.5, 0.21, 0.0))
    assert a.length_scale == pytest.approx(1.21)
    assert a.diameter_scale == pytest.approx(1 / 1.1)


def test_full_damage_boundary():
    a = to_alteration(DamageState(0, 1.0, 0.0, 1.0), 20.0)
    assert a.na_left_shift == 20.0 and a.reversal_scale == 0.0


def test_negative_delta_v_rejected():
    with pytest.raises(ValueError):
        to_alteration(DamageState(0, 1.0, 0.0, 0.5), -1.0)


@given(st.floats(0, 5), st.floats(0, 1), st.floats(0, 40))
def test_volume_conservation(residual, D, dv):
    a = to_alteration(DamageState(0, 1.0, residual, D), dv)
    assert a.length_scale * a.diameter_scale**2 == pytest.approx(1.0, rel=1e-14)
    assert a.na_left_shift == pytest.approx(dv * D)
    assert a.reversal_scale == pytest.approx(1 - D)
