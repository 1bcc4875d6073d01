"""Mechanical damage surrogate: loading case + relaxation time -> alteration.

The six calibratable constants keep their mechanical roles:

* the dashpot ratio ``eta_eq / k`` (seconds) amplifies the macroscopic strain
  at high strain rates, at most twofold;
* strain above the microscopic threshold ``eps_tilde`` raised to ``gamma``
  and weighted by ``E / k`` drives the initial damage;
* during relaxation damage and residual strain decay with the Kelvin-Voigt
  time constant ``eta_eq / E`` towards the unrecoverable fraction ``kappa``.
"""

import math
from dataclasses import astuple, dataclass, fields

import numpy as np

from .errors import ParamsOutOfBox
from .neuron.cable import ElectroAlteration

TIME_POINTS = (0, 5, 10, 15, 20, 25, 30)  # minutes after stretch
DEFAULT_DELTA_V_MAX = 20.0  # mV of sodium left-shift at full damage

PARAM_NAMES = ("E", "k", "eta_eq", "eps_tilde", "kappa", "gamma")
SEARCH_BOX = {
    "E": (1e3, 1e6),
    "k": (1e3, 1e7),
    "eta_eq": (1e6, 1e8),
    "eps_tilde": (0.0, 0.4),
    "kappa": (0.0, 1.0),
    "gamma": (1.0, 4.0),
}
ETA_EQ_REDUCED_UPPER = 1e7
LOG_SCALED = ("E", "k", "eta_eq")


@dataclass(frozen=True)
class ModelParams:
    E: float
    k: float
    eta_eq: float
    eps_tilde: float
    kappa: float
    gamma: float

    def as_array(self):
        return np.array(astuple(self), dtype=float)

    @classmethod
    def from_array(cls, values):
        return cls(*(float(v) for v in values))

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def check_box(self, eta_upper=SEARCH_BOX["eta_eq"][1]):
        for name in PARAM_NAMES:
            lo, hi = SEARCH_BOX[name]
            if name == "eta_eq":
                hi = eta_upper
            v = getattr(self, name)
            if not lo <= v <= hi:
                raise ParamsOutOfBox(f"{name}={v!r} outside [{lo:g}, {hi:g}]")
        return self


# Published best configurations, used as presets and regression anchors.
MANUAL_MODEL = ModelParams(E=1.66e5, k=1.85e5, eta_eq=1.85e7, eps_tilde=0.100, kappa=0.500, gamma=2.00)
DE_MODEL_1 = ModelParams(E=5.62e5, k=2.80e5, eta_eq=4.42e7, eps_tilde=0.142, kappa=0.690, gamma=1.00)
DE_MODEL_2 = ModelParams(E=5.71e5, k=2.17e5, eta_eq=1.00e6, eps_tilde=0.157, kappa=0.242, gamma=1.08)
BUNDLE_CALIBRATED = ModelParams(E=4.91e5, k=9.69e5, eta_eq=5.56e6, eps_tilde=5.90e-2, kappa=1.56e-2, gamma=2.16)
PRESETS = {
    "manual": MANUAL_MODEL,
    "de1": DE_MODEL_1,
    "de2": DE_MODEL_2,
    "bundle": BUNDLE_CALIBRATED,
}


def search_bounds(eta_upper=SEARCH_BOX["eta_eq"][1]):
    """Optimizer box: log10 for E, k, eta_eq; linear for the rest."""
    lo, hi = [], []
    for name in PARAM_NAMES:
        a, b = SEARCH_BOX[name]
        if name == "eta_eq":
            b = eta_upper
        if name in LOG_SCALED:
            a, b = math.log10(a), math.log10(b)
        lo.append(a)
        hi.append(b)
    return np.array(lo), np.array(hi)


def params_from_vector(x):
    vals = [10.0 ** v if name in LOG_SCALED else v for name, v in zip(PARAM_NAMES, x)]
    return ModelParams.from_array(vals)


def vector_from_params(params):
    return np.array([math.log10(getattr(params, n)) if n in LOG_SCALED else getattr(params, n)
                     for n in PARAM_NAMES])


@dataclass(frozen=True)
class LoadingCase:
    id: int
    label: str
    rate_band: tuple
    strain_rate: float
    eps_max: float


SLOW_BAND = (0.006, 0.008)
FAST_BAND = (355.0, 519.0)


def catalog_cases(slow_rate=None, fast_rate=None):
    """The six tensile tests, ordered slow-mild ... fast-severe.

    Rates default to the band midpoints (0.007 and 437 1/s).
    """
    slow = 0.5 * sum(SLOW_BAND) if slow_rate is None else slow_rate
    fast = 0.5 * sum(FAST_BAND) if fast_rate is None else fast_rate
    cases = []
    for i, (speed, band, rate) in enumerate((("slow", SLOW_BAND, slow), ("fast", FAST_BAND, fast))):
        for j, (sev, eps) in enumerate((("mild", 0.25), ("moderate", 0.50), ("severe", 1.00))):
            cases.append(LoadingCase(3 * i + j + 1, f"{speed}-{sev}", band, rate, eps))
    return cases


@dataclass(frozen=True)
class DamageState:
    t_relax: float
    eps_peak: float
    residual_strain: float
    D: float


def peak_strain(params, case):
    r = case.strain_rate * params.eta_eq / params.k
    return case.eps_max * (1.0 + r / (1.0 + r))


def relaxation_factor(params, t_relax):
    tau = params.eta_eq / params.E  # s
    return params.kappa + (1.0 - params.kappa) * math.exp(-60.0 * t_relax / tau)


def damage_at(params, case, t_relax, eta_upper=SEARCH_BOX["eta_eq"][1]):
    params.check_box(eta_upper)
    if t_relax < 0:
        raise ValueError("relaxation time must be non-negative")
    eps_peak = peak_strain(params, case)
    over = max(eps_peak - params.eps_tilde, 0.0)
    d0 = -math.expm1(-(params.E / params.k) * over**params.gamma)
    phi = relaxation_factor(params, t_relax)
    return DamageState(t_relax=float(t_relax), eps_peak=eps_peak,
                       residual_strain=over * phi, D=min(max(d0 * phi, 0.0), 1.0))


def to_alteration(state, delta_v_max=DEFAULT_DELTA_V_MAX):
    if delta_v_max < 0:
        raise ValueError("delta_v_max must be non-negative")
    stretch = 1.0 + state.residual_strain
    return ElectroAlteration(
        length_scale=stretch,
        diameter_scale=stretch**-0.5,
        na_left_shift=delta_v_max * state.D,
        reversal_scale=1.0 - state.D,
    )
