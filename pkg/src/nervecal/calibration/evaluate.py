"""Simulated %CAP matrices, fitness and parallel population evaluation.

The leaf work unit is one axon simulated under one alteration. Units are
pure, so they run in any order on any worker; results land in slots keyed
by unit index and every reduction (CAP aggregation, fitness sum) walks those
slots in a fixed order. Worker count therefore never changes a result.
"""

import hashlib
import logging
import math
import threading
from dataclasses import dataclass

import numpy as np

from ..bundle import cap_aggregate, generate_bundle
from ..damage import TIME_POINTS, damage_at, to_alteration
from ..errors import NervecalError, NumericalDivergence
from ..neuron.cable import (IDENTITY, VoltageTrace, peak_amplitude, simulate,
                            single_trigger_protocol, three_trigger_protocol)
from ..neuron.geometry import build_axon, discretize
from ..parallel import Runner
from .matrix import SHAPE, CapMatrix, failed_report, fitness_from_matrix, percent_cap
from .settings import MODES, SimSettings

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Target:
    """The axon or bundle a mode simulates, already discretized."""

    mode: str
    chains: tuple
    diameters: np.ndarray
    protocol: object

    def digest(self):
        h = hashlib.sha256(self.mode.encode())
        for ch in self.chains:
            h.update(repr(ch.geometry).encode())
        return h.hexdigest()


def build_target(mode, settings=SimSettings(), bundle=None):
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {MODES}")
    if mode == "single_axon":
        geoms = [build_axon(settings.axon_diameter, settings.n_pairs, settings.measurement_position)]
        protocol = single_trigger_protocol(settings.stim_amplitude)
    else:
        if bundle is None:
            bundle = generate_bundle(settings.distribution, settings.bundle_seed,
                                     settings.n_pairs, settings.measurement_position)
        geoms = list(bundle.axons)
        protocol = three_trigger_protocol(settings.stim_amplitude)
    chains = tuple(discretize(g, settings.max_dx) for g in geoms)
    return Target(mode, chains, np.array([g.diameter for g in geoms]), protocol)


# -- work units ---------------------------------------------------------------

def _window_index(protocol, dt):
    return int(math.ceil(protocol.measurement_window_start / dt - 1e-9))


def run_unit(task):
    """Simulate one axon; returns ``("ok", value)`` or ``("err", message)``.

    ``task = (chain, cable, protocol, alteration, dt, want)``; ``want`` is
    ``"amp"`` for the peak amplitude in the measurement window, ``"window"``
    for the samples from the window start on, ``"trace"`` for all samples.
    """
    chain, cable, protocol, alteration, dt, want = task
    try:
        tr = simulate(chain, cable, protocol, alteration, dt=dt)
    except (NervecalError, ValueError, ArithmeticError) as exc:
        return ("err", f"{type(exc).__name__}: {exc}")
    if want == "amp":
        return ("ok", peak_amplitude(tr, protocol.measurement_window_start))
    if want == "window":
        return ("ok", tr.samples[_window_index(protocol, dt):].copy())
    return ("ok", tr.samples)


# -- healthy baselines --------------------------------------------------------

class BaselineCache:
    """Healthy amplitudes keyed by (mode, geometry digest, settings digest).

    ``simulations`` counts the axon simulations run to fill the cache.
    """

    def __init__(self):
        self._store = {}
        self._lock = threading.Lock()
        self.simulations = 0

    def get(self, key):
        with self._lock:
            return self._store.get(key)

    def put(self, key, value, n_sims):
        with self._lock:
            self._store[key] = value
            self.simulations += n_sims

    def clear(self):
        with self._lock:
            self._store.clear()
            self.simulations = 0

    def __len__(self):
        return len(self._store)


BASELINES = BaselineCache()


def _cell_amplitudes(target, settings, alterations, runner, want="amp"):
    """Amplitude (or CAP trace) for each alteration, in input order.

    Identical alterations are simulated once. Raises ``CellFailure`` carrying
    the position of the first failing alteration.
    """
    keys = {}
    order = []
    for a in alterations:
        if a not in keys:
            keys[a] = len(order)
            order.append(a)

    n_ax = len(target.chains)
    single = target.mode == "single_axon"
    unit_want = want if single else ("window" if want == "amp" else "trace")
    tasks = [(ch, settings.cable, target.protocol, a, settings.dt, unit_want)
             for a in order for ch in target.chains]

    out = [None] * len(order)
    errors = {}
    pending = {}

    def reduce_cell(k, samples):
        if single:
            return samples[0]
        cap = cap_aggregate([VoltageTrace(settings.dt, s, settings.cable.v_rest) for s in samples],
                            target.diameters)
        if want == "amp":
            return float(np.max(cap.samples) - cap.v_rest)
        return cap

    def on_result(i, res):
        k, ax = divmod(i, n_ax)
        status, value = res
        if status == "err":
            errors.setdefault(k, (ax, value))
            pending.pop(k, None)
            return
        if k in errors:
            return
        slot = pending.setdefault(k, [None] * n_ax)
        slot[ax] = value
        if all(v is not None for v in slot):
            out[k] = reduce_cell(k, slot)
            del pending[k]

    runner = runner or Runner(1)
    runner.run(run_unit, tasks, on_result)
    if errors:
        k = min(errors)
        ax, msg = errors[k]
        raise CellFailure(order[k], ax, msg)
    return [out[keys[a]] for a in alterations]


class CellFailure(NumericalDivergence):
    def __init__(self, alteration, axon, message):
        super().__init__(message)
        self.alteration = alteration
        self.axon = axon


def healthy_baseline(mode, target=None, settings=SimSettings(), cache=BASELINES, runner=None):
    """Undamaged peak amplitude (mV) of the axon, or of the bundle CAP."""
    target = target or build_target(mode, settings)
    key = (mode, target.digest(), settings.key())
    hit = cache.get(key)
    if hit is not None:
        return hit
    amp = _cell_amplitudes(target, settings, [IDENTITY], runner)[0]
    cache.put(key, amp, len(target.chains))
    return amp


# -- cells, matrices, fitness -------------------------------------------------

def alteration_grid(params, settings=SimSettings()):
    """6 x 7 nested list of alterations for every (case, time) cell."""
    params.check_box(settings.eta_upper)
    return [[to_alteration(damage_at(params, case, t, settings.eta_upper), settings.delta_v_max)
             for t in TIME_POINTS] for case in settings.cases()]


def percent_for_alteration(alteration, mode, target=None, settings=SimSettings(),
                           cache=BASELINES, runner=None):
    """%CAP of one alteration against the healthy baseline."""
    target = target or build_target(mode, settings)
    healthy = healthy_baseline(mode, target, settings, cache, runner)
    if alteration.is_identity:
        return percent_cap(healthy, healthy)
    amp = _cell_amplitudes(target, settings, [alteration], runner)[0]
    return percent_cap(amp, healthy)


def simulate_cell(params, case, t, mode, target=None, settings=SimSettings(), cache=BASELINES,
                  runner=None):
    params.check_box(settings.eta_upper)
    alt = to_alteration(damage_at(params, case, t, settings.eta_upper), settings.delta_v_max)
    try:
        return percent_for_alteration(alt, mode, target, settings, cache, runner)
    except NumericalDivergence as exc:
        raise exc.with_cell((case.id, t)) from exc


def simulate_population(candidates, mode, settings=SimSettings(), runner=None, target=None,
                        cache=BASELINES):
    """%CAP matrices for every candidate; a failing candidate yields its error string."""
    target = target or build_target(mode, settings)
    healthy = healthy_baseline(mode, target, settings, cache, runner)

    grids = []
    for p in candidates:
        try:
            grids.append(alteration_grid(p, settings))
        except (NervecalError, ValueError) as exc:
            grids.append(f"{type(exc).__name__}: {exc}")

    needed = {}
    for g in grids:
        if isinstance(g, str):
            continue
        for row in g:
            for a in row:
                if not a.is_identity:
                    needed.setdefault(a, None)
    alts = list(needed)

    amp_of = {}
    failed = {}
    if alts:
        try:
            amps = _cell_amplitudes(target, settings, alts, runner)
            amp_of = dict(zip(alts, amps))
        except CellFailure:
            # isolate the failures: rerun cell by cell so siblings still get results
            for a in alts:
                try:
                    amp_of[a] = _cell_amplitudes(target, settings, [a], runner)[0]
                except CellFailure as exc:
                    failed[a] = exc

    results = []
    cases = settings.cases()
    for g in grids:
        if isinstance(g, str):
            results.append(g)
            continue
        values = np.empty(SHAPE)
        err = None
        for i, row in enumerate(g):
            for j, a in enumerate(row):
                if a.is_identity:
                    values[i, j] = percent_cap(healthy, healthy)
                elif a in failed:
                    exc = failed[a]
                    err = err or (f"case {cases[i].id}, t={TIME_POINTS[j]} min, axon {exc.axon}: {exc}")
                else:
                    values[i, j] = percent_cap(amp_of[a], healthy)
        results.append(err if err else CapMatrix(values))
    return results


def cap_matrix(params, mode, settings=SimSettings(), runner=None, target=None, cache=BASELINES):
    res = simulate_population([params], mode, settings, runner, target, cache)[0]
    if isinstance(res, str):
        raise NumericalDivergence(res)
    return res


def evaluate_population(candidates, mode, reference, settings=SimSettings(), workers=1,
                        runner=None, target=None, cache=BASELINES):
    """Fitness reports in candidate order; failures do not abort siblings."""
    own = runner is None
    runner = runner or Runner(workers)
    try:
        sims = simulate_population(candidates, mode, settings, runner, target, cache)
    finally:
        if own:
            runner.close()
    reports = []
    for p, s in zip(candidates, sims):
        if isinstance(s, str):
            reports.append(failed_report(p, mode, s))
        else:
            reports.append(fitness_from_matrix(s, reference, p, mode))
    return reports


def fitness(params, mode, reference, settings=SimSettings(), runner=None, target=None,
            cache=BASELINES, sim_matrix=None):
    """Fitness of one parameter set; ``sim_matrix`` bypasses simulation."""
    if sim_matrix is not None:
        return fitness_from_matrix(sim_matrix, reference, params, mode)
    return evaluate_population([params], mode, reference, settings, runner=runner,
                               target=target, cache=cache)[0]


def cell_traces(params, mode, settings=SimSettings(), runner=None, target=None):
    """Measured trace (axon potential or bundle CAP) for every (case id, t) cell."""
    target = target or build_target(mode, settings)
    grid = alteration_grid(params, settings)
    flat = [a for row in grid for a in row]
    want = "trace"
    outs = _cell_amplitudes(target, settings, flat, runner, want=want)
    traces = {}
    for k, (case, t) in enumerate((c.id, t) for c in settings.cases() for t in TIME_POINTS):
        v = outs[k]
        traces[(case, t)] = v if isinstance(v, VoltageTrace) else VoltageTrace(settings.dt, v,
                                                                                settings.cable.v_rest)
    return traces
