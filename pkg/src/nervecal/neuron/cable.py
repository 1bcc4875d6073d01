"""Hodgkin-Huxley nodes coupled through passive myelinated internodes."""

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import EmptyWindow, NumericalDivergence
from . import _kernel
from .geometry import NODE

V_REST = -65.0

# 2x the rheobase of a healthy 3 um axon for a 3 ms pulse at default cable
# settings; see rheobase() and tests/test_neuron.py.
DEFAULT_STIM_AMPLITUDE = 1926.0


@dataclass(frozen=True)
class CableParams:
    """Electrical constants shared by every compartment.

    Conductances and capacitance are per unit membrane area at the nodes
    (mS/cm2, uF/cm2). Internodes are passive: their capacitance and leak are
    the nodal values divided by ``1 + myelin_attenuation * n_layers``.

    ``e_leak=None`` balances the nodal leak so that ``v_rest`` is an exact
    equilibrium of the healthy node. The internodal leak reverses at
    ``v_rest``.
    """

    axial_resistivity: float = 70.0
    membrane_capacitance_node: float = 1.0
    g_na: float = 1200.0
    g_k: float = 360.0
    g_leak: float = 3.0
    e_na: float = 50.0
    e_k: float = -77.0
    e_leak: float | None = None
    v_rest: float = V_REST
    myelin_attenuation: float = 1.0

    def __post_init__(self):
        for name in ("axial_resistivity", "membrane_capacitance_node", "g_na", "g_k",
                     "g_leak", "myelin_attenuation"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    def myelin_divisor(self, n_layers):
        return 1.0 + self.myelin_attenuation * n_layers

    @property
    def resolved_e_leak(self):
        if self.e_leak is not None:
            return self.e_leak
        v = self.v_rest
        m, h, n = _kernel.steady_gates(v, 0.0)
        i_ion = self.g_na * m**3 * h * (v - self.e_na) + self.g_k * n**4 * (v - self.e_k)
        return v + i_ion / self.g_leak


@dataclass(frozen=True)
class ElectroAlteration:
    """Damage-induced changes applied uniformly to every compartment."""

    length_scale: float = 1.0
    diameter_scale: float = 1.0
    na_left_shift: float = 0.0
    reversal_scale: float = 1.0

    @property
    def is_identity(self):
        return (self.length_scale == 1.0 and self.diameter_scale == 1.0
                and self.na_left_shift == 0.0 and self.reversal_scale == 1.0)


IDENTITY = ElectroAlteration()


@dataclass(frozen=True)
class Trigger:
    onset: float
    duration: float
    amplitude: float


@dataclass(frozen=True)
class StimulusProtocol:
    """Current pulses injected into the first node.

    Amplitudes are uA/cm2 of the healthy first-node membrane, so the injected
    current does not change when the axon is deformed.
    """

    triggers: tuple
    total_time: float
    measurement_window_start: float

    def __post_init__(self):
        trig = tuple(self.triggers)
        object.__setattr__(self, "triggers", trig)
        for a, b in zip(trig, trig[1:]):
            if b.onset < a.onset:
                raise ValueError("triggers must be sorted by onset")
            if a.onset + a.duration > b.onset:
                raise ValueError("triggers overlap")
        if trig and self.measurement_window_start < trig[-1].onset:
            raise ValueError("measurement window must start at or after the last trigger")
        if not 0 <= self.measurement_window_start < self.total_time:
            raise ValueError("measurement window outside the simulated time")

    def scaled(self, amplitude):
        """Same timing with every trigger at ``amplitude``."""
        trig = tuple(replace(t, amplitude=amplitude) for t in self.triggers)
        return replace(self, triggers=trig)


def three_trigger_protocol(amplitude=DEFAULT_STIM_AMPLITUDE):
    """Two conditioning pulses, then the recorded one at 150 ms."""
    trig = tuple(Trigger(t, 3.0, amplitude) for t in (20.0, 33.0, 150.0))
    return StimulusProtocol(trig, total_time=300.0, measurement_window_start=150.0)


def single_trigger_protocol(amplitude=DEFAULT_STIM_AMPLITUDE):
    return StimulusProtocol((Trigger(20.0, 3.0, amplitude),), total_time=100.0,
                            measurement_window_start=20.0)


@dataclass(frozen=True, eq=False)
class VoltageTrace:
    dt: float
    samples: np.ndarray
    v_rest: float = V_REST
    # whole-chain diagnostics from the run that produced the trace
    max_deviation: float = field(default=float("nan"), compare=False)
    gate_range: tuple = field(default=(float("nan"), float("nan")), compare=False)

    @property
    def time(self):
        return np.arange(len(self.samples)) * self.dt

    @property
    def total_time(self):
        return len(self.samples) * self.dt

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_ms", "v_mV"])
            for t, v in zip(self.time, self.samples):
                w.writerow([repr(float(t)), repr(float(v))])


def n_steps_for(total_time, dt):
    steps = total_time / dt
    n = int(round(steps))
    if abs(steps - n) > 1e-6 * max(1.0, steps):
        raise ValueError(f"total time {total_time} ms is not a multiple of dt={dt} ms")
    return n


def _assemble(chain, params, alteration):
    """Per-compartment electrical arrays for the kernel (uF, mS, mV)."""
    geom = chain.geometry
    is_node = chain.kind == NODE
    length_cm = chain.length * alteration.length_scale * 1e-4
    diam_cm = chain.diameter * alteration.diameter_scale * 1e-4
    area = math.pi * diam_cm * length_cm

    div = params.myelin_divisor(geom.n_myelin_layers)
    cap = np.where(is_node, params.membrane_capacitance_node * area,
                   params.membrane_capacitance_node * area / div)
    g_pas = np.where(is_node, params.g_leak * area, params.g_leak * area / div)
    e_pas = np.where(is_node, params.resolved_e_leak, params.v_rest)

    r_axial = params.axial_resistivity * length_cm / (math.pi * diam_cm**2 / 4.0)  # ohm
    g_axial = 1e3 / (0.5 * r_axial[:-1] + 0.5 * r_axial[1:])  # mS

    nodes = np.flatnonzero(is_node)
    g_na = params.g_na * area[nodes]
    g_k = params.g_k * area[nodes]

    s = alteration.reversal_scale
    e_na = params.v_rest + s * (params.e_na - params.v_rest)
    e_k = params.v_rest + s * (params.e_k - params.v_rest)
    return cap, g_pas, e_pas, g_axial, nodes, g_na, g_k, e_na, e_k


def simulate(chain, params, protocol, alteration=IDENTITY, dt=0.01):
    """Membrane potential at the measurement compartment.

    Raises NumericalDivergence if any compartment goes non-finite.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    cap, g_pas, e_pas, g_axial, nodes, g_na, g_k, e_na, e_k = _assemble(chain, params, alteration)
    n_steps = n_steps_for(protocol.total_time, dt)

    first = int(nodes[0])
    healthy_area = math.pi * chain.diameter[first] * chain.length[first] * 1e-8
    on = np.array([t.onset for t in protocol.triggers], dtype=float)
    off = np.array([t.onset + t.duration for t in protocol.triggers], dtype=float)
    cur = np.array([t.amplitude * healthy_area for t in protocol.triggers], dtype=float)

    trace, diag, bad = _kernel.integrate(
        cap, g_pas, e_pas, g_axial, nodes, g_na, g_k, e_na, e_k,
        float(alteration.na_left_shift), float(params.v_rest), float(dt), n_steps,
        on, off, cur, first, int(chain.measurement_index), float(params.v_rest))
    if bad >= 0:
        raise NumericalDivergence(f"non-finite membrane potential at t={bad * dt:g} ms", step=int(bad))
    return VoltageTrace(dt=float(dt), samples=trace, v_rest=params.v_rest,
                        max_deviation=float(diag[0]), gate_range=(float(diag[1]), float(diag[2])))


def peak_amplitude(trace, window_start):
    """Largest excursion above rest, ``max(V) - V_rest``, from ``window_start`` on."""
    start = int(math.ceil(window_start / trace.dt - 1e-9))
    if start < 0 or start >= len(trace.samples):
        raise EmptyWindow(f"window starting at {window_start} ms holds no samples")
    return float(np.max(trace.samples[start:]) - trace.v_rest)


def arrival_time(trace, threshold=-20.0, after=0.0):
    """First time (ms) at or after ``after`` the trace reaches ``threshold``.

    Linear interpolation between samples; ``None`` if never reached.
    """
    v = trace.samples
    start = int(math.ceil(after / trace.dt - 1e-9))
    idx = np.flatnonzero(v[start:] >= threshold)
    if not len(idx):
        return None
    i = start + int(idx[0])
    if i == 0:
        return 0.0
    v0, v1 = v[i - 1], v[i]
    return trace.dt * (i - 1 + (threshold - v0) / (v1 - v0))


def fires(trace, window_start, min_amplitude=50.0):
    return peak_amplitude(trace, window_start) >= min_amplitude


def rheobase(chain, params=CableParams(), duration=3.0, dt=0.01, onset=20.0,
             hi=1e5, rel_tol=1e-3):
    """Bisect the smallest pulse amplitude (uA/cm2) that drives an AP to the electrode."""
    base = StimulusProtocol((Trigger(onset, duration, 0.0),), total_time=onset + 60.0,
                            measurement_window_start=onset)

    def ok(amp):
        return fires(simulate(chain, params, base.scaled(amp), dt=dt), onset)

    if not ok(hi):
        raise ValueError("no action potential even at the upper amplitude bound")
    lo = 0.0
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi
