"""Compartmental myelinated-axon simulation."""

from .cable import (
    DEFAULT_STIM_AMPLITUDE,
    IDENTITY,
    V_REST,
    CableParams,
    ElectroAlteration,
    StimulusProtocol,
    Trigger,
    VoltageTrace,
    arrival_time,
    fires,
    peak_amplitude,
    rheobase,
    simulate,
    single_trigger_protocol,
    three_trigger_protocol,
)
from .geometry import (
    AxonGeometry,
    CompartmentChain,
    build_axon,
    discretize,
    min_pairs_reaching,
    write_chain_csv,
)

__all__ = [
    "AxonGeometry", "CableParams", "CompartmentChain", "DEFAULT_STIM_AMPLITUDE",
    "ElectroAlteration", "IDENTITY", "StimulusProtocol", "Trigger", "V_REST",
    "VoltageTrace", "arrival_time", "build_axon", "discretize", "fires",
    "min_pairs_reaching", "peak_amplitude", "rheobase", "simulate",
    "single_trigger_protocol", "three_trigger_protocol", "write_chain_csv",
]
