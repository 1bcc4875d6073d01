"""Myelinated axon geometry and compartment discretization.

Lengths are in micrometres except ``measurement_position``, which is in
millimetres from the proximal end.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from ..errors import AxonTooShort, DiameterOutOfRange

NODE_LENGTH = 1.0
MIN_INTERNODE_LENGTH = 70.0
INTERNODE_PER_DIAMETER = 100.0
LAYERS_PER_DIAMETER = 12.0
DIAMETER_RANGE = (0.7, 6.0)

NODE = 1
INTERNODE = 0


@dataclass(frozen=True)
class AxonGeometry:
    diameter: float
    n_pairs: int
    internode_length: float
    node_length: float
    n_myelin_layers: int
    measurement_position: float

    @property
    def total_length(self):
        """Axon length in micrometres."""
        return self.n_pairs * (self.node_length + self.internode_length)


def internode_length_for(diameter):
    return max(INTERNODE_PER_DIAMETER * diameter, MIN_INTERNODE_LENGTH)


def myelin_layers_for(diameter):
    return max(1, int(round(LAYERS_PER_DIAMETER * diameter)))


def min_pairs_reaching(diameter, measurement_position, node_length=NODE_LENGTH):
    """Smallest node/internode pair count whose length reaches the electrode."""
    pair = node_length + internode_length_for(diameter)
    return max(1, math.ceil(measurement_position * 1000.0 / pair - 1e-12))


def build_axon(diameter, n_pairs=100, measurement_position=10.0, node_length=NODE_LENGTH):
    lo, hi = DIAMETER_RANGE
    if not lo <= diameter <= hi:
        raise DiameterOutOfRange(f"diameter {diameter} um outside [{lo}, {hi}]")
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    geom = AxonGeometry(
        diameter=float(diameter),
        n_pairs=int(n_pairs),
        internode_length=internode_length_for(diameter),
        node_length=float(node_length),
        n_myelin_layers=myelin_layers_for(diameter),
        measurement_position=float(measurement_position),
    )
    if geom.total_length < measurement_position * 1000.0:
        raise AxonTooShort(
            f"{n_pairs} pairs of a {diameter} um axon span {geom.total_length:.0f} um, "
            f"short of the electrode at {measurement_position} mm"
        )
    return geom


@dataclass(frozen=True, eq=False)
class CompartmentChain:
    """Compartments ordered proximal to distal; node first in every pair."""

    geometry: AxonGeometry
    kind: np.ndarray
    length: np.ndarray
    diameter: np.ndarray
    measurement_index: int

    @property
    def n_compartments(self):
        return len(self.kind)

    @property
    def node_index(self):
        return np.flatnonzero(self.kind == NODE)

    @property
    def centers(self):
        return np.cumsum(self.length) - 0.5 * self.length


def discretize(geometry, max_dx=25.0):
    if max_dx <= 0:
        raise ValueError("max_dx must be positive")
    n_sub = math.ceil(geometry.internode_length / max_dx - 1e-12)
    seg = geometry.internode_length / n_sub
    per_pair = 1 + n_sub
    n = geometry.n_pairs * per_pair

    kind = np.full(n, INTERNODE, dtype=np.int8)
    kind[::per_pair] = NODE
    length = np.where(kind == NODE, geometry.node_length, seg).astype(float)
    diameter = np.full(n, geometry.diameter)

    centers = np.cumsum(length) - 0.5 * length
    target = geometry.measurement_position * 1000.0
    meas = int(np.argmin(np.abs(centers - target)))
    return CompartmentChain(geometry, kind, length, diameter, meas)


def write_chain_csv(chain, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "kind", "length_um", "diameter_um", "center_um", "is_measurement"])
        for i, (k, ln, d, c) in enumerate(zip(chain.kind, chain.length, chain.diameter, chain.centers)):
            w.writerow([i, "node" if k == NODE else "internode", repr(float(ln)), repr(float(d)),
                        repr(float(c)), int(i == chain.measurement_index)])
