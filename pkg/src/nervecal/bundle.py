"""Representative fibre population and compound action potential scaling."""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, ValidationError
from .neuron.cable import VoltageTrace
from .neuron.geometry import build_axon, min_pairs_reaching
from .rng import substream


@dataclass(frozen=True)
class DiameterBin:
    low: float
    high: float
    count: int


@dataclass(frozen=True)
class DiameterDistribution:
    bins: tuple

    def __post_init__(self):
        bins = tuple(sorted(self.bins, key=lambda b: b.low))
        object.__setattr__(self, "bins", bins)
        for b in bins:
            if b.count < 0:
                raise ValueError("bin counts must be non-negative")
            if not b.low < b.high:
                raise ValueError(f"empty bin [{b.low}, {b.high})")
        for a, b in zip(bins, bins[1:]):
            if b.low < a.high:
                raise ValueError(f"bins [{a.low}, {a.high}) and [{b.low}, {b.high}) overlap")

    @property
    def counts(self):
        return [b.count for b in self.bins]

    @property
    def total(self):
        return sum(self.counts)


# Guinea-pig spinal cord histogram reduced to 27 axons, two in the 5-6 um bin.
DEFAULT_DISTRIBUTION = DiameterDistribution((
    DiameterBin(0.7, 2.5, 6),
    DiameterBin(2.5, 3.0, 5),
    DiameterBin(3.0, 4.0, 10),
    DiameterBin(4.0, 5.0, 4),
    DiameterBin(5.0, 6.0, 2),
))


def load_distribution(path):
    """Read ``low,high,count`` rows."""
    bins = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["low", "high", "count"]:
            raise ValidationError(f"{path}: expected header 'low,high,count'", row=1)
        for lineno, row in enumerate(reader, start=2):
            try:
                bins.append(DiameterBin(float(row["low"]), float(row["high"]), int(row["count"])))
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"{path}: bad bin ({exc})", row=lineno) from None
    return DiameterDistribution(tuple(bins))


@dataclass(frozen=True)
class Bundle:
    axons: tuple
    seed: int

    @property
    def diameters(self):
        return np.array([a.diameter for a in self.axons])

    def __len__(self):
        return len(self.axons)


def generate_bundle(dist=DEFAULT_DISTRIBUTION, seed=0, n_pairs=100, measurement_position=10.0):
    """Draw one diameter per axon, uniform within its bin.

    Axon ``i`` (counted across bins in order) uses its own random substream,
    so the draw does not depend on how many axons precede it in other bins.
    Axons too short to reach the electrode get the minimum pair count that
    does.
    """
    axons = []
    idx = 0
    for b in dist.bins:
        for _ in range(b.count):
            rng = substream(seed, "bundle", idx)
            d = float(rng.uniform(b.low, b.high))
            if d >= b.high:  # uniform() may round up to the open edge
                d = float(np.nextafter(b.high, b.low))
            pairs = max(n_pairs, min_pairs_reaching(d, measurement_position))
            axons.append(build_axon(d, pairs, measurement_position))
            idx += 1
    return Bundle(tuple(axons), int(seed))


def bin_counts(bundle, dist=DEFAULT_DISTRIBUTION):
    d = bundle.diameters
    return [int(np.count_nonzero((d >= b.low) & (d < b.high))) for b in dist.bins]


def cap_aggregate(traces, diameters):
    """Diameter-weighted mean of the axon potentials, sample by sample.

    Each axon's membrane conductance near the electrode scales with its
    calibre, so the parallel-resistor combination weights potential ``V_i``
    by ``d_i / sum(d)``.
    """
    if len(traces) != len(diameters):
        raise LengthMismatch(f"{len(traces)} traces but {len(diameters)} diameters")
    if not traces:
        raise LengthMismatch("no traces to aggregate")
    d = np.asarray(diameters, dtype=float)
    if np.any(d <= 0):
        raise ValueError("diameters must be positive")
    n = len(traces[0].samples)
    dt = traces[0].dt
    for tr in traces[1:]:
        if len(tr.samples) != n or tr.dt != dt:
            raise LengthMismatch("traces differ in length or time step")
    total = d.sum()
    acc = np.zeros(n)
    for tr, w in zip(traces, d):
        acc += tr.samples * w
    return VoltageTrace(dt=dt, samples=acc / total, v_rest=traces[0].v_rest)


MANIFEST_HEADER = ["index", "diameter", "internode_length", "n_myelin_layers", "n_pairs", "seed"]


def write_manifest(bundle, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MANIFEST_HEADER)
        for i, a in enumerate(bundle.axons):
            w.writerow([i, repr(a.diameter), repr(a.internode_length), a.n_myelin_layers,
                        a.n_pairs, bundle.seed])


def read_manifest(path, measurement_position=10.0):
    axons = []
    seeds = set()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != MANIFEST_HEADER:
            raise ValidationError(f"{path}: expected header {','.join(MANIFEST_HEADER)}", row=1)
        for lineno, row in enumerate(reader, start=2):
            try:
                axon = build_axon(float(row["diameter"]), int(row["n_pairs"]), measurement_position)
            except ValueError as exc:
                raise ValidationError(f"{path}: {exc}", row=lineno) from None
            if axon.n_myelin_layers != int(row["n_myelin_layers"]):
                raise ValidationError(f"{path}: myelin layers disagree with diameter",
                                      row=lineno, column="n_myelin_layers")
            axons.append(axon)
            seeds.add(int(row["seed"]))
    if len(seeds) > 1:
        raise ValidationError(f"{path}: mixed seeds in one manifest")
    return Bundle(tuple(axons), seeds.pop() if seeds else 0)
