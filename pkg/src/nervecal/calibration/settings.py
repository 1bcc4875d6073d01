import hashlib
import json
from dataclasses import asdict, dataclass, field

from ..bundle import DEFAULT_DISTRIBUTION, DiameterDistribution
from ..damage import DEFAULT_DELTA_V_MAX, SEARCH_BOX, catalog_cases
from ..neuron.cable import DEFAULT_STIM_AMPLITUDE, CableParams

MODES = ("single_axon", "bundle")


@dataclass(frozen=True)
class SimSettings:
    """Everything besides the six model parameters that shapes a %CAP matrix."""

    dt: float = 0.01
    max_dx: float = 25.0
    cable: CableParams = field(default_factory=CableParams)
    delta_v_max: float = DEFAULT_DELTA_V_MAX
    stim_amplitude: float = DEFAULT_STIM_AMPLITUDE
    axon_diameter: float = 3.0
    n_pairs: int = 100
    measurement_position: float = 10.0
    bundle_seed: int = 0
    distribution: DiameterDistribution = DEFAULT_DISTRIBUTION
    slow_rate: float | None = None
    fast_rate: float | None = None
    eta_upper: float = SEARCH_BOX["eta_eq"][1]

    def key(self):
        blob = json.dumps(asdict(self), sort_keys=True, default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()

    def cases(self):
        return catalog_cases(self.slow_rate, self.fast_rate)
