"""Run configuration: one JSON file plus ``--set`` overrides."""

import copy
import json
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .bundle import DEFAULT_DISTRIBUTION, load_distribution
from .calibration.matrix import default_reference, load_reference
from .calibration.settings import MODES, SimSettings
from .damage import PARAM_NAMES, PRESETS, ModelParams
from .errors import ConfigError, NervecalError
from .neuron.cable import CableParams
from .optim import OptimizerConfig

WORKERS_ENV = "NERVECAL_WORKERS"
COMPARE_OBJECTIVES = ("model", "rastrigin", "sphere")

DEFAULTS = {
    "mode": "single_axon",
    "seed": 0,
    "workers": None,
    "out": "out",
    "reference": None,  # path; "default" selects the packaged approximate digitization
    "distribution": None,  # low,high,count CSV; None selects the built-in distribution
    "bundle_seed": None,  # None follows "seed"
    "params": None,  # dict of the six parameters, or a preset name
    "optimizer": {},
    "model": {},
    "compare": {"strategies": ["de_rand_1_exp", "lshade", "bfgs"], "runs": 25, "objective": "model"},
}

MODEL_KEYS = ("dt", "max_dx", "delta_v_max", "stim_amplitude", "axon_diameter", "n_pairs",
              "measurement_position", "slow_rate", "fast_rate", "eta_upper")


def _merge(base, extra):
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_raw(path=None):
    if path is None:
        return copy.deepcopy(DEFAULTS)
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: top level must be a JSON object")
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"{p}: unknown keys {sorted(unknown)}")
    return _merge(DEFAULTS, data)


def apply_override(raw, assignment):
    """Apply ``dotted.key=value``; the value is parsed as JSON, else kept as text."""
    if "=" not in assignment:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    key, text = assignment.split("=", 1)
    parts = key.strip().split(".")
    if not all(parts) or parts[0] not in DEFAULTS:
        raise ConfigError(f"--set: unknown key {key!r}")
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    node = raw
    for part in parts[:-1]:
        nxt = node.get(part)
        if nxt is None:
            nxt = node[part] = {}
        if not isinstance(nxt, dict):
            raise ConfigError(f"--set: {part!r} in {key!r} is not a section")
        node = nxt
    node[parts[-1]] = value
    return raw


@dataclass(frozen=True)
class RunConfig:
    mode: str
    seed: int
    workers: int
    out: Path
    settings: SimSettings
    optimizer: OptimizerConfig
    reference_path: str | None
    distribution_path: str | None
    params: ModelParams | None
    compare_strategies: tuple
    compare_runs: int
    compare_objective: str
    raw: dict

    def reference(self):
        if self.reference_path in (None, "default"):
            return default_reference()
        return load_reference(self.reference_path)

    def with_seed(self, seed):
        return replace(self, seed=seed, optimizer=replace(self.optimizer, seed=seed))


def _resolve_workers(value):
    if value is None:
        env = os.environ.get(WORKERS_ENV)
        if env is None:
            return 1
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV}={env!r} is not an integer") from None
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"workers must be an integer >= 1, got {value!r}")
    return value


def _params(value):
    if value is None:
        return None
    if isinstance(value, str):
        if value not in PRESETS:
            raise ConfigError(f"unknown preset {value!r}; choose from {sorted(PRESETS)}")
        return PRESETS[value]
    if not isinstance(value, dict) or set(value) != set(PARAM_NAMES):
        raise ConfigError(f"params must name exactly {', '.join(PARAM_NAMES)}")
    try:
        return ModelParams(**{k: float(v) for k, v in value.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"params: {exc}") from None


def _checked_path(value, what):
    if value is None or value == "default":
        return value
    if not Path(value).is_file():
        raise ConfigError(f"{what} file not found: {value}")
    return str(value)


def build(raw):
    """Validate a merged raw config and resolve it into typed settings."""
    try:
        mode = raw["mode"]
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
        seed = raw["seed"]
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
        workers = _resolve_workers(raw["workers"])

        model = dict(raw["model"] or {})
        cable_over = model.pop("cable", {}) or {}
        unknown = set(model) - set(MODEL_KEYS)
        if unknown:
            raise ConfigError(f"unknown model keys {sorted(unknown)}")
        cable_names = {f.name for f in fields(CableParams)}
        if set(cable_over) - cable_names:
            raise ConfigError(f"unknown cable keys {sorted(set(cable_over) - cable_names)}")
        cable = CableParams(**cable_over)

        dist_path = _checked_path(raw["distribution"], "distribution")
        dist = load_distribution(dist_path) if dist_path else DEFAULT_DISTRIBUTION
        bundle_seed = raw["bundle_seed"] if raw["bundle_seed"] is not None else seed
        settings = SimSettings(cable=cable, distribution=dist, bundle_seed=int(bundle_seed), **model)
        if settings.dt <= 0 or settings.max_dx <= 0:
            raise ConfigError("model.dt and model.max_dx must be positive")

        opt = dict(raw["optimizer"] or {})
        opt.pop("seed", None)
        opt_names = {f.name for f in fields(OptimizerConfig)}
        if set(opt) - opt_names:
            raise ConfigError(f"unknown optimizer keys {sorted(set(opt) - opt_names)}")
        optimizer = OptimizerConfig(seed=seed, **opt)

        cmp_ = _merge(DEFAULTS["compare"], raw["compare"] or {})
        strategies = tuple(cmp_["strategies"])
        for s in strategies:
            OptimizerConfig(strategy=s)
        runs = cmp_["runs"]
        if isinstance(runs, bool) or not isinstance(runs, int) or runs < 1:
            raise ConfigError(f"compare.runs must be an integer >= 1, got {runs!r}")
        if cmp_["objective"] not in COMPARE_OBJECTIVES:
            raise ConfigError(f"compare.objective must be one of {COMPARE_OBJECTIVES}")

        return RunConfig(
            mode=mode, seed=seed, workers=workers, out=Path(raw["out"]), settings=settings,
            optimizer=optimizer,
            reference_path=_checked_path(raw["reference"], "reference"),
            distribution_path=dist_path, params=_params(raw["params"]),
            compare_strategies=strategies, compare_runs=runs,
            compare_objective=cmp_["objective"], raw=raw)
    except ConfigError:
        raise
    except (NervecalError, TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None
