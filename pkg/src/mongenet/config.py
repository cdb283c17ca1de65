"""Experiment configuration, presets and YAML round-tripping.

A config is a nested mapping; every field has a default, so a file only needs
the keys it changes. ``resolve`` fills in all defaults and validates.
"""

import copy
from dataclasses import MISSING, asdict, dataclass, field, fields, is_dataclass

import yaml

from . import problems as pb
from .domains import HyperRectangle
from .errors import UsageError
from .networks import FAMILIES, NetworkSpec

METHODS = ("method1", "method2", "method2_singular", "high_dim_schedule")


class ConfigError(UsageError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class NetworkConfig:
    family: str = "input_convex"
    hidden_sizes: list = field(default_factory=lambda: [10, 10, 10, 10, 10])
    activation: str = "softplus"
    init_std: float = 0.5


@dataclass
class PointsConfig:
    interior: int = 3000
    boundary: int = 400
    boundary_in_equation: bool = True
    distance_points: int = 300


@dataclass
class WeightsConfig:
    convexity: float = 1e4
    boundary: float = 100.0
    singular: float = 4000.0
    positive_det: bool = False


@dataclass
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


@dataclass
class AlternationConfig:
    adam_epochs: int = 300
    adam_lr: float = 1e-7
    max_rounds: int = 10


@dataclass
class OptimizerConfig:
    max_iterations: int = 60000
    gradient_tolerance: float = 1e-8
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    adam: AdamConfig = field(default_factory=AdamConfig)
    alternation: AlternationConfig = field(default_factory=AlternationConfig)


@dataclass
class ScheduleConfig:
    boundary_epochs: int = 1000
    full_epochs: int = 3000


@dataclass
class SeedsConfig:
    init: int = 0
    sampling: int = 0
    noise: int = 0
    evaluation: int = 12345


@dataclass
class EvaluationConfig:
    count: int = 1_000_000
    grid: list = field(default_factory=lambda: [100, 100])
    checkpoints: list = field(default_factory=list)


@dataclass
class ExperimentConfig:
    name: str = "run"
    problem: str = "radial2d"
    method: str = "method2"
    network: NetworkConfig = field(default_factory=NetworkConfig)
    points: PointsConfig = field(default_factory=PointsConfig)
    weights: WeightsConfig = field(default_factory=WeightsConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    noise_stdev: float = 0.0
    seeds: SeedsConfig = field(default_factory=SeedsConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    output: str = "runs/run"

    def to_dict(self):
        return asdict(self)

    def to_yaml(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def network_spec(self, input_dim):
        n = self.network
        if n.family == "standard":
            return NetworkSpec.standard(input_dim, tuple(n.hidden_sizes), n.activation)
        return NetworkSpec.input_convex(input_dim, tuple(n.hidden_sizes), n.activation)


# building from mappings ------------------------------------------------------

def _build(cls, data, prefix):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(prefix or "config", "expected a mapping")
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        path = f"{prefix}.{key}" if prefix else key
        if key not in known:
            raise ConfigError(path, "unknown field")
        f = known[key]
        default = f.default_factory() if f.default_factory is not MISSING else f.default
        if is_dataclass(default):
            kwargs[key] = _build(type(default), value, path)
        else:
            kwargs[key] = _coerce(path, default, value)
    return cls(**kwargs)


def _coerce(path, default, value):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool):
            raise ConfigError(path, f"expected a number, got {value!r}")
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(path, f"expected a number, got {value!r}") from None
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(path, f"expected a list, got {value!r}")
        return list(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    return value


def _merge(base, extra):
    out = copy.deepcopy(base)
    for k, v in (extra or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def parse_override(text):
    """``a.b.c=value`` to a nested mapping; the value is parsed as YAML."""
    if "=" not in text:
        raise ConfigError(text, "override must look like key=value")
    key, raw = text.split("=", 1)
    value = yaml.safe_load(raw)
    out = value
    for part in reversed(key.strip().split(".")):
        out = {part: out}
    return out


# presets -----------------------------------------------------------------------

_STANDARD_SIGMOID = {"family": "standard", "activation": "sigmoid"}

PRESETS = {
    "ex41": {"problem": "radial2d", "method": "method1", "network": _STANDARD_SIGMOID,
             "optimizer": {"max_iterations": 10000}},
    "ex42": {"problem": "radial2d", "method": "method2",
             "optimizer": {"max_iterations": 5000}},
    "ex43": {"problem": "blowup", "method": "method2_singular",
             "weights": {"boundary": 1000.0, "singular": 4000.0},
             "optimizer": {"max_iterations": 55000}},
    "ex44": {"problem": "sphere", "method": "method2_singular",
             "points": {"boundary_in_equation": False},
             "weights": {"boundary": 1000.0, "singular": 4000.0},
             "optimizer": {"max_iterations": 20000}},
    "ex45": {"problem": "discont", "method": "method2",
             "optimizer": {"max_iterations": 15000}},
    "ex45_dense": {"problem": "discont", "method": "method2",
                   "points": {"interior": 10000, "boundary": 1000},
                   "optimizer": {"max_iterations": 15000}},
    "ex46": {"problem": "asym", "method": "method2",
             "optimizer": {"max_iterations": 5000}},
    "ex46noise": {"problem": "asym", "method": "method2", "noise_stdev": 0.1,
                  "optimizer": {"max_iterations": 10000}},
    "ex47_3d": {"problem": "radial3d", "method": "method2",
                "points": {"interior": 4000, "boundary": 1200}},
    "ex47_4d": {"problem": "radial4d", "method": "method2",
                "points": {"interior": 4000, "boundary": 2400}},
    "ex47_5d": {"problem": "radial5d", "method": "high_dim_schedule",
                "points": {"interior": 4000, "boundary": 3000}},
}


def preset(name):
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; known: {', '.join(PRESETS)}")
    return _merge({"name": name, "output": f"runs/{name}"}, PRESETS[name])


def resolve(data=None, overrides=()):
    """Validated config from a mapping plus ``key=value`` overrides."""
    data = data or {}
    for o in overrides:
        data = _merge(data, parse_override(o) if isinstance(o, str) else o)
    cfg = _build(ExperimentConfig, data, "")
    validate(cfg)
    return cfg


def load(path, overrides=()):
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if "preset" in data:
        data = _merge(preset(data.pop("preset")), data)
    return resolve(data, overrides)


def from_preset(name, overrides=()):
    return resolve(preset(name), overrides)


def validate(cfg):
    if cfg.problem not in pb.NAMES:
        raise ConfigError("problem", f"unknown problem {cfg.problem!r}; known: {', '.join(pb.NAMES)}")
    if cfg.method not in METHODS:
        raise ConfigError("method", f"unknown method {cfg.method!r}; known: {', '.join(METHODS)}")
    problem = pb.catalog(cfg.problem)
    if cfg.method == "method1":
        if problem.dim != 2:
            raise ConfigError("method", f"method1 needs a 2D problem, {cfg.problem} has "
                                        f"dimension {problem.dim}")
        if not isinstance(problem.domain, HyperRectangle):
            raise ConfigError("method", "method1 needs a rectangular domain")
    if cfg.method == "method2_singular" and not problem.singular_segments:
        raise ConfigError("method", f"method2_singular needs singular segments; "
                                    f"{cfg.problem} has none")
    if cfg.network.family not in FAMILIES:
        raise ConfigError("network.family", f"expected one of {FAMILIES}")
    try:
        cfg.network_spec(problem.dim)
    except UsageError as exc:
        raise ConfigError("network", str(exc)) from None
    for key in ("interior", "boundary"):
        if getattr(cfg.points, key) < 1:
            raise ConfigError(f"points.{key}", "must be >= 1")
    for key in ("convexity", "boundary", "singular"):
        if getattr(cfg.weights, key) < 0:
            raise ConfigError(f"weights.{key}", "must be >= 0")
    if cfg.noise_stdev < 0:
        raise ConfigError("noise_stdev", "must be >= 0")
    o = cfg.optimizer
    if not 0.0 < o.wolfe_c1 < o.wolfe_c2 < 1.0:
        raise ConfigError("optimizer.wolfe_c1", "need 0 < wolfe_c1 < wolfe_c2 < 1")
    if o.adam.lr < 0 or o.alternation.adam_lr < 0:
        raise ConfigError("optimizer.adam.lr", "learning rates must be >= 0")
    if o.max_iterations < 0:
        raise ConfigError("optimizer.max_iterations", "must be >= 0")
    if len(cfg.evaluation.grid) != 2:
        raise ConfigError("evaluation.grid", "expected two resolutions")
    return cfg
