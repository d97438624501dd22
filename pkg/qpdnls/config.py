"""
Problem configuration: a JSON document with the equation, the truncation box, the time mesh and
the initial data, plus optional sections for decay profile, Picard, experiments and logging.
See template/base_config.json for every key with its default.
"""
import json
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Tuple

import torch

from qpdnls.bounds import DecayProfile
from qpdnls.errors import ConfigError
from qpdnls.lattice import FrequencyVector, LatticePoint, TruncationBox

SIGNS = {"dnls_minus": 1, "gdnls_plus": -1}
QUADRATURES = ("trapezoid", "simpson")
SCHEMES = ("picard", "rk4_interaction")
OVERFLOW_MODES = ("error", "clip")
PRODUCERS = ("picard", "rk4", "picard_iterate", "picard_double_box")

TOP_LEVEL_KEYS = {"nu", "omega", "p", "sign", "epsilon", "box_radius", "t_end", "steps", "quadrature", "scheme",
                  "initial", "decay", "overflow", "record_every", "picard", "experiments", "logging"}

@dataclass(frozen=True)
class RandomInitial:
    B: float
    kappa: float
    seed: int = 42
    radius: Optional[int] = None

@dataclass(frozen=True)
class PicardSettings:
    iterations: int = 4
    tol: float = 1e-10
    max_iter: int = 40

@dataclass(frozen=True)
class ExperimentSettings:
    eta: float = 0.1
    varrho: Optional[float] = None
    eps: Tuple[float, ...] = (1e-2, 1e-3, 1e-4)
    producers: Tuple[str, str] = ("picard", "rk4")
    resolution_limit: float = 1.0
    workers: int = 1

@dataclass(frozen=True)
class LoggingSettings:
    use_wandb: bool = False
    project_name: str = "qpdnls"
    run_name: Optional[str] = None

@dataclass(frozen=True)
class ProblemConfig:
    omega: FrequencyVector
    box: TruncationBox
    t_end: float
    steps: int
    modes: Optional[Tuple[Tuple[LatticePoint, complex], ...]] = None
    random: Optional[RandomInitial] = None
    p: int = 1
    sign: str = "dnls_minus"
    epsilon: float = 1.0
    quadrature: str = "trapezoid"
    scheme: str = "rk4_interaction"
    decay: Optional[DecayProfile] = None
    overflow: str = "error"
    record_every: int = 1
    picard: PicardSettings = field(default_factory=PicardSettings)
    experiments: ExperimentSettings = field(default_factory=ExperimentSettings)
    logging: LoggingSettings = field(default_factory=LoggingSettings)

    def __post_init__(self):
        if self.p < 1:
            raise ConfigError(f"p must be >= 1, got {self.p}")
        if self.sign not in SIGNS:
            raise ConfigError(f"sign must be one of {list(SIGNS)}, got {self.sign!r}")
        if self.quadrature not in QUADRATURES:
            raise ConfigError(f"quadrature must be one of {list(QUADRATURES)}, got {self.quadrature!r}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {list(SCHEMES)}, got {self.scheme!r}")
        if self.overflow not in OVERFLOW_MODES:
            raise ConfigError(f"overflow must be one of {list(OVERFLOW_MODES)}, got {self.overflow!r}")
        if not self.t_end > 0:
            raise ConfigError(f"t_end must be > 0, got {self.t_end}")
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if self.record_every < 1:
            raise ConfigError(f"record_every must be >= 1, got {self.record_every}")
        if self.box.nu != self.omega.nu:
            raise ConfigError(f"dimension mismatch: nu={self.box.nu} but omega has {self.omega.nu} entries")
        if (self.modes is None) == (self.random is None):
            raise ConfigError("initial data needs exactly one of 'modes' or 'random'")
        for producer in self.experiments.producers:
            if producer not in PRODUCERS:
                raise ConfigError(f"unknown producer {producer!r}, expected one of {list(PRODUCERS)}")

    @property
    def nu(self) -> int:
        return self.box.nu

    @property
    def sign_factor(self) -> int:
        return SIGNS[self.sign]

    @property
    def coupling(self) -> float:
        """s * epsilon, the factor in front of i<n> conv(n)."""
        return self.sign_factor * self.epsilon

    @property
    def dt(self) -> float:
        return self.t_end / self.steps

    def mesh(self) -> torch.Tensor:
        return torch.linspace(0.0, self.t_end, self.steps + 1, dtype=torch.float64)

    def replace(self, **changes) -> "ProblemConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        initial = {}
        if self.modes is not None:
            initial["modes"] = [{"n": list(n), "re": a.real, "im": a.imag} for n, a in self.modes]
        else:
            initial["random"] = {k: v for k, v in asdict(self.random).items() if v is not None}
        out = {
            "nu": self.nu, "omega": list(self.omega.omega), "p": self.p, "sign": self.sign, "epsilon": self.epsilon,
            "box_radius": self.box.radius, "t_end": self.t_end, "steps": self.steps, "quadrature": self.quadrature,
            "scheme": self.scheme, "initial": initial, "overflow": self.overflow, "record_every": self.record_every,
            "picard": asdict(self.picard),
            "experiments": {**asdict(self.experiments), "eps": list(self.experiments.eps),
                            "producers": list(self.experiments.producers)},
            "logging": asdict(self.logging),
        }
        if self.decay is not None:
            out["decay"] = asdict(self.decay)
        return out

_REQUIRED = object()

def _section(raw: dict, key: str, cls):
    values = raw.get(key) or {}
    if not isinstance(values, dict):
        raise ConfigError(f"'{key}' must be an object")
    known = cls.__dataclass_fields__
    unknown = set(values) - set(known)
    if unknown:
        raise ConfigError(f"unknown keys in '{key}': {sorted(unknown)}")
    return dict(values)

def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)

def _number(raw: dict, key: str, kind=float, default=_REQUIRED):
    """A null value is accepted only where the default is None."""
    if key not in raw or (raw[key] is None and default is None):
        if default is _REQUIRED:
            raise ConfigError(f"missing required key '{key}'")
        return default
    value = raw[key]
    if not _is_number(value):
        raise ConfigError(f"'{key}' must be a number, got {value!r}")
    if kind is int and value != int(value):
        raise ConfigError(f"'{key}' must be an integer, got {value!r}")
    return kind(value)

def _string(raw: dict, key: str, default=_REQUIRED):
    if key not in raw or (raw[key] is None and default is None):
        if default is _REQUIRED:
            raise ConfigError(f"missing required key '{key}'")
        return default
    if not isinstance(raw[key], str):
        raise ConfigError(f"'{key}' must be a string, got {raw[key]!r}")
    return raw[key]

def _list(raw: dict, key: str, check, what: str) -> list:
    value = raw[key]
    if not isinstance(value, list) or not value or not all(check(x) for x in value):
        raise ConfigError(f"'{key}' must be a non-empty array of {what}, got {value!r}")
    return value

def _is_int(value) -> bool:
    return _is_number(value) and value == int(value)

def _mode(entry, nu: int):
    if not isinstance(entry, dict) or "n" not in entry:
        raise ConfigError(f"each mode needs an 'n' entry, got {entry!r}")
    unknown = set(entry) - {"n", "re", "im"}
    if unknown:
        raise ConfigError(f"unknown keys in mode: {sorted(unknown)}")
    n = tuple(int(x) for x in _list(entry, "n", _is_int, "integers"))
    if len(n) != nu:
        raise ConfigError(f"dimension mismatch: mode {list(n)} has length {len(n)}, expected {nu}")
    return n, complex(_number(entry, "re", float, 0.0), _number(entry, "im", float, 0.0))

def _initial(raw: dict, nu: int):
    initial = raw.get("initial")
    if not isinstance(initial, dict) or len(initial) != 1 or next(iter(initial)) not in ("modes", "random"):
        raise ConfigError("'initial' must be {\"modes\": [...]} or {\"random\": {...}}")
    if "modes" in initial:
        if not isinstance(initial["modes"], list):
            raise ConfigError(f"'modes' must be an array of mode objects, got {initial['modes']!r}")
        modes = [_mode(entry, nu) for entry in initial["modes"]]
        points = [n for n, _ in modes]
        if len(set(points)) != len(points):
            raise ConfigError("duplicate modes in initial data")
        return tuple(sorted(modes)), None
    values = _section(initial, "random", RandomInitial)
    random = RandomInitial(B=_number(values, "B"), kappa=_number(values, "kappa"), seed=_number(values, "seed", int, 42),
                           radius=_number(values, "radius", int, None))
    DecayProfile(random.B, random.kappa)
    return None, random

def _picard(raw: dict) -> PicardSettings:
    values, defaults = _section(raw, "picard", PicardSettings), PicardSettings()
    settings = PicardSettings(iterations=_number(values, "iterations", int, defaults.iterations),
                              tol=_number(values, "tol", float, defaults.tol),
                              max_iter=_number(values, "max_iter", int, defaults.max_iter))
    if settings.iterations < 0 or settings.max_iter < 1 or not settings.tol > 0:
        raise ConfigError(f"picard needs iterations >= 0, max_iter >= 1 and tol > 0, got {asdict(settings)}")
    return settings

def _experiments(raw: dict) -> ExperimentSettings:
    values, defaults = _section(raw, "experiments", ExperimentSettings), ExperimentSettings()
    eps = defaults.eps
    if values.get("eps") is not None:
        eps = tuple(float(e) for e in _list(values, "eps", _is_number, "numbers"))
    producers = defaults.producers
    if values.get("producers") is not None:
        producers = tuple(_list(values, "producers", lambda x: isinstance(x, str), "strings"))
        if len(producers) != 2:
            raise ConfigError("experiments.producers needs exactly two entries")
    settings = ExperimentSettings(eta=_number(values, "eta", float, defaults.eta),
                                  varrho=_number(values, "varrho", float, None), eps=eps, producers=producers,
                                  resolution_limit=_number(values, "resolution_limit", float, defaults.resolution_limit),
                                  workers=_number(values, "workers", int, defaults.workers))
    if settings.workers < 1:
        raise ConfigError(f"experiments.workers must be >= 1, got {settings.workers}")
    return settings

def _logging(raw: dict) -> LoggingSettings:
    values, defaults = _section(raw, "logging", LoggingSettings), LoggingSettings()
    use_wandb = values.get("use_wandb", defaults.use_wandb)
    if not isinstance(use_wandb, bool):
        raise ConfigError(f"'use_wandb' must be true or false, got {use_wandb!r}")
    return LoggingSettings(use_wandb=use_wandb, project_name=_string(values, "project_name", defaults.project_name),
                           run_name=_string(values, "run_name", None))

def config_from_dict(raw: dict) -> ProblemConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    nu = _number(raw, "nu", int)
    if "omega" not in raw:
        raise ConfigError("missing required key 'omega'")
    omega = _list(raw, "omega", _is_number, "numbers")
    modes, random = _initial(raw, nu)
    decay = raw.get("decay")
    if decay is not None:
        if not isinstance(decay, dict):
            raise ConfigError(f"'decay' must be an object, got {decay!r}")
        decay = DecayProfile(_number(decay, "B"), _number(decay, "kappa"))
    elif random is not None:
        decay = DecayProfile(random.B, random.kappa)
    return ProblemConfig(
        omega=FrequencyVector(tuple(float(w) for w in omega)),
        box=TruncationBox(_number(raw, "box_radius", int), nu),
        t_end=_number(raw, "t_end"),
        steps=_number(raw, "steps", int),
        modes=modes,
        random=random,
        p=_number(raw, "p", int, 1),
        sign=_string(raw, "sign", "dnls_minus"),
        epsilon=_number(raw, "epsilon", float, 1.0),
        quadrature=_string(raw, "quadrature", "trapezoid"),
        scheme=_string(raw, "scheme", "rk4_interaction"),
        decay=decay,
        overflow=_string(raw, "overflow", "clip" if random is not None else "error"),
        record_every=_number(raw, "record_every", int, 1),
        picard=_picard(raw),
        experiments=_experiments(raw),
        logging=_logging(raw),
    )

def load_config(path: str) -> ProblemConfig:
    try:
        with open(path, "r") as f:
            raw = json.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in {path}: {e.msg}", line=e.lineno, column=e.colno) from e
    return config_from_dict(raw)
