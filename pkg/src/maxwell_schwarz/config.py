"""Flat ``key = value`` experiment configuration."""
from __future__ import annotations

import dataclasses
import itertools
import math
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigurationError

METHODS = ("none", "wasi", "spectral", "economical", "grid")
CASES = ("manufactured", "dipole")
EPSILON_RULES = ("zero", "kappa", "kappa2")

_PI_RE = re.compile(r"^\s*([-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?)?\s*\*?\s*pi\s*$")


def parse_number(text) -> float:
    """Float with an optional ``pi`` factor: ``"2pi"``, ``"1.5*pi"``, ``"pi"``, ``"6.28"``."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip().lower()
    m = _PI_RE.match(s)
    if m:
        return float(m.group(1) or 1.0) * math.pi
    try:
        return float(s)
    except ValueError:
        raise ConfigurationError(f"not a number: {text!r}") from None


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"not a boolean: {text!r}")


def _check_count(key, value, *words):
    if str(value) in words:
        return
    try:
        ok = int(value) >= 1 and float(value) == int(value)
    except (TypeError, ValueError):
        ok = False
    if not ok:
        raise ConfigurationError(f"{key} must be one of {words} or an integer >= 1, got {value!r}")


@dataclass
class ExperimentConfig:
    kappa: float = 2 * math.pi
    epsilon: str = "kappa"  # zero | kappa | kappa2 | literal number
    mesh_rule: str = "gamma"  # gamma | ppw | fixed
    gamma: float = 0.5
    n_ppw: float = 8.0
    n: int | None = None  # used when mesh_rule = fixed
    parts: str = "2"  # integer, or "rule" for round(kappa**beta)
    overlap: str = "minimal"  # minimal | generous | integer layers
    method: str = "spectral"
    rho: float | None = None  # explicit tolerance overrides the rule
    C0: float | None = None  # None means 1 unless calibration is requested
    calibrate_fraction: float | None = None
    calibrate_kappa: float = math.pi
    alpha: float | None = None  # None: derived from the epsilon rule
    beta: float = 0.6
    mu: str = "rule"  # integer or "rule" for round(kappa**(1 - beta/2))
    tol: float = 1e-6
    maxit: int = 1000
    weighted: bool = False
    case: str = "manufactured"
    dipole_x0: tuple = (0.5, 0.5, 0.8)
    seed: int = 0
    fov_samples: int = 0
    out: str = "out"
    write_vtk: bool = False
    dump_matrices: bool = False
    dump_spectra: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.kappa > 0:
            raise ConfigurationError(f"kappa must be positive, got {self.kappa}")
        if self.epsilon not in EPSILON_RULES:
            try:
                float(self.epsilon)
            except (TypeError, ValueError):
                raise ConfigurationError(f"unknown epsilon rule {self.epsilon!r}") from None
        if self.mesh_rule not in ("gamma", "ppw", "fixed"):
            raise ConfigurationError(f"unknown mesh rule {self.mesh_rule!r}")
        if self.mesh_rule == "fixed" and (self.n is None or self.n < 1):
            raise ConfigurationError("mesh_rule = fixed needs n >= 1")
        if not 0 < self.gamma <= 1:
            raise ConfigurationError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.n_ppw <= 0:
            raise ConfigurationError("n_ppw must be positive")
        if self.method not in METHODS:
            raise ConfigurationError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.case not in CASES:
            raise ConfigurationError(f"case must be one of {CASES}, got {self.case!r}")
        _check_count("parts", self.parts, "rule")
        _check_count("overlap", self.overlap, "minimal", "generous")
        _check_count("mu", self.mu, "rule")
        if self.rho is not None and not 0 < self.rho < 1:
            raise ConfigurationError("rho must lie in (0, 1)")
        if self.calibrate_fraction is not None and not 0 < self.calibrate_fraction <= 1:
            raise ConfigurationError("calibrate_fraction must lie in (0, 1]")
        if not 0 < self.tol < 1 or self.maxit < 1:
            raise ConfigurationError("need 0 < tol < 1 and maxit >= 1")

    def epsilon_value(self) -> float:
        k = self.kappa
        rules = {"zero": 0.0, "kappa": k, "kappa2": k * k}
        return rules[self.epsilon] if self.epsilon in rules else float(self.epsilon)

    def alpha_value(self) -> float:
        """Absorption exponent in ``epsilon ~ kappa**(1 + alpha)``."""
        if self.alpha is not None:
            return float(self.alpha)
        if self.epsilon == "kappa2":
            return 1.0
        if self.epsilon in ("zero", "kappa"):
            return 0.0
        eps = float(self.epsilon)
        if eps <= 0 or self.kappa == 1:
            return 0.0
        return float(min(max(math.log(eps) / math.log(self.kappa) - 1.0, 0.0), self.beta))

    def parts_value(self) -> int:
        if str(self.parts) == "rule":
            return max(1, round(self.kappa ** self.beta))
        return int(self.parts)

    def mesh_n(self) -> int:
        """Grid cells per side: ``1/n <= kappa**-(1+gamma)`` or ``n_ppw`` points per wavelength,
        rounded up to a multiple of ``parts``."""
        if self.mesh_rule == "fixed":
            n = int(self.n)
        elif self.mesh_rule == "gamma":
            n = math.ceil(self.kappa ** (1.0 + self.gamma) - 1e-9)
        else:
            n = math.ceil(self.n_ppw * self.kappa / (2 * math.pi) - 1e-9)
        parts = self.parts_value()
        n = max(n, parts)
        return -(-n // parts) * parts

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["dipole_x0"] = list(self.dipole_x0)
        return d


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
_FLOATS = {"kappa", "gamma", "n_ppw", "rho", "C0", "calibrate_fraction", "calibrate_kappa",
           "alpha", "beta", "tol"}
_INTS = {"n", "maxit", "seed", "fov_samples"}
_BOOLS = {"weighted", "write_vtk", "dump_matrices", "dump_spectra"}


def _convert(key, value):
    if key not in _FIELDS:
        raise ConfigurationError(f"unknown config key {key!r}")
    if value.lower() in ("none", ""):
        return None
    if key in _FLOATS:
        return parse_number(value)
    if key in _INTS:
        try:
            return int(value)
        except ValueError:
            raise ConfigurationError(f"{key} must be an integer, got {value!r}") from None
    if key in _BOOLS:
        return _parse_bool(value)
    if key == "dipole_x0":
        parts = [parse_number(v) for v in value.replace(";", " ").split()]
        if len(parts) != 3:
            raise ConfigurationError("dipole_x0 needs three coordinates")
        return tuple(parts)
    return value.strip()


def read_pairs(path) -> dict:
    """Raw ``key -> value string`` pairs; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        pairs[key] = value
    return pairs


def config_from_pairs(pairs: dict) -> ExperimentConfig:
    kwargs = {k: _convert(k, v) for k, v in pairs.items()}
    kwargs = {k: v for k, v in kwargs.items() if v is not None or _FIELDS[k].default is None}
    return ExperimentConfig(**kwargs)


def load_config(path) -> ExperimentConfig:
    return config_from_pairs(read_pairs(path))


def load_sweep(path) -> list[ExperimentConfig]:
    """Comma-separated values expand to the cartesian product, in file order."""
    pairs = read_pairs(path)
    keys = list(pairs)
    choices = [
        [pairs[k]] if k == "dipole_x0" else [v.strip() for v in pairs[k].split(",")] for k in keys
    ]
    return [config_from_pairs(dict(zip(keys, combo))) for combo in itertools.product(*choices)]
