"""Run configuration: defaults <- JSON file <- command-line flags."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace

from .errors import UsageError
from .phasespace import PhaseGrid, ReservoirParams
from .protocol import ProtocolParams
from .states import SuperpositionSpec


@dataclass(frozen=True)
class GridConfig:
    p_min: float = -6.5
    p_max: float = 6.5
    q_min: float = -6.5
    q_max: float = 6.5
    points: int = 261

    def phase_grid(self):
        return PhaseGrid(self.p_min, self.p_max, self.q_min, self.q_max, self.points, self.points)


@dataclass(frozen=True)
class Tolerances:
    fidelity: float = 1e-8
    kernel: float = 1e-6
    fock_wigner: float = 1e-5
    fock_purity: float = 1e-4
    quadrature: float = 1e-5
    phonon: float = 1e-5


@dataclass(frozen=True)
class RunConfig:
    excitation: int = 2
    components: int = 8
    beta: float = 3.03
    theta1: float | None = None
    omega0: float = 1.0
    gamma: float = 1.0
    nbar: float = 1.0
    gamma_t: float = 0.1
    u: float = 0.2
    form: str = "exact"
    Lambda: float = 2 * math.pi
    eta: float = 0.1
    lambda_c: float = 2 * math.pi
    tau_d: float = 200.0
    phi_b: float = 0.0
    phi_r: float = 0.0
    beta_max: float = 4.0
    beta_points: int = 401
    u_points: int = 100
    workers: int = 1
    extended: bool = False
    grid: GridConfig = field(default_factory=GridConfig)
    tol: Tolerances = field(default_factory=Tolerances)
    out: str = "out"

    def spec(self):
        return SuperpositionSpec(self.excitation, self.components, self.beta, self.theta1)

    def reservoir(self):
        return ReservoirParams(self.omega0, self.gamma, self.nbar)

    def protocol(self):
        return ProtocolParams(self.Lambda, self.eta, self.lambda_c, self.tau_d, self.phi_b, self.phi_r)

    @property
    def ell(self):
        return self.spec().ell

    def to_dict(self):
        return asdict(self)


_NESTED = {"grid": GridConfig, "tol": Tolerances}


def _require_key(cls, key, prefix=""):
    if key not in {f.name for f in fields(cls)}:
        raise UsageError(f"unknown config key {prefix}{key!r}")


def apply_overrides(cfg, overrides, prefix=""):
    """Return ``cfg`` with ``overrides`` (a possibly nested dict) applied."""
    if not isinstance(overrides, dict):
        raise UsageError(f"config section {prefix or '<root>'} must be an object")
    changes = {}
    for key, value in overrides.items():
        _require_key(type(cfg), key, prefix)
        current = getattr(cfg, key)
        if key in _NESTED and type(cfg) is RunConfig:
            if isinstance(value, dict):
                changes[key] = apply_overrides(current, value, prefix=f"{key}.")
            else:
                raise UsageError(f"config key {prefix}{key!r} must be an object")
            continue
        changes[key] = _check_type(prefix + key, current, value)
    try:
        return replace(cfg, **changes)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _check_type(key, current, value):
    if value is None:
        return None
    if isinstance(current, bool):
        if not isinstance(value, bool):
            raise UsageError(f"config key {key!r} expects a boolean")
        return value
    if isinstance(current, int) and not isinstance(current, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise UsageError(f"config key {key!r} expects an integer")
        return value
    if isinstance(current, float) or current is None:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise UsageError(f"config key {key!r} expects a number")
        return float(value)
    if isinstance(current, str):
        if not isinstance(value, str):
            raise UsageError(f"config key {key!r} expects a string")
        return value
    return value


def load_config_file(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from exc
    return data


def resolve(file_path=None, flags=None, base=None):
    cfg = base or RunConfig()
    if file_path:
        cfg = apply_overrides(cfg, load_config_file(file_path))
    if flags:
        cfg = apply_overrides(cfg, {k: v for k, v in flags.items() if v is not None})
    cfg.spec()
    cfg.reservoir()
    cfg.protocol()
    if cfg.form not in ("exact", "printed"):
        raise UsageError(f"config key 'form' must be 'exact' or 'printed', got {cfg.form!r}")
    return cfg
