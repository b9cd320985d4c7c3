"""Versioned experiment configuration with strict validation.

A config is a JSON object. Unknown keys, wrong types and out-of-range
values raise :class:`ConfigurationError` naming the offending field.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigurationError
from .lattice import Topology, build_topology
from .optimize import OptimizerConfig
from .propagation import TruncationConfig
from .risk import DEFAULT_MAX_TERMS, SEED_MODES
from .trotter import MODELS, HamiltonianSpec, SharingMode, TrotterPlan

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    name: str
    J: float = 1.0
    h: float = 1.0
    kappa: float = 0.0
    omega: float = 0.0
    J_x: float = 1.0
    J_y: float = 1.0

    def validate(self, path: str) -> None:
        if self.name not in MODELS:
            raise ConfigurationError(f"{path}.name: unknown model {self.name!r}; expected one of {MODELS}")

    def spec(self) -> HamiltonianSpec:
        return HamiltonianSpec(self.name, self.J, self.h, self.kappa, self.omega, self.J_x, self.J_y)


@dataclass(frozen=True)
class TopologyConfig:
    kind: str = "square"
    n_x: int = 0
    n_y: int = 0
    boundary: str = "open"
    n_qubits: int = 0

    def build(self) -> Topology:
        return build_topology(self.kind, self.n_x, self.n_y, self.boundary, self.n_qubits)


@dataclass(frozen=True)
class TrotterConfig:
    delta_t: float
    L_U: int
    L_V: int
    t_grid: list[float]
    sharing: str = "per_term_group"

    def validate(self, path: str) -> None:
        if self.delta_t <= 0:
            raise ConfigurationError(f"{path}.delta_t: must be positive")
        if self.L_U < 1 or self.L_V < 1:
            raise ConfigurationError(f"{path}: L_U and L_V must be >= 1")
        if not self.t_grid:
            raise ConfigurationError(f"{path}.t_grid: needs at least one time")
        if any(t <= 0 for t in self.t_grid):
            raise ConfigurationError(f"{path}.t_grid: times must be positive")
        try:
            SharingMode(self.sharing)
        except ValueError:
            modes = [m.value for m in SharingMode]
            raise ConfigurationError(f"{path}.sharing: unknown mode {self.sharing!r}; expected one of {modes}") from None
        for t in self.t_grid:
            reps = t / self.delta_t
            if abs(reps - round(reps)) > 1e-9:
                raise ConfigurationError(f"{path}.t_grid: {t} is not a multiple of delta_t={self.delta_t}")

    def target_plan(self, t: float) -> TrotterPlan:
        return TrotterPlan(self.delta_t, self.L_U, t_total=t)

    def ansatz_plan(self, t: float) -> TrotterPlan:
        return TrotterPlan(t, self.L_V)


@dataclass(frozen=True)
class TruncationSection:
    max_weight: Optional[int] = None
    coeff_eps: float = 0.0
    max_sines: Optional[int] = None

    def build(self) -> TruncationConfig:
        return TruncationConfig(self.max_weight, self.coeff_eps, self.max_sines)


@dataclass(frozen=True)
class TruncationsConfig:
    target: TruncationSection = field(default_factory=TruncationSection)
    ansatz: TruncationSection = field(default_factory=TruncationSection)


@dataclass(frozen=True)
class CacheConfig:
    seeds: str = "all_sites"
    max_terms: int = DEFAULT_MAX_TERMS

    def validate(self, path: str) -> None:
        if self.seeds not in SEED_MODES:
            raise ConfigurationError(f"{path}.seeds: unknown seed mode {self.seeds!r}; expected one of {SEED_MODES}")
        if self.max_terms < 1:
            raise ConfigurationError(f"{path}.max_terms: must be positive")


@dataclass(frozen=True)
class OracleConfig:
    hst: bool = False
    exact_local_risk: bool = False


@dataclass(frozen=True)
class SweepConfig:
    weights: list[int]

    def validate(self, path: str) -> None:
        if len(self.weights) < 2:
            raise ConfigurationError(f"{path}.weights: a sweep needs at least two weights to compare")
        if list(self.weights) != sorted(set(self.weights)):
            raise ConfigurationError(f"{path}.weights: must be strictly ascending")
        if self.weights[0] < 1:
            raise ConfigurationError(f"{path}.weights: must be positive")


@dataclass(frozen=True)
class HcbDemoConfig:
    initial_sites: list[int]
    repetitions: list[int] = field(default_factory=lambda: [1, 2, 3])
    reference_step: float = 0.005

    def validate(self, path: str) -> None:
        if len(set(self.initial_sites)) != len(self.initial_sites):
            raise ConfigurationError(f"{path}.initial_sites: sites must be distinct")
        if any(k < 0 for k in self.repetitions):
            raise ConfigurationError(f"{path}.repetitions: must be non-negative")
        if self.reference_step <= 0:
            raise ConfigurationError(f"{path}.reference_step: must be positive")


@dataclass(frozen=True)
class OracleCheckConfig:
    n_qubits: int = 4
    n_circuits: int = 50
    n_gates: int = 20
    risk_qubits: int = 3
    risk_pairs: int = 20
    haar_instances: int = 5
    haar_samples: int = 100_000


@dataclass(frozen=True)
class ExperimentConfig:
    version: int
    name: str = ""
    model: Optional[ModelConfig] = None
    topology: Optional[TopologyConfig] = None
    trotter: Optional[TrotterConfig] = None
    truncation: TruncationsConfig = field(default_factory=TruncationsConfig)
    cache: CacheConfig = field(default_factory=CacheConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    seed: int = 0
    sweep: Optional[SweepConfig] = None
    hcb_demo: Optional[HcbDemoConfig] = None
    oracle_check: Optional[OracleCheckConfig] = None

    def validate(self, path: str) -> None:
        if self.version != SCHEMA_VERSION:
            raise ConfigurationError(f"{path}.version: unsupported schema version {self.version}; expected {SCHEMA_VERSION}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError(f"{path}.seed: must be an unsigned 64-bit integer")

    def require(self, *sections: str) -> None:
        missing = [s for s in sections if getattr(self, s) is None]
        if missing:
            raise ConfigurationError(f"config: this command needs the section(s) {', '.join(missing)}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def with_seed(self, seed: Optional[int]) -> "ExperimentConfig":
        if seed is None:
            return self
        out = dataclasses.replace(self, seed=seed)
        out.validate("config")
        return out


def _type_name(tp) -> str:
    return getattr(tp, "__name__", str(tp))


def _convert(value, tp, path: str):
    origin = typing.get_origin(tp)
    if origin is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if value is None:
            return None
        return _convert(value, args[0], path)
    if origin is list:
        if not isinstance(value, list):
            raise ConfigurationError(f"{path}: expected a list, got {type(value).__name__}")
        (item,) = typing.get_args(tp)
        return [_convert(v, item, f"{path}[{i}]") for i, v in enumerate(value)]
    if dataclasses.is_dataclass(tp):
        return parse_section(tp, value, path)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigurationError(f"{path}: expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"{path}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigurationError(f"{path}: expected a string, got {value!r}")
        return value
    raise TypeError(f"unsupported config field type {_type_name(tp)}")


def parse_section(cls, data, path: str):
    """Build dataclass ``cls`` from ``data``, rejecting unknown and missing keys."""
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: expected an object, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigurationError(f"{path}: unknown key(s) {', '.join(unknown)}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        sub = f"{path}.{f.name}"
        if f.name not in data:
            if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
                raise ConfigurationError(f"{sub}: required field missing")
            continue
        kwargs[f.name] = _convert(data[f.name], hints[f.name], sub)
    try:
        obj = cls(**kwargs)
    except ValueError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    if hasattr(obj, "validate"):
        obj.validate(path)
    return obj


def parse_config(data: dict) -> ExperimentConfig:
    cfg = parse_section(ExperimentConfig, data, "config")
    # resolve the physics objects once so invalid combinations fail up front
    if cfg.model is not None:
        cfg.model.spec()
    if cfg.topology is not None:
        topo = cfg.topology.build()
        sharing = cfg.trotter.sharing if cfg.trotter is not None else ""
        if sharing == SharingMode.TRANSLATION_INVARIANT.value and not topo.is_translation_invariant:
            raise ConfigurationError("config.trotter.sharing: translation_invariant needs a lattice periodic in both directions")
        if cfg.cache.seeds == "one_site" and not topo.is_translation_invariant:
            raise ConfigurationError("config.cache.seeds: one_site needs a lattice periodic in both directions")
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(data)
