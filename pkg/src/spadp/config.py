"""Run configuration: a YAML file with nested sections, every key optional.

Example (all defaults shown)::

    system:
      builtin: mass             # or `tables:` with A/B/Q/R polynomial tables
    boundary:                   # optional for builtins
      x0: [0.5]
      xT: [0.9]
    epsilons: [0.9, 0.5, 0.1]
    learner:
      seed: 7
      dt: 0.1
      horizon: 10.0
      step: 0.001
      tol: 1.0e-6
      max_iter: 30
      k_init_a: 1.0
      k_init_b: -3.0
      reflect: true
      data_source: snapshot     # or `ltv`
      boundary_fraction: 0.1
      excitation:
        count: 100
        amplitude: 0.1
        freq_range: [0.1, 100.0]
    oracle:
      tol: 1.0e-10
      max_iter: 60
      k0_a: null
      k0_b: null
    simulation:
      mode: superposition       # or `switching`
      step: 0.001
      gains: learned            # gains used by `simulate`: learned | oracle
    output: null                # directory for CSV files; --out overrides

Polynomial tables give each matrix as ``[rows][cols][c0, c1, ...]`` in
ascending powers of tau, e.g. the builtin mass system is::

    tables:
      A: [[[-1.0, -0.2]]]
      B: [[1.0]]
      Q: [[1.0]]
      R: [[1.0]]
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, List, Optional

import numpy as np
import yaml

from .errors import ConfigError
from .systems import BoundarySpec, LTVSystem, lookup


@dataclass
class ExcitationConfig:
    count: int = 100
    amplitude: float = 0.1
    freq_range: List[float] = field(default_factory=lambda: [0.1, 100.0])


@dataclass
class LearnerConfig:
    seed: int = 7
    dt: float = 0.1
    horizon: float = 10.0
    step: float = 1e-3
    tol: float = 1e-6
    max_iter: int = 30
    k_init_a: Any = 1.0
    k_init_b: Any = -3.0
    reflect: bool = True
    data_source: str = "snapshot"
    boundary_fraction: float = 0.1
    excitation: ExcitationConfig = field(default_factory=ExcitationConfig)


@dataclass
class OracleConfig:
    tol: float = 1e-10
    max_iter: int = 60
    k0_a: Any = None
    k0_b: Any = None


@dataclass
class SimulationConfig:
    mode: str = "superposition"
    step: float = 1e-3
    gains: str = "learned"


@dataclass
class RunConfig:
    system: dict = field(default_factory=lambda: {"builtin": "mass"})
    boundary: Optional[dict] = None
    epsilons: List[float] = field(default_factory=lambda: [0.9, 0.5, 0.1])
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    output: Optional[str] = None

    def validate(self) -> "RunConfig":
        if not self.epsilons:
            raise ConfigError("epsilons must contain at least one value")
        for eps in self.epsilons:
            if not (isinstance(eps, (int, float)) and 0.0 < eps <= 1.0):
                raise ConfigError(f"epsilon {eps!r} outside (0, 1]")
        lc = self.learner
        if lc.data_source not in ("snapshot", "ltv"):
            raise ConfigError(f"learner.data_source must be snapshot or ltv, got {lc.data_source!r}")
        if not (lc.dt > 0 and lc.horizon > 0 and lc.step > 0 and lc.tol > 0):
            raise ConfigError("learner dt, horizon, step and tol must be positive")
        if not 0.0 < lc.boundary_fraction <= 1.0:
            raise ConfigError("learner.boundary_fraction must lie in (0, 1]")
        # scalar initial gains carry the branch convention: K_a > 0, K_b < 0
        if np.ndim(lc.k_init_a) == 0 and not float(lc.k_init_a) > 0:
            raise ConfigError(f"k_init_a must be positive (stabilizing branch), got {lc.k_init_a}")
        if np.ndim(lc.k_init_b) == 0 and not float(lc.k_init_b) < 0:
            raise ConfigError(f"k_init_b must be negative (reversed-clock branch), got {lc.k_init_b}")
        ex = lc.excitation
        if ex.count < 1 or len(ex.freq_range) != 2 or not 0 < ex.freq_range[0] < ex.freq_range[1]:
            raise ConfigError("excitation needs count >= 1 and 0 < freq_range[0] < freq_range[1]")
        if self.simulation.mode not in ("switching", "superposition"):
            raise ConfigError(f"simulation.mode must be switching or superposition, got {self.simulation.mode!r}")
        if self.simulation.gains not in ("learned", "oracle"):
            raise ConfigError(f"simulation.gains must be learned or oracle, got {self.simulation.gains!r}")
        return self

    def build_system(self, epsilon: float = 0.1):
        """``(LTVSystem, BoundarySpec)`` for one epsilon, boundary overrides applied."""
        if "builtin" in self.system:
            sys, spec = lookup(self.system["builtin"], epsilon)
        elif "tables" in self.system:
            sys = LTVSystem.from_polynomials(self.system["tables"], name=self.system.get("name", "custom"))
            if not self.boundary:
                raise ConfigError("custom systems need a boundary section with x0 and xT")
            spec = None
        else:
            raise ConfigError("system section needs `builtin` or `tables`")
        if self.boundary:
            try:
                spec = BoundarySpec(self.boundary["x0"], self.boundary["xT"], epsilon)
            except KeyError as exc:
                raise ConfigError(f"boundary section missing {exc.args[0]}") from None
        if spec.x0.size != sys.n:
            raise ConfigError(f"boundary states have dimension {spec.x0.size}, system has {sys.n}")
        return sys, spec


def _build(cls, data, where):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"section {where} must be a mapping")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        sub = {
            "learner": LearnerConfig,
            "oracle": OracleConfig,
            "simulation": SimulationConfig,
            "excitation": ExcitationConfig,
        }.get(name)
        kwargs[name] = _build(sub, value, f"{where}.{name}") if sub else value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad section {where}: {exc}") from None


def config_from_dict(data: Optional[dict]) -> RunConfig:
    return _build(RunConfig, data or {}, "config").validate()


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from None
    return config_from_dict(data)
