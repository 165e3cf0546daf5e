"""Experiment configuration: a strict, versioned JSON schema.

Every block is a dataclass; loading rejects unknown keys anywhere in the
tree (listing the offending dotted paths) so typos fail loudly instead of
silently running a different study.  ``resolved_dict`` returns the fully
defaulted tree that drivers persist next to their outputs.

Field grids may be written as an explicit list of values or as a mapping
``{"start": a, "stop": b, "num": k}`` (inclusive, evenly spaced) or
``{"start": a, "stop": b, "step": s}``.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "SCHEMA_VERSION",
    "DmrgSettings",
    "RotatedBlock",
    "MinimizeBlock",
    "CollapseBlock",
    "AnchorBlock",
    "RefineBlock",
    "ExperimentConfig",
    "expand_grid",
    "load_config",
    "config_from_dict",
    "resolved_dict",
]

SCHEMA_VERSION = 1

_VALID_BASES = ("0", "x", "y", "z")
_VALID_VARIANTS = (None, "conj", "sym", "sym-compressed")


def expand_grid(spec) -> list[float]:
    """Explicit list, or {"start","stop","num"} / {"start","stop","step"}."""
    if isinstance(spec, (list, tuple)):
        vals = [float(v) for v in spec]
        if not vals:
            raise ConfigError("empty field grid")
        return vals
    if isinstance(spec, dict):
        extra = set(spec) - {"start", "stop", "num", "step"}
        if extra:
            raise ConfigError(f"unknown grid keys: {sorted(extra)}")
        if "start" not in spec or "stop" not in spec:
            raise ConfigError("grid mapping needs 'start' and 'stop'")
        a, b = float(spec["start"]), float(spec["stop"])
        if "num" in spec:
            if "step" in spec:
                raise ConfigError("grid mapping takes 'num' or 'step', not both")
            k = int(spec["num"])
            if k < 1:
                raise ConfigError(f"grid num must be >= 1, got {k}")
            return [float(v) for v in np.linspace(a, b, k)]
        if "step" in spec:
            s = float(spec["step"])
            if s <= 0 or b < a:
                raise ConfigError("grid step must be positive with stop >= start")
            k = int(round((b - a) / s))
            return [float(a + i * s) for i in range(k + 1)]
        raise ConfigError("grid mapping needs 'num' or 'step'")
    raise ConfigError(f"grid must be a list or mapping, got {type(spec).__name__}")


def _build(cls, data, path: str):
    """Construct dataclass ``cls`` from a mapping, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError(f"{path or cls.__name__}: expected a mapping, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        listed = ", ".join(f"{path + '.' if path else ''}{k}" for k in unknown)
        raise ConfigError(f"unknown configuration keys: {listed}")
    return cls(**data)


@dataclass
class DmrgSettings:
    """Ground-state solver settings (bond cap and seed come from the top level)."""

    cutoff: float = 1e-12
    tol: float = 1e-10
    max_sweeps: int = 30
    min_sweeps: int = 2
    dense_dim: int = 1500

    def validate(self, path: str):
        if self.cutoff < 0:
            raise ConfigError(f"{path}.cutoff must be >= 0")
        if self.tol <= 0:
            raise ConfigError(f"{path}.tol must be > 0")
        if self.max_sweeps < 1 or self.min_sweeps < 1:
            raise ConfigError(f"{path}: sweep counts must be >= 1")


@dataclass
class RotatedBlock:
    """One rotated-basis sweep: which axis, which sizes, which fields."""

    basis: str
    sizes: list
    h_grid: object
    peak: str = "none"  # "max", "min", or "none"

    def validate(self, path: str):
        if self.basis not in _VALID_BASES:
            raise ConfigError(f"{path}.basis must be one of {_VALID_BASES}, got {self.basis!r}")
        if self.peak not in ("max", "min", "none"):
            raise ConfigError(f"{path}.peak must be 'max', 'min', or 'none'")
        _check_sizes(self.sizes, f"{path}.sizes")
        self.h_grid = expand_grid(self.h_grid)


@dataclass
class MinimizeBlock:
    """Basis-minimization sweep settings."""

    sizes: list
    h_grid: object
    chi_eval: int = 4
    restarts: int = 3
    maxiter: int = 60

    def validate(self, path: str):
        _check_sizes(self.sizes, f"{path}.sizes")
        self.h_grid = expand_grid(self.h_grid)
        if self.chi_eval < 1:
            raise ConfigError(f"{path}.chi_eval must be >= 1")
        if self.restarts < 1:
            raise ConfigError(f"{path}.restarts must be >= 1")
        if self.maxiter < 1:
            raise ConfigError(f"{path}.maxiter must be >= 1")


@dataclass
class CollapseBlock:
    """Finite-size collapse settings; nu is a fixed input, gamma is scanned."""

    nu: float = 1.0
    gamma: float = 0.85
    scan: object = None  # grid spec over gamma, or None to skip the scan

    def validate(self, path: str):
        if self.nu <= 0:
            raise ConfigError(f"{path}.nu must be > 0")
        if self.scan is not None:
            self.scan = expand_grid(self.scan)


@dataclass
class AnchorBlock:
    """Linear-decomposition anchor: sizes (size-delta, size, size+delta)."""

    size: int
    delta: int = 4

    def validate(self, path: str):
        if self.size - self.delta < 2:
            raise ConfigError(f"{path}: size-delta must leave >= 2 sites")
        if self.delta < 1:
            raise ConfigError(f"{path}.delta must be >= 1")


@dataclass
class RefineBlock:
    """Golden-section refinement of the unrotated peak with fresh evaluations."""

    evals: int = 6
    sizes: list | None = None  # None: all main sizes

    def validate(self, path: str):
        if self.evals < 1:
            raise ConfigError(f"{path}.evals must be >= 1")
        if self.sizes is not None:
            _check_sizes(self.sizes, f"{path}.sizes")


def _check_sizes(sizes, path: str):
    if not isinstance(sizes, (list, tuple)) or not sizes:
        raise ConfigError(f"{path} must be a non-empty list of even sizes >= 2")
    for v in sizes:
        if not isinstance(v, int) or isinstance(v, bool) or v < 2:
            raise ConfigError(f"{path} entries must be integers >= 2, got {v!r}")


@dataclass
class ExperimentConfig:
    """Top-level study description consumed by the drivers and the CLI."""

    sizes: list
    h_grid: object
    schema_version: int = SCHEMA_VERSION
    seed: int = 0
    n: int = 2
    variant: str | None = None
    chi_dmrg: int = 8
    chi_sre: int = 6
    chi_flag_delta: int = 2
    h_small: object = field(default_factory=list)
    h_large: object = field(default_factory=list)
    tail_size: int | None = None
    anchors: list = field(default_factory=list)
    rotated: list = field(default_factory=list)
    minimize: object = None
    collapse: object = None
    refine: object = None
    dmrg: object = field(default_factory=DmrgSettings)

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(
                f"schema_version {self.schema_version!r} not supported "
                f"(this build reads version {SCHEMA_VERSION})"
            )
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        if not isinstance(self.n, int) or self.n < 2:
            raise ConfigError(f"n must be an integer >= 2, got {self.n!r}")
        if self.variant not in _VALID_VARIANTS:
            raise ConfigError(
                f"variant must be one of {_VALID_VARIANTS[1:]} or null, got {self.variant!r}"
            )
        for name in ("chi_dmrg", "chi_sre"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.chi_sre > self.chi_dmrg:
            raise ConfigError(
                f"chi_sre ({self.chi_sre}) cannot exceed chi_dmrg ({self.chi_dmrg})"
            )
        if not isinstance(self.chi_flag_delta, int) or self.chi_flag_delta < 0:
            raise ConfigError("chi_flag_delta must be a non-negative integer")
        _check_sizes(self.sizes, "sizes")
        self.h_grid = expand_grid(self.h_grid)
        self.h_small = expand_grid(self.h_small) if self.h_small else []
        self.h_large = expand_grid(self.h_large) if self.h_large else []
        if (self.h_small or self.h_large) and self.tail_size is None:
            raise ConfigError("tail grids require tail_size")
        if self.tail_size is not None:
            _check_sizes([self.tail_size], "tail_size")
        if isinstance(self.dmrg, dict):
            self.dmrg = _build(DmrgSettings, self.dmrg, "dmrg")
        self.dmrg.validate("dmrg")
        self.anchors = [
            a if isinstance(a, AnchorBlock) else _build(AnchorBlock, a, f"anchors[{i}]")
            for i, a in enumerate(self.anchors)
        ]
        for i, a in enumerate(self.anchors):
            a.validate(f"anchors[{i}]")
        self.rotated = [
            r if isinstance(r, RotatedBlock) else _build(RotatedBlock, r, f"rotated[{i}]")
            for i, r in enumerate(self.rotated)
        ]
        for i, r in enumerate(self.rotated):
            r.validate(f"rotated[{i}]")
        if isinstance(self.minimize, dict):
            self.minimize = _build(MinimizeBlock, self.minimize, "minimize")
        if self.minimize is not None:
            self.minimize.validate("minimize")
        if isinstance(self.collapse, dict):
            self.collapse = _build(CollapseBlock, self.collapse, "collapse")
        if self.collapse is not None:
            self.collapse.validate("collapse")
        if isinstance(self.refine, dict):
            self.refine = _build(RefineBlock, self.refine, "refine")
        if self.refine is not None:
            self.refine.validate("refine")

    # -- derived ---------------------------------------------------------

    def all_sweep_sizes(self) -> list[int]:
        """Main sizes plus anchor triples, sorted and deduplicated."""
        sizes = set(self.sizes)
        for a in self.anchors:
            sizes.update((a.size - a.delta, a.size, a.size + a.delta))
        return sorted(sizes)


def config_from_dict(data: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, data, "")


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from err
    return config_from_dict(data)


def resolved_dict(cfg: ExperimentConfig) -> dict:
    """The fully defaulted configuration tree (JSON-serializable)."""

    def conv(obj):
        if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
            return {k: conv(v) for k, v in dataclasses.asdict(obj).items()}
        if isinstance(obj, (list, tuple)):
            return [conv(v) for v in obj]
        if isinstance(obj, dict):
            return {k: conv(v) for k, v in obj.items()}
        return obj

    return conv(cfg)
