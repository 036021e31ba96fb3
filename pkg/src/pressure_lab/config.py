"""Experiment configuration: defaults, JSON loading and validation."""
from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigurationError

DEFAULT_TOLERANCES = {
    "slope_margin": 0.15,
    "r_squared_min": 0.9,
    "seed_ratio_max": 2.0,
    "runtime_max_s": 120.0,
    "borderline_ratio_max": 2.0,
    "split_identity_rel": 1e-10,
    "oracle_abs": 1e-10,
    "loglip_stability": 1.1,
    "loglip_coefficient": 2.0,
    "loglip_coefficient_rel": 0.2,
    "geometry_exact": 1e-13,
    "convergence_order_min": 1.8,
    "weak_divergence": 1e-6,
    "jump": 1e-5,
    "violation_min": 0.1,
    "flat_inverse": 1e-12,
    "remainder_slope_margin": 0.15,
    "weak_form": 1e-6,
    "lift_consistency": 1e-10,
    "normal_derivative_256": 1e-4,
    "zygmund_exponent_margin": 0.15,
    "zygmund_growth_max": 1.3,
}

GEOMETRIES = ("torus", "disk", "both")


def _is_power_of_two(n) -> bool:
    return isinstance(n, int) and n >= 4 and n & (n - 1) == 0


@dataclass
class ExperimentConfig:
    """Parameters of a full acceptance run.

    ``grid_n`` and ``J_max`` drive the periodic regularity cells, ``disk_n``
    the Neumann solver and extension checks, ``symbol_n`` the parametrix
    sweep and ``borderline_J`` the ``gamma = 1/2`` refinement study (grid
    ``4 * 2^J`` per entry).
    """

    geometry: str = "both"
    gamma_list: list = field(default_factory=lambda: [0.25, 0.4])
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    grid_n: int = 1024
    J_max: int = 8
    delta: float = 0.25
    disk_n: int = 256
    symbol_n: int = 128
    borderline_J: list = field(default_factory=lambda: [6, 7, 8, 9, 10])
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output_dir: str = "pressure_lab_out"

    def __post_init__(self):
        self.validate()

    def validate(self):
        """Raise :class:`ConfigurationError` naming the offending field."""
        if self.geometry not in GEOMETRIES:
            raise ConfigurationError(f"geometry: must be one of {GEOMETRIES}; got {self.geometry!r}")
        if not isinstance(self.gamma_list, list) or not self.gamma_list:
            raise ConfigurationError("gamma_list: must be a non-empty list")
        for i, g in enumerate(self.gamma_list):
            if not isinstance(g, (int, float)) or not 0.0 < g <= 0.5:
                raise ConfigurationError(f"gamma_list[{i}]: {g!r} outside (0, 0.5]")
        if not isinstance(self.seeds, list) or not self.seeds:
            raise ConfigurationError("seeds: must be a non-empty list")
        for i, s in enumerate(self.seeds):
            if not isinstance(s, int) or s < 0:
                raise ConfigurationError(f"seeds[{i}]: {s!r} is not a non-negative integer")
        for name in ("grid_n", "disk_n", "symbol_n"):
            if not _is_power_of_two(getattr(self, name)):
                raise ConfigurationError(f"{name}: {getattr(self, name)!r} is not a power of two >= 4")
        if not isinstance(self.J_max, int) or not 4 <= self.J_max or 2 ** self.J_max > self.grid_n // 4:
            raise ConfigurationError(f"J_max: {self.J_max!r} needs 4 <= J_max and 2^J_max <= grid_n/4")
        if not isinstance(self.delta, (int, float)) or not 0.0 < self.delta < 0.5:
            raise ConfigurationError(f"delta: {self.delta!r} outside (0, 0.5)")
        for i, J in enumerate(self.borderline_J):
            if not isinstance(J, int) or J < 4:
                raise ConfigurationError(f"borderline_J[{i}]: {J!r} must be an integer >= 4")
        if not isinstance(self.tolerances, dict):
            raise ConfigurationError("tolerances: must be a mapping")
        for key, val in self.tolerances.items():
            if key not in DEFAULT_TOLERANCES:
                raise ConfigurationError(f"tolerances.{key}: unknown tolerance")
            if not isinstance(val, (int, float)) or val < 0:
                raise ConfigurationError(f"tolerances.{key}: {val!r} must be a non-negative number")

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["tolerances"] = {**DEFAULT_TOLERANCES, **self.tolerances}
        return d

    def replace(self, **changes) -> "ExperimentConfig":
        d = copy.deepcopy(asdict(self))
        d.update(changes)
        return ExperimentConfig(**d)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigurationError("config: top level must be a JSON object")
        known = set(cls.__dataclass_fields__)
        for key in data:
            if key not in known:
                raise ConfigurationError(f"{key}: unknown config field")
        d = dict(data)
        if "tolerances" in d and isinstance(d["tolerances"], dict):
            d["tolerances"] = {**DEFAULT_TOLERANCES, **d["tolerances"]}
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config: invalid JSON ({exc})") from exc
        return cls.from_dict(data)


def quick_config(**changes) -> ExperimentConfig:
    """Reduced desk-scale configuration used for smoke and determinism runs."""
    base = ExperimentConfig(gamma_list=[0.25], seeds=[0], grid_n=256, J_max=6,
                            disk_n=128, symbol_n=64, borderline_J=[5, 6])
    return base.replace(**changes) if changes else base
