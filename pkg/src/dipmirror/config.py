"""Experiment description and its YAML (key/value with nesting) schema."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from .dynamics import OmegaGrid, TimeGrid
from .ensemble import R_MIN, Geometry
from .hamiltonian import StarkModel
from .model import SUBLEVELS

OBSERVABLES = ("spectrum", "decay", "trapping_vs_stark", "trapping_vs_inhom")
DETUNING_MODELS = ("per_atom", "per_sublevel")
SPECTRUM_REFERENCES = ("initial", "sigma")


class SchemaError(ValueError):
    """Config violates the schema; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class SpectrumSettings:
    min: float = -20.0
    max: float = 20.0
    step: float = 0.02
    # "initial": detuning from the Stark-shifted resonance of the excited
    # sublevel; "sigma": from the shifted m = +-1 resonance
    reference: str = "initial"

    def grid(self) -> OmegaGrid:
        return OmegaGrid(self.min, self.max, self.step)


@dataclass(frozen=True)
class ExperimentConfig:
    observable: str = "decay"
    n: float = 0.05
    geometry: Geometry = field(default_factory=lambda: Geometry(R=6.0, L=7.0, z_exc=1.0))
    m_init: int = 0
    stark_splitting: float = 0.0
    inhom_width: float = 0.0
    mirror_enabled: bool = True
    detuning_model: str = "per_atom"
    spectrum: SpectrumSettings = field(default_factory=SpectrumSettings)
    time: TimeGrid = field(default_factory=TimeGrid)
    sweep: tuple = ()
    n_realizations: int = 200
    seed: int = 1
    output_path: str = "results.csv"
    r_min: float = R_MIN
    workers: int = 1

    def __post_init__(self):
        if self.geometry.mirror_enabled != self.mirror_enabled:
            object.__setattr__(self, "geometry", replace(self.geometry, mirror_enabled=self.mirror_enabled))
        if self.observable not in OBSERVABLES:
            raise SchemaError("observable", f"must be one of {OBSERVABLES}")
        if not (math.isfinite(self.n) and self.n > 0):
            raise SchemaError("n", "density must be finite and positive")
        if self.m_init not in SUBLEVELS:
            raise SchemaError("m_init", f"must be one of {SUBLEVELS}")
        for name in ("stark_splitting", "inhom_width", "r_min"):
            if not math.isfinite(getattr(self, name)):
                raise SchemaError(name, "must be finite")
        if self.inhom_width < 0:
            raise SchemaError("inhom_width", "must be >= 0")
        if self.detuning_model not in DETUNING_MODELS:
            raise SchemaError("detuning_model", f"must be one of {DETUNING_MODELS}")
        if self.spectrum.reference not in SPECTRUM_REFERENCES:
            raise SchemaError("spectrum.reference", f"must be one of {SPECTRUM_REFERENCES}")
        if self.n_realizations < 1:
            raise SchemaError("n_realizations", "must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise SchemaError("seed", "must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise SchemaError("workers", "must be >= 1")
        if self.observable.startswith("trapping_vs") and not self.sweep:
            raise SchemaError("sweep", "sweep observables need at least one value")
        if any(not math.isfinite(v) for v in self.sweep):
            raise SchemaError("sweep", "values must be finite")
        if self.observable == "trapping_vs_inhom" and any(v < 0 for v in self.sweep):
            raise SchemaError("sweep", "inhomogeneous widths must be >= 0")

    def stark(self) -> StarkModel:
        return StarkModel.from_splitting(self.stark_splitting)

    def spectrum_offset(self) -> float:
        """Frequency (rotating frame) at which spectrum detunings are zero."""
        stark = self.stark()
        if self.spectrum.reference == "sigma":
            return stark.shift_m1
        return stark.shift(self.m_init)

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sweep"] = list(self.sweep)
        del d["geometry"]["mirror_enabled"]
        return d


_SECTIONS = {
    "geometry": (Geometry, {"R": float, "L": float, "z_exc": float}),
    "spectrum": (SpectrumSettings, {"min": float, "max": float, "step": float, "reference": str}),
    "time": (TimeGrid, {"t_max": float, "n_points": int, "spacing": str, "t_min": float}),
}
_SCALARS = {
    "observable": str,
    "n": float,
    "m_init": int,
    "stark_splitting": float,
    "inhom_width": float,
    "mirror_enabled": bool,
    "detuning_model": str,
    "n_realizations": int,
    "seed": int,
    "output_path": str,
    "r_min": float,
    "workers": int,
}


def _coerce(path: str, value: Any, kind: type):
    if kind is bool:
        if not isinstance(value, bool):
            raise SchemaError(path, f"expected true/false, got {value!r}")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaError(path, f"expected an integer, got {value!r}")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(path, f"expected a number, got {value!r}")
        return float(value)
    if not isinstance(value, str):
        raise SchemaError(path, f"expected a string, got {value!r}")
    return value


def config_from_dict(data: dict) -> ExperimentConfig:
    """Validate a parsed mapping; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise SchemaError("<root>", "config must be a mapping")
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key in _SCALARS:
            kwargs[key] = _coerce(key, value, _SCALARS[key])
        elif key in _SECTIONS:
            cls, fields = _SECTIONS[key]
            if not isinstance(value, dict):
                raise SchemaError(key, "expected a mapping")
            sub = {}
            for k, v in value.items():
                if k not in fields:
                    raise SchemaError(f"{key}.{k}", "unknown key")
                sub[k] = _coerce(f"{key}.{k}", v, fields[k])
            try:
                kwargs[key] = cls(**sub)
            except ValueError as exc:
                raise SchemaError(key, str(exc)) from exc
        elif key == "sweep":
            if not isinstance(value, list):
                raise SchemaError("sweep", "expected a list of numbers")
            kwargs["sweep"] = tuple(_coerce(f"sweep[{i}]", v, float) for i, v in enumerate(value))
        else:
            raise SchemaError(key, "unknown key")
    try:
        return ExperimentConfig(**kwargs)
    except SchemaError:
        raise
    except ValueError as exc:
        raise SchemaError("<root>", str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    """Read a config file.  A run manifest is accepted too: its ``config``
    section is used, so a manifest reproduces the run it describes.
    """
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError("<file>", f"not valid YAML: {exc}") from exc
    if isinstance(data, dict) and "manifest_version" in data:
        data = data.get("config")
    return config_from_dict(data)


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)

