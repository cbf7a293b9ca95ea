"""Experiment configuration files (YAML, schema version 1).

All lengths are metres, times seconds and angles radians; no unit suffixes
are parsed.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from .errors import ConfigError
from .montecarlo import BasisSchedule, SamplerConfig
from .screen import ScreenGeometry
from .state import PolarizationBasis

__all__ = [
    "SCHEMA",
    "PRESETS",
    "ExperimentConfig",
    "ConfigSchemaError",
    "load_config",
    "loads_config",
    "dump_config",
    "preset_config",
]

SCHEMA_VERSION = 1
PRESETS = ("young", "marked", "eraser", "delayed")

_positive = {"type": "number", "exclusiveMinimum": 0}
_unit = {"type": "number", "minimum": 0, "maximum": 1}
_basis_label = {"type": "string", "pattern": r"^(HV|DIAG|CIRC|LIN:[-+0-9.eE]+)$"}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "preset"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "preset": {"enum": list(PRESETS)},
        "source": {"enum": ["singlet", "triplet"]},
        "geometry": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: _positive for k in
                           ("slit_width", "slit_separation", "screen_distance", "wavelength")},
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"points": {"type": "integer", "minimum": 3}, "zeros": _positive},
        },
        "qwp_angles": {"type": ["array", "null"], "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "retardance": {"type": "number"},
        "slit_elements": {
                "type": ["array", "null"], "minItems": 2, "maxItems": 2,
                "items": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type"],
                    "properties": {
                        "type": {"enum": ["identity", "qwp", "hwp", "waveplate", "polarizer"]},
                        "angle": {"type": "number"},
                        "retardance": {"type": "number"},
                        "basis": _basis_label,
                        "outcome": {"enum": ["first", "second"]},
                    },
                },
        },
        "b_basis": {"type": ["string", "null"], "pattern": r"^(none|HV|DIAG|CIRC|LIN:[-+0-9.eE]+)$"},
        "coincidence": {"type": "boolean"},
        "sampler": {
                "type": ["object", "null"],
                "additionalProperties": False,
                "required": ["pair_count"],
                "properties": {
                    "pair_count": {"type": "integer", "minimum": 0},
                    "pair_rate": _positive,
                    "coincidence_window": _positive,
                    "jitter_sigma": {"type": "number", "minimum": 0},
                    "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                    "efficiency_a": _unit,
                    "efficiency_b": _unit,
                    "schedule": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {
                            "bases": {"type": "array", "items": _basis_label, "minItems": 1},
                            "block": {"type": "integer", "minimum": 1},
                            "mode": {"enum": ["blocks", "random"]},
                        },
                    },
                },
        },
        "output_dir": {"type": "string"},
    },
}


class ConfigSchemaError(ConfigError):
    """Schema violation, with the offending field and source line when known."""

    def __init__(self, message: str, field: str = "", line: int | None = None, source: str = ""):
        self.message = message
        self.field = field
        self.line = line
        self.source = source
        where = source or "<config>"
        if line is not None:
            where += f":{line}"
        if field:
            where += f": {field}"
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str = "eraser"
    geometry: ScreenGeometry = field(default_factory=ScreenGeometry)
    source: str = "singlet"
    qwp_angles: tuple[float, float] | None = (np.pi / 4, -np.pi / 4)
    retardance: float = np.pi / 2
    slit_elements: tuple[dict, dict] | None = None
    b_basis: str | None = "DIAG"
    coincidence: bool = True
    sampler: SamplerConfig | None = None
    grid_points: int = 2049
    grid_zeros: float = 4.0
    output_dir: str = "out"
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ConfigSchemaError(f"unknown preset {self.preset!r}", "preset")
        if self.preset == "young" and self.qwp_angles is not None:
            raise ConfigSchemaError("preset 'young' forbids qwp_angles", "qwp_angles")
        if self.preset != "young" and self.qwp_angles is None and self.slit_elements is None:
            raise ConfigSchemaError(f"preset {self.preset!r} requires qwp_angles", "qwp_angles")
        if self.preset == "delayed" and self.sampler is None:
            raise ConfigSchemaError("preset 'delayed' requires a sampler section", "sampler")
        if self.qwp_angles is not None:
            object.__setattr__(self, "qwp_angles", tuple(float(a) for a in self.qwp_angles))
        if self.slit_elements is not None:
            object.__setattr__(self, "slit_elements", tuple(dict(e) for e in self.slit_elements))

    @property
    def seed(self) -> int | None:
        return None if self.sampler is None else int(self.sampler.rng_seed)

    @property
    def b_condition_basis(self) -> PolarizationBasis | None:
        if self.b_basis in (None, "none") or not self.coincidence:
            return None
        return PolarizationBasis.from_label(self.b_basis)

    def with_seed(self, seed: int) -> ExperimentConfig:
        if self.sampler is None:
            return self
        return replace(self, sampler=replace(self.sampler, rng_seed=int(seed)))

    def with_output_dir(self, out) -> ExperimentConfig:
        return replace(self, output_dir=str(out))

    def to_dict(self) -> dict:
        g = self.geometry
        d = {
            "schema_version": self.schema_version,
            "preset": self.preset,
            "source": self.source,
            "geometry": {"slit_width": g.slit_width, "slit_separation": g.slit_separation,
                         "screen_distance": g.screen_distance, "wavelength": g.wavelength},
            "grid": {"points": self.grid_points, "zeros": self.grid_zeros},
            "qwp_angles": None if self.qwp_angles is None else list(self.qwp_angles),
            "retardance": self.retardance,
            "slit_elements": None if self.slit_elements is None else [dict(e) for e in self.slit_elements],
            "b_basis": self.b_basis,
            "coincidence": self.coincidence,
            "sampler": None,
            "output_dir": self.output_dir,
        }
        if self.sampler is not None:
            s = self.sampler
            d["sampler"] = {
                "pair_count": int(s.pair_count),
                "pair_rate": s.pair_rate,
                "coincidence_window": s.coincidence_window,
                "jitter_sigma": s.jitter_sigma,
                "seed": int(s.rng_seed),
                "efficiency_a": s.efficiency_a,
                "efficiency_b": s.efficiency_b,
                "schedule": {"bases": [b.label for b in s.b_basis_schedule.bases],
                             "block": s.b_basis_schedule.block,
                             "mode": s.b_basis_schedule.mode},
            }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        jsonschema.validate(d, SCHEMA)
        base = cls()
        geometry = ScreenGeometry(**{**base.geometry.__dict__, **d.get("geometry", {})})
        grid = d.get("grid", {})
        sampler = None
        if d.get("sampler") is not None:
            s = d["sampler"]
            sch = s.get("schedule", {})
            default_sched = BasisSchedule()
            schedule = BasisSchedule(
                tuple(PolarizationBasis.from_label(b) for b in sch["bases"]) if "bases" in sch
                else default_sched.bases,
                sch.get("block", default_sched.block), sch.get("mode", default_sched.mode))
            dflt = SamplerConfig()
            sampler = SamplerConfig(
                pair_count=s["pair_count"],
                pair_rate=float(s.get("pair_rate", dflt.pair_rate)),
                coincidence_window=float(s.get("coincidence_window", dflt.coincidence_window)),
                b_basis_schedule=schedule,
                rng_seed=int(s.get("seed", dflt.rng_seed)),
                efficiency_a=float(s.get("efficiency_a", dflt.efficiency_a)),
                efficiency_b=float(s.get("efficiency_b", dflt.efficiency_b)),
                jitter_sigma=float(s.get("jitter_sigma", dflt.jitter_sigma)),
            )
        preset = d["preset"]
        qwp = d.get("qwp_angles", None if preset == "young" else base.qwp_angles)
        return cls(
            preset=preset,
            geometry=geometry,
            source=d.get("source", base.source),
            qwp_angles=None if qwp is None else tuple(qwp),
            retardance=float(d.get("retardance", base.retardance)),
            slit_elements=d.get("slit_elements"),
            b_basis=d.get("b_basis", _default_b_basis(preset)),
            coincidence=d.get("coincidence", base.coincidence),
            sampler=sampler,
            grid_points=grid.get("points", base.grid_points),
            grid_zeros=float(grid.get("zeros", base.grid_zeros)),
            output_dir=d.get("output_dir", base.output_dir),
            schema_version=d["schema_version"],
        )

    def hash(self) -> str:
        """SHA-256 of the canonical config, ignoring ``output_dir``."""
        d = self.to_dict()
        d.pop("output_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def _default_b_basis(preset: str) -> str | None:
    return {"young": "HV", "marked": "none", "eraser": "DIAG", "delayed": "none"}[preset]


def preset_config(preset: str = "eraser", *, seed: int = 1, pair_count: int = 100_000) -> ExperimentConfig:
    """Ready-to-run configuration for one of the four presets."""
    qwp = None if preset == "young" else (np.pi / 4, -np.pi / 4)
    sampler = None
    if preset == "delayed":
        sampler = SamplerConfig(pair_count=pair_count, rng_seed=seed)
    return ExperimentConfig(preset=preset, qwp_angles=qwp, b_basis=_default_b_basis(preset), sampler=sampler)


def _line_index(node, path=()) -> dict[tuple, int]:
    # Map every key path in the YAML document to its 1-based source line.
    out = {path: node.start_mark.line + 1}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            out.update(_line_index(v, path + (k.value,)))
            out[path + (k.value,)] = k.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            out.update(_line_index(v, path + (i,)))
    return out


def loads_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse and validate a configuration document.

    Raises
    ------
    ConfigSchemaError
        With the source line and dotted field path of the first problem.
    """
    try:
        data = yaml.safe_load(text)
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigSchemaError(str(getattr(exc, "problem", exc)), "",
                                None if mark is None else mark.line + 1, source) from None
    if not isinstance(data, dict):
        raise ConfigSchemaError("top level must be a mapping", "", 1, source)
    lines = _line_index(node) if node is not None else {}
    validator = jsonschema.Draft202012Validator(SCHEMA)
    err = jsonschema.exceptions.best_match(validator.iter_errors(data))
    if err is not None:
        path = tuple(err.absolute_path)
        if err.validator == "additionalProperties":
            extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
            if extra:
                path = path + (extra[0],)
        line = None
        for cut in range(len(path), -1, -1):
            if path[:cut] in lines:
                line = lines[path[:cut]]
                break
        raise ConfigSchemaError(err.message, ".".join(map(str, path)) or "<root>", line, source)
    try:
        return ExperimentConfig.from_dict(data)
    except ConfigSchemaError as exc:
        raise ConfigSchemaError(exc.message, exc.field, lines.get((exc.field,)), source) from None
    except (ConfigError, ValueError) as exc:
        raise ConfigSchemaError(str(exc), "", None, source) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return loads_config(path.read_text(encoding="utf-8"), str(path))


def dump_config(cfg: ExperimentConfig) -> str:
    return "# qeraser experiment configuration; SI units (m, s, rad)\n" + yaml.safe_dump(
        cfg.to_dict(), sort_keys=False, default_flow_style=False)
