"""Experiment configuration: a YAML-mirroring dataclass tree.

Config files use exactly these field names; unknown keys are rejected so a
typo never silently falls back to a default.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .channel import Scenario, SquintModel


@dataclass
class GeometryConfig:
    n_bs: tuple = (200, 200)
    n_ac: tuple = (200, 200)
    f_z: float = 0.1e12
    f_s: float = 1.0e9
    K: int = 2048
    n_cp: int = 128


@dataclass
class RoughConfig:
    angle_offset_deg: float = 5.0
    doppler_offset_frac: float = 0.01


@dataclass
class PipelineKnobs:
    i_bs: tuple = (5, 5)
    i_ac: tuple = (5, 5)
    omega: int = 1
    ttdu_mode: str = "gttdu"
    group: tuple = (5, 5)
    ttdu_basis: str = "rough"
    i_max_bs: int = 2
    i_max_ac: int = 2
    i_max_do: int = 2
    n_do: int = 6
    n_de: int = 10
    method: int = 2
    method_floor_db: float = -20.0


@dataclass
class StageSnrConfig:
    """Per-stage SNR: a number (fixed dB), "sweep" (follow the x axis), or
    null for noiseless."""

    angles_bs: object = "sweep"
    angles_ac: object = -20.0
    doppler: object = -20.0
    delay: object = 20.0

    def resolve(self, stage: str, sweep_snr_db):
        v = getattr(self, stage)
        if v == "sweep":
            return sweep_snr_db
        return v


@dataclass
class SweepConfig:
    snr_db: tuple = (-30.0, -25.0, -20.0, -15.0, -10.0, -5.0, 0.0)
    f_s: tuple = ()
    n_subcarriers: tuple = ()


@dataclass
class TrackingConfig:
    n_ti: int = 30
    n_c: int = 70
    epsilon: float = 0.2
    k_tilde_max: int | None = None
    monitor_mode: str = "all"
    drift_sign: int | None = None
    data_snr_db: float | None = -20.0


@dataclass
class CodecConfig:
    constraint_len: int = 7
    polys: tuple = (0o133, 0o171)
    interleaver_seed: int = 1234


@dataclass
class ExperimentConfig:
    experiment: str = "angle_rmse"
    seed: int = 1
    trials: int = 100
    out_dir: str = "results"
    n_workers: int = 1
    side: str = "bs"
    gain_modulus: str = "rayleigh"
    scenario_mode: str = "random_angles"
    data_snr_db: float = 10.0
    variants: tuple = ()
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    scenario: Scenario = field(default_factory=Scenario)
    squint: SquintModel = field(default_factory=SquintModel)
    rough: RoughConfig = field(default_factory=RoughConfig)
    pipeline: PipelineKnobs = field(default_factory=PipelineKnobs)
    stage_snr: StageSnrConfig = field(default_factory=StageSnrConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    tracking: TrackingConfig = field(default_factory=TrackingConfig)
    codec: CodecConfig = field(default_factory=CodecConfig)


_NESTED = {
    "geometry": GeometryConfig,
    "scenario": Scenario,
    "squint": SquintModel,
    "rough": RoughConfig,
    "pipeline": PipelineKnobs,
    "stage_snr": StageSnrConfig,
    "sweep": SweepConfig,
    "tracking": TrackingConfig,
    "codec": CodecConfig,
}


def _build(cls, data: dict):
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kw = {}
    for k, v in data.items():
        if isinstance(v, list):
            v = tuple(tuple(x) if isinstance(x, list) else x for x in v)
        kw[k] = v
    return cls(**kw)


def load_config(path: str | Path) -> ExperimentConfig:
    """Load and validate a YAML experiment configuration."""
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ValueError("config root must be a mapping")
    kw = {}
    for key, val in raw.items():
        if key in _NESTED:
            kw[key] = _build(_NESTED[key], val or {})
        else:
            if isinstance(val, list):
                val = tuple(
                    tuple(x) if isinstance(x, list) else (dict(x) if isinstance(x, dict) else x)
                    for x in val
                )
            kw[key] = val
    cfg = _build_top(kw)
    validate_config(cfg)
    return cfg


def _build_top(kw: dict) -> ExperimentConfig:
    names = {f.name for f in fields(ExperimentConfig)}
    unknown = set(kw) - names
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(**kw)


def validate_config(cfg: ExperimentConfig):
    if cfg.trials < 1:
        raise ValueError("trials must be >= 1")
    if cfg.experiment not in (
        "angle_rmse",
        "doppler_rmse",
        "delay_rmse",
        "nmse",
        "ase",
        "throughput",
        "tracking",
        "smoke",
    ):
        raise ValueError(f"unknown experiment kind {cfg.experiment!r}")
    g = cfg.geometry
    if g.K % cfg.scenario.L:
        raise ValueError("K must divide across links")
    if cfg.scenario.L * g.n_cp / g.K >= 0.5:
        raise ValueError("delay aliasing: L*n_cp/K must stay below 1/2")
    if not all(np.isfinite(v) for v in cfg.sweep.snr_db):
        raise ValueError("SNR grid must be finite")


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return asdict(cfg)
