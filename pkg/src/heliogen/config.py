"""Shared pipeline configuration.

All geometric, sky, rasterization and annealing parameters live in one
place so that dataset generation, evaluation and the service agree on
the scene they describe.  A YAML file can override any subset of the
defaults; its path comes from ``--config`` or the HELIOGEN_CONFIG
environment variable.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field

import yaml

ENV_CONFIG = "HELIOGEN_CONFIG"

# Slot offsets along the plot side, meters from the side midline.
DEFAULT_SLOT_OFFSETS = (-10.0, -6.0, -2.0, 2.0, 6.0, 10.0)


@dataclass(frozen=True)
class GeometryConfig:
    """Plot, height cap and obstruction band geometry (meters)."""

    plot_size: float = 10.0
    height_cap: float = 10.0
    grid_points: int = 5            # heightmap lattice is grid_points x grid_points
    obstruction_width: float = 10.0     # extent parallel to the plot side
    obstruction_depth: float = 5.0      # extent perpendicular to the plot side
    obstruction_height: float = 10.0
    obstruction_gap: float = 5.0        # near face distance from the plot edge
    slot_offsets: tuple[float, ...] = DEFAULT_SLOT_OFFSETS

    @property
    def positions_per_side(self) -> int:
        return len(self.slot_offsets)

    @property
    def half_plot(self) -> float:
        return self.plot_size / 2.0

    @property
    def grid_pitch(self) -> float:
        return self.plot_size / (self.grid_points - 1)


@dataclass(frozen=True)
class SkyConfig:
    """Parametric winter sky: direct beam, unit weights, hourly sampling.

    The window is a day-of-year range and may wrap the year boundary
    (the default Nov 1 - Mar 31 does).  day_step > 1 thins the window
    for cheap runs without changing its envelope.
    """

    latitude_deg: float = 42.36     # Boston
    window_start_day: int = 305     # Nov 1
    window_end_day: int = 90        # Mar 31
    hour_step: float = 1.0
    day_step: int = 1


@dataclass(frozen=True)
class RasterConfig:
    """Depth-map image geometry."""

    image_size: int = 16
    world_extent: float = 32.0      # meters covered by the image, centered on the plot

    @property
    def pixel_size(self) -> float:
        return self.world_extent / self.image_size


@dataclass(frozen=True)
class AnnealConfig:
    """Simulated-annealing schedule and evaluation fidelity."""

    target_volume: float = 100.0
    steps: int = 3000
    start_temp: float = 1.0
    end_temp: float = 1e-3
    move_delta: float = 1.0         # one-cell move magnitude bound, meters
    mesh_resolution: int = 11       # vertex lattice for solar evaluation (10x10 cells)
    selections_per_condition: int = 10


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 1000
    batch_size: int = 32
    learning_rate: float = 1e-3
    latent_dim: int = 16
    checkpoint_interval: int = 0    # epochs between checkpoints, 0 = final only


@dataclass(frozen=True)
class LatentSearchConfig:
    """Gradient-descent navigation of the decoder's input space."""

    learning_rate: float = 0.02
    iterations: int = 400
    restarts: int = 100
    convergence_window: int = 50
    convergence_threshold: float = 1e-6
    guidance_weight: float = 0.0


@dataclass(frozen=True)
class PipelineConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    sky: SkyConfig = field(default_factory=SkyConfig)
    raster: RasterConfig = field(default_factory=RasterConfig)
    anneal: AnnealConfig = field(default_factory=AnnealConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    latent: LatentSearchConfig = field(default_factory=LatentSearchConfig)

    def describe(self) -> dict:
        return dataclasses.asdict(self)

    def content_hash(self) -> str:
        blob = json.dumps(self.describe(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


_SECTIONS = {
    "geometry": GeometryConfig,
    "sky": SkyConfig,
    "raster": RasterConfig,
    "anneal": AnnealConfig,
    "train": TrainConfig,
    "latent": LatentSearchConfig,
}


class ConfigError(ValueError):
    pass


def _build_section(cls, data: dict):
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in section {cls.__name__}")
        if isinstance(value, list):
            value = tuple(float(v) for v in value)
        kwargs[key] = value
    return cls(**kwargs)


def load_config(path: str | None = None) -> PipelineConfig:
    """Load the pipeline config, merging a YAML file over the defaults.

    Resolution order: explicit path argument, then HELIOGEN_CONFIG, then
    pure defaults.
    """
    if path is None:
        path = os.environ.get(ENV_CONFIG) or None
    if path is None:
        return PipelineConfig()
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be a mapping, got {type(raw).__name__}")
    sections = {}
    for name, data in raw.items():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown config section {name!r}")
        if not isinstance(data, dict):
            raise ConfigError(f"section {name!r} must be a mapping")
        sections[name] = _build_section(_SECTIONS[name], data)
    return PipelineConfig(**sections)
