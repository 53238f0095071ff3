"""Deterministic winter-sky solar simulator.

A parametric direct-beam sky (declination + hour angle closed forms,
unit weights) replaces weather-file cumulative skies; the objective it
feeds is the area-weighted mean irradiance over all building faces,
with self-shadowing by the building and occlusion by neighbor boxes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .config import GeometryConfig, SkyConfig
from .scene import BoundaryCondition, BuildingMesh, Heightmap, boundary_boxes, heightmap_to_mesh

__all__ = [
    "SolarError",
    "SunSample",
    "SkyModel",
    "winter_sun_samples",
    "face_irradiance",
    "avg_radiation",
    "Scene",
]

# ray origins leave the surface by 1 mm along the face normal
RAY_EPSILON = 1e-3


class SolarError(ValueError):
    pass


@dataclass(frozen=True)
class SunSample:
    day: int            # day of year, 1-based
    hour: float         # local solar time
    direction: tuple[float, float, float]   # unit (east, north, up)
    weight: float = 1.0


def _window_days(start: int, end: int, step: int) -> list[int]:
    if not (1 <= start <= 365 and 1 <= end <= 365):
        raise SolarError("window days must lie in 1..365")
    if step < 1:
        raise SolarError("day_step must be >= 1")
    if start <= end:
        days = list(range(start, end + 1))
    else:  # wraps the year boundary
        days = list(range(start, 366)) + list(range(1, end + 1))
    return days[::step]


def winter_sun_samples(sky: SkyConfig) -> list[SunSample]:
    """Direct-beam sun vectors over the winter window, day-major order.

    Declination delta = 23.45 deg * sin(360 deg * (284+n)/365); hour angle
    H = 15 deg * (t - 12).  Only instants with the sun above the horizon
    are emitted.  Trigonometry is evaluated on |H| with the sign applied
    afterwards, which makes the sample set exactly symmetric in its
    east components about solar noon.
    """
    if not abs(sky.latitude_deg) < 66.0:
        raise SolarError("latitude must satisfy |lat| < 66 (no polar day/night)")
    phi = math.radians(sky.latitude_deg)
    sin_phi, cos_phi = math.sin(phi), math.cos(phi)
    if sky.hour_step <= 0:
        raise SolarError("hour_step must be positive")
    hours = np.arange(0.0, 24.0, sky.hour_step)

    samples: list[SunSample] = []
    for day in _window_days(sky.window_start_day, sky.window_end_day, sky.day_step):
        decl = math.radians(23.45) * math.sin(math.radians(360.0 * (284 + day) / 365.0))
        sin_d, cos_d = math.sin(decl), math.cos(decl)
        for t in hours:
            h_abs = math.radians(15.0 * abs(t - 12.0))
            cos_h = math.cos(h_abs)
            sin_h = math.sin(h_abs) if t >= 12.0 else -math.sin(h_abs)
            up = sin_phi * sin_d + cos_phi * cos_d * cos_h
            if not up > 0.0:
                continue
            east = -cos_d * sin_h
            north = cos_phi * sin_d - sin_phi * cos_d * cos_h
            samples.append(SunSample(day, float(t), (east, north, up)))
    if not samples:
        raise SolarError("sun never rises inside the configured window")
    return samples


@dataclass(frozen=True)
class SkyModel:
    config: SkyConfig
    samples: tuple[SunSample, ...]
    directions: np.ndarray = field(repr=False)   # (S, 3) float64
    weights: np.ndarray = field(repr=False)      # (S,) float64

    @classmethod
    def from_config(cls, sky: SkyConfig | None = None) -> "SkyModel":
        sky = sky or SkyConfig()
        samples = winter_sun_samples(sky)
        directions = np.array([s.direction for s in samples], dtype=np.float64)
        weights = np.array([s.weight for s in samples], dtype=np.float64)
        directions.flags.writeable = False
        weights.flags.writeable = False
        return cls(sky, tuple(samples), directions, weights)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def scaled(self, factor: float) -> "SkyModel":
        if factor <= 0:
            raise SolarError("weight scale must be positive")
        scaled = tuple(
            SunSample(s.day, s.hour, s.direction, s.weight * factor) for s in self.samples
        )
        w = self.weights * factor
        w.flags.writeable = False
        return SkyModel(self.config, scaled, self.directions, w)


@dataclass(frozen=True)
class Scene:
    """A building mesh plus the analytic obstruction boxes shading it."""

    mesh: BuildingMesh
    boxes: np.ndarray       # (B, 6) closed boxes

    @classmethod
    def build(
        cls,
        heightmap: Heightmap,
        bc: BoundaryCondition | None,
        resolution: int,
    ) -> "Scene":
        mesh = heightmap_to_mesh(heightmap, resolution)
        return cls(mesh, _bc_boxes(bc, heightmap.geom))

    @classmethod
    def from_mesh(
        cls,
        mesh: BuildingMesh,
        bc: BoundaryCondition | None,
        geom: GeometryConfig | None = None,
    ) -> "Scene":
        return cls(mesh, _bc_boxes(bc, geom or GeometryConfig()))


def _bc_boxes(bc: BoundaryCondition | None, geom: GeometryConfig) -> np.ndarray:
    if bc is None or not bc.obstructions:
        return np.zeros((0, 6), dtype=np.float64)
    return np.array([b.as_array() for b in boundary_boxes(bc, geom)], dtype=np.float64)


def face_irradiance(scene: Scene, sky: SkyModel, backend: str | None = None) -> np.ndarray:
    """Per-face beam irradiance: sum of weight * cos(incidence) * visible."""
    mesh = scene.mesh
    if mesh.face_count == 0:
        return np.zeros(0, dtype=np.float64)
    origins = mesh.centroids() + RAY_EPSILON * mesh.normals
    name = backend or kernels.active_backend()
    if name == "numba":
        from .kernels import _numba as knb

        return knb.irradiance_batch(
            np.ascontiguousarray(origins),
            np.ascontiguousarray(mesh.normals),
            sky.directions,
            sky.weights,
            mesh.grid_north,
            mesh.cell_zmax,
            mesh.pitch,
            mesh.xmin,
            mesh.ymin,
            np.ascontiguousarray(scene.boxes, dtype=np.float64),
            float(mesh.cell_zmax.max()) if mesh.cell_zmax.size else 0.0,
        )
    out = np.zeros(mesh.face_count, dtype=np.float64)
    nrm = mesh.normals
    for s, w in zip(sky.directions, sky.weights):
        # component form matches the fused kernel's evaluation order exactly
        cos = (nrm[:, 0] * s[0] + nrm[:, 1] * s[1]) + nrm[:, 2] * s[2]
        active = cos > 0.0
        if not active.any():
            continue
        vis = kernels.ray_visible(origins[active], s, mesh, scene.boxes, backend="numpy")
        gain = np.zeros(mesh.face_count)
        gain[active] = (w * cos[active]) * vis
        out += gain
    return out


def avg_radiation(scene: Scene, sky: SkyModel, backend: str | None = None) -> float:
    """Area-weighted mean irradiance over the building faces."""
    mesh = scene.mesh
    building = mesh.tags == 0
    total_area = float(mesh.areas[building].sum())
    if mesh.face_count == 0 or total_area <= 0.0:
        raise SolarError("scene has no building faces to average over")
    irr = face_irradiance(scene, sky, backend=backend)
    return float((irr[building] * mesh.areas[building]).sum() / total_area)
