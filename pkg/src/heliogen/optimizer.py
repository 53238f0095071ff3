"""Scalarized objective and the simulated-annealing geometry search.

Each boundary condition gets an independent SA run that starts from the
flat target-volume slab, proposes one-cell height moves, and records
every evaluated candidate with both raw objectives so the Pareto
selection downstream can use the full trace.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .config import AnnealConfig, PipelineConfig
from .pareto import FrontPoint
from .scene import BoundaryCondition, Heightmap, heightfield_volume
from .solar import Scene, SkyModel, avg_radiation

__all__ = [
    "OptimizerError",
    "PerfPoint",
    "SaStep",
    "SaTrace",
    "scalarize",
    "propose_neighbor",
    "evaluate_heightmap",
    "sa_optimize",
    "trace_points",
    "write_trace_csv",
]

# weight of the squared volume deviation in the scalarized objective
VOLUME_PENALTY = 1e-3


class OptimizerError(ValueError):
    pass


@dataclass(frozen=True)
class PerfPoint:
    """Raw objective pair; minimization form is (-avg_radiation, vol_dev_sq)."""

    avg_radiation: float
    volume: float
    vol_dev_sq: float

    @classmethod
    def measure(cls, avg_radiation: float, volume: float, target_volume: float) -> "PerfPoint":
        return cls(float(avg_radiation), float(volume), (target_volume - volume) ** 2)

    def objectives(self) -> tuple[float, float]:
        return (-self.avg_radiation, self.vol_dev_sq)


def scalarize(p: PerfPoint) -> float:
    return -p.avg_radiation + p.vol_dev_sq * VOLUME_PENALTY


@dataclass(frozen=True)
class SaStep:
    index: int          # -1 for the start point, 0..steps-1 for candidates
    heightmap: Heightmap
    perf: PerfPoint
    j: float
    accepted: bool


@dataclass(frozen=True)
class SaTrace:
    bc: BoundaryCondition | None
    seed: int
    start: SaStep
    steps: tuple[SaStep, ...]
    anneal: AnnealConfig

    @property
    def all_steps(self) -> tuple[SaStep, ...]:
        return (self.start,) + self.steps

    def best(self) -> SaStep:
        return min(self.all_steps, key=lambda s: (s.j, s.index))

    def step_by_index(self, index: int) -> SaStep:
        return self.start if index == -1 else self.steps[index]


def propose_neighbor(h: Heightmap, rng: np.random.Generator, delta: float = 1.0) -> Heightmap:
    """Perturb one uniformly chosen cell by U[-delta, +delta], clamped."""
    n = h.geom.grid_points
    flat = int(rng.integers(0, n * n))
    i, j = divmod(flat, n)
    heights = np.array(h.heights)
    heights[i, j] = np.clip(heights[i, j] + rng.uniform(-delta, delta), 0.0, h.geom.height_cap)
    return Heightmap(heights, h.geom)


def evaluate_heightmap(
    h: Heightmap,
    bc: BoundaryCondition | None,
    sky: SkyModel,
    mesh_resolution: int,
    target_volume: float,
    backend: str | None = None,
) -> PerfPoint:
    """The one evaluation path shared by SA, the bench, and inference scoring."""
    scene = Scene.build(h, bc, mesh_resolution)
    rad = avg_radiation(scene, sky, backend=backend)
    vol = heightfield_volume(h.heights, h.geom.grid_pitch**2)
    return PerfPoint.measure(rad, vol, target_volume)


def sa_optimize(
    bc: BoundaryCondition | None,
    cfg: PipelineConfig,
    rng_seed: int,
    sky: SkyModel | None = None,
    steps: int | None = None,
    backend: str | None = None,
) -> SaTrace:
    """Metropolis simulated annealing with geometric cooling.

    Candidate k runs at temperature T_k = start_temp * alpha^k with
    alpha = (end_temp / start_temp)^(1/steps).  The trace holds every
    evaluated candidate; the flat-slab start point is kept separately at
    index -1 so best() can never fall below it.
    """
    an = cfg.anneal
    n_steps = an.steps if steps is None else int(steps)
    if n_steps < 1:
        raise OptimizerError("steps must be >= 1")
    if sky is None:
        sky = SkyModel.from_config(cfg.sky)
    rng = np.random.default_rng(rng_seed)
    alpha = (an.end_temp / an.start_temp) ** (1.0 / n_steps)

    geom = cfg.geometry
    start_height = an.target_volume / geom.plot_size**2
    current = Heightmap(np.full((geom.grid_points,) * 2, start_height), geom)
    current_perf = evaluate_heightmap(current, bc, sky, an.mesh_resolution,
                                      an.target_volume, backend)
    current_j = scalarize(current_perf)
    start = SaStep(-1, current, current_perf, current_j, True)

    trace: list[SaStep] = []
    for k in range(n_steps):
        temp = an.start_temp * alpha**k
        cand = propose_neighbor(current, rng, an.move_delta)
        perf = evaluate_heightmap(cand, bc, sky, an.mesh_resolution,
                                  an.target_volume, backend)
        j = scalarize(perf)
        dj = j - current_j
        accepted = dj <= 0.0 or rng.random() < math.exp(-dj / temp)
        trace.append(SaStep(k, cand, perf, j, accepted))
        if accepted:
            current, current_j = cand, j
    return SaTrace(bc, int(rng_seed), start, tuple(trace), an)


def trace_points(trace: SaTrace) -> list[FrontPoint]:
    """Every evaluated point as a minimization pair, payload = step index."""
    return [FrontPoint(*s.perf.objectives(), s.index) for s in trace.all_steps]


def write_trace_csv(trace: SaTrace, fh) -> None:
    """Audit dump: step, radiation, volume, J, accepted (start row = -1)."""
    writer = csv.writer(fh)
    writer.writerow(["step", "avg_radiation", "volume", "j", "accepted"])
    for s in trace.all_steps:
        writer.writerow(
            [s.index, repr(s.perf.avg_radiation), repr(s.perf.volume), repr(s.j),
             int(s.accepted)]
        )
