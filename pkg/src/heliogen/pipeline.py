"""Dataset generation: annealing sweep per boundary condition, Pareto
selection, rasterization, and the train/test split, all through one path
so the CLI and the tests build identical files from identical seeds.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np

from .codec import Dataset, DatasetRecord, rasterize_scene, split_dataset
from .config import PipelineConfig
from .optimizer import SaTrace, sa_optimize, trace_points
from .pareto import select_k
from .scene import Heightmap, boundary_condition_count, boundary_condition_from_id
from .solar import SkyModel

__all__ = [
    "PipelineError",
    "bc_seed",
    "default_bc_ids",
    "generate_dataset",
]


class PipelineError(ValueError):
    pass


def bc_seed(rng_seed: int, bc_id: int) -> int:
    """Stable per-condition annealing seed derived from the run seed."""
    return int(np.random.SeedSequence([int(rng_seed), int(bc_id)]).generate_state(1)[0])


def default_bc_ids(count: int | None = None, positions_per_side: int = 6) -> list[int]:
    """All boundary-condition ids, or `count` of them spread evenly over the
    id range so small runs still cover empty, single- and multi-side cases."""
    total = boundary_condition_count(positions_per_side)
    if count is None or count >= total:
        return list(range(total))
    if count < 1:
        raise PipelineError("count must be >= 1")
    if count == 1:
        return [0]
    ids: list[int] = []
    for i in range(count):
        bc_id = round(i * (total - 1) / (count - 1))
        if bc_id not in ids:
            ids.append(bc_id)
    for bc_id in range(total):       # backfill collisions from the low end
        if len(ids) >= count:
            break
        if bc_id not in ids:
            ids.append(bc_id)
    return sorted(ids[:count])


def generate_dataset(
    bc_ids: Sequence[int],
    cfg: PipelineConfig | None = None,
    rng_seed: int = 0,
    sky: SkyModel | None = None,
    split_fraction: float | None = 0.9,
    progress: Callable[[int, int], None] | None = None,
    on_trace: Callable[[int, SaTrace], None] | None = None,
) -> Dataset:
    """Anneal each boundary condition, keep the spread-out Pareto picks,
    rasterize them, and return the split dataset.

    Records appear in bc order as given, selections_per_condition per bc,
    each selection in select_k order.  `progress(bc_id, records_so_far)`
    fires after each condition; `on_trace(bc_id, trace)` exposes the full
    annealing trace for audit dumps.  split_fraction=None leaves every
    record unassigned.
    """
    cfg = cfg or PipelineConfig()
    ids = [int(b) for b in bc_ids]
    if not ids:
        raise PipelineError("need at least one boundary condition")
    if len(set(ids)) != len(ids):
        raise PipelineError("duplicate boundary condition ids")
    if sky is None:
        sky = SkyModel.from_config(cfg.sky)

    pps = cfg.geometry.positions_per_side
    records: list[DatasetRecord] = []
    for bc_id in ids:
        bc = boundary_condition_from_id(bc_id, pps)
        trace = sa_optimize(bc, cfg, bc_seed(rng_seed, bc_id), sky=sky)
        if on_trace is not None:
            on_trace(bc_id, trace)
        chosen = select_k(trace_points(trace), cfg.anneal.selections_per_condition)
        for point in chosen:
            step = trace.step_by_index(point.payload)
            # snap before rasterizing so stored depth == rasterize(stored heights)
            snapped = Heightmap(
                step.heightmap.heights.astype(np.float32).astype(np.float64),
                cfg.geometry,
            )
            depth = rasterize_scene(bc, snapped, cfg.raster, cfg.geometry)
            records.append(
                DatasetRecord.create(bc_id, snapped, depth,
                                     step.perf.avg_radiation, step.perf.volume)
            )
        if progress is not None:
            progress(bc_id, len(records))

    ds = Dataset(tuple(records), cfg.raster.world_extent)
    if split_fraction is not None:
        ds = split_dataset(ds, split_fraction, rng_seed)
    return ds
