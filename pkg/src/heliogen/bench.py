"""Evaluation bench: one decoding path, many candidate sources.

Every geometry — dataset ground truth, VAE reconstruction, latent-space
inference, hand-built baseline, or random draw — is scored the same way:
its 16x16 depth map is decoded to the plot heightfield, meshed at the
decoded resolution, and measured for winter radiation and volume
deviation.  That keeps group comparisons free of simulator mismatch.

Degenerate all-zero geometries carry NaN radiation (there is no
building to irradiate) and are reported, not dropped; front and
hypervolume computations skip non-finite points.
"""

from __future__ import annotations

import platform
import time
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from .codec import Dataset, DepthMap, decode_to_heightfield, rasterize_scene
from .config import (
    AnnealConfig,
    GeometryConfig,
    LatentSearchConfig,
    PipelineConfig,
    RasterConfig,
)
from .latent import InferenceResult, infer_latent
from .nn import decode as nn_decode
from .nn import encode as nn_encode
from .nn.vae import VaeModel
from .optimizer import PerfPoint, sa_optimize
from .pareto import FrontPoint, common_reference_point, hypervolume_2d, pareto_front
from .scene import (
    BoundaryCondition,
    baseline_flat_roof,
    baseline_random,
    baseline_tilted_roof,
    boundary_condition_from_id,
)
from .solar import Scene, SkyModel, avg_radiation

__all__ = [
    "GROUP_LABELS",
    "BenchError",
    "EvalGroup",
    "GroupSummary",
    "HvRow",
    "TimingReport",
    "evaluate_depthmap",
    "evaluate_inferences",
    "test_set_eval",
    "reconstruction_eval",
    "inference_eval",
    "baseline_eval",
    "summarize",
    "hypervolume_report",
    "timing_report",
    "write_scatter_csv",
    "write_fronts_csv",
    "write_hypervolumes_csv",
    "write_timings_csv",
]

GROUP_LABELS = (
    "test_set",
    "reconstruction",
    "inference",
    "baseline_flat",
    "baseline_tilted",
    "random_uniform",
    "random_gaussian",
)

TILT_BASELINE_DEG = 42.0


class BenchError(ValueError):
    """Missing groups or invalid bench configuration."""


@dataclass(frozen=True)
class EvalGroup:
    """Scored depth maps from one source for one boundary condition."""

    label: str
    bc_id: int
    items: tuple[tuple[DepthMap, PerfPoint], ...]

    def __post_init__(self):
        if self.label not in GROUP_LABELS:
            raise BenchError(f"unknown group label {self.label!r}")

    def perf_points(self) -> list[PerfPoint]:
        return [p for _, p in self.items]

    def front_points(self) -> list[FrontPoint]:
        """Objective-space points, indexed by item, non-finite skipped."""
        pts = []
        for i, (_, p) in enumerate(self.items):
            o1, o2 = p.objectives()
            if np.isfinite(o1) and np.isfinite(o2):
                pts.append(FrontPoint(o1, o2, payload=i))
        return pts


@dataclass(frozen=True)
class GroupSummary:
    """Per-group moments for scatter plots (population std)."""

    label: str
    bc_id: int
    count: int
    degenerate: int
    mean_radiation: float
    std_radiation: float
    mean_vol_dev_sq: float
    std_vol_dev_sq: float


def summarize(group: EvalGroup) -> GroupSummary:
    rad = np.array([p.avg_radiation for p in group.perf_points()])
    vdq = np.array([p.vol_dev_sq for p in group.perf_points()])
    ok = np.isfinite(rad)
    degenerate = int((~ok).sum())
    if not ok.any():
        raise BenchError(f"group {group.label}/{group.bc_id} is entirely degenerate")
    return GroupSummary(
        label=group.label,
        bc_id=group.bc_id,
        count=len(group.items),
        degenerate=degenerate,
        mean_radiation=float(rad[ok].mean()),
        std_radiation=float(rad[ok].std()),
        mean_vol_dev_sq=float(vdq[ok].mean()),
        std_vol_dev_sq=float(vdq[ok].std()),
    )


# ------------------------------------------------------- the shared path


def evaluate_depthmap(
    d: DepthMap,
    bc: BoundaryCondition | None,
    sky: SkyModel | None = None,
    raster: RasterConfig | None = None,
    geom: GeometryConfig | None = None,
    target_volume: float = 100.0,
    backend: str | None = None,
) -> PerfPoint:
    """Score one depth map: decode, mesh, irradiate, measure volume.

    An all-zero plot region has no building to irradiate: radiation is
    NaN and the volume objective alone is meaningful.
    """
    sky = sky or SkyModel.from_config()
    geom = geom or GeometryConfig()
    field = decode_to_heightfield(d, raster, geom)
    volume = field.volume()
    if volume <= 0.0:
        return PerfPoint.measure(float("nan"), 0.0, target_volume)
    scene = Scene.from_mesh(field.mesh(), bc, geom)
    rad = avg_radiation(scene, sky, backend=backend)
    return PerfPoint.measure(rad, volume, target_volume)


def evaluate_inferences(
    results: Iterable[InferenceResult],
    bc: BoundaryCondition | None,
    sky: SkyModel | None = None,
    raster: RasterConfig | None = None,
    geom: GeometryConfig | None = None,
    target_volume: float = 100.0,
    backend: str | None = None,
) -> list[InferenceResult]:
    """Attach a PerfPoint to each search result via the shared path."""
    return [
        r.with_perf(
            evaluate_depthmap(r.depth, bc, sky, raster, geom, target_volume, backend)
        )
        for r in results
    ]


# ------------------------------------------------------------ the groups


def test_set_eval(
    dataset: Dataset,
    sky: SkyModel | None = None,
    raster: RasterConfig | None = None,
    geom: GeometryConfig | None = None,
    target_volume: float = 100.0,
) -> list[EvalGroup]:
    """Ground-truth records rescored through the common decoding path."""
    geom = geom or GeometryConfig()
    groups = []
    for bc_id in sorted({r.bc_id for r in dataset.test_records}):
        bc = boundary_condition_from_id(bc_id, geom.positions_per_side)
        items = tuple(
            (r.depth, evaluate_depthmap(r.depth, bc, sky, raster, geom, target_volume))
            for r in dataset.test_records
            if r.bc_id == bc_id
        )
        groups.append(EvalGroup("test_set", bc_id, items))
    return groups


def reconstruction_eval(
    model: VaeModel,
    dataset: Dataset,
    sky: SkyModel | None = None,
    samples_per_record: int = 100,
    rng_seed: int = 0,
    raster: RasterConfig | None = None,
    geom: GeometryConfig | None = None,
    target_volume: float = 100.0,
) -> list[EvalGroup]:
    """Sampled VAE round-trips of every test record, scored per bc."""
    if samples_per_record < 1:
        raise BenchError("samples_per_record must be at least 1")
    raster = raster or RasterConfig()
    geom = geom or GeometryConfig()
    groups = []
    for bc_id in sorted({r.bc_id for r in dataset.test_records}):
        bc = boundary_condition_from_id(bc_id, geom.positions_per_side)
        items = []
        records = [r for r in dataset.test_records if r.bc_id == bc_id]
        for idx, record in enumerate(records):
            mu, logvar = nn_encode(model, record.depth.pixels[None])
            rng = np.random.default_rng([rng_seed, bc_id, idx])
            eps = rng.standard_normal((samples_per_record, model.latent_dim))
            z = mu + np.exp(0.5 * logvar) * eps.astype(np.float32)
            probs = nn_decode(model, z)
            for s in range(samples_per_record):
                depth = DepthMap(probs[s], raster.world_extent)
                perf = evaluate_depthmap(depth, bc, sky, raster, geom, target_volume)
                items.append((depth, perf))
        groups.append(EvalGroup("reconstruction", bc_id, tuple(items)))
    return groups


def inference_eval(
    model: VaeModel,
    bc_ids: Iterable[int],
    config: LatentSearchConfig | None = None,
    sky: SkyModel | None = None,
    rng_seed: int = 0,
    raster: RasterConfig | None = None,
    geom: GeometryConfig | None = None,
    target_volume: float = 100.0,
) -> list[EvalGroup]:
    """Latent-space searches per bc, each restart scored."""
    geom = geom or GeometryConfig()
    groups = []
    for bc_id in sorted(set(bc_ids)):
        bc = boundary_condition_from_id(bc_id, geom.positions_per_side)
        results = infer_latent(
            model, bc_id, config, rng_seed=(rng_seed, bc_id), raster=raster, geom=geom
        )
        scored = evaluate_inferences(results, bc, sky, raster, geom, target_volume)
        items = tuple((r.depth, r.perf) for r in scored)
        groups.append(EvalGroup("inference", bc_id, items))
    return groups


def baseline_eval(
    bc_id: int,
    sky: SkyModel | None = None,
    n_random: int = 20,
    rng_seed: int = 0,
    raster: RasterConfig | None = None,
    geom: GeometryConfig | None = None,
    target_volume: float = 100.0,
) -> list[EvalGroup]:
    """Flat-slab, tilted-roof, and random-generator reference groups."""
    if n_random < 1:
        raise BenchError("n_random must be at least 1")
    geom = geom or GeometryConfig()
    bc = boundary_condition_from_id(bc_id, geom.positions_per_side)

    def score(heightmap) -> tuple[DepthMap, PerfPoint]:
        depth = rasterize_scene(bc, heightmap, raster, geom)
        return depth, evaluate_depthmap(depth, bc, sky, raster, geom, target_volume)

    flat = EvalGroup(
        "baseline_flat", bc_id, (score(baseline_flat_roof(target_volume, geom)),)
    )
    tilted = EvalGroup(
        "baseline_tilted", bc_id, (score(baseline_tilted_roof(TILT_BASELINE_DEG, geom)),)
    )
    randoms = []
    for label, kind in (("random_uniform", "uniform"), ("random_gaussian", "gaussian")):
        items = tuple(
            score(baseline_random(kind, [rng_seed, bc_id, k], geom))
            for k in range(n_random)
        )
        randoms.append(EvalGroup(label, bc_id, items))
    return [flat, tilted] + randoms


# ---------------------------------------------------------- aggregation


@dataclass(frozen=True)
class HvRow:
    """Pareto-front hypervolumes under one shared reference point."""

    bc_id: int
    hv_test: float
    hv_reconstruction: float
    hv_inference: float
    ref_neg_radiation: float
    ref_vol_dev_sq: float


def hypervolume_report(groups: Iterable[EvalGroup]) -> list[HvRow]:
    """Per bc: one reference over all three groups, one HV per front."""
    by_bc: dict[int, dict[str, EvalGroup]] = {}
    for g in groups:
        by_bc.setdefault(g.bc_id, {})[g.label] = g
    rows = []
    for bc_id in sorted(by_bc):
        have = by_bc[bc_id]
        needed = ("test_set", "reconstruction", "inference")
        missing = [n for n in needed if n not in have]
        if missing:
            raise BenchError(f"bc {bc_id} is missing groups: {missing}")
        sets = [have[n].front_points() for n in needed]
        if any(not s for s in sets):
            raise BenchError(f"bc {bc_id} has an empty (all-degenerate) group")
        ref = common_reference_point(sets)
        hv = [hypervolume_2d(pareto_front(s), ref) for s in sets]
        rows.append(HvRow(bc_id, hv[0], hv[1], hv[2], ref[0], ref[1]))
    return rows


@dataclass(frozen=True)
class TimingReport:
    """Wall-clock comparison of annealing vs latent inference."""

    sa_seconds: tuple[float, ...]
    inference_seconds: tuple[float, ...]
    sa_steps: int
    restarts: int
    bc_ids: tuple[int, ...]
    hardware: str

    @property
    def sa_mean(self) -> float:
        return float(np.mean(self.sa_seconds))

    @property
    def inference_mean(self) -> float:
        return float(np.mean(self.inference_seconds))

    @property
    def ratio(self) -> float:
        return self.sa_mean / self.inference_mean


def timing_report(
    model: VaeModel,
    bc_ids: Iterable[int],
    pipeline: PipelineConfig | None = None,
    sky: SkyModel | None = None,
    rng_seed: int = 0,
) -> TimingReport:
    """Time full SA runs and full multi-restart inferences per bc."""
    pipeline = pipeline or PipelineConfig()
    bc_list = sorted(set(bc_ids))
    if len(bc_list) < 3:
        raise BenchError("timing needs at least 3 boundary conditions")
    sky = sky or SkyModel.from_config(pipeline.sky)
    geom = pipeline.geometry
    sa_times, inf_times = [], []
    for bc_id in bc_list:
        bc = boundary_condition_from_id(bc_id, geom.positions_per_side)
        t0 = time.perf_counter()
        sa_optimize(bc, pipeline, rng_seed=rng_seed, sky=sky)
        sa_times.append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        infer_latent(
            model, bc_id, pipeline.latent, rng_seed=(rng_seed, bc_id),
            raster=pipeline.raster, geom=geom,
        )
        inf_times.append(time.perf_counter() - t0)
    return TimingReport(
        sa_seconds=tuple(sa_times),
        inference_seconds=tuple(inf_times),
        sa_steps=pipeline.anneal.steps,
        restarts=pipeline.latent.restarts,
        bc_ids=tuple(bc_list),
        hardware=f"{platform.platform()} / {platform.processor() or 'unknown cpu'}",
    )


# ------------------------------------------------------------------ CSV


def write_scatter_csv(groups: Iterable[EvalGroup], fh: TextIO) -> None:
    fh.write("group,bc_id,radiation,vol_dev_sq\n")
    for g in groups:
        for _, p in g.items:
            fh.write(f"{g.label},{g.bc_id},{p.avg_radiation!r},{p.vol_dev_sq!r}\n")


def write_fronts_csv(groups: Iterable[EvalGroup], fh: TextIO) -> None:
    fh.write("group,bc_id,radiation,vol_dev_sq\n")
    for g in groups:
        for p in pareto_front(g.front_points()):
            fh.write(f"{g.label},{g.bc_id},{-p.o1!r},{p.o2!r}\n")


def write_hypervolumes_csv(rows: Iterable[HvRow], fh: TextIO) -> None:
    fh.write(
        "bc_id,hv_test,hv_reconstruction,hv_inference,"
        "ref_neg_radiation,ref_vol_dev_sq\n"
    )
    for r in rows:
        fh.write(
            f"{r.bc_id},{r.hv_test!r},{r.hv_reconstruction!r},"
            f"{r.hv_inference!r},{r.ref_neg_radiation!r},{r.ref_vol_dev_sq!r}\n"
        )


def write_timings_csv(report: TimingReport, fh: TextIO) -> None:
    fh.write(
        "sa_mean_s,inference_mean_s,ratio,sa_steps,restarts,bc_count,hardware\n"
    )
    fh.write(
        f"{report.sa_mean!r},{report.inference_mean!r},{report.ratio!r},"
        f"{report.sa_steps},{report.restarts},{len(report.bc_ids)},"
        f"\"{report.hardware}\"\n"
    )
