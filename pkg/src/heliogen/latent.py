"""Decoder inversion: gradient descent over the latent space.

Given a boundary condition, find latent vectors whose decoded depth
maps reproduce the obstruction pattern on the boundary ring of the
image.  The search minimizes a masked sigmoid cross-entropy against
the rasterized bare boundary condition; an optional guidance term
pulls the plot region toward a user-sketched heightmap.

All restarts advance together as one batch.  Rows never mix: the
decoder, the loss reductions, and Adam all act per row, so each
restart's trajectory is exactly what a solo run would produce, while
the compiled kernels see one large batch instead of many tiny ones.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .codec import (
    DecodedField,
    DepthMap,
    PixelMasks,
    boundary_target,
    decode_to_heightfield,
    pixel_masks,
    rasterize_scene,
)
from .config import GeometryConfig, LatentSearchConfig, RasterConfig
from .nn import Adam, Tensor, sigmoid_cross_entropy
from .nn.vae import VaeModel
from .optimizer import PerfPoint
from .scene import BoundaryCondition, Heightmap, boundary_condition_from_id

__all__ = [
    "LatentError",
    "InferenceResult",
    "boundary_loss",
    "guided_loss",
    "infer_latent",
]


class LatentError(ValueError):
    """Invalid search configuration or mismatched shapes."""


@dataclass(frozen=True)
class InferenceResult:
    """Best-so-far outcome of one restart.

    ``depth`` is the sigmoid of the decoder logits at ``z``; ``field``
    is its plot heightfield.  ``perf`` stays None until the bench (or
    service) evaluates the geometry through the common depth-map path.
    ``trace`` holds the per-iteration best-so-far loss when requested.
    """

    z: np.ndarray
    depth: DepthMap
    boundary_loss: float
    iterations: int
    field: DecodedField
    perf: PerfPoint | None = None
    trace: tuple[float, ...] | None = None

    def with_perf(self, perf: PerfPoint) -> "InferenceResult":
        return replace(self, perf=perf)


# ------------------------------------------------------------ loss math


def _stable_ce(logits: np.ndarray, targets: np.ndarray) -> np.ndarray:
    return (
        np.maximum(logits, 0.0)
        - logits * targets
        + np.log1p(np.exp(-np.abs(logits)))
    )


def boundary_loss(
    target: DepthMap,
    logits: np.ndarray,
    raster: RasterConfig | None = None,
    geom: GeometryConfig | None = None,
) -> float:
    """Sigmoid cross-entropy summed over boundary-ring pixels.

    Plot pixels are masked out entirely; perturbing them cannot change
    the value.
    """
    masks = _masks(raster, geom)
    logits = np.asarray(logits, dtype=np.float64)
    if logits.shape != target.pixels.shape:
        raise LatentError(
            f"logits shape {logits.shape} != target shape {target.pixels.shape}"
        )
    ce = _stable_ce(logits, target.pixels.astype(np.float64))
    return float(ce[masks.boundary].sum())


def guided_loss(
    target: DepthMap,
    user_geometry: Heightmap,
    guidance_weight: float,
    logits: np.ndarray,
    bc: BoundaryCondition | None = None,
    raster: RasterConfig | None = None,
    geom: GeometryConfig | None = None,
) -> float:
    """Boundary loss plus a plot-region pull toward the user's sketch.

    The sketch is rasterized to depth pixels; the guidance term is the
    squared difference between the decoded plot pixels and the sketch's,
    scaled by ``guidance_weight``.  Weight zero reduces exactly to
    ``boundary_loss``.
    """
    if guidance_weight < 0.0:
        raise LatentError("guidance weight must be nonnegative")
    base = boundary_loss(target, logits, raster, geom)
    if guidance_weight == 0.0:
        return base
    masks = _masks(raster, geom)
    guide = rasterize_scene(bc, user_geometry, raster, geom).pixels.astype(np.float64)
    probs = _sigmoid64(np.asarray(logits, dtype=np.float64))
    diff = (probs - guide)[masks.plot]
    return base + guidance_weight * float((diff * diff).sum())


def _sigmoid64(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _masks(raster, geom) -> PixelMasks:
    return pixel_masks(raster or RasterConfig(), geom or GeometryConfig())


# ---------------------------------------------------------- the search


def infer_latent(
    model: VaeModel,
    bc_id: int,
    config: LatentSearchConfig | None = None,
    rng_seed: int | tuple[int, ...] = 0,
    guide: Heightmap | None = None,
    raster: RasterConfig | None = None,
    geom: GeometryConfig | None = None,
    collect_trace: bool = False,
) -> list[InferenceResult]:
    """One gradient-descent search per restart; results in restart order.

    Restart r draws its start from ``default_rng([*rng_seed, r])``, so a
    restart's outcome does not depend on how many others ran.
    """
    config = config or LatentSearchConfig()
    raster = raster or RasterConfig()
    geom = geom or GeometryConfig()
    _validate(model, config, raster)
    target = boundary_target(bc_id, raster, geom)
    masks = pixel_masks(raster, geom)
    n = config.restarts
    size = model.image_size
    dtype = model.dtype

    # frozen private copy: weight gradients are pure waste during search
    search = model.astype(dtype)
    for p in search.parameters():
        p.requires_grad = False

    target_b = np.ascontiguousarray(
        np.broadcast_to(target.pixels.astype(dtype), (n, size, size))[..., None]
    )
    bmask = Tensor(masks.boundary.astype(dtype)[None, :, :, None])
    lam = float(config.guidance_weight)
    if guide is not None and lam > 0.0:
        bc = boundary_condition_from_id(bc_id, geom.positions_per_side)
        guide_px = rasterize_scene(bc, guide, raster, geom).pixels.astype(dtype)
        guide_b = Tensor(np.ascontiguousarray(
            np.broadcast_to(guide_px, (n, size, size))[..., None]
        ))
        pmask = Tensor(masks.plot.astype(dtype)[None, :, :, None])
    else:
        guide_b = pmask = None

    base = (rng_seed,) if isinstance(rng_seed, int) else tuple(rng_seed)
    z0 = np.stack(
        [
            np.random.default_rng([*base, r]).standard_normal(model.latent_dim)
            for r in range(n)
        ]
    ).astype(dtype)
    z = Tensor(z0, requires_grad=True, name="z")
    opt = Adam([z], lr=config.learning_rate)

    best_loss = np.full(n, np.inf)
    best_z = z0.copy()
    stale = np.zeros(n, dtype=np.int64)   # iterations without >threshold gain
    stopped = np.zeros(n, dtype=bool)
    iters = np.zeros(n, dtype=np.int64)
    traces: list[list[float]] = [[] for _ in range(n)] if collect_trace else []

    for it in range(1, config.iterations + 1):
        logits = search.decode_t(z)
        ce = sigmoid_cross_entropy(logits, target_b)
        per_row = (ce * bmask).sum(axis=(1, 2, 3))
        if guide_b is not None:
            gd = (logits.sigmoid() - guide_b) * pmask
            per_row = per_row + (gd * gd).sum(axis=(1, 2, 3)) * lam
        vals = per_row.data.astype(np.float64)

        active = ~stopped
        gained = active & (best_loss - vals >= config.convergence_threshold)
        improved = active & (vals < best_loss)
        best_z[improved] = z.data[improved]
        best_loss[improved] = vals[improved]
        stale[gained] = 0
        stale[active & ~gained] += 1
        iters[active] = it
        if collect_trace:
            for r in range(n):
                if active[r]:
                    traces[r].append(float(best_loss[r]))
        stopped |= stale >= config.convergence_window
        if stopped.all():
            break
        opt.zero_grad()
        per_row.sum().backward()
        opt.step()

    logits_t = search.decode_t(Tensor(best_z))
    logits_best = logits_t.data[:, :, :, 0]
    probs_best = logits_t.sigmoid().data[:, :, :, 0]
    results = []
    for r in range(n):
        depth = DepthMap(probs_best[r].astype(np.float32), raster.world_extent)
        results.append(
            InferenceResult(
                z=best_z[r].copy(),
                depth=depth,
                boundary_loss=boundary_loss(target, logits_best[r], raster, geom),
                iterations=int(iters[r]),
                field=decode_to_heightfield(depth, raster, geom),
                trace=tuple(traces[r]) if collect_trace else None,
            )
        )
    return results


def _validate(model: VaeModel, config: LatentSearchConfig, raster: RasterConfig):
    if config.learning_rate <= 0.0:
        raise LatentError("learning rate must be positive")
    if config.iterations < 1 or config.restarts < 1:
        raise LatentError("iterations and restarts must be at least 1")
    if config.convergence_window < 1 or config.convergence_threshold < 0.0:
        raise LatentError("invalid convergence settings")
    if config.guidance_weight < 0.0:
        raise LatentError("guidance weight must be nonnegative")
    if model.image_size != raster.image_size:
        raise LatentError(
            f"model decodes {model.image_size}px images,"
            f" raster expects {raster.image_size}px"
        )
