"""HTTP JSON API: boundary-condition catalog, guided generation, scoring.

The server wraps one immutable loaded model; per-request search state is
private, so concurrent generate calls cannot interact.  Responses for
identical (request, seed, model) are byte-identical: payloads are built
from deterministic computations and serialized with a fixed encoder.
Non-finite numbers (degenerate geometries) serialize as null.

Status codes: 400 malformed boundary condition or out-of-range heights,
409 no model loaded, 422 infeasible guidance.
"""

from __future__ import annotations

import dataclasses
import struct
import threading
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .bench import evaluate_depthmap, evaluate_inferences
from .codec import rasterize_scene
from .config import PipelineConfig
from .latent import infer_latent
from .nn import load_model
from .nn.vae import VaeModel
from .optimizer import scalarize
from .scene import (
    BoundaryCondition,
    Heightmap,
    Obstruction,
    SceneError,
    Side,
    boundary_condition_count,
    boundary_condition_from_id,
)
from .solar import SkyModel

__all__ = ["ApiSession", "create_app", "run_server", "checkpoint_crc"]


def checkpoint_crc(path: str) -> int:
    """CRC32 trailer of a checkpoint file (the last 4 bytes)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4:
        raise OSError(f"{path}: too short to carry a checksum")
    return struct.unpack("<I", blob[-4:])[0]


@dataclass
class ApiSession:
    """Immutable model + scene config shared by all requests."""

    cfg: PipelineConfig
    model: VaeModel | None = None
    crc: int | None = None
    sky: SkyModel = None
    counters: dict = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock)

    def __post_init__(self):
        if self.sky is None:
            self.sky = SkyModel.from_config(self.cfg.sky)

    def count(self, endpoint: str) -> None:
        with self._lock:
            self.counters[endpoint] = self.counters.get(endpoint, 0) + 1

    def require_model(self) -> VaeModel:
        if self.model is None:
            raise HTTPException(status_code=409, detail="no model loaded")
        return self.model


class Guidance(BaseModel):
    heightmap: list[list[float]]
    weight: float = Field(alias="lambda", ge=0.0)


class GenerateIn(BaseModel):
    bc: object = None
    count: int = Field(default=20, ge=1, le=100)
    seed: int = 0
    guidance: Guidance | None = None


class EvaluateIn(BaseModel):
    heightmap: list[list[float]]
    bc: object = None


def _num(x) -> float | None:
    x = float(x)
    return x if np.isfinite(x) else None


def _bc_payload(bc_id: int, bc: BoundaryCondition) -> dict:
    return {
        "id": bc_id,
        "obstructions": [
            {"side": o.side.value, "slot": o.slot} for o in bc.obstructions
        ],
    }


def _parse_bc(raw, cfg: PipelineConfig, allow_empty: bool):
    """Accept a canonical id or an explicit obstruction list.

    Returns (bc_id or None, BoundaryCondition or None); malformed input
    is a 400.
    """
    pps = cfg.geometry.positions_per_side
    total = boundary_condition_count(pps)
    if raw is None:
        if allow_empty:
            return None, None
        raise HTTPException(400, "a boundary condition is required")
    if isinstance(raw, bool):
        raise HTTPException(400, "boundary condition must be an id or object")
    if isinstance(raw, int):
        if not 0 <= raw < total:
            raise HTTPException(400, f"boundary condition id {raw} outside 0..{total - 1}")
        return raw, boundary_condition_from_id(raw, pps)
    if isinstance(raw, dict) and isinstance(raw.get("obstructions"), list):
        obs = []
        for entry in raw["obstructions"]:
            if not isinstance(entry, dict):
                raise HTTPException(400, "each obstruction must be an object")
            try:
                side = Side(entry.get("side"))
            except ValueError:
                raise HTTPException(400, f"unknown side {entry.get('side')!r}")
            slot = entry.get("slot")
            if not isinstance(slot, int) or isinstance(slot, bool) \
                    or not 0 <= slot < pps:
                raise HTTPException(400, f"slot must lie in 0..{pps - 1}")
            obs.append(Obstruction(side, slot))
        if not obs:
            if allow_empty:
                return None, None
            raise HTTPException(400, "the empty boundary condition cannot be a target")
        try:
            bc = BoundaryCondition(tuple(obs))
        except SceneError as e:
            raise HTTPException(400, str(e))
        return bc.canonical_id(pps), bc
    raise HTTPException(400, "boundary condition must be an id or "
                             "{'obstructions': [...]}")


def _parse_heights(rows, cfg: PipelineConfig, status: int) -> Heightmap:
    geom = cfg.geometry
    n = geom.grid_points
    arr = np.asarray(rows, dtype=object)
    try:
        arr = arr.astype(np.float64)
    except (TypeError, ValueError):
        raise HTTPException(status, "heightmap must be numeric")
    if arr.shape != (n, n):
        raise HTTPException(status, f"heightmap must be {n}x{n}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise HTTPException(status, "heights must be finite")
    if arr.min() < 0.0 or arr.max() > geom.height_cap:
        raise HTTPException(
            status, f"heights must lie in [0, {geom.height_cap}]"
        )
    return Heightmap(arr, geom)


def _field_payload(f) -> dict:
    return {
        "grid": f.grid.tolist(),
        "pitch": f.pitch,
        "xmin": f.xmin,
        "ymin": f.ymin,
    }


def create_app(
    cfg: PipelineConfig | None = None,
    model: VaeModel | None = None,
    crc: int | None = None,
    sky: SkyModel | None = None,
) -> FastAPI:
    cfg = cfg or PipelineConfig()
    session = ApiSession(cfg=cfg, model=model, crc=crc, sky=sky)
    app = FastAPI(title="heliogen", docs_url=None, redoc_url=None)
    app.state.session = session
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    catalog_cache: dict[str, object] = {}

    @app.get("/api/boundary-conditions")
    def boundary_conditions():
        session.count("boundary-conditions")
        if "payload" not in catalog_cache:
            pps = cfg.geometry.positions_per_side
            items = []
            for bc_id in range(boundary_condition_count(pps)):
                bc = boundary_condition_from_id(bc_id, pps)
                preview = rasterize_scene(bc, None, cfg.raster, cfg.geometry)
                entry = _bc_payload(bc_id, bc)
                entry["preview"] = preview.pixels.tolist()
                items.append(entry)
            catalog_cache["payload"] = {"count": len(items), "items": items}
        return JSONResponse(catalog_cache["payload"])

    @app.post("/api/generate")
    def generate(body: GenerateIn):
        session.count("generate")
        m = session.require_model()
        bc_id, bc = _parse_bc(body.bc, cfg, allow_empty=False)
        lcfg = dataclasses.replace(cfg.latent, restarts=body.count)
        guide = None
        if body.guidance is not None:
            guide = _parse_heights(body.guidance.heightmap, cfg, status=422)
            lcfg = dataclasses.replace(lcfg,
                                       guidance_weight=body.guidance.weight)
        else:
            lcfg = dataclasses.replace(lcfg, guidance_weight=0.0)
        results = infer_latent(
            m, bc_id, lcfg, rng_seed=(body.seed, bc_id), guide=guide,
            raster=cfg.raster, geom=cfg.geometry,
        )
        scored = evaluate_inferences(
            results, bc, session.sky, cfg.raster, cfg.geometry,
            cfg.anneal.target_volume,
        )
        order = sorted(range(len(scored)),
                       key=lambda i: (scored[i].boundary_loss, i))
        items = []
        for i in order:
            r = scored[i]
            items.append({
                "depth_map": r.depth.pixels.tolist(),
                "heightfield": _field_payload(r.field),
                "radiation": _num(r.perf.avg_radiation),
                "volume": _num(r.perf.volume),
                "vol_dev_sq": _num(r.perf.vol_dev_sq),
                "j": _num(scalarize(r.perf)),
                "boundary_loss": _num(r.boundary_loss),
            })
        return JSONResponse({"bc": _bc_payload(bc_id, bc), "seed": body.seed,
                             "results": items})

    @app.post("/api/evaluate")
    def evaluate(body: EvaluateIn):
        session.count("evaluate")
        _, bc = _parse_bc(body.bc, cfg, allow_empty=True)
        h = _parse_heights(body.heightmap, cfg, status=400)
        depth = rasterize_scene(bc, h, cfg.raster, cfg.geometry)
        perf = evaluate_depthmap(depth, bc, session.sky, cfg.raster,
                                 cfg.geometry, cfg.anneal.target_volume)
        return JSONResponse({
            "radiation": _num(perf.avg_radiation),
            "volume": _num(perf.volume),
            "j": _num(scalarize(perf)),
        })

    @app.get("/api/model/info")
    def model_info():
        session.count("model-info")
        m = session.require_model()
        return JSONResponse({
            "latent_dim": m.latent_dim,
            "image_size": m.image_size,
            "fc_width": 2 * m.latent_dim,
            "param_count": int(sum(p.data.size for p in m.parameters())),
            "checkpoint_crc": None if session.crc is None
            else f"{session.crc:08x}",
            "config_hash": cfg.content_hash(),
        })

    return app


def run_server(model_path: str, cfg: PipelineConfig | None = None,
               host: str = "127.0.0.1", port: int = 8787) -> None:
    import uvicorn

    model = load_model(model_path)
    app = create_app(cfg, model=model, crc=checkpoint_crc(model_path))
    uvicorn.run(app, host=host, port=port)
