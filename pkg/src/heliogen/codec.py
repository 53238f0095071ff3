"""Depth-map encoding of scenes and the binary dataset container.

A scene (building heightmap plus obstruction boxes) becomes one 16x16
grayscale image sampled at pixel centers, heights normalized by the
shared 10 m cap.  The plot pixels form an exact 6x6 sub-grid that
decodes back to an evaluable heightfield, which is the common path for
scoring both ground-truth and generated images.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import GeometryConfig, RasterConfig
from .fileio import ChecksumReader, ChecksumWriter, FormatError
from .optimizer import PerfPoint
from .scene import (
    BoundaryCondition,
    BuildingMesh,
    Heightmap,
    bilinear_eval,
    boundary_boxes,
    boundary_condition_from_id,
    grid_to_mesh,
    heightfield_volume,
)

__all__ = [
    "CodecError",
    "DepthMap",
    "PixelMasks",
    "DecodedField",
    "DatasetRecord",
    "Dataset",
    "pixel_centers",
    "pixel_masks",
    "rasterize_scene",
    "decode_to_heightfield",
    "field_to_heightmap",
    "boundary_target",
    "split_dataset",
    "write_dataset",
    "read_dataset",
]

MAGIC = b"PDGD"
VERSION = 1

SPLIT_UNASSIGNED = 0
SPLIT_TRAIN = 1
SPLIT_TEST = 2


class CodecError(ValueError):
    pass


@dataclass(frozen=True)
class DepthMap:
    pixels: np.ndarray          # (H, W) float32 in [0, 1], row 0 = north
    world_extent: float

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float32)
        if px.ndim != 2:
            raise CodecError(f"depth map must be 2-D, got shape {px.shape}")
        if np.any(px < 0.0) or np.any(px > 1.0):
            raise CodecError("depth-map pixels must lie in [0, 1]")
        px = px.copy()
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)


@dataclass(frozen=True)
class PixelMasks:
    plot: np.ndarray            # pixel centers inside the plot footprint
    boundary: np.ndarray        # everything else


def pixel_centers(raster: RasterConfig) -> tuple[np.ndarray, np.ndarray]:
    """World coordinates of pixel centers: xs west→east, ys north→south."""
    ps = raster.pixel_size
    half = raster.world_extent / 2.0
    xs = -half + (np.arange(raster.image_size) + 0.5) * ps
    ys = half - (np.arange(raster.image_size) + 0.5) * ps
    return xs, ys


def pixel_masks(raster: RasterConfig | None = None,
                geom: GeometryConfig | None = None) -> PixelMasks:
    raster = raster or RasterConfig()
    geom = geom or GeometryConfig()
    xs, ys = pixel_centers(raster)
    half = geom.half_plot
    in_x = np.abs(xs) <= half
    in_y = np.abs(ys) <= half
    plot = in_y[:, None] & in_x[None, :]
    return PixelMasks(plot=plot, boundary=~plot)


def rasterize_scene(
    bc: BoundaryCondition | None,
    h: Heightmap | None,
    raster: RasterConfig | None = None,
    geom: GeometryConfig | None = None,
) -> DepthMap:
    """Top-view depth image: max of building, obstructions and ground at
    each pixel center, normalized by the height cap."""
    raster = raster or RasterConfig()
    geom = geom or (h.geom if h is not None else GeometryConfig())
    xs, ys = pixel_centers(raster)
    gx, gy = np.meshgrid(xs, ys)
    height = np.zeros_like(gx)

    if h is not None:
        masks = pixel_masks(raster, geom)
        half = geom.half_plot
        building = bilinear_eval(h.heights, gx, gy, geom.grid_pitch, -half, half)
        height = np.where(masks.plot, building, 0.0)

    if bc is not None:
        for box in boundary_boxes(bc, geom):
            inside = (
                (gx >= box.xmin) & (gx <= box.xmax)
                & (gy >= box.ymin) & (gy <= box.ymax)
            )
            height = np.maximum(height, np.where(inside, box.zmax, 0.0))

    pixels = np.clip(height / geom.height_cap, 0.0, 1.0).astype(np.float32)
    return DepthMap(pixels, raster.world_extent)


@dataclass(frozen=True)
class DecodedField:
    """Plot-region heightfield recovered from a depth map."""

    grid: np.ndarray            # (n, n) heights in meters, row 0 = north
    pitch: float
    xmin: float
    ymin: float

    def volume(self) -> float:
        return heightfield_volume(self.grid, self.pitch**2)

    def mesh(self) -> BuildingMesh:
        return grid_to_mesh(self.grid, self.pitch, self.xmin, self.ymin)


def decode_to_heightfield(
    d: DepthMap,
    raster: RasterConfig | None = None,
    geom: GeometryConfig | None = None,
) -> DecodedField:
    """Extract the plot sub-grid as heights; the one evaluation path for
    both ground-truth and generated images."""
    raster = raster or RasterConfig()
    geom = geom or GeometryConfig()
    if d.pixels.shape != (raster.image_size, raster.image_size):
        raise CodecError(
            f"depth map shape {d.pixels.shape} does not match the "
            f"{raster.image_size}x{raster.image_size} raster config"
        )
    masks = pixel_masks(raster, geom)
    rows = np.where(masks.plot.any(axis=1))[0]
    cols = np.where(masks.plot.any(axis=0))[0]
    rect = np.zeros_like(masks.plot)
    rect[np.ix_(rows, cols)] = True
    if not np.array_equal(rect, masks.plot):
        raise CodecError("plot mask is not a rectangular pixel block")
    xs, ys = pixel_centers(raster)
    grid = d.pixels[np.ix_(rows, cols)].astype(np.float64) * geom.height_cap
    return DecodedField(
        grid=grid,
        pitch=raster.pixel_size,
        xmin=float(xs[cols[0]]),
        ymin=float(ys[rows[-1]]),
    )


@dataclass(frozen=True)
class DatasetRecord:
    """One (boundary condition, optimal geometry) pair.

    Floats are snapped to float32 at creation so that what lives in
    memory is exactly what the file stores.
    """

    bc_id: int
    heightmap: Heightmap
    depth: DepthMap
    avg_radiation: float
    volume: float
    split: int = SPLIT_UNASSIGNED

    @classmethod
    def create(
        cls,
        bc_id: int,
        heightmap: Heightmap,
        depth: DepthMap,
        avg_radiation: float,
        volume: float,
        split: int = SPLIT_UNASSIGNED,
    ) -> "DatasetRecord":
        snapped = Heightmap(
            heightmap.heights.astype(np.float32).astype(np.float64), heightmap.geom
        )
        return cls(
            bc_id=int(bc_id),
            heightmap=snapped,
            depth=depth,
            avg_radiation=float(np.float32(avg_radiation)),
            volume=float(np.float32(volume)),
            split=int(split),
        )

    def perf(self, target_volume: float = 100.0) -> PerfPoint:
        return PerfPoint.measure(self.avg_radiation, self.volume, target_volume)

    def with_split(self, split: int) -> "DatasetRecord":
        return DatasetRecord(self.bc_id, self.heightmap, self.depth,
                             self.avg_radiation, self.volume, int(split))


@dataclass(frozen=True)
class Dataset:
    records: tuple[DatasetRecord, ...]
    world_extent: float = 32.0

    def bc_ids(self) -> list[int]:
        seen: list[int] = []
        for r in self.records:
            if r.bc_id not in seen:
                seen.append(r.bc_id)
        return seen

    def by_bc(self, bc_id: int) -> list[DatasetRecord]:
        return [r for r in self.records if r.bc_id == bc_id]

    def subset(self, split: int) -> list[DatasetRecord]:
        return [r for r in self.records if r.split == split]

    @property
    def train_records(self) -> list[DatasetRecord]:
        return self.subset(SPLIT_TRAIN)

    @property
    def test_records(self) -> list[DatasetRecord]:
        return self.subset(SPLIT_TEST)


def split_dataset(ds: Dataset, fraction: float = 0.9, rng_seed: int = 0) -> Dataset:
    """Assign whole boundary conditions to train/test, 90/10 by default."""
    if not 0.0 < fraction < 1.0:
        raise CodecError("split fraction must lie in (0, 1)")
    ids = sorted({r.bc_id for r in ds.records})
    rng = np.random.default_rng(rng_seed)
    order = [ids[i] for i in rng.permutation(len(ids))]
    n_train = int(round(fraction * len(ids)))
    train_ids = set(order[:n_train])
    records = tuple(
        r.with_split(SPLIT_TRAIN if r.bc_id in train_ids else SPLIT_TEST)
        for r in ds.records
    )
    return Dataset(records, ds.world_extent)


def write_dataset(ds: Dataset, path: str) -> None:
    size = None
    for r in ds.records:
        if r.heightmap.heights.shape != (5, 5):
            raise CodecError("dataset format v1 stores 5x5 heightmaps only")
        if size is None:
            size = r.depth.pixels.shape
        elif r.depth.pixels.shape != size:
            raise CodecError("all depth maps in a dataset must share one shape")
    if size is None:
        size = (RasterConfig().image_size,) * 2
    with open(path, "wb") as fh:
        w = ChecksumWriter(fh)
        w.write(MAGIC)
        w.pack("<I", VERSION)
        w.pack("<I", len(ds.records))
        w.pack("<HH", size[1], size[0])
        w.pack("<f", ds.world_extent)
        for r in ds.records:
            w.pack("<I", r.bc_id)
            w.write(r.heightmap.heights.astype("<f4").tobytes())
            w.write(np.ascontiguousarray(r.depth.pixels, dtype="<f4").tobytes())
            w.pack("<ff", r.avg_radiation, r.volume)
            w.pack("<B", r.split)
        w.finish()


def read_dataset(path: str, geom: GeometryConfig | None = None) -> Dataset:
    geom = geom or GeometryConfig()
    with open(path, "rb") as fh:
        r = ChecksumReader(fh, name=path)
        r.expect_magic(MAGIC)
        r.expect_version(VERSION)
        (count,) = r.unpack("<I", "record count")
        width, height = r.unpack("<HH", "image size")
        (world_extent,) = r.unpack("<f", "world extent")
        records = []
        for i in range(count):
            what = f"record {i}"
            (bc_id,) = r.unpack("<I", what)
            heights = np.frombuffer(
                r.read(25 * 4, f"{what} heightmap"), dtype="<f4"
            ).astype(np.float64).reshape(5, 5)
            pixels = np.frombuffer(
                r.read(width * height * 4, f"{what} pixels"), dtype="<f4"
            ).reshape(height, width)
            rad, vol = r.unpack("<ff", f"{what} objectives")
            (split,) = r.unpack("<B", f"{what} split flag")
            if split not in (SPLIT_UNASSIGNED, SPLIT_TRAIN, SPLIT_TEST):
                raise FormatError(f"{path}: record {i} has invalid split flag {split}")
            records.append(
                DatasetRecord(
                    bc_id=int(bc_id),
                    heightmap=Heightmap(heights, geom),
                    depth=DepthMap(pixels, float(world_extent)),
                    avg_radiation=float(rad),
                    volume=float(vol),
                    split=int(split),
                )
            )
        r.verify_checksum()
    return Dataset(tuple(records), float(world_extent))


def field_to_heightmap(field: DecodedField,
                       geom: GeometryConfig | None = None) -> Heightmap:
    """Resample a decoded plot field onto the native heightmap lattice.

    The field's bilinear surface is sampled at the grid_points x
    grid_points control positions; values are clamped to the height cap
    to absorb roundoff at the hull.
    """
    geom = geom or GeometryConfig()
    half = geom.half_plot
    xs = np.linspace(-half, half, geom.grid_points)
    ys = np.linspace(half, -half, geom.grid_points)
    gx, gy = np.meshgrid(xs, ys)
    y0 = field.ymin + (field.grid.shape[0] - 1) * field.pitch
    heights = bilinear_eval(field.grid, gx, gy, field.pitch, field.xmin, y0)
    return Heightmap(np.clip(heights, 0.0, geom.height_cap), geom)


def boundary_target(bc_id: int, raster: RasterConfig | None = None,
                    geom: GeometryConfig | None = None) -> DepthMap:
    """Bare boundary-condition image (no building), the inference target."""
    geom = geom or GeometryConfig()
    bc = boundary_condition_from_id(bc_id, geom.positions_per_side)
    return rasterize_scene(bc, None, raster, geom)
