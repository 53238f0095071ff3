"""Geometry domain model.

Heightmaps over a square plot, the enumerable family of obstructing
neighbor buildings, meshing of heightfields into triangle soups, exact
bilinear volumes, and the four reference geometry generators used by
the evaluation bench.

Coordinate frame: x grows east, y grows north, z grows up; the plot is
the square [-half, half]^2 centered on the origin.  Height grids are
indexed [row, col] with row 0 the north edge and col 0 the west edge.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .config import GeometryConfig

__all__ = [
    "Side",
    "Obstruction",
    "BoundaryCondition",
    "Box",
    "Heightmap",
    "BuildingMesh",
    "enumerate_boundary_conditions",
    "boundary_condition_count",
    "boundary_condition_from_id",
    "obstruction_box",
    "boundary_boxes",
    "mirror_boundary_condition",
    "bilinear_eval",
    "resample_bilinear",
    "heightfield_volume",
    "grid_to_mesh",
    "heightmap_to_mesh",
    "box_mesh",
    "baseline_flat_roof",
    "baseline_tilted_roof",
    "baseline_random",
]

# Triangles with less xy footprint than this are culled as degenerate.
_AREA_EPS = 1e-12


class SceneError(ValueError):
    """Invalid geometry request (heights out of range, bad slot, ...)."""


class Side(enum.Enum):
    EAST = "east"
    SOUTH = "south"
    WEST = "west"


# Fixed enumeration order used by the canonical id: east, south, west.
_SIDE_ORDER = (Side.EAST, Side.SOUTH, Side.WEST)


@dataclass(frozen=True)
class Obstruction:
    side: Side
    slot: int

    def __post_init__(self):
        object.__setattr__(self, "side", Side(self.side))


@dataclass(frozen=True)
class BoundaryCondition:
    """Up to one obstructing building on each of the E/S/W sides.

    The canonical id encodes (east, south, west) choices in mixed radix
    base P+1, where digit 0 means the side is empty and digit k+1 means
    slot k; the all-empty code 0 is skipped, so ids run 0..(P+1)^3-2.
    """

    obstructions: tuple[Obstruction, ...]

    def __post_init__(self):
        sides = [o.side for o in self.obstructions]
        if len(set(sides)) != len(sides):
            raise SceneError("at most one obstruction per side")
        if len(self.obstructions) > 3:
            raise SceneError("at most three obstructions")
        ordered = tuple(sorted(self.obstructions, key=lambda o: _SIDE_ORDER.index(o.side)))
        object.__setattr__(self, "obstructions", ordered)

    def slot_on(self, side: Side) -> int | None:
        for o in self.obstructions:
            if o.side == side:
                return o.slot
        return None

    def canonical_id(self, positions_per_side: int) -> int:
        base = positions_per_side + 1
        code = 0
        for side in _SIDE_ORDER:
            slot = self.slot_on(side)
            digit = 0 if slot is None else slot + 1
            if digit >= base:
                raise SceneError(f"slot {slot} out of range for P={positions_per_side}")
            code = code * base + digit
        if code == 0:
            raise SceneError("the empty boundary condition has no canonical id")
        return code - 1


def boundary_condition_count(positions_per_side: int) -> int:
    return (positions_per_side + 1) ** 3 - 1


def boundary_condition_from_id(bc_id: int, positions_per_side: int) -> BoundaryCondition:
    count = boundary_condition_count(positions_per_side)
    if not 0 <= bc_id < count:
        raise SceneError(f"boundary condition id {bc_id} outside 0..{count - 1}")
    base = positions_per_side + 1
    code = bc_id + 1
    digits = []
    for _ in _SIDE_ORDER:
        digits.append(code % base)
        code //= base
    digits.reverse()
    obs = tuple(
        Obstruction(side, digit - 1)
        for side, digit in zip(_SIDE_ORDER, digits)
        if digit > 0
    )
    return BoundaryCondition(obs)


def enumerate_boundary_conditions(positions_per_side: int) -> list[BoundaryCondition]:
    """All non-empty E/S/W configurations, sorted by canonical id."""
    if positions_per_side < 1:
        raise SceneError("positions_per_side must be >= 1")
    return [
        boundary_condition_from_id(i, positions_per_side)
        for i in range(boundary_condition_count(positions_per_side))
    ]


@dataclass(frozen=True)
class Box:
    """Axis-aligned box, closed on all faces."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    zmin: float
    zmax: float

    def contains_xy(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.xmin, self.xmax, self.ymin, self.ymax, self.zmin, self.zmax],
            dtype=np.float64,
        )


def obstruction_box(o: Obstruction, geom: GeometryConfig) -> Box:
    """World-space box for one obstruction slot.

    The box sits obstruction_gap meters off the plot edge, spans
    obstruction_depth away from it, and obstruction_width along it,
    shifted by the slot offset from the side midline.
    """
    if not 0 <= o.slot < geom.positions_per_side:
        raise SceneError(f"slot {o.slot} out of range 0..{geom.positions_per_side - 1}")
    off = geom.slot_offsets[o.slot]
    half = geom.half_plot
    near = half + geom.obstruction_gap
    far = near + geom.obstruction_depth
    w2 = geom.obstruction_width / 2.0
    if o.side == Side.EAST:
        return Box(near, far, off - w2, off + w2, 0.0, geom.obstruction_height)
    if o.side == Side.WEST:
        return Box(-far, -near, off - w2, off + w2, 0.0, geom.obstruction_height)
    # south
    return Box(off - w2, off + w2, -far, -near, 0.0, geom.obstruction_height)


def boundary_boxes(bc: BoundaryCondition, geom: GeometryConfig) -> tuple[Box, ...]:
    return tuple(obstruction_box(o, geom) for o in bc.obstructions)


def mirror_boundary_condition(bc: BoundaryCondition, geom: GeometryConfig) -> BoundaryCondition:
    """Reflect a boundary condition across the north-south axis.

    East and west swap keeping their slot (offsets run along y, which the
    reflection preserves); a south slot maps to the slot whose offset is
    the negation of its own, which must exist in the offset table.
    """
    mirrored = []
    for o in bc.obstructions:
        if o.side == Side.EAST:
            mirrored.append(Obstruction(Side.WEST, o.slot))
        elif o.side == Side.WEST:
            mirrored.append(Obstruction(Side.EAST, o.slot))
        else:
            target = -geom.slot_offsets[o.slot]
            matches = [i for i, v in enumerate(geom.slot_offsets) if v == target]
            if not matches:
                raise SceneError("slot offsets are not mirror-symmetric")
            mirrored.append(Obstruction(Side.SOUTH, matches[0]))
    return BoundaryCondition(tuple(mirrored))


@dataclass(frozen=True)
class Heightmap:
    """Control grid of building heights over the plot, meters."""

    heights: np.ndarray
    geom: GeometryConfig = field(default_factory=GeometryConfig)

    def __post_init__(self):
        n = self.geom.grid_points
        h = np.asarray(self.heights, dtype=np.float64)
        if h.shape != (n, n):
            raise SceneError(f"heightmap must be {n}x{n}, got {h.shape}")
        if np.any(h < 0.0) or np.any(h > self.geom.height_cap):
            raise SceneError(f"heights must lie in [0, {self.geom.height_cap}]")
        h = h.copy()
        h.flags.writeable = False
        object.__setattr__(self, "heights", h)

    def mirrored(self) -> "Heightmap":
        return Heightmap(self.heights[:, ::-1], self.geom)


def bilinear_eval(grid: np.ndarray, x, y, pitch: float, x0: float, y0: float):
    """Evaluate the bilinear surface of ``grid`` at world points.

    grid[i, j] sits at (x0 + j*pitch, y0 - i*pitch); queries are clamped
    to the grid extent.
    """
    grid = np.asarray(grid, dtype=np.float64)
    n_rows, n_cols = grid.shape
    u = (np.asarray(x, dtype=np.float64) - x0) / pitch          # col coordinate
    v = (y0 - np.asarray(y, dtype=np.float64)) / pitch          # row coordinate
    u = np.clip(u, 0.0, n_cols - 1.0)
    v = np.clip(v, 0.0, n_rows - 1.0)
    j = np.clip(np.floor(u).astype(np.int64), 0, n_cols - 2)
    i = np.clip(np.floor(v).astype(np.int64), 0, n_rows - 2)
    fu = u - j
    fv = v - i
    top = grid[i, j] * (1.0 - fu) + grid[i, j + 1] * fu
    bot = grid[i + 1, j] * (1.0 - fu) + grid[i + 1, j + 1] * fu
    return top * (1.0 - fv) + bot * fv


def resample_bilinear(h: Heightmap, resolution: int) -> np.ndarray:
    """Sample the heightmap surface on a resolution x resolution lattice."""
    geom = h.geom
    half = geom.half_plot
    xs = np.linspace(-half, half, resolution)
    ys = np.linspace(half, -half, resolution)
    gx, gy = np.meshgrid(xs, ys)
    return bilinear_eval(h.heights, gx, gy, geom.grid_pitch, -half, half)


def heightfield_volume(grid: np.ndarray, cell_area: float) -> float:
    """Exact integral of the bilinear surface spanned by an N x N grid.

    Per cell the integral of a bilinear patch equals the mean of its four
    corners times the cell area; the center-fan mesh below integrates to
    the same value.
    """
    g = np.asarray(grid, dtype=np.float64)
    if np.any(g < 0.0):
        raise SceneError("heights must be non-negative")
    corner_mean = (g[:-1, :-1] + g[:-1, 1:] + g[1:, :-1] + g[1:, 1:]) / 4.0
    return float(corner_mean.sum() * cell_area)


@dataclass(frozen=True)
class BuildingMesh:
    """Triangle soup for a heightfield building plus grid data for ray tests.

    Every quad (top cell or wall segment) is split as a fan of four
    triangles around its center point, which keeps the mesh exactly
    symmetric under axis reflections of the input grid.
    """

    vertices: np.ndarray     # (T, 3, 3)
    normals: np.ndarray      # (T, 3) unit outward
    areas: np.ndarray        # (T,)
    tags: np.ndarray         # (T,) uint8, 0 = building, 1 = obstruction
    grid_north: np.ndarray   # (N, N) heights, row 0 on the north edge
    pitch: float
    xmin: float
    ymin: float
    cell_zmax: np.ndarray    # (N-1, N-1) cell height bound, -1 = no building

    @property
    def face_count(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    def centroids(self) -> np.ndarray:
        return self.vertices.mean(axis=1)


def _emit_quad_fan(tris: list, a, b, c, d):
    """Append the 4-triangle center fan of quad a-b-c-d (outward CCW)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    # pairwise sum keeps the center bitwise stable under vertex-order
    # reversal, which makes meshes of mirrored grids exact mirror images
    center = ((a + b) + (c + d)) / 4.0
    tris.append((a, b, center))
    tris.append((b, c, center))
    tris.append((c, d, center))
    tris.append((d, a, center))


def grid_to_mesh(grid: np.ndarray, pitch: float, xmin: float, ymin: float) -> BuildingMesh:
    """Mesh an N x N heightfield: fan-split top cells plus perimeter walls.

    ``grid`` is in row-0-north order; cells whose four corners are all at
    ground level carry no building and are culled, as are walls of zero
    height and any zero-area triangle.  No bottom face is emitted.
    """
    g = np.asarray(grid, dtype=np.float64)
    n = g.shape[0]
    if g.shape != (n, n) or n < 2:
        raise SceneError(f"grid must be square with >= 2 points, got {g.shape}")
    if np.any(g < 0.0):
        raise SceneError("grid heights must be non-negative")
    xs = xmin + pitch * np.arange(n)
    ys_north = ymin + pitch * (n - 1) - pitch * np.arange(n)   # row i -> ys_north[i]

    tris: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []

    occupied = np.zeros((n - 1, n - 1), dtype=bool)   # row-0-north cell order
    for i in range(n - 1):
        for j in range(n - 1):
            z_nw, z_ne = g[i, j], g[i, j + 1]
            z_sw, z_se = g[i + 1, j], g[i + 1, j + 1]
            if max(z_nw, z_ne, z_sw, z_se) <= 0.0:
                continue
            occupied[i, j] = True
            x0, x1 = xs[j], xs[j + 1]
            yn, ysx = ys_north[i], ys_north[i + 1]
            # CCW seen from above
            _emit_quad_fan(
                tris,
                (x0, ysx, z_sw), (x1, ysx, z_se), (x1, yn, z_ne), (x0, yn, z_nw),
            )

    def wall(p_bottom_l, p_bottom_r, z_l, z_r):
        if max(z_l, z_r) <= 0.0:
            return
        bl = (*p_bottom_l, 0.0)
        br = (*p_bottom_r, 0.0)
        tr = (*p_bottom_r, z_r)
        tl = (*p_bottom_l, z_l)
        _emit_quad_fan(tris, bl, br, tr, tl)

    for j in range(n - 1):
        # north wall: outward +y; CCW from the north means left = east end
        wall((xs[j + 1], ys_north[0]), (xs[j], ys_north[0]), g[0, j + 1], g[0, j])
        # south wall: outward -y
        wall((xs[j], ys_north[-1]), (xs[j + 1], ys_north[-1]), g[-1, j], g[-1, j + 1])
    for i in range(n - 1):
        # east wall: outward +x; CCW from the east means left = south end
        wall((xs[-1], ys_north[i + 1]), (xs[-1], ys_north[i]), g[i + 1, -1], g[i, -1])
        # west wall: outward -x
        wall((xs[0], ys_north[i]), (xs[0], ys_north[i + 1]), g[i, 0], g[i + 1, 0])

    if tris:
        verts = np.array(tris, dtype=np.float64)
        e1 = verts[:, 1] - verts[:, 0]
        e2 = verts[:, 2] - verts[:, 0]
        cross = np.cross(e1, e2)
        norm = np.linalg.norm(cross, axis=1)
        keep = norm > 2.0 * _AREA_EPS
        verts, cross, norm = verts[keep], cross[keep], norm[keep]
        normals = cross / norm[:, None]
        areas = norm / 2.0
    else:
        verts = np.zeros((0, 3, 3))
        normals = np.zeros((0, 3))
        areas = np.zeros((0,))

    corners = np.stack([g[:-1, :-1], g[:-1, 1:], g[1:, :-1], g[1:, 1:]])
    # mask out unoccupied cells so the ray kernel skips them entirely
    cell_zmax = np.where(occupied, corners.max(axis=0), -1.0)

    return BuildingMesh(
        vertices=verts,
        normals=normals,
        areas=areas,
        tags=np.zeros(len(verts), dtype=np.uint8),
        grid_north=np.ascontiguousarray(g),
        pitch=float(pitch),
        xmin=float(xmin),
        ymin=float(ymin),
        cell_zmax=np.ascontiguousarray(cell_zmax),
    )


def heightmap_to_mesh(h: Heightmap, resolution: int) -> BuildingMesh:
    """Mesh the bilinear heightmap surface at a given vertex lattice size."""
    if resolution < h.geom.grid_points:
        raise SceneError(f"resolution must be >= {h.geom.grid_points}")
    grid = resample_bilinear(h, resolution)
    half = h.geom.half_plot
    return grid_to_mesh(grid, h.geom.plot_size / (resolution - 1), -half, -half)


def box_mesh(box: Box) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Triangulate a box's five visible faces (no bottom): verts, normals, areas."""
    tris: list = []
    x0, x1, y0, y1, z0, z1 = box.xmin, box.xmax, box.ymin, box.ymax, box.zmin, box.zmax
    _emit_quad_fan(tris, (x0, y0, z1), (x1, y0, z1), (x1, y1, z1), (x0, y1, z1))  # top
    _emit_quad_fan(tris, (x0, y0, z0), (x1, y0, z0), (x1, y0, z1), (x0, y0, z1))  # -y
    _emit_quad_fan(tris, (x1, y1, z0), (x0, y1, z0), (x0, y1, z1), (x1, y1, z1))  # +y
    _emit_quad_fan(tris, (x0, y1, z0), (x0, y0, z0), (x0, y0, z1), (x0, y1, z1))  # -x
    _emit_quad_fan(tris, (x1, y0, z0), (x1, y1, z0), (x1, y1, z1), (x1, y0, z1))  # +x
    verts = np.array(tris, dtype=np.float64)
    cross = np.cross(verts[:, 1] - verts[:, 0], verts[:, 2] - verts[:, 0])
    norm = np.linalg.norm(cross, axis=1)
    keep = norm > 2.0 * _AREA_EPS
    verts, cross, norm = verts[keep], cross[keep], norm[keep]
    return verts, cross / norm[:, None], norm / 2.0


def baseline_flat_roof(
    target_volume: float, geom: GeometryConfig | None = None, allow_zero: bool = False
) -> Heightmap:
    """Uniform-height slab holding exactly the target volume."""
    geom = geom or GeometryConfig()
    plot_area = geom.plot_size**2
    if target_volume < 0 or (target_volume == 0 and not allow_zero):
        raise SceneError("target volume must be positive")
    height = target_volume / plot_area
    if height > geom.height_cap:
        raise SceneError(
            f"target volume {target_volume} m^3 needs height {height} m over the "
            f"{geom.height_cap} m cap"
        )
    return Heightmap(np.full((geom.grid_points,) * 2, height), geom)


def baseline_tilted_roof(tilt_deg: float, geom: GeometryConfig | None = None) -> Heightmap:
    """South-facing ramp, cap height on the north edge, clamped at ground."""
    geom = geom or GeometryConfig()
    if not 0 <= tilt_deg < 90:
        raise SceneError("tilt must lie in [0, 90)")
    n = geom.grid_points
    drop = np.tan(np.radians(tilt_deg)) * geom.grid_pitch * np.arange(n)
    heights = np.clip(geom.height_cap - drop, 0.0, geom.height_cap)
    return Heightmap(np.tile(heights[:, None], (1, n)), geom)


def baseline_random(
    kind: str, rng_seed: int, geom: GeometryConfig | None = None
) -> Heightmap:
    """Random generator baselines: uniform over the range, or N(5, 1.5^2) clamped."""
    geom = geom or GeometryConfig()
    rng = np.random.default_rng(rng_seed)
    n = geom.grid_points
    if kind == "uniform":
        h = rng.uniform(0.0, geom.height_cap, size=(n, n))
    elif kind == "gaussian":
        h = rng.normal(5.0, 1.5, size=(n, n))
    else:
        raise SceneError(f"unknown random baseline kind {kind!r}")
    return Heightmap(np.clip(h, 0.0, geom.height_cap), geom)
