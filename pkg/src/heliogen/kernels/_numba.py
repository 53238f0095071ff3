"""Numba kernel backend.

Visibility rays walk the heightfield cell grid (Amanatides-Woo with
conservative tie handling) instead of testing every triangle; the fan
triangles and wall quads of visited cells are rebuilt in the exact
floating-point expression order used by the mesher, and the intersection
predicates match the numpy backend operation for operation, so both
backends return identical booleans.  Rays must point upward (sz > 0).
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

# tie margin, in world units of ray parameter t / in grid cells; crossings
# closer than this to a cell boundary conservatively visit both cells
_TAU = 1e-9


@njit(cache=True, nogil=True, inline="always")
def _tri_hit(ox, oy, oz, sx, sy, sz, ax, ay, az, bx, by, bz, cx, cy, cz):
    e1x = bx - ax
    e1y = by - ay
    e1z = bz - az
    e2x = cx - ax
    e2y = cy - ay
    e2z = cz - az
    px = sy * e2z - sz * e2y
    py = sz * e2x - sx * e2z
    pz = sx * e2y - sy * e2x
    det = e1x * px + e1y * py + e1z * pz
    if det == 0.0:
        return False
    inv = 1.0 / det
    tx = ox - ax
    ty = oy - ay
    tz = oz - az
    u = (tx * px + ty * py + tz * pz) * inv
    if u < 0.0 or u > 1.0:
        return False
    qx = ty * e1z - tz * e1y
    qy = tz * e1x - tx * e1z
    qz = tx * e1y - ty * e1x
    v = (sx * qx + sy * qy + sz * qz) * inv
    if v < 0.0 or u + v > 1.0:
        return False
    t = (e2x * qx + e2y * qy + e2z * qz) * inv
    return t > 0.0


@njit(cache=True, nogil=True, inline="always")
def _quad_hit(ox, oy, oz, sx, sy, sz,
              ax, ay, az, bx, by, bz, cx, cy, cz, dx, dy, dz):
    """Fan-of-four test matching scene._emit_quad_fan vertex construction."""
    mx = ((ax + bx) + (cx + dx)) / 4.0
    my = ((ay + by) + (cy + dy)) / 4.0
    mz = ((az + bz) + (cz + dz)) / 4.0
    if _tri_hit(ox, oy, oz, sx, sy, sz, ax, ay, az, bx, by, bz, mx, my, mz):
        return True
    if _tri_hit(ox, oy, oz, sx, sy, sz, bx, by, bz, cx, cy, cz, mx, my, mz):
        return True
    if _tri_hit(ox, oy, oz, sx, sy, sz, cx, cy, cz, dx, dy, dz, mx, my, mz):
        return True
    return _tri_hit(ox, oy, oz, sx, sy, sz, dx, dy, dz, ax, ay, az, mx, my, mz)


@njit(cache=True, nogil=True, inline="always")
def _box_hit(ox, oy, oz, sx, sy, sz, x0, x1, y0, y1, z0, z1):
    tmin = -np.inf
    tmax = np.inf
    if sx == 0.0:
        if ox < x0 or ox > x1:
            return False
    else:
        t1 = (x0 - ox) / sx
        t2 = (x1 - ox) / sx
        lo = min(t1, t2)
        hi = max(t1, t2)
        tmin = max(tmin, lo)
        tmax = min(tmax, hi)
    if sy == 0.0:
        if oy < y0 or oy > y1:
            return False
    else:
        t1 = (y0 - oy) / sy
        t2 = (y1 - oy) / sy
        tmin = max(tmin, min(t1, t2))
        tmax = min(tmax, max(t1, t2))
    if sz == 0.0:
        if oz < z0 or oz > z1:
            return False
    else:
        t1 = (z0 - oz) / sz
        t2 = (z1 - oz) / sz
        tmin = max(tmin, min(t1, t2))
        tmax = min(tmax, max(t1, t2))
    return tmin <= tmax and tmax > 0.0


@njit(cache=True, nogil=True)
def _cell_hit(ox, oy, oz, sx, sy, sz, grid, czm, pitch, xmin, ytop, i, j):
    """Test the 4-triangle fan of top cell (i, j), rows north-first."""
    zmax = czm[i, j]
    if zmax < 0.0:
        return False
    x0 = xmin + pitch * j
    x1 = xmin + pitch * (j + 1)
    yn = ytop - pitch * i
    ys = ytop - pitch * (i + 1)
    # quad order (sw, se, ne, nw) as in the mesher
    return _quad_hit(
        ox, oy, oz, sx, sy, sz,
        x0, ys, grid[i + 1, j],
        x1, ys, grid[i + 1, j + 1],
        x1, yn, grid[i, j + 1],
        x0, yn, grid[i, j],
    )


@njit(cache=True, nogil=True)
def _wall_hit(ox, oy, oz, sx, sy, sz, grid, pitch, xmin, ytop, side, k):
    """Test one perimeter wall quad; side 0=N 1=S 2=E 3=W, k = cell index."""
    n = grid.shape[0]
    if side == 0:
        zl = grid[0, k + 1]
        zr = grid[0, k]
        if max(zl, zr) <= 0.0:
            return False
        xl = xmin + pitch * (k + 1)
        xr = xmin + pitch * k
        y = ytop
        return _quad_hit(ox, oy, oz, sx, sy, sz,
                         xl, y, 0.0, xr, y, 0.0, xr, y, zr, xl, y, zl)
    if side == 1:
        zl = grid[n - 1, k]
        zr = grid[n - 1, k + 1]
        if max(zl, zr) <= 0.0:
            return False
        xl = xmin + pitch * k
        xr = xmin + pitch * (k + 1)
        y = ytop - pitch * (n - 1)
        return _quad_hit(ox, oy, oz, sx, sy, sz,
                         xl, y, 0.0, xr, y, 0.0, xr, y, zr, xl, y, zl)
    if side == 2:
        zl = grid[k + 1, n - 1]
        zr = grid[k, n - 1]
        if max(zl, zr) <= 0.0:
            return False
        x = xmin + pitch * (n - 1)
        yl = ytop - pitch * (k + 1)
        yr = ytop - pitch * k
        return _quad_hit(ox, oy, oz, sx, sy, sz,
                         x, yl, 0.0, x, yr, 0.0, x, yr, zr, x, yl, zl)
    zl = grid[k, 0]
    zr = grid[k + 1, 0]
    if max(zl, zr) <= 0.0:
        return False
    yl = ytop - pitch * k
    yr = ytop - pitch * (k + 1)
    return _quad_hit(ox, oy, oz, sx, sy, sz,
                     xmin, yl, 0.0, xmin, yr, 0.0, xmin, yr, zr, xmin, yl, zl)


@njit(cache=True, nogil=True)
def _walls_on_plane(ox, oy, oz, sx, sy, sz, grid, pitch, xmin, ytop,
                    side, plane, o_n, s_n, o_w, s_w, wlo):
    """Walls on one boundary plane: cross it, locate the cell, fan-test.

    o_n/s_n are the ray components normal to the plane, o_w/s_w the ones
    along it; wlo is the world coordinate of wall cell 0 along the edge.
    Cells are indexed so that cell k spans [wlo + k*pitch, wlo + (k+1)*pitch]
    in *increasing* index direction of the wall table.
    """
    n = grid.shape[0]
    nc = n - 1
    if s_n == 0.0:
        return False        # in-plane rays make det == 0 in the soup too
    t = (plane - o_n) / s_n
    if t <= -_TAU:
        return False
    w = o_w + t * s_w
    g = (w - wlo) / pitch
    if g < -_TAU or g > nc + _TAU:
        return False
    k0 = int(np.floor(g - _TAU))
    k1 = int(np.floor(g + _TAU))
    if k0 < 0:
        k0 = 0
    if k0 > nc - 1:
        k0 = nc - 1
    if k1 < 0:
        k1 = 0
    if k1 > nc - 1:
        k1 = nc - 1
    for k in range(k0, k1 + 1):
        if _wall_hit(ox, oy, oz, sx, sy, sz, grid, pitch, xmin, ytop, side, k):
            return True
    return False


@njit(cache=True, nogil=True)
def _grid_blocked(ox, oy, oz, sx, sy, sz, grid, czm, pitch, xmin, ymin, zmax_all):
    n = grid.shape[0]
    nc = n - 1
    ytop = ymin + pitch * (n - 1)
    xmax = xmin + pitch * nc
    if zmax_all <= 0.0:
        return False
    if oz > zmax_all + _TAU:
        return False            # ascending ray already above everything
    t_zcap = ((zmax_all + _TAU) - oz) / sz

    # clip to the grid's xy extent
    t_in = -np.inf
    t_out = t_zcap
    if sx == 0.0:
        if ox < xmin - _TAU or ox > xmax + _TAU:
            return False
    else:
        t1 = (xmin - ox) / sx
        t2 = (xmax - ox) / sx
        t_in = max(t_in, min(t1, t2))
        t_out = min(t_out, max(t1, t2))
    if sy == 0.0:
        if oy < ymin - _TAU or oy > ytop + _TAU:
            return False
    else:
        t1 = (ymin - oy) / sy
        t2 = (ytop - oy) / sy
        t_in = max(t_in, min(t1, t2))
        t_out = min(t_out, max(t1, t2))
    if t_in > t_out + _TAU:
        return False

    # perimeter walls: candidate cells live where the ray crosses each plane
    # north wall (y = ytop): cell k spans x decreasing? table index k uses
    # x in [xmin + k*pitch, ...] for both N and S walls, y for E and W.
    if _walls_on_plane(ox, oy, oz, sx, sy, sz, grid, pitch, xmin, ytop,
                       0, ytop, oy, sy, ox, sx, xmin):
        return True
    if _walls_on_plane(ox, oy, oz, sx, sy, sz, grid, pitch, xmin, ytop,
                       1, ymin, oy, sy, ox, sx, xmin):
        return True
    # east/west wall cell k spans y in [ytop - (k+1)*pitch, ytop - k*pitch]:
    # index coordinate g = (ytop - y)/pitch, i.e. wlo measured in -y
    if _walls_on_plane(ox, oy, oz, sx, sy, sz, grid, pitch, xmin, ytop,
                       2, xmax, ox, sx, -oy, -sy, -ytop):
        return True
    if _walls_on_plane(ox, oy, oz, sx, sy, sz, grid, pitch, xmin, ytop,
                       3, xmin, ox, sx, -oy, -sy, -ytop):
        return True

    # walk top cells
    t0 = max(t_in, 0.0)
    if t0 > t_out + _TAU:
        return False
    px = ox + t0 * sx
    py = oy + t0 * sy
    u = (px - xmin) / pitch
    v = (ytop - py) / pitch        # row coordinate, increases southward
    du = sx / pitch
    dv = -sy / pitch

    j0 = int(np.floor(u - _TAU))
    j1 = int(np.floor(u + _TAU))
    i0 = int(np.floor(v - _TAU))
    i1 = int(np.floor(v + _TAU))
    j0 = min(max(j0, 0), nc - 1)
    j1 = min(max(j1, 0), nc - 1)
    i0 = min(max(i0, 0), nc - 1)
    i1 = min(max(i1, 0), nc - 1)
    for i in range(i0, i1 + 1):
        for j in range(j0, j1 + 1):
            if oz + t0 * sz <= czm[i, j] + _TAU:
                if _cell_hit(ox, oy, oz, sx, sy, sz, grid, czm,
                             pitch, xmin, ytop, i, j):
                    return True

    # advance from the cell the walk continues in
    j = j1 if du >= 0.0 else j0
    i = i1 if dv >= 0.0 else i0
    stepj = 1 if du > 0.0 else -1
    stepi = 1 if dv > 0.0 else -1
    while True:
        # next boundary crossings, computed absolutely to avoid drift
        if du > 0.0:
            tj = ((xmin + pitch * (j + 1)) - ox) / sx
        elif du < 0.0:
            tj = ((xmin + pitch * j) - ox) / sx
        else:
            tj = np.inf
        if dv > 0.0:
            ti = ((ytop - pitch * (i + 1)) - oy) / sy
        elif dv < 0.0:
            ti = ((ytop - pitch * i) - oy) / sy
        else:
            ti = np.inf
        tnext = min(ti, tj)
        if tnext > t_out + _TAU or tnext == np.inf:
            return False
        zc = oz + tnext * sz
        if zc > zmax_all + _TAU:
            return False
        tie = abs(ti - tj) <= _TAU
        if tie:
            jn = j + stepj
            iv = i + stepi
            if 0 <= jn <= nc - 1:
                if zc <= czm[i, jn] + _TAU and _cell_hit(
                        ox, oy, oz, sx, sy, sz, grid, czm, pitch, xmin, ytop, i, jn):
                    return True
            if 0 <= iv <= nc - 1:
                if zc <= czm[iv, j] + _TAU and _cell_hit(
                        ox, oy, oz, sx, sy, sz, grid, czm, pitch, xmin, ytop, iv, j):
                    return True
            j = jn
            i = iv
        elif tj < ti:
            j += stepj
        else:
            i += stepi
        if j < 0 or j > nc - 1 or i < 0 or i > nc - 1:
            return False
        if zc <= czm[i, j] + _TAU:
            if _cell_hit(ox, oy, oz, sx, sy, sz, grid, czm, pitch, xmin, ytop, i, j):
                return True


@njit(cache=True, nogil=True)
def ray_visible(origins, direction, grid, czm, pitch, xmin, ymin, boxes, zmax_all):
    sx = direction[0]
    sy = direction[1]
    sz = direction[2]
    out = np.ones(origins.shape[0], dtype=np.bool_)
    for r in range(origins.shape[0]):
        ox = origins[r, 0]
        oy = origins[r, 1]
        oz = origins[r, 2]
        blocked = False
        for b in range(boxes.shape[0]):
            if _box_hit(ox, oy, oz, sx, sy, sz,
                        boxes[b, 0], boxes[b, 1], boxes[b, 2],
                        boxes[b, 3], boxes[b, 4], boxes[b, 5]):
                blocked = True
                break
        if not blocked:
            blocked = _grid_blocked(ox, oy, oz, sx, sy, sz, grid, czm,
                                    pitch, xmin, ymin, zmax_all)
        out[r] = not blocked
    return out


@njit(cache=True, nogil=True, parallel=True)
def irradiance_batch(origins, normals, directions, weights,
                     grid, czm, pitch, xmin, ymin, boxes, zmax_all):
    """Per-face sum of weight * cos(incidence) over unoccluded sun samples.

    Faces are independent (prange); each face accumulates its samples in
    order, so results are deterministic and match the numpy backend's
    per-direction accumulation bit for bit.
    """
    nf = origins.shape[0]
    ns = directions.shape[0]
    nb = boxes.shape[0]
    out = np.zeros(nf, dtype=np.float64)
    for f in prange(nf):
        ox = origins[f, 0]
        oy = origins[f, 1]
        oz = origins[f, 2]
        fnx = normals[f, 0]
        fny = normals[f, 1]
        fnz = normals[f, 2]
        acc = 0.0
        for s in range(ns):
            sx = directions[s, 0]
            sy = directions[s, 1]
            sz = directions[s, 2]
            cos = (fnx * sx + fny * sy) + fnz * sz
            if cos <= 0.0:
                continue
            blocked = False
            for b in range(nb):
                if _box_hit(ox, oy, oz, sx, sy, sz,
                            boxes[b, 0], boxes[b, 1], boxes[b, 2],
                            boxes[b, 3], boxes[b, 4], boxes[b, 5]):
                    blocked = True
                    break
            if not blocked:
                blocked = _grid_blocked(ox, oy, oz, sx, sy, sz, grid, czm,
                                        pitch, xmin, ymin, zmax_all)
            if not blocked:
                acc += weights[s] * cos
        out[f] = acc
    return out


# ------------------------------------------------------------- convolutions


@njit(cache=True, nogil=True)
def conv2d(x, w, stride, pad):
    b, h, wd, ic = x.shape
    kh, kw, _, oc = w.shape
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wd + 2 * pad - kw) // stride + 1
    y = np.zeros((b, oh, ow, oc), dtype=x.dtype)
    if y.size == 0:
        return y
    zero = y[0, 0, 0, 0]
    for nb in range(b):
        for oy in range(oh):
            for ox in range(ow):
                for co in range(oc):
                    acc = zero
                    for i in range(kh):
                        iy = oy * stride - pad + i
                        if iy < 0 or iy >= h:
                            continue
                        for jj in range(kw):
                            ix = ox * stride - pad + jj
                            if ix < 0 or ix >= wd:
                                continue
                            for ci in range(ic):
                                acc += x[nb, iy, ix, ci] * w[i, jj, ci, co]
                    y[nb, oy, ox, co] = acc
    return y


@njit(cache=True, nogil=True)
def matmul(x, w):
    b, k = x.shape
    _, n = w.shape
    y = np.zeros((b, n), dtype=x.dtype)
    if y.size == 0:
        return y
    zero = y[0, 0]
    for i in range(b):
        for j in range(n):
            acc = zero
            for kk in range(k):
                acc += x[i, kk] * w[kk, j]
            y[i, j] = acc
    return y


@njit(cache=True, nogil=True)
def conv2d_bwd_x(dy, w, stride, pad, in_h, in_w):
    b, oh, ow, oc = dy.shape
    kh, kw, ic, _ = w.shape
    dx = np.zeros((b, in_h, in_w, ic), dtype=dy.dtype)
    if dx.size == 0 or dy.size == 0:
        return dx
    zero = dx[0, 0, 0, 0]
    for nb in range(b):
        for oy in range(oh):
            for ox in range(ow):
                for i in range(kh):
                    iy = oy * stride - pad + i
                    if iy < 0 or iy >= in_h:
                        continue
                    for jj in range(kw):
                        ix = ox * stride - pad + jj
                        if ix < 0 or ix >= in_w:
                            continue
                        for ci in range(ic):
                            acc = zero
                            for co in range(oc):
                                acc += dy[nb, oy, ox, co] * w[i, jj, ci, co]
                            dx[nb, iy, ix, ci] += acc
    return dx


@njit(cache=True, nogil=True)
def conv2d_bwd_w(x, dy, stride, pad, kh, kw):
    b, h, wd, ic = x.shape
    _, oh, ow, oc = dy.shape
    dw = np.zeros((kh, kw, ic, oc), dtype=x.dtype)
    if dw.size == 0:
        return dw
    zero = dw[0, 0, 0, 0]
    for i in range(kh):
        for jj in range(kw):
            for ci in range(ic):
                for co in range(oc):
                    acc = zero
                    for nb in range(b):
                        for oy in range(oh):
                            iy = oy * stride - pad + i
                            if iy < 0 or iy >= h:
                                continue
                            for ox in range(ow):
                                ix = ox * stride - pad + jj
                                if ix < 0 or ix >= wd:
                                    continue
                                acc += x[nb, iy, ix, ci] * dy[nb, oy, ox, co]
                    dw[i, jj, ci, co] = acc
    return dw
