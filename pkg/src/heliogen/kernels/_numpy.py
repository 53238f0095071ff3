"""Pure-numpy kernel backend.

Visibility rays are tested against the full building triangle soup with a
vectorized Moller-Trumbore predicate plus closed-slab box tests; the
predicates mirror the numba backend operation for operation so the two
backends return identical booleans.  Convolutions go through strided
im2col windows.
"""

from __future__ import annotations

import numpy as np

_RAY_CHUNK = 256


def _tri_hits(o, s, v0, v1, v2):
    """Any-hit Moller-Trumbore: rays (R,3) x triangles (T,3) -> (R,) bool.

    Component arithmetic is spelled out (no np.cross) so the operation
    order matches the scalar numba code bitwise.
    """
    e1 = v1 - v0                       # (T,3)
    e2 = v2 - v0
    sx, sy, sz = s
    px = sy * e2[:, 2] - sz * e2[:, 1]
    py = sz * e2[:, 0] - sx * e2[:, 2]
    pz = sx * e2[:, 1] - sy * e2[:, 0]
    det = e1[:, 0] * px + e1[:, 1] * py + e1[:, 2] * pz
    ok = det != 0.0
    inv = 1.0 / np.where(ok, det, 1.0)

    tx = o[:, None, 0] - v0[None, :, 0]    # (R,T)
    ty = o[:, None, 1] - v0[None, :, 1]
    tz = o[:, None, 2] - v0[None, :, 2]
    u = (tx * px + ty * py + tz * pz) * inv
    qx = ty * e1[None, :, 2] - tz * e1[None, :, 1]
    qy = tz * e1[None, :, 0] - tx * e1[None, :, 2]
    qz = tx * e1[None, :, 1] - ty * e1[None, :, 0]
    v = (sx * qx + sy * qy + sz * qz) * inv
    t = (e2[:, 0] * qx + e2[:, 1] * qy + e2[:, 2] * qz) * inv
    hit = ok & (u >= 0.0) & (u <= 1.0) & (v >= 0.0) & (u + v <= 1.0) & (t > 0.0)
    return hit.any(axis=1)


def _box_hits(o, s, boxes):
    """Closed-slab ray/box test: rays (R,3) x boxes (B,6) -> (R,) bool."""
    if boxes.shape[0] == 0:
        return np.zeros(o.shape[0], dtype=bool)
    lo = boxes[:, 0::2]                    # (B,3) mins
    hi = boxes[:, 1::2]                    # (B,3) maxs
    d = np.asarray(s)
    miss = np.zeros((o.shape[0], boxes.shape[0]), dtype=bool)
    tmin = np.full_like(miss, -np.inf, dtype=np.float64)
    tmax = np.full_like(tmin, np.inf)
    for ax in range(3):
        oa = o[:, ax : ax + 1]             # (R,1)
        if d[ax] == 0.0:
            miss |= (oa < lo[None, :, ax]) | (oa > hi[None, :, ax])
        else:
            t1 = (lo[None, :, ax] - oa) / d[ax]
            t2 = (hi[None, :, ax] - oa) / d[ax]
            tmin = np.maximum(tmin, np.minimum(t1, t2))
            tmax = np.minimum(tmax, np.maximum(t1, t2))
    hit = ~miss & (tmin <= tmax) & (tmax > 0.0)
    return hit.any(axis=1)


def ray_visible(origins, direction, tri_verts, boxes):
    """True where the ray from origin toward the sun is unobstructed."""
    origins = np.ascontiguousarray(origins, dtype=np.float64)
    out = np.ones(origins.shape[0], dtype=bool)
    v0, v1, v2 = tri_verts[:, 0], tri_verts[:, 1], tri_verts[:, 2]
    for start in range(0, origins.shape[0], _RAY_CHUNK):
        o = origins[start : start + _RAY_CHUNK]
        blocked = _box_hits(o, direction, boxes)
        if tri_verts.shape[0]:
            alive = ~blocked
            if alive.any():
                blocked[alive] = _tri_hits(o[alive], direction, v0, v1, v2)
        out[start : start + _RAY_CHUNK] = ~blocked
    return out


# ------------------------------------------------------------- convolutions


def _windows(xp, kh, kw, stride):
    """Strided sliding-window view of padded input (B,OH,OW,KH,KW,C)."""
    b, h, w, c = xp.shape
    oh = (h - kh) // stride + 1
    ow = (w - kw) // stride + 1
    sb, sh, sw, sc = xp.strides
    return np.lib.stride_tricks.as_strided(
        xp,
        shape=(b, oh, ow, kh, kw, c),
        strides=(sb, sh * stride, sw * stride, sh, sw, sc),
        writeable=False,
    )


def conv2d(x, w, stride, pad):
    """NHWC cross-correlation with weight layout (KH,KW,IC,OC)."""
    kh, kw = w.shape[0], w.shape[1]
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    win = _windows(xp, kh, kw, stride)
    return np.tensordot(win, w, axes=([3, 4, 5], [0, 1, 2])).astype(x.dtype, copy=False)


def conv2d_bwd_w(x, dy, stride, pad, kh, kw):
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    win = _windows(xp, kh, kw, stride)
    return np.tensordot(win, dy, axes=([0, 1, 2], [0, 1, 2])).astype(x.dtype, copy=False)


def matmul(x, w):
    """Dense product (B,K)x(K,N); BLAS here, explicit loops in numba."""
    return x @ w


def conv2d_bwd_x(dy, w, stride, pad, in_h, in_w):
    """Scatter dy back through the conv taps (col2im via slice adds)."""
    b, oh, ow, _ = dy.shape
    kh, kw, ic, _ = w.shape
    cols = np.tensordot(dy, w, axes=([3], [3]))       # (B,OH,OW,KH,KW,IC)
    dxp = np.zeros((b, in_h + 2 * pad, in_w + 2 * pad, ic), dtype=dy.dtype)
    rows = stride * np.arange(oh)
    cws = stride * np.arange(ow)
    for i in range(kh):
        for j in range(kw):
            # tap indices never repeat, so fancy += is safe
            dxp[:, (i + rows)[:, None], (j + cws)[None, :], :] += cols[:, :, :, i, j, :]
    return dxp[:, pad : pad + in_h, pad : pad + in_w, :]
