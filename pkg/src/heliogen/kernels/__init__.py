"""Hot kernels with two interchangeable backends.

The numba backend JIT-compiles a grid-walking ray tracer and direct
convolution loops; the numpy backend is a vectorized brute-force
fallback.  Selection: HELIOGEN_BACKEND = auto (default) | numba | numpy.
Both visibility backends are written to return bit-identical booleans;
the convolution backends agree to float round-off (accumulation order
differs on the numpy fast path).
"""

from __future__ import annotations

import os

import numpy as np

from ..scene import BuildingMesh

__all__ = [
    "active_backend",
    "ray_visible",
    "conv2d",
    "conv2d_bwd_x",
    "conv2d_bwd_w",
    "matmul",
    "KernelError",
]

_ENV = "HELIOGEN_BACKEND"
_numba_ok: bool | None = None


class KernelError(RuntimeError):
    """Backend selection or kernel precondition failure."""


def _numba_available() -> bool:
    global _numba_ok
    if _numba_ok is None:
        try:
            from . import _numba  # noqa: F401

            _numba_ok = True
        except ImportError:
            _numba_ok = False
    return _numba_ok


def active_backend() -> str:
    """Resolve the backend name from the environment, per call."""
    choice = os.environ.get(_ENV, "auto").strip().lower()
    if choice in ("", "auto"):
        return "numba" if _numba_available() else "numpy"
    if choice == "numba":
        if not _numba_available():
            raise KernelError("HELIOGEN_BACKEND=numba but numba is not importable")
        return "numba"
    if choice == "numpy":
        return "numpy"
    raise KernelError(f"unknown HELIOGEN_BACKEND value {choice!r}")


def ray_visible(
    origins: np.ndarray,
    direction: np.ndarray,
    mesh: BuildingMesh,
    boxes: np.ndarray | None = None,
    backend: str | None = None,
) -> np.ndarray:
    """Per-origin sky visibility along one sun direction (sz > 0 required)."""
    origins = np.ascontiguousarray(origins, dtype=np.float64)
    direction = np.ascontiguousarray(direction, dtype=np.float64)
    if direction.shape != (3,):
        raise KernelError("direction must be a 3-vector")
    if not direction[2] > 0.0:
        raise KernelError("sun directions must point above the horizon")
    if boxes is None:
        boxes = np.zeros((0, 6), dtype=np.float64)
    boxes = np.ascontiguousarray(boxes, dtype=np.float64)
    name = backend or active_backend()
    if name == "numba":
        from . import _numba

        return _numba.ray_visible(
            origins,
            direction,
            mesh.grid_north,
            mesh.cell_zmax,
            mesh.pitch,
            mesh.xmin,
            mesh.ymin,
            boxes,
            float(mesh.cell_zmax.max()) if mesh.cell_zmax.size else 0.0,
        )
    from . import _numpy as k

    return k.ray_visible(origins, direction, mesh.vertices, boxes)


def _conv_mod(backend: str | None):
    name = backend or active_backend()
    if name == "numba":
        from . import _numba as mod
    else:
        from . import _numpy as mod
    return mod


def conv2d(x, w, stride: int, pad: int, backend: str | None = None):
    return _conv_mod(backend).conv2d(x, w, stride, pad)


def conv2d_bwd_x(dy, w, stride: int, pad: int, in_h: int, in_w: int, backend=None):
    return _conv_mod(backend).conv2d_bwd_x(dy, w, stride, pad, in_h, in_w)


def conv2d_bwd_w(x, dy, stride: int, pad: int, kh: int, kw: int, backend=None):
    return _conv_mod(backend).conv2d_bwd_w(x, dy, stride, pad, kh, kw)


def matmul(x, w, backend: str | None = None):
    return _conv_mod(backend).matmul(x, w)
