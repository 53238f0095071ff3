"""Minimal reverse-mode autodiff over numpy arrays.

Tensors hold float32 (training) or float64 (numerical checks) data and
build a small operation graph; ``backward`` walks it once in reverse
topological order.  Dense and convolution products route through
``heliogen.kernels`` so they share the backend switch with the rest of
the package.  Elementwise math stays in numpy: both backends would run
the identical expressions, so there is nothing to toggle.
"""

from __future__ import annotations

import numpy as np

from .. import kernels

__all__ = [
    "NnError",
    "Tensor",
    "assert_finite",
    "matmul_op",
    "conv2d_op",
    "conv_transpose2d_op",
    "sigmoid_cross_entropy",
]

_FLOAT_KINDS = ("f",)


class NnError(ValueError):
    """Invalid shapes, dtypes, or non-finite values in the network."""


def assert_finite(arr: np.ndarray, what: str) -> None:
    if not np.isfinite(arr).all():
        raise NnError(f"non-finite values in {what}")


def _as_float_array(data, dtype=None) -> np.ndarray:
    arr = np.asarray(data)
    if dtype is not None:
        arr = arr.astype(dtype, copy=False)
    elif arr.dtype.kind not in _FLOAT_KINDS:
        arr = arr.astype(np.float64)
    return arr


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand's shape."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """Array node in the autodiff graph."""

    __slots__ = ("data", "grad", "requires_grad", "name", "_locals")

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        self.data = _as_float_array(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        # (parent, fn) pairs; fn maps the upstream gradient to the
        # parent's contribution
        self._locals: tuple = ()

    # ------------------------------------------------------------ basics

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False, name=self.name)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}{tag})"

    # ---------------------------------------------------------- graphing

    def _coerce(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            if other.data.dtype != self.data.dtype:
                raise NnError(
                    f"dtype mismatch: {self.data.dtype} vs {other.data.dtype}"
                )
            return other
        return Tensor(np.asarray(other, dtype=self.data.dtype))

    def backward(self) -> None:
        if self.data.size != 1:
            raise NnError("backward requires a scalar loss")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent, _ in node._locals:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            grad = node.grad
            if grad is None:
                continue
            for parent, fn in node._locals:
                contrib = fn(grad)
                if parent.grad is None:
                    parent.grad = contrib
                else:
                    parent.grad = parent.grad + contrib

    # --------------------------------------------------------- operators

    def __add__(self, other) -> "Tensor":
        other = self._coerce(other)
        out = _node(self.data + other.data, self, other)
        _record(
            out,
            (self, lambda g: _unbroadcast(g, self.data.shape)),
            (other, lambda g: _unbroadcast(g, other.data.shape)),
        )
        return out

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        out = _node(-self.data, self)
        _record(out, (self, lambda g: -g))
        return out

    def __sub__(self, other) -> "Tensor":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Tensor":
        return self._coerce(other) + (-self)

    def __mul__(self, other) -> "Tensor":
        other = self._coerce(other)
        out = _node(self.data * other.data, self, other)
        _record(
            out,
            (self, lambda g: _unbroadcast(g * other.data, self.data.shape)),
            (other, lambda g: _unbroadcast(g * self.data, other.data.shape)),
        )
        return out

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Tensor":
        if isinstance(other, Tensor) or np.ndim(other) != 0:
            raise NnError("division only supports scalar denominators")
        return self * (1.0 / float(other))

    def __getitem__(self, key) -> "Tensor":
        out = _node(self.data[key], self)

        def back(g, key=key, shape=self.data.shape):
            full = np.zeros(shape, dtype=g.dtype)
            full[key] = g
            return full

        _record(out, (self, back))
        return out

    # ------------------------------------------------------- elementwise

    def exp(self) -> "Tensor":
        value = np.exp(self.data)
        out = _node(value, self)
        _record(out, (self, lambda g: g * value))
        return out

    def relu(self) -> "Tensor":
        out = _node(np.maximum(self.data, 0), self)
        mask = self.data > 0
        _record(out, (self, lambda g: g * mask))
        return out

    def sigmoid(self) -> "Tensor":
        value = _sigmoid(self.data)
        out = _node(value, self)
        _record(out, (self, lambda g: g * (value * (1.0 - value))))
        return out

    def clip(self, lo: float, hi: float) -> "Tensor":
        out = _node(np.clip(self.data, lo, hi), self)
        mask = (self.data >= lo) & (self.data <= hi)
        _record(out, (self, lambda g: g * mask))
        return out

    # -------------------------------------------------------- reductions

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        axes = _norm_axes(axis, self.data.ndim)
        out = _node(self.data.sum(axis=axes, keepdims=keepdims), self)

        def back(g, axes=axes, keepdims=keepdims, shape=self.data.shape):
            if axes is not None and not keepdims:
                g = np.expand_dims(g, axes)
            return np.broadcast_to(g, shape).astype(g.dtype, copy=False)

        _record(out, (self, back))
        return out

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        axes = _norm_axes(axis, self.data.ndim)
        if axes is None:
            count = self.data.size
        else:
            count = int(np.prod([self.data.shape[a] for a in axes]))
        return self.sum(axis=axes, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out = _node(self.data.reshape(shape), self)
        _record(out, (self, lambda g: g.reshape(self.data.shape)))
        return out


def _node(data: np.ndarray, *parents: Tensor) -> Tensor:
    out = Tensor(data)
    out.requires_grad = any(p.requires_grad for p in parents)
    return out


def _record(out: Tensor, *pairs) -> None:
    if out.requires_grad:
        out._locals = tuple((p, fn) for p, fn in pairs if p.requires_grad)


def _norm_axes(axis, ndim):
    if axis is None:
        return None
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # evaluate exp on the negative side only so large |x| cannot overflow
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# ------------------------------------------------------------ linear ops


def matmul_op(x: Tensor, w: Tensor, backend: str | None = None) -> Tensor:
    if x.data.ndim != 2 or w.data.ndim != 2:
        raise NnError("matmul expects 2-d operands")
    if x.data.dtype != w.data.dtype:
        raise NnError(f"dtype mismatch: {x.data.dtype} vs {w.data.dtype}")
    out = _node(kernels.matmul(_c(x.data), _c(w.data), backend=backend), x, w)
    _record(
        out,
        (x, lambda g: kernels.matmul(_c(g), _c(w.data.T), backend=backend)),
        (w, lambda g: kernels.matmul(_c(x.data.T), _c(g), backend=backend)),
    )
    return out


def conv2d_op(x: Tensor, w: Tensor, stride: int, pad: int, backend=None) -> Tensor:
    """NHWC cross-correlation; weights are (KH,KW,IC,OC)."""
    _check_conv_args(x, w)
    in_h, in_w = x.data.shape[1], x.data.shape[2]
    kh, kw = w.data.shape[0], w.data.shape[1]
    out = _node(
        kernels.conv2d(_c(x.data), _c(w.data), stride, pad, backend=backend), x, w
    )
    _record(
        out,
        (
            x,
            lambda g: kernels.conv2d_bwd_x(
                _c(g), _c(w.data), stride, pad, in_h, in_w, backend=backend
            ),
        ),
        (
            w,
            lambda g: kernels.conv2d_bwd_w(
                _c(x.data), _c(g), stride, pad, kh, kw, backend=backend
            ),
        ),
    )
    return out


def conv_transpose2d_op(
    x: Tensor, w: Tensor, stride: int, pad: int, out_h: int, out_w: int, backend=None
) -> Tensor:
    """Transposed convolution: the adjoint of ``conv2d_op``.

    Forward reuses the conv input-gradient kernel, so the input gradient
    is a plain forward conv and the weight gradient swaps the roles of
    input and upstream gradient.  Weights are (KH,KW,OC,IC): the conv
    view maps output-image channels back to input-image channels.
    """
    _check_conv_args(x, w)
    kh, kw = w.data.shape[0], w.data.shape[1]
    out = _node(
        kernels.conv2d_bwd_x(
            _c(x.data), _c(w.data), stride, pad, out_h, out_w, backend=backend
        ),
        x,
        w,
    )
    _record(
        out,
        (
            x,
            lambda g: kernels.conv2d(_c(g), _c(w.data), stride, pad, backend=backend),
        ),
        (
            w,
            lambda g: kernels.conv2d_bwd_w(
                _c(g), _c(x.data), stride, pad, kh, kw, backend=backend
            ),
        ),
    )
    return out


def sigmoid_cross_entropy(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Elementwise stable sigmoid cross-entropy against constant targets.

    value = max(l, 0) - l*t + log(1 + exp(-|l|)); d/dl = sigmoid(l) - t.
    """
    t = np.asarray(targets, dtype=logits.data.dtype)
    if t.shape != logits.data.shape:
        raise NnError(f"target shape {t.shape} != logits shape {logits.data.shape}")
    lv = logits.data
    value = np.maximum(lv, 0.0) - lv * t + np.log1p(np.exp(-np.abs(lv)))
    out = _node(value, logits)
    _record(out, (logits, lambda g: g * (_sigmoid(lv) - t)))
    return out


def _check_conv_args(x: Tensor, w: Tensor) -> None:
    if x.data.ndim != 4 or w.data.ndim != 4:
        raise NnError("conv expects NHWC input and 4-d weights")
    if x.data.dtype != w.data.dtype:
        raise NnError(f"dtype mismatch: {x.data.dtype} vs {w.data.dtype}")


def _c(arr: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(arr)
