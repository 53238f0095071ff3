"""Network layers: dense, strided conv, and transposed conv.

Weights start from a truncated normal with fan-in scaling (std =
1/sqrt(fan_in), resampled beyond two sigma) and biases start at zero.
Construction order is fixed so a single seeded generator reproduces a
model bit for bit.
"""

from __future__ import annotations

import numpy as np

from .autograd import NnError, Tensor, conv2d_op, conv_transpose2d_op, matmul_op

__all__ = ["truncated_normal", "Dense", "Conv2d", "ConvTranspose2d"]


def truncated_normal(rng: np.random.Generator, shape, std: float) -> np.ndarray:
    """Normal(0, std) with draws beyond 2*std resampled."""
    out = rng.normal(0.0, std, size=shape)
    while True:
        bad = np.abs(out) > 2.0 * std
        if not bad.any():
            return out
        out[bad] = rng.normal(0.0, std, size=int(bad.sum()))


class Dense:
    """Affine map (B,IN) -> (B,OUT)."""

    def __init__(self, in_features: int, out_features: int, rng, name, dtype):
        std = 1.0 / np.sqrt(in_features)
        self.in_features = in_features
        self.out_features = out_features
        self.w = Tensor(
            truncated_normal(rng, (in_features, out_features), std).astype(dtype),
            requires_grad=True,
            name=f"{name}.w",
        )
        self.b = Tensor(
            np.zeros(out_features, dtype=dtype), requires_grad=True, name=f"{name}.b"
        )

    def __call__(self, x: Tensor) -> Tensor:
        if x.data.ndim != 2 or x.data.shape[1] != self.in_features:
            raise NnError(f"dense {self.w.name} expects (B,{self.in_features})")
        return matmul_op(x, self.w) + self.b

    def parameters(self) -> list[Tensor]:
        return [self.w, self.b]


class Conv2d:
    """Strided NHWC convolution, weights (KH,KW,IC,OC)."""

    def __init__(self, in_ch, out_ch, kernel, stride, pad, rng, name, dtype):
        std = 1.0 / np.sqrt(kernel * kernel * in_ch)
        self.in_ch = in_ch
        self.stride = stride
        self.pad = pad
        self.w = Tensor(
            truncated_normal(rng, (kernel, kernel, in_ch, out_ch), std).astype(dtype),
            requires_grad=True,
            name=f"{name}.w",
        )
        self.b = Tensor(
            np.zeros(out_ch, dtype=dtype), requires_grad=True, name=f"{name}.b"
        )

    def __call__(self, x: Tensor) -> Tensor:
        if x.data.ndim != 4 or x.data.shape[3] != self.in_ch:
            raise NnError(f"conv {self.w.name} expects NHWC with {self.in_ch} channels")
        return conv2d_op(x, self.w, self.stride, self.pad) + self.b

    def parameters(self) -> list[Tensor]:
        return [self.w, self.b]


class ConvTranspose2d:
    """Strided NHWC transposed convolution, weights (KH,KW,OC,IC).

    Output size is the conv-inverse relation (in-1)*stride - 2*pad + k.
    """

    def __init__(self, in_ch, out_ch, kernel, stride, pad, rng, name, dtype):
        std = 1.0 / np.sqrt(kernel * kernel * in_ch)
        self.in_ch = in_ch
        self.kernel = kernel
        self.stride = stride
        self.pad = pad
        self.w = Tensor(
            truncated_normal(rng, (kernel, kernel, out_ch, in_ch), std).astype(dtype),
            requires_grad=True,
            name=f"{name}.w",
        )
        self.b = Tensor(
            np.zeros(out_ch, dtype=dtype), requires_grad=True, name=f"{name}.b"
        )

    def output_size(self, in_size: int) -> int:
        return (in_size - 1) * self.stride - 2 * self.pad + self.kernel

    def __call__(self, x: Tensor) -> Tensor:
        if x.data.ndim != 4 or x.data.shape[3] != self.in_ch:
            raise NnError(
                f"deconv {self.w.name} expects NHWC with {self.in_ch} channels"
            )
        out_h = self.output_size(x.data.shape[1])
        out_w = self.output_size(x.data.shape[2])
        return conv_transpose2d_op(x, self.w, self.stride, self.pad, out_h, out_w) + self.b

    def parameters(self) -> list[Tensor]:
        return [self.w, self.b]
