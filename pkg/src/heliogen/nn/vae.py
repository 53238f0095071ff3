"""Convolutional variational autoencoder over depth-map images.

Encoder: conv(1->8, 4x4, stride 2) -> relu -> conv(8->16, 4x4, stride 2)
-> relu -> flatten -> dense to (mu, log-variance).  Decoder mirrors it
with transposed convolutions and emits logits; depth values are the
sigmoid of those logits.  Log-variances are clamped to [-20, 20] so a
runaway encoder cannot overflow exp().
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autograd import NnError, Tensor, assert_finite
from .layers import Conv2d, ConvTranspose2d, Dense

__all__ = [
    "LOGVAR_LIMIT",
    "VaeModel",
    "VaeLoss",
    "reparameterize",
    "kl_divergence",
    "recon_error",
    "vae_loss",
    "encode",
    "decode",
    "reconstruct",
]

LOGVAR_LIMIT = 20.0
_C1, _C2 = 8, 16
_KERNEL, _STRIDE, _PAD = 4, 2, 1


class VaeModel:
    """Weights plus forward passes; see module docstring for the wiring."""

    def __init__(
        self,
        latent_dim: int = 16,
        image_size: int = 16,
        seed: int = 0,
        dtype=np.float32,
    ):
        if latent_dim < 1:
            raise NnError("latent_dim must be positive")
        if image_size < 8 or image_size % 4 != 0:
            raise NnError("image_size must be a multiple of 4, at least 8")
        self.latent_dim = int(latent_dim)
        self.image_size = int(image_size)
        self.dtype = np.dtype(dtype)
        self.grid = image_size // 4  # spatial size after two stride-2 convs
        flat = self.grid * self.grid * _C2
        rng = np.random.default_rng(seed)
        k, s, p = _KERNEL, _STRIDE, _PAD
        self.enc_conv1 = Conv2d(1, _C1, k, s, p, rng, "enc_conv1", dtype)
        self.enc_conv2 = Conv2d(_C1, _C2, k, s, p, rng, "enc_conv2", dtype)
        self.enc_fc = Dense(flat, 2 * latent_dim, rng, "enc_fc", dtype)
        self.dec_fc = Dense(latent_dim, flat, rng, "dec_fc", dtype)
        self.dec_deconv1 = ConvTranspose2d(_C2, _C1, k, s, p, rng, "dec_deconv1", dtype)
        self.dec_deconv2 = ConvTranspose2d(_C1, 1, k, s, p, rng, "dec_deconv2", dtype)

    def layers(self):
        return (
            self.enc_conv1,
            self.enc_conv2,
            self.enc_fc,
            self.dec_fc,
            self.dec_deconv1,
            self.dec_deconv2,
        )

    def parameters(self) -> list[Tensor]:
        out: list[Tensor] = []
        for layer in self.layers():
            out.extend(layer.parameters())
        return out

    def astype(self, dtype) -> "VaeModel":
        """Copy of the model with weights cast to ``dtype``."""
        other = VaeModel(self.latent_dim, self.image_size, seed=0, dtype=dtype)
        for dst, src in zip(other.parameters(), self.parameters()):
            dst.data = src.data.astype(dtype)
        return other

    # ---------------------------------------------------- graph building

    def encode_t(self, x: Tensor) -> tuple[Tensor, Tensor]:
        if x.data.ndim != 4 or x.data.shape[1:] != (self.image_size, self.image_size, 1):
            raise NnError(
                f"encoder expects (B,{self.image_size},{self.image_size},1) input"
            )
        h = self.enc_conv1(x).relu()
        h = self.enc_conv2(h).relu()
        flat = h.reshape(h.shape[0], self.grid * self.grid * _C2)
        stats = self.enc_fc(flat)
        mu = stats[:, : self.latent_dim]
        logvar = stats[:, self.latent_dim :].clip(-LOGVAR_LIMIT, LOGVAR_LIMIT)
        return mu, logvar

    def decode_t(self, z: Tensor) -> Tensor:
        if z.data.ndim != 2 or z.data.shape[1] != self.latent_dim:
            raise NnError(f"decoder expects (B,{self.latent_dim}) latents")
        h = self.dec_fc(z)
        h = h.reshape(h.shape[0], self.grid, self.grid, _C2)
        h = self.dec_deconv1(h).relu()
        return self.dec_deconv2(h)


def reparameterize(mu: Tensor, logvar: Tensor, eps: np.ndarray) -> Tensor:
    """z = mu + exp(logvar / 2) * eps with eps treated as a constant."""
    eps_t = Tensor(np.asarray(eps, dtype=mu.data.dtype))
    if eps_t.data.shape != mu.data.shape:
        raise NnError(f"eps shape {eps_t.data.shape} != mu shape {mu.data.shape}")
    return mu + (logvar * 0.5).exp() * eps_t


@dataclass(frozen=True)
class VaeLoss:
    """Scalar loss tensors; total = recon + kl."""

    total: Tensor
    recon: Tensor
    kl: Tensor

    def values(self) -> tuple[float, float, float]:
        return (self.total.item(), self.recon.item(), self.kl.item())


def kl_divergence(mu: Tensor, logvar: Tensor) -> Tensor:
    """Closed-form divergence from the unit Gaussian.

    Summed over latent dimensions, averaged over the batch; zero exactly
    when mu = 0 and logvar = 0.
    """
    terms = mu * mu + logvar.exp() - 1.0 - logvar
    return terms.sum(axis=1).mean() * 0.5


def recon_error(logits: Tensor, x: Tensor) -> Tensor:
    """Squared pixel error summed per image, averaged over the batch."""
    diff = logits.sigmoid() - x
    return (diff * diff).sum(axis=(1, 2, 3)).mean()


def vae_loss(model: VaeModel, images: np.ndarray, eps: np.ndarray | None) -> VaeLoss:
    """Reconstruction plus KL on a batch.

    ``eps=None`` decodes the posterior mean (evaluation mode).
    """
    x_t = Tensor(_as_batch(images, model))
    mu, logvar = model.encode_t(x_t)
    z = mu if eps is None else reparameterize(mu, logvar, eps)
    logits = model.decode_t(z)
    recon = recon_error(logits, x_t)
    kl = kl_divergence(mu, logvar)
    total = recon + kl
    assert_finite(total.data, "vae loss")
    return VaeLoss(total=total, recon=recon, kl=kl)


# ----------------------------------------------------------- array API


def encode(model: VaeModel, images: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior (mu, logvar) rows for a batch of depth images."""
    mu, logvar = model.encode_t(Tensor(_as_batch(images, model)))
    assert_finite(mu.data, "encoder mean")
    assert_finite(logvar.data, "encoder log-variance")
    return mu.data, logvar.data


def decode(model: VaeModel, z: np.ndarray) -> np.ndarray:
    """Depth images in [0, 1] for a batch of latent rows."""
    z_arr = np.asarray(z, dtype=model.dtype)
    if z_arr.ndim == 1:
        z_arr = z_arr[None, :]
    logits = model.decode_t(Tensor(z_arr))
    assert_finite(logits.data, "decoder logits")
    return logits.sigmoid().data[:, :, :, 0]


def reconstruct(model: VaeModel, images: np.ndarray) -> np.ndarray:
    """Round-trip through the posterior mean; returns (B,H,W) in [0, 1]."""
    mu, _ = encode(model, images)
    return decode(model, mu)


def _as_batch(images: np.ndarray, model: VaeModel) -> np.ndarray:
    arr = np.asarray(images, dtype=model.dtype)
    if arr.ndim == 3:
        arr = arr[:, :, :, None]
    if arr.ndim != 4 or arr.shape[1:] != (model.image_size, model.image_size, 1):
        raise NnError(
            f"expected (B,{model.image_size},{model.image_size}[,1]) images,"
            f" got {arr.shape}"
        )
    return arr
