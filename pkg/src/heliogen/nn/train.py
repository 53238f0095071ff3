"""Adam optimizer, the training loop, and model checkpoints."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, TextIO

import numpy as np

from ..codec import Dataset
from ..config import TrainConfig
from ..fileio import ChecksumReader, ChecksumWriter, FormatError
from .autograd import NnError, Tensor
from .vae import VaeModel, vae_loss

__all__ = [
    "MODEL_MAGIC",
    "MODEL_VERSION",
    "Adam",
    "EpochStats",
    "TrainResult",
    "train_vae",
    "train_on_arrays",
    "save_model",
    "load_model",
    "write_history_csv",
]

MODEL_MAGIC = b"PDGM"
MODEL_VERSION = 1


class Adam(object):
    """Adam with bias correction (beta1=0.9, beta2=0.999, eps=1e-8)."""

    def __init__(self, params, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        if not self.params:
            raise NnError("optimizer needs at least one parameter")
        for p in self.params:
            if not p.requires_grad:
                raise NnError(f"parameter {p.name!r} does not require gradients")
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad is None:
                raise NnError(f"parameter {p.name!r} has no gradient")
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass(frozen=True)
class EpochStats:
    """Per-epoch losses; validation decodes the posterior mean."""

    epoch: int
    train_loss: float
    train_recon: float
    train_kl: float
    val_loss: float


@dataclass(frozen=True)
class TrainResult:
    model: VaeModel
    history: tuple[EpochStats, ...]


def train_vae(
    dataset: Dataset,
    config: TrainConfig | None = None,
    rng_seed: int = 0,
    checkpoint_path: str | None = None,
    progress: Callable[[EpochStats], None] | None = None,
) -> TrainResult:
    """Train on the dataset's train split, validating on the test split."""
    config = config or TrainConfig()
    train = [r.depth.pixels for r in dataset.train_records]
    val = [r.depth.pixels for r in dataset.test_records]
    if not train:
        raise NnError("training split is empty")
    if not val:
        raise NnError("validation split is empty (dataset has no test records)")
    return train_on_arrays(
        np.stack(train),
        np.stack(val),
        config,
        rng_seed=rng_seed,
        checkpoint_path=checkpoint_path,
        progress=progress,
    )


def train_on_arrays(
    train_images: np.ndarray,
    val_images: np.ndarray,
    config: TrainConfig,
    rng_seed: int = 0,
    checkpoint_path: str | None = None,
    progress: Callable[[EpochStats], None] | None = None,
) -> TrainResult:
    train_images = np.asarray(train_images, dtype=np.float32)
    val_images = np.asarray(val_images, dtype=np.float32)
    if train_images.ndim != 3 or train_images.shape[1] != train_images.shape[2]:
        raise NnError("expected square (B,H,W) training images")
    if config.epochs < 1 or config.batch_size < 1:
        raise NnError("epochs and batch_size must be positive")
    n = train_images.shape[0]
    model = VaeModel(
        latent_dim=config.latent_dim,
        image_size=train_images.shape[1],
        seed=rng_seed,
    )
    opt = Adam(model.parameters(), lr=config.learning_rate)
    rng = np.random.default_rng(rng_seed)
    history: list[EpochStats] = []
    for epoch in range(1, config.epochs + 1):
        perm = rng.permutation(n)
        tot = rec = kl = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            eps = rng.standard_normal((len(idx), config.latent_dim))
            eps = eps.astype(np.float32)
            loss = vae_loss(model, train_images[idx], eps)
            opt.zero_grad()
            loss.total.backward()
            opt.step()
            t, r, k = loss.values()
            tot += t * len(idx)
            rec += r * len(idx)
            kl += k * len(idx)
        val_loss = vae_loss(model, val_images, eps=None).total.item()
        stats = EpochStats(epoch, tot / n, rec / n, kl / n, val_loss)
        history.append(stats)
        if progress is not None:
            progress(stats)
        interval = config.checkpoint_interval
        if checkpoint_path and interval > 0 and epoch % interval == 0:
            save_model(model, checkpoint_path)
    if checkpoint_path:
        save_model(model, checkpoint_path)
    return TrainResult(model=model, history=tuple(history))


def write_history_csv(history, fh: TextIO) -> None:
    fh.write("epoch,train_loss,train_recon,train_kl,val_loss\n")
    for s in history:
        fh.write(
            f"{s.epoch},{s.train_loss!r},{s.train_recon!r},"
            f"{s.train_kl!r},{s.val_loss!r}\n"
        )


# ---------------------------------------------------------- checkpoints


def save_model(model: VaeModel, path: str) -> None:
    """Write weights as a checksummed table of named f32 arrays."""
    params = model.parameters()
    with open(path, "wb") as fh:
        w = ChecksumWriter(fh)
        w.write(MODEL_MAGIC)
        w.pack("<I", MODEL_VERSION)
        w.pack("<II", model.latent_dim, model.image_size)
        w.pack("<I", len(params))
        for p in params:
            name = p.name.encode("utf-8")
            w.pack("<H", len(name))
            w.write(name)
            w.pack("<B", p.data.ndim)
            w.pack("<" + "I" * p.data.ndim, *p.data.shape)
            w.write(np.ascontiguousarray(p.data, dtype="<f4").tobytes())
        w.finish()


def load_model(path: str) -> VaeModel:
    with open(path, "rb") as fh:
        r = ChecksumReader(fh, name=path)
        r.expect_magic(MODEL_MAGIC)
        r.expect_version(MODEL_VERSION)
        latent_dim, image_size = r.unpack("<II", "model dims")
        (count,) = r.unpack("<I", "parameter count")
        try:
            model = VaeModel(latent_dim=latent_dim, image_size=image_size, seed=0)
        except NnError as exc:
            raise FormatError(f"{path}: invalid model dims: {exc}") from exc
        table = {p.name: p for p in model.parameters()}
        if count != len(table):
            raise FormatError(
                f"{path}: expected {len(table)} parameters, header says {count}"
            )
        seen: set[str] = set()
        for i in range(count):
            (nlen,) = r.unpack("<H", f"parameter {i} name length")
            name = r.read(nlen, f"parameter {i} name").decode("utf-8", "replace")
            if name not in table or name in seen:
                raise FormatError(f"{path}: unexpected parameter {name!r}")
            seen.add(name)
            (ndim,) = r.unpack("<B", f"parameter {name} rank")
            dims = r.unpack("<" + "I" * ndim, f"parameter {name} shape")
            p = table[name]
            if tuple(dims) != p.data.shape:
                raise FormatError(
                    f"{path}: parameter {name} has shape {tuple(dims)},"
                    f" expected {p.data.shape}"
                )
            raw = r.read(4 * int(np.prod(dims, dtype=np.int64)), f"parameter {name}")
            p.data = np.frombuffer(raw, dtype="<f4").reshape(dims).astype(np.float32)
        r.verify_checksum()
    return model
