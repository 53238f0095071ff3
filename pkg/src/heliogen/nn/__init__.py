"""Hand-rolled autodiff, VAE model, and training loop."""

from .autograd import (
    NnError,
    Tensor,
    assert_finite,
    conv2d_op,
    conv_transpose2d_op,
    matmul_op,
    sigmoid_cross_entropy,
)
from .layers import Conv2d, ConvTranspose2d, Dense, truncated_normal
from .train import (
    MODEL_MAGIC,
    MODEL_VERSION,
    Adam,
    EpochStats,
    TrainResult,
    load_model,
    save_model,
    train_on_arrays,
    train_vae,
    write_history_csv,
)
from .vae import (
    LOGVAR_LIMIT,
    VaeLoss,
    VaeModel,
    decode,
    encode,
    kl_divergence,
    recon_error,
    reconstruct,
    reparameterize,
    vae_loss,
)

__all__ = [
    "NnError",
    "Tensor",
    "assert_finite",
    "matmul_op",
    "conv2d_op",
    "conv_transpose2d_op",
    "sigmoid_cross_entropy",
    "Dense",
    "Conv2d",
    "ConvTranspose2d",
    "truncated_normal",
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
    "Adam",
    "EpochStats",
    "TrainResult",
    "train_vae",
    "train_on_arrays",
    "save_model",
    "load_model",
    "write_history_csv",
    "MODEL_MAGIC",
    "MODEL_VERSION",
]
