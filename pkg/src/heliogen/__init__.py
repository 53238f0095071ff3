"""heliogen: solar-gain-driven building massing.

Synthesizes a dataset of annealed 5x5 building heightmaps under an
enumerable family of neighbor obstructions, trains a small convolutional
VAE on their depth-map encodings, and generates new optimal geometries by
gradient descent in the latent space.
"""

__version__ = "0.1.0"

from .config import PipelineConfig, load_config

__all__ = ["PipelineConfig", "load_config", "__version__"]
