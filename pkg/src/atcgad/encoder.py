"""Initial latent embeddings via shallow normalized graph convolution.

The encoder is an initializer, not a trained model: projection matrices
are seeded random (Glorot-uniform range) and frozen, so two calls with
the same configuration produce identical embeddings. All discrimination
between nodes comes from the downstream consensus dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph
from .rng import STREAM_ENCODER, philox


@dataclass(frozen=True)
class EncoderConfig:
    latent_dim: int
    num_layers: int = 2
    projection_seed: int = 0
    use_nonlinearity: bool = True

    def __post_init__(self):
        if self.num_layers < 0:
            raise ValueError("num_layers must be >= 0")
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")


def normalized_propagate(g: Graph, h: np.ndarray) -> np.ndarray:
    """One symmetric-normalized propagation with a virtual self-loop.

    out_i = sum over j in N(i) plus i itself of h_j / sqrt(d_i * d_j),
    with d = degree + 1 counting the virtual self-loop. Equivalent to
    the dense D^{-1/2} (A + I) D^{-1/2} h. Summation order per row is
    fixed (sorted neighbor lists), so results do not depend on worker
    count.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.shape[0] != g.num_nodes:
        raise ValueError(f"h has {h.shape[0]} rows, graph has {g.num_nodes} nodes")
    scale = 1.0 / np.sqrt(g.degrees + 1.0)
    hs = h * scale[:, None]
    agg = g.adjacency() @ hs
    return scale[:, None] * (agg + hs)


def projection_matrices(cfg: EncoderConfig, feature_dim: int) -> list[np.ndarray]:
    """Seeded random projections, entries uniform in [-s, s] with
    s = sqrt(6 / (fan_in + fan_out)). Layer 0 maps feature_dim to
    latent_dim; later layers are square."""
    rng = philox(cfg.projection_seed, STREAM_ENCODER)
    mats = []
    n_mats = max(cfg.num_layers, 0)
    if cfg.num_layers == 0 and feature_dim != cfg.latent_dim:
        n_mats = 1  # single projection to the latent dimension
    fan_in = feature_dim
    for _ in range(n_mats):
        s = np.sqrt(6.0 / (fan_in + cfg.latent_dim))
        mats.append(rng.uniform(-s, s, size=(fan_in, cfg.latent_dim)))
        fan_in = cfg.latent_dim
    return mats


def encode(g: Graph, cfg: EncoderConfig) -> np.ndarray:
    """Initial latents z0 from features and structure.

    Each layer propagates, projects, and (except on the last layer)
    applies max(0, x). With num_layers == 0 the features are returned
    as-is when dimensions already match, otherwise projected once.
    """
    mats = projection_matrices(cfg, g.feature_dim)
    if cfg.num_layers == 0:
        return g.features.copy() if not mats else g.features @ mats[0]
    h = g.features
    for layer, w in enumerate(mats):
        h = normalized_propagate(g, h) @ w
        if cfg.use_nonlinearity and layer < len(mats) - 1:
            h = np.maximum(h, 0.0)
    return h
