"""Pluggable contractive adaptation operators.

The adapt step of the consensus dynamics pulls each latent vector
toward the normal-data manifold through an operator D. Any map with
Lipschitz constant below one fits the stability analysis; this module
ships three interchangeable implementations:

* shrinkage toward a fixed center (contractive by construction),
* an affine map fitted by ridge regression on noised/clean pairs,
* the identity (not contractive; kept for ablations and flagged so).

Operators are immutable after construction and safe to apply from any
number of workers. Application is deterministic and iteration-invariant;
no stochastic reverse-chain sampling happens at inference time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NumericalError
from .rng import STREAM_DENOISER, STREAM_LIPSCHITZ, philox


@dataclass(frozen=True)
class NoiseSchedule:
    """Linearly spaced variance schedule for the fitting corruption."""

    betas: np.ndarray

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=np.float64)
        if betas.ndim != 1 or betas.size == 0:
            raise ValueError("schedule needs at least one step")
        if not ((betas > 0.0) & (betas < 1.0)).all():
            raise ValueError("every beta must lie in (0, 1)")
        if (np.diff(betas) < 0).any():
            raise ValueError("betas must be nondecreasing")
        betas.setflags(write=False)
        object.__setattr__(self, "betas", betas)

    @property
    def steps(self) -> int:
        return self.betas.size

    @classmethod
    def linear(cls, steps: int = 100, beta_start: float = 1e-4, beta_end: float = 2e-2) -> "NoiseSchedule":
        return cls(np.linspace(beta_start, beta_end, steps))

    def alpha_bar(self, t: int) -> float:
        """Cumulative signal retention after steps 0..t inclusive."""
        if not 0 <= t < self.steps:
            raise ValueError(f"noise level {t} outside [0, {self.steps})")
        return float(np.prod(1.0 - self.betas[: t + 1]))


class DenoiserOperator:
    """Deterministic map on latent vectors, applied row-wise to matrices."""

    kind: str = "abstract"
    #: known Lipschitz constant, or None when only estimable
    lipschitz: Optional[float] = None

    @property
    def contractive(self) -> bool:
        return self.lipschitz is not None and self.lipschitz < 1.0

    @property
    def dim(self) -> Optional[int]:
        """Latent dimension the operator is bound to, if any."""
        return None

    def apply(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def fixed_point(self) -> Optional[np.ndarray]:
        """The state left unchanged by the operator, when known in closed form."""
        return None

    def _check_dim(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        if self.dim is not None and z.shape[-1] != self.dim:
            raise ValueError(f"operator expects dimension {self.dim}, got {z.shape[-1]}")
        return z

    def to_dict(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_dict(doc: dict) -> "DenoiserOperator":
        kind = doc.get("kind")
        params = doc.get("params", {})
        if kind == "identity":
            return IdentityDenoiser()
        if kind == "shrinkage":
            return ShrinkageDenoiser(np.asarray(params["center"], dtype=np.float64), params["ratio"])
        if kind == "linear_trained":
            return LinearDenoiser(
                np.asarray(params["matrix"], dtype=np.float64),
                np.asarray(params["bias"], dtype=np.float64),
                declared_lipschitz=doc.get("declared_lipschitz"),
            )
        raise ValueError(f"unknown operator kind {kind!r}")

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @staticmethod
    def from_json(text: str) -> "DenoiserOperator":
        return DenoiserOperator.from_dict(json.loads(text))


class IdentityDenoiser(DenoiserOperator):
    """No-op operator, Lipschitz exactly 1. Ablation only: not contractive."""

    kind = "identity"
    lipschitz = 1.0

    def apply(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=np.float64)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": {}, "declared_lipschitz": 1.0}


class ShrinkageDenoiser(DenoiserOperator):
    """Pull every vector toward a fixed center: D(z) = m + ratio * (z - m).

    Contractive by construction with Lipschitz constant equal to the
    ratio; the center is the unique fixed point.
    """

    kind = "shrinkage"

    def __init__(self, center: np.ndarray, ratio: float):
        center = np.asarray(center, dtype=np.float64).reshape(-1)
        if not 0.0 <= ratio < 1.0:
            raise ValueError(f"shrinkage ratio must be in [0, 1), got {ratio}")
        self.center = center
        self.ratio = float(ratio)
        self.lipschitz = self.ratio

    @property
    def dim(self) -> int:
        return self.center.size

    def apply(self, z: np.ndarray) -> np.ndarray:
        z = self._check_dim(z)
        return self.center + self.ratio * (z - self.center)

    def fixed_point(self) -> np.ndarray:
        return self.center

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": {"center": self.center.tolist(), "ratio": self.ratio},
            "declared_lipschitz": self.ratio,
        }


class LinearDenoiser(DenoiserOperator):
    """Affine map D(z) = M z + b, usually produced by fit_linear_denoiser."""

    kind = "linear_trained"

    def __init__(self, matrix: np.ndarray, bias: np.ndarray, declared_lipschitz: Optional[float] = None):
        matrix = np.asarray(matrix, dtype=np.float64)
        bias = np.asarray(bias, dtype=np.float64).reshape(-1)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("matrix must be square")
        if bias.size != matrix.shape[0]:
            raise ValueError("bias dimension does not match matrix")
        self.matrix = matrix
        self.bias = bias
        if declared_lipschitz is None:
            declared_lipschitz = float(np.linalg.norm(matrix, ord=2))
        self.lipschitz = float(declared_lipschitz)

    @property
    def dim(self) -> int:
        return self.bias.size

    def apply(self, z: np.ndarray) -> np.ndarray:
        z = self._check_dim(z)
        return z @ self.matrix.T + self.bias

    def fixed_point(self) -> Optional[np.ndarray]:
        # (I - M) x = b has a unique solution when the map is contractive
        if not self.contractive:
            return None
        return np.linalg.solve(np.eye(self.dim) - self.matrix, self.bias)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": {"matrix": self.matrix.tolist(), "bias": self.bias.tolist()},
            "declared_lipschitz": self.lipschitz,
        }


def fit_linear_denoiser(
    clean: np.ndarray,
    schedule: NoiseSchedule,
    noise_level_t: int,
    ridge: float,
    seed: int,
) -> LinearDenoiser:
    """Fit an affine denoiser by ridge regression on corrupted samples.

    Each clean row z is corrupted to sqrt(abar) z + sqrt(1 - abar) eps
    where abar compounds the schedule's variance steps up to
    noise_level_t, then (M, b) minimize the squared recovery error of
    the clean rows plus ridge * ||M||_F^2. The bias is not penalized.
    The declared Lipschitz constant is the largest singular value of M.
    """
    clean = np.asarray(clean, dtype=np.float64)
    if clean.ndim != 2:
        raise ValueError("clean must be a 2-d sample matrix")
    n, d = clean.shape
    if n <= d:
        raise ValueError(f"need more samples than dimensions, got {n} x {d}")
    if ridge <= 0:
        raise ValueError("ridge must be positive")
    abar = schedule.alpha_bar(noise_level_t)

    rng = philox(seed, STREAM_DENOISER)
    noisy = np.sqrt(abar) * clean + np.sqrt(1.0 - abar) * rng.standard_normal((n, d))

    # Unpenalized bias: center both sides, solve for M, recover b.
    noisy_mean = noisy.mean(axis=0)
    clean_mean = clean.mean(axis=0)
    xc = noisy - noisy_mean
    yc = clean - clean_mean
    gram = xc.T @ xc + ridge * np.eye(d)
    try:
        m_t = np.linalg.solve(gram, xc.T @ yc)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"ridge normal equations singular: {exc}") from exc
    matrix = m_t.T
    bias = clean_mean - matrix @ noisy_mean
    return LinearDenoiser(matrix, bias)


def default_ridge(n_samples: int) -> float:
    """Default regularizer strength, scaled with the sample count."""
    return 1e-3 * n_samples


def estimate_lipschitz(
    op: DenoiserOperator,
    probe_count: int,
    radius: float,
    seed: int,
    dim: Optional[int] = None,
) -> float:
    """Empirical Lipschitz estimate from random probe pairs.

    Samples probe_count pairs (u, v) from N(0, radius^2 I) and returns
    the largest ||D(u) - D(v)|| / ||u - v||. For linear operators this
    approaches the spectral norm as probe_count grows.
    """
    if probe_count < 2:
        raise ValueError("probe_count must be >= 2")
    if dim is None:
        dim = op.dim
    if dim is None:
        raise ValueError("operator has no intrinsic dimension; pass dim explicitly")
    rng = philox(seed, STREAM_LIPSCHITZ)
    u = radius * rng.standard_normal((probe_count, dim))
    v = radius * rng.standard_normal((probe_count, dim))
    gaps = np.linalg.norm(u - v, axis=1)
    keep = gaps > 0
    out_gaps = np.linalg.norm(op.apply(u[keep]) - op.apply(v[keep]), axis=1)
    return float(np.max(out_gaps / gaps[keep]))
