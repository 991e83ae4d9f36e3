"""Empirical verification of the trajectory stability bound.

For a contractive operator with constant L < 1 and self-confidence
alpha in (0, 1], the per-iteration error contraction factor is
rho = 1 - alpha + alpha * L < 1, and the distance of a trajectory from
the operator's fixed point obeys

    ||e_k|| <= rho^k ||e_0|| + (1 - alpha) * eps / (1 - rho)

whenever every consensus perturbation ||c_k - z_k|| stays below eps.
This module runs the dynamics, measures eps a posteriori as the
observed supremum of the perturbations, and checks the bound at every
iteration. With eps chosen that way the bound must hold for a correct
implementation, which makes the certificate an end-to-end check of the
dynamics rather than of the inequality itself.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .denoiser import DenoiserOperator
from .encoder import EncoderConfig, encode
from .engine import AtcConfig, run
from .errors import ContractionError
from .graph import Graph

BOUND_SLACK = 1e-9


@dataclass
class StabilityCertificate:
    alpha: float
    lipschitz: float
    contraction_factor: float
    epsilon_hat: float
    initial_error: float
    bound_curve: np.ndarray
    observed_curve: np.ndarray
    satisfied: bool
    node: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "lipschitz": self.lipschitz,
            "contraction_factor": self.contraction_factor,
            "epsilon_hat": self.epsilon_hat,
            "initial_error": self.initial_error,
            "bound_curve": np.asarray(self.bound_curve).tolist(),
            "observed_curve": np.asarray(self.observed_curve).tolist(),
            "satisfied": bool(self.satisfied),
            "node": self.node,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def contraction_factor(alpha: float, lipschitz: float) -> float:
    return 1.0 - alpha + alpha * lipschitz


def theoretical_bound(alpha: float, lipschitz: float, epsilon: float, e0: float, k: int) -> float:
    """Geometric error bound rho^k e0 + (1 - alpha) eps / (1 - rho)."""
    if lipschitz >= 1.0:
        raise ContractionError(f"operator must be contractive, got Lipschitz {lipschitz}")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    rho = contraction_factor(alpha, lipschitz)
    steady = (1.0 - alpha) * epsilon / (1.0 - rho)
    return rho**k * e0 + steady


def _require_contractive(op: DenoiserOperator) -> float:
    if op.lipschitz is None or op.lipschitz >= 1.0:
        raise ContractionError(
            f"{op.kind} operator is not contractive (Lipschitz {op.lipschitz}); "
            "stability verification needs L < 1"
        )
    return float(op.lipschitz)


def stability_curves(
    g: Graph,
    op: DenoiserOperator,
    cfg: AtcConfig,
    z0: np.ndarray,
    reference: Optional[np.ndarray] = None,
):
    """Run the dynamics and return per-node error and perturbation curves.

    observed[k, i] = ||z_i^(k) - z*|| for k = 0..K (K+1 rows),
    deltas[k, i] = ||c_i^(k) - z_i^(k)|| for k = 0..K-1. The reference
    z* defaults to the operator's fixed point and must be supplied for
    operators without a closed-form one.
    """
    _require_contractive(op)
    if reference is None:
        reference = op.fixed_point()
    if reference is None:
        raise ValueError("operator has no closed-form fixed point; pass reference explicitly")
    reference = np.asarray(reference, dtype=np.float64)

    traced_cfg = AtcConfig(
        iterations=cfg.iterations,
        alpha=cfg.alpha,
        gamma=cfg.gamma,
        sigma=cfg.sigma,
        record_trace=True,
        kernel_input=cfg.kernel_input,
    )
    state, trace = run(g, z0, op, traced_cfg)

    observed = np.empty((cfg.iterations + 1, g.num_nodes))
    deltas = np.empty((cfg.iterations, g.num_nodes))
    for k in range(cfg.iterations):
        observed[k] = np.linalg.norm(trace.z[k] - reference, axis=1)
        deltas[k] = np.linalg.norm(trace.consensus[k] - trace.z[k], axis=1)
    observed[cfg.iterations] = np.linalg.norm(state.z - reference, axis=1)
    return observed, deltas


def certificate_from_curves(
    alpha: float,
    lipschitz: float,
    observed: np.ndarray,
    deltas: np.ndarray,
    node: Optional[int] = None,
) -> StabilityCertificate:
    """Assemble the bound/observed comparison for one trajectory."""
    epsilon_hat = float(deltas.max()) if deltas.size else 0.0
    e0 = float(observed[0])
    ks = np.arange(observed.size)
    rho = contraction_factor(alpha, lipschitz)
    steady = (1.0 - alpha) * epsilon_hat / (1.0 - rho)
    bound = rho**ks * e0 + steady
    satisfied = bool((observed <= bound + BOUND_SLACK).all())
    return StabilityCertificate(
        alpha=alpha,
        lipschitz=lipschitz,
        contraction_factor=rho,
        epsilon_hat=epsilon_hat,
        initial_error=e0,
        bound_curve=bound,
        observed_curve=observed.copy(),
        satisfied=satisfied,
        node=node,
    )


def verify_stability(
    g: Graph,
    op: DenoiserOperator,
    cfg: AtcConfig,
    node: int,
    z0: Optional[np.ndarray] = None,
    reference: Optional[np.ndarray] = None,
) -> StabilityCertificate:
    """Certificate for one node's trajectory under the full dynamics.

    Refuses non-contractive operators. epsilon is the observed maximum
    perturbation of that node's own run, so a correct implementation
    always satisfies the bound; a violation indicates a dynamics bug.
    """
    lipschitz = _require_contractive(op)
    if z0 is None:
        dim = op.dim or g.feature_dim
        z0 = encode(g, EncoderConfig(latent_dim=dim))
    observed, deltas = stability_curves(g, op, cfg, z0, reference)
    return certificate_from_curves(cfg.alpha, lipschitz, observed[:, node], deltas[:, node], node=node)
