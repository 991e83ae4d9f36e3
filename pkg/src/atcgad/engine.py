"""Adapt-then-combine consensus dynamics with temporal trust memory.

One iteration, synchronously for every node from the iteration-k
snapshot:

1. adapt: psi_i = D(z_i), pulling each latent toward the normal
   manifold through the denoising operator;
2. trust: per-edge alignment tau_ij = exp(-||psi_i - psi_j||^2 / 2 sigma^2)
   folded into the decaying memory T_ij = gamma T_ij + (1 - gamma) tau_ij;
3. combine: z_i <- alpha psi_i + (1 - alpha) c_i where c_i is the
   trust-weighted average of neighbors' adapted states;
4. accumulate per-node trajectory statistics (inconsistency, conflict
   energy, trajectory energy) consumed by the scoring stage.

Everything is vectorized with fixed per-row reduction order (sorted CSR
neighbor lists, sequential sparse matvec), so output is bitwise
independent of any worker-count setting. Trust is stored once per
undirected edge; the two directed weights differ only by the per-node
normalization applied in the combine step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

from .denoiser import DenoiserOperator
from .errors import DivergenceError
from .graph import Graph

_EDGE_CHUNK = 1 << 18


@dataclass(frozen=True)
class AtcConfig:
    """Hyperparameters of the consensus dynamics.

    sigma may be the string "median": the kernel bandwidth is then set
    to the median adapted-state distance over edges at the first
    iteration and frozen for the rest of the run. kernel_input selects
    which states feed the alignment kernel; "z" together with gamma=0
    reproduces the memoryless instantaneous weighting.
    """

    iterations: int
    alpha: float
    gamma: float
    sigma: Union[float, str] = "median"
    record_trace: bool = False
    kernel_input: str = "psi"

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")
        if isinstance(self.sigma, str):
            if self.sigma != "median":
                raise ValueError(f"sigma must be positive or 'median', got {self.sigma!r}")
        elif not self.sigma > 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.kernel_input not in ("psi", "z"):
            raise ValueError(f"kernel_input must be 'psi' or 'z', got {self.kernel_input!r}")


@dataclass
class TrustState:
    """Per-undirected-edge trust memory, aligned with Graph.edges rows."""

    edges: np.ndarray
    values: np.ndarray
    iteration: int = 0

    @classmethod
    def initial(cls, g: Graph) -> "TrustState":
        return cls(g.edges, np.ones(g.num_edges), 0)


@dataclass
class AtcState:
    """Mutable per-run state: latents, adapted states, trust, accumulators."""

    graph: Graph
    z: np.ndarray
    psi: np.ndarray
    trust: TrustState
    consensus: Optional[np.ndarray] = None
    inconsistency: np.ndarray = field(default=None)  # running sum of ||z - c||
    energy: np.ndarray = field(default=None)         # running sum of ||z_next - psi||^2
    conflict: np.ndarray = field(default=None)       # running sum of per-step conflict
    iteration: int = 0
    resolved_sigma: Optional[float] = None

    @classmethod
    def initial(cls, g: Graph, z0: np.ndarray) -> "AtcState":
        z0 = np.ascontiguousarray(z0, dtype=np.float64)
        if z0.ndim != 2 or z0.shape[0] != g.num_nodes:
            raise ValueError(f"z0 must be ({g.num_nodes}, d), got {z0.shape}")
        if not np.isfinite(z0).all():
            raise ValueError("z0 contains non-finite values")
        n = g.num_nodes
        return cls(
            graph=g,
            z=z0.copy(),
            psi=z0.copy(),
            trust=TrustState.initial(g),
            inconsistency=np.zeros(n),
            energy=np.zeros(n),
            conflict=np.zeros(n),
        )


@dataclass
class TrajectoryTrace:
    """Per-iteration snapshots: z, psi, consensus, per-step conflict."""

    z: list = field(default_factory=list)
    psi: list = field(default_factory=list)
    consensus: list = field(default_factory=list)
    step_conflict: list = field(default_factory=list)

    def append(self, z, psi, consensus, step_conflict):
        self.z.append(z.copy())
        self.psi.append(psi.copy())
        self.consensus.append(consensus.copy())
        self.step_conflict.append(step_conflict.copy())

    def __len__(self) -> int:
        return len(self.z)

    def records(self):
        """Yield one flat dict per (iteration, node), JSONL-ready."""
        for k in range(len(self.z)):
            for i in range(self.z[k].shape[0]):
                yield {
                    "k": k,
                    "node": i,
                    "z": self.z[k][i].tolist(),
                    "psi": self.psi[k][i].tolist(),
                    "c": self.consensus[k][i].tolist(),
                    "conflict": float(self.step_conflict[k][i]),
                }


def _edge_sq_dists(x: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Squared distances ||x_u - x_v||^2 per edge, chunked to bound memory."""
    m = edges.shape[0]
    out = np.empty(m)
    for start in range(0, m, _EDGE_CHUNK):
        stop = min(start + _EDGE_CHUNK, m)
        diff = x[edges[start:stop, 0]] - x[edges[start:stop, 1]]
        out[start:stop] = np.einsum("ij,ij->i", diff, diff)
    return out


def instantaneous_alignment(psi_i: np.ndarray, psi_j: np.ndarray, sigma: float) -> float:
    """Alignment kernel between two adapted states, in (0, 1].

    Equals 1 exactly when the states coincide and decays with their
    squared distance at bandwidth sigma.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    gap = np.asarray(psi_i, dtype=np.float64) - np.asarray(psi_j, dtype=np.float64)
    return float(np.exp(-np.dot(gap, gap) / (2.0 * sigma * sigma)))


def adapt_step(state: AtcState, op: DenoiserOperator) -> np.ndarray:
    """Adapt every node's latent through the operator; z is untouched."""
    state.psi = op.apply(state.z)
    return state.psi


def trust_update(trust: TrustState, states: np.ndarray, gamma: float, sigma: float) -> TrustState:
    """One step of the decaying trust recursion over all edges.

    ``states`` are the vectors feeding the alignment kernel (adapted
    states by default). Symmetry is structural: one value per
    undirected edge.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    d2 = _edge_sq_dists(states, trust.edges)
    tau = np.exp(-d2 / (2.0 * sigma * sigma))
    values = gamma * trust.values + (1.0 - gamma) * tau
    return TrustState(trust.edges, values, trust.iteration + 1)


def consensus_states(g: Graph, psi: np.ndarray, trust: TrustState) -> np.ndarray:
    """Trust-weighted neighborhood averages of the adapted states.

    c_i = sum_j T_ij psi_j / sum_j T_ij over the neighbors of i.
    Isolated nodes fall back to their own adapted state, so the update
    degenerates to a pure adaptation iterate there.
    """
    trust_csr = trust.values[g.csr_edge_ids]
    sums = np.bincount(g.csr_rows, weights=trust_csr, minlength=g.num_nodes)
    isolated = g.degrees == 0
    safe = np.where(isolated, 1.0, sums)
    weights = trust_csr / safe[g.csr_rows]
    mat = sp.csr_matrix((weights, g.indices, g.indptr), shape=(g.num_nodes, g.num_nodes))
    c = mat @ psi
    if isolated.any():
        c[isolated] = psi[isolated]
    return c


def combine_step(state: AtcState, cfg: AtcConfig) -> np.ndarray:
    """Blend each adapted state with its trust-weighted consensus.

    Requires state.trust to be current for this iteration. Caches the
    consensus on the state (the signal accumulators read it) and
    returns the next latents without committing them.
    """
    c = consensus_states(state.graph, state.psi, state.trust)
    state.consensus = c
    return cfg.alpha * state.psi + (1.0 - cfg.alpha) * c


def collapsed_form(z: np.ndarray, c: np.ndarray, op: DenoiserOperator, alpha: float) -> np.ndarray:
    """Single-expression update alpha D(z) + (1 - alpha) c.

    Algebraically identical to running adapt_step followed by
    combine_step with the same consensus; kept as an independent entry
    point so the equivalence is testable.
    """
    return alpha * op.apply(z) + (1.0 - alpha) * c


def _row_sq_norms(x: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", x, x)


def accumulate_signals(state: AtcState, z_next: np.ndarray) -> np.ndarray:
    """Fold one iteration into the per-node trajectory statistics.

    inconsistency grows by ||z - c||; conflict by the squared gap
    between the adaptation innovation psi - z and the consensus
    innovation c - z; energy by ||z_next - psi||^2. Returns the
    per-step conflict for optional tracing. All accumulators are
    nonnegative and nondecreasing.
    """
    c = state.consensus
    if c is None:
        raise ValueError("combine_step must run before accumulate_signals")
    delta_d = state.psi - state.z
    delta_c = c - state.z
    state.inconsistency += np.sqrt(_row_sq_norms(state.z - c))
    step_conflict = _row_sq_norms(delta_d - delta_c)
    state.conflict += step_conflict
    state.energy += _row_sq_norms(z_next - state.psi)
    return step_conflict


def resolve_sigma(cfg: AtcConfig, kernel_states: np.ndarray, edges: np.ndarray) -> float:
    """Fixed bandwidth, or the median edge distance of the first
    iteration's kernel input. Falls back to 1.0 when the median is zero
    (all incident states identical) or the graph has no edges."""
    if not isinstance(cfg.sigma, str):
        return float(cfg.sigma)
    if edges.shape[0] == 0:
        return 1.0
    med = float(np.median(np.sqrt(_edge_sq_dists(kernel_states, edges))))
    return med if med > 0 else 1.0


def run(
    g: Graph,
    z0: np.ndarray,
    op: DenoiserOperator,
    cfg: AtcConfig,
) -> tuple[AtcState, Optional[TrajectoryTrace]]:
    """Execute the full dynamics for cfg.iterations synchronous steps.

    Every node's iteration-k update reads only iteration-k snapshots.
    Returns the final state (trust after K updates, accumulators ready
    for scoring) and the trace when recording was requested. Raises
    DivergenceError naming iteration and node if a non-finite value
    appears.
    """
    state = AtcState.initial(g, z0)
    trace = TrajectoryTrace() if cfg.record_trace else None
    sigma: Optional[float] = None

    for k in range(cfg.iterations):
        adapt_step(state, op)
        kernel_states = state.psi if cfg.kernel_input == "psi" else state.z
        if sigma is None:
            sigma = resolve_sigma(cfg, kernel_states, g.edges)
            state.resolved_sigma = sigma
        state.trust = trust_update(state.trust, kernel_states, cfg.gamma, sigma)
        z_next = combine_step(state, cfg)
        if not np.isfinite(z_next).all():
            bad = int(np.nonzero(~np.isfinite(z_next).all(axis=1))[0][0])
            raise DivergenceError(iteration=k, node=bad)
        step_conflict = accumulate_signals(state, z_next)
        if trace is not None:
            trace.append(state.z, state.psi, state.consensus, step_conflict)
        state.z = z_next
        state.iteration = k + 1

    return state, trace
