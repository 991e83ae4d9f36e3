"""Graph anomaly detection via adapt-then-combine consensus dynamics.

Pipeline: encode node features into latents, iterate a two-stage
update (local contractive adaptation, then trust-weighted neighborhood
consensus), and score each node from four trajectory statistics. Nodes
whose local adaptation keeps fighting their neighborhood consensus
accumulate conflict and lose trust; that signature is what gets ranked.
"""

from .denoiser import (
    DenoiserOperator,
    IdentityDenoiser,
    LinearDenoiser,
    NoiseSchedule,
    ShrinkageDenoiser,
    default_ridge,
    estimate_lipschitz,
    fit_linear_denoiser,
)
from .encoder import EncoderConfig, encode, normalized_propagate
from .engine import (
    AtcConfig,
    AtcState,
    TrajectoryTrace,
    TrustState,
    accumulate_signals,
    adapt_step,
    collapsed_form,
    combine_step,
    consensus_states,
    instantaneous_alignment,
    run,
    trust_update,
)
from .errors import (
    AtcgadError,
    ContractionError,
    DivergenceError,
    EmptyGraphError,
    GraphFormatError,
    GraphParseError,
    GraphShapeError,
    NumericalError,
    UndefinedMetricError,
)
from .graph import AnomalyPlan, Graph, generate_sbm, inject_anomalies, load_graph
from .scoring import ScoreConfig, ScoreReport, auroc, fuse_scores, reliability_weights
from .stability import (
    StabilityCertificate,
    contraction_factor,
    stability_curves,
    theoretical_bound,
    verify_stability,
)

__version__ = "0.1.0"

__all__ = [
    "AnomalyPlan",
    "AtcConfig",
    "AtcState",
    "AtcgadError",
    "ContractionError",
    "DenoiserOperator",
    "DivergenceError",
    "EmptyGraphError",
    "EncoderConfig",
    "Graph",
    "GraphFormatError",
    "GraphParseError",
    "GraphShapeError",
    "IdentityDenoiser",
    "LinearDenoiser",
    "NoiseSchedule",
    "NumericalError",
    "ScoreConfig",
    "ScoreReport",
    "ShrinkageDenoiser",
    "StabilityCertificate",
    "TrajectoryTrace",
    "TrustState",
    "UndefinedMetricError",
    "accumulate_signals",
    "adapt_step",
    "auroc",
    "collapsed_form",
    "combine_step",
    "consensus_states",
    "contraction_factor",
    "default_ridge",
    "encode",
    "estimate_lipschitz",
    "fit_linear_denoiser",
    "fuse_scores",
    "generate_sbm",
    "inject_anomalies",
    "instantaneous_alignment",
    "load_graph",
    "normalized_propagate",
    "reliability_weights",
    "run",
    "stability_curves",
    "theoretical_bound",
    "trust_update",
    "verify_stability",
]
