"""Anomaly scores from accumulated trajectory statistics.

Four per-node signals feed the fused score: mean neighbor
inconsistency r, one minus the reliability weight w, cumulative
conflict energy, and mean trajectory energy. With raw fusion the score
is exactly r + (1 - w) + beta * conflict + lambda * energy; the
normalize option z-scores each signal across nodes first, which evens
out their very different natural scales (conflict is a cumulative sum
and is deliberately not divided by the iteration count, matching the
accumulation convention).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.stats

from .engine import AtcState, TrustState
from .errors import UndefinedMetricError
from .graph import Graph

RELIABILITY_MODES = ("all_pairs", "neighbor_mean")


@dataclass(frozen=True)
class ScoreConfig:
    beta: float = 1.0
    lam: float = 1.0
    reliability_mode: str = "all_pairs"
    normalize_signals: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.beta) and self.beta >= 0):
            raise ValueError("beta must be finite and nonnegative")
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError("lambda must be finite and nonnegative")
        if self.reliability_mode not in RELIABILITY_MODES:
            raise ValueError(f"reliability_mode must be one of {RELIABILITY_MODES}")


@dataclass
class ScoreReport:
    """Per-node signal breakdown plus run metadata."""

    inconsistency: np.ndarray   # r, mean over iterations
    reliability: np.ndarray     # w
    conflict: np.ndarray        # cumulative conflict energy
    energy: np.ndarray          # mean trajectory energy
    score: np.ndarray
    labels: Optional[np.ndarray] = None
    node_ids: Optional[list] = None
    metadata: dict = field(default_factory=dict)

    @property
    def num_nodes(self) -> int:
        return self.score.size


def reliability_weights(trust: TrustState, g: Graph, mode: str = "all_pairs") -> np.ndarray:
    """Per-node reliability from the final trust states.

    all_pairs: sum of incident trust divided by N - 1, counting
    non-adjacent pairs as zero trust (trust exists only on edges), so
    the weight of a sparse node stays far below 1 even under full
    trust. neighbor_mean: divide by the degree instead. Isolated nodes
    get 0 in both modes, as does everything in a single-node graph.
    """
    if mode not in RELIABILITY_MODES:
        raise ValueError(f"unknown reliability mode {mode!r}")
    n = g.num_nodes
    incident = np.zeros(n)
    if g.num_edges:
        incident = np.bincount(
            np.concatenate([trust.edges[:, 0], trust.edges[:, 1]]),
            weights=np.concatenate([trust.values, trust.values]),
            minlength=n,
        )
    if mode == "all_pairs":
        if n == 1:
            return np.zeros(1)
        return incident / (n - 1)
    deg = g.degrees
    return np.divide(incident, deg, out=np.zeros(n), where=deg > 0)


def _zscore(x: np.ndarray) -> np.ndarray:
    sd = x.std()
    if sd == 0:
        return np.zeros_like(x)
    return (x - x.mean()) / sd


def fuse_scores(state: AtcState, w: np.ndarray, cfg: ScoreConfig, iterations: int) -> ScoreReport:
    """Combine the four trajectory signals into one anomaly score.

    Inconsistency and trajectory energy are divided by the iteration
    count; the conflict accumulator is used as-is. A z-scored signal
    with zero spread contributes nothing.
    """
    r = state.inconsistency / iterations
    energy = state.energy / iterations
    conflict = state.conflict
    unreliability = 1.0 - w

    if cfg.normalize_signals:
        parts = [_zscore(r), _zscore(unreliability), _zscore(conflict), _zscore(energy)]
    else:
        parts = [r, unreliability, conflict, energy]
    score = parts[0] + parts[1] + cfg.beta * parts[2] + cfg.lam * parts[3]

    g = state.graph
    return ScoreReport(
        inconsistency=r,
        reliability=w,
        conflict=conflict,
        energy=energy,
        score=score,
        labels=None if g.labels is None else g.labels.copy(),
        node_ids=list(g.node_ids) if g.node_ids is not None else None,
        metadata={
            "iterations": iterations,
            "beta": cfg.beta,
            "lambda": cfg.lam,
            "reliability_mode": cfg.reliability_mode,
            "normalize_signals": cfg.normalize_signals,
        },
    )


def auroc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Probability that a random anomaly outranks a random normal node,
    with half credit for ties. Computed exactly through average ranks."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be 1-d and aligned")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("need at least one anomalous and one normal label")
    ranks = scipy.stats.rankdata(scores, method="average")
    pos_rank_sum = ranks[labels == 1].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def score_rows(report: ScoreReport):
    """Yield CSV rows: node_id, r, w, conflict, energy, score[, label]."""
    has_labels = report.labels is not None
    header = ["node_id", "r", "w", "conflict", "energy", "score"]
    if has_labels:
        header.append("label")
    yield header
    for i in range(report.num_nodes):
        node_id = report.node_ids[i] if report.node_ids is not None else i
        row = [
            node_id,
            repr(float(report.inconsistency[i])),
            repr(float(report.reliability[i])),
            repr(float(report.conflict[i])),
            repr(float(report.energy[i])),
            repr(float(report.score[i])),
        ]
        if has_labels:
            row.append(int(report.labels[i]))
        yield row


def write_scores_csv(report: ScoreReport, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    for row in score_rows(report):
        writer.writerow(row)


def metrics_dict(report: ScoreReport) -> dict:
    """Ranking metrics JSON: auroc is null without two label classes."""
    value = None
    n_anomalies = 0
    if report.labels is not None:
        n_anomalies = int(report.labels.sum())
        if 0 < n_anomalies < report.num_nodes:
            value = auroc(report.score, report.labels)
    return {
        "auroc": value,
        "n": report.num_nodes,
        "n_anomalies": n_anomalies,
        "config": report.metadata,
    }


def write_metrics_json(report: ScoreReport, fh) -> None:
    json.dump(metrics_dict(report), fh, indent=2, sort_keys=True)
    fh.write("\n")
