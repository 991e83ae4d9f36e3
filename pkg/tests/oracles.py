"""Independent naive reference implementations.

Everything here is deliberately written the slow way: dense matrices,
python loops over nodes and neighbors, dict-keyed trust, no shared code
with the package. The engine tests compare the fast implementation
against these.
"""

import math

import numpy as np


def dense_propagate(n, edge_list, h):
    """Dense D^{-1/2} (A + I) D^{-1/2} h with self-loop degrees."""
    a = np.zeros((n, n))
    for u, v in edge_list:
        a[u][v] = 1.0
        a[v][u] = 1.0
    a = a + np.eye(n)
    deg = a.sum(axis=1)
    d_inv_sqrt = np.diag(1.0 / np.sqrt(deg))
    return d_inv_sqrt @ a @ d_inv_sqrt @ np.asarray(h, dtype=float)


def dense_encode(n, edge_list, x, weights, use_nonlinearity=True):
    """Straight-line multi-layer pipeline over dense matrices."""
    h = np.asarray(x, dtype=float)
    for layer, w in enumerate(weights):
        h = dense_propagate(n, edge_list, h) @ np.asarray(w, dtype=float)
        if use_nonlinearity and layer < len(weights) - 1:
            h = np.where(h > 0, h, 0.0)
    return h


def naive_atc_run(n, edge_list, z0, denoise, iterations, alpha, gamma, sigma):
    """Scalar-loop reference of the full adapt/trust/combine dynamics.

    denoise is a callable taking and returning one vector (a list or
    1-d array). Returns a dict with final z, per-edge trust keyed by
    sorted node pair, and the three accumulators.
    """
    z = [np.array(row, dtype=float) for row in z0]
    d = z[0].size
    neighbors = {i: [] for i in range(n)}
    trust = {}
    for u, v in edge_list:
        key = (min(u, v), max(u, v))
        if key in trust or u == v:
            continue
        trust[key] = 1.0
        neighbors[u].append(v)
        neighbors[v].append(u)

    r = [0.0] * n
    energy = [0.0] * n
    conflict = [0.0] * n

    for _ in range(iterations):
        psi = [np.array(denoise(z[i]), dtype=float) for i in range(n)]

        new_trust = {}
        for (u, v) in trust:
            gap = psi[u] - psi[v]
            tau = math.exp(-float(gap @ gap) / (2.0 * sigma * sigma))
            new_trust[(u, v)] = gamma * trust[(u, v)] + (1.0 - gamma) * tau
        trust = new_trust

        consensus = []
        for i in range(n):
            if not neighbors[i]:
                consensus.append(psi[i].copy())
                continue
            total = 0.0
            for j in neighbors[i]:
                total += trust[(min(i, j), max(i, j))]
            c = np.zeros(d)
            for j in neighbors[i]:
                c += (trust[(min(i, j), max(i, j))] / total) * psi[j]
            consensus.append(c)

        z_next = []
        for i in range(n):
            z_next.append(alpha * psi[i] + (1.0 - alpha) * consensus[i])

        for i in range(n):
            delta_d = psi[i] - z[i]
            delta_c = consensus[i] - z[i]
            r[i] += math.sqrt(float((z[i] - consensus[i]) @ (z[i] - consensus[i])))
            gap = delta_d - delta_c
            conflict[i] += float(gap @ gap)
            step = z_next[i] - psi[i]
            energy[i] += float(step @ step)

        z = z_next

    return {
        "z": np.array(z),
        "trust": trust,
        "r": np.array(r),
        "energy": np.array(energy),
        "conflict": np.array(conflict),
    }


def pairwise_auroc(scores, labels):
    """All-pairs count: P(anomaly outranks normal) with half ties."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))
