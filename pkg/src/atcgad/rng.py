"""Deterministic random number generation.

All randomness in this package flows through Philox (a counter-based
generator with a published algorithm, Philox-4x64-10), seeded per
operation. Operations that need several independent streams derive them
from a single user-facing seed through named stream ids: the effective
seed material is the pair ``(seed, stream)`` fed to ``SeedSequence``,
so two operations with different stream ids never share a stream even
when the user seed is identical.

Stream ids used across the package:

====================  ===
graph generation       0
anomaly injection      1
encoder projections    2
denoiser fitting       3
Lipschitz probing      4
====================  ===
"""

import numpy as np

STREAM_GRAPH = 0
STREAM_INJECT = 1
STREAM_ENCODER = 2
STREAM_DENOISER = 3
STREAM_LIPSCHITZ = 4


def philox(seed: int, stream: int = 0) -> np.random.Generator:
    """Return a Philox-backed generator for (seed, stream)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((int(seed), int(stream)))))
