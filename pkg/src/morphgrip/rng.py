"""Seed-derived random substreams.

All randomness in the toolkit flows from a single run seed through named
substreams, so results are independent of scheduling and worker count.
"""
from __future__ import annotations

import numpy as np

# Fixed tags keep substreams disjoint without stringly-typed collisions.
STREAM_CONTEXT = 1
STREAM_POSE_SEARCH = 2
STREAM_ROLLOUT = 3
STREAM_DESIGN = 4
STREAM_DATASET = 5
STREAM_EVAL = 6


def substream(seed: int, *path: int) -> np.random.Generator:
    """Generator for the substream identified by an integer path.

    Identical (seed, path) pairs always yield identical streams; distinct
    paths are statistically independent.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))
