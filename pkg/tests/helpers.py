"""Shared fixtures-by-function for the test modules."""
from __future__ import annotations

import numpy as np

from polarlattice.lattice import (
    ConvolutionProfile,
    RateProfile,
    build_generator,
    construction_d_generator,
    pac_generator,
)

EX5_SETS = [{8, 12, 14, 15, 16}, {4, 6, 7, 8, 12, 14, 15, 16}]
EX5 = RateProfile(16, EX5_SETS)
TABLE_J = [(1, 4), (2, 4), (3, 4), (1, 2, 4), (1, 3, 4), (2, 3, 4)]


def random_profile(N: int, r: int, seed: int) -> RateProfile:
    """Nested profile whose sets are prefixes of one random permutation."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(np.arange(1, N + 1))
    sizes = np.sort(rng.integers(0, N + 1, r))
    return RateProfile(N, [set(perm[:k].tolist()) for k in sizes])


def spec_of(kind: str, profile: RateProfile, conv: ConvolutionProfile | None = None):
    if kind == "polar":
        return build_generator(profile)
    if kind == "pac":
        return pac_generator(conv, profile)
    return construction_d_generator(conv, profile)
