"""Mod-2 AWGN channel: likelihoods, aliased entropies, capacities, reliabilities.

Entropies and capacities are in bits. The level-``ell`` channel of an
``r``-level construction is ``W(Z/2Z, sigma**2 / 4**(ell-1))``: the received
word is divided by ``2**(ell-1)`` before the mod-2 front end, so the noise
standard deviation halves at every level.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import integrate, special

from ._kernels import boxplus
from .lattice import RateProfile

__all__ = [
    "ModTwoChannel",
    "LevelCapacities",
    "ReliabilityTable",
    "aliased_llr",
    "aliased_density",
    "aliased_entropy",
    "partition_capacity",
    "estimate_reliabilities",
    "genie_leaf_llrs",
    "select_profile",
    "save_reliabilities",
    "load_reliabilities",
    "RELIABILITY_METHOD",
]

RELIABILITY_METHOD = "genie-sc-mc"
CACHE_VERSION = 1
# trials per independent random substream; fixed so that results do not
# depend on how blocks are spread over workers
RELIABILITY_BLOCK = 2048
_LOG2E = 1.0 / math.log(2.0)
# above this noise level the LLR is evaluated by its theta series
_FOURIER_SIGMA = 1.0


def _n_images(sigma: float) -> int:
    return int(math.ceil(6.0 * sigma)) + 1


def aliased_llr(y, sigma: float, *, check: bool = True) -> np.ndarray:
    """LLR ``log f(y|0) - log f(y|1)`` of the mod-2 channel.

    ``f(y|b)`` is the Gaussian density folded onto ``(-1, 1]`` around the
    coset ``b + 2Z``. Works elementwise on arrays. Images up to
    ``|k| <= ceil(6 sigma) + 1`` are summed in the log domain; beyond that
    every term is far below ``1e-12`` of the total.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    y = np.asarray(y, dtype=float)
    if check and (np.any(y > 1.0) or np.any(y <= -1.0)):
        raise ValueError("y must lie in (-1, 1]; reduce modulo 2 first")
    if sigma >= _FOURIER_SIGMA:
        return _llr_fourier(y, sigma)
    K = _n_images(sigma)
    flat = y.ravel()
    out = np.empty_like(flat)
    # points 2k (coset 0) and 2k+1 (coset 1), |k| <= K
    even = 2.0 * np.arange(-K, K + 1)
    odd = even + 1.0
    scale = -0.5 / (sigma * sigma)
    chunk = max(1, 2 ** 22 // even.size)
    for s in range(0, flat.size, chunk):
        yy = flat[s:s + chunk, None]
        l0 = special.logsumexp(scale * (yy - even) ** 2, axis=1)
        l1 = special.logsumexp(scale * (yy - odd) ** 2, axis=1)
        out[s:s + chunk] = l0 - l1
    return out.reshape(y.shape)


def _llr_fourier(y: np.ndarray, sigma: float) -> np.ndarray:
    """Theta-series form for wide noise, where the LLR is far below 1.

    ``f(y|b)`` is proportional to ``1 + 2 sum_k q^(k^2) cos(pi k (y - b))``
    with ``q = exp(-pi^2 sigma^2 / 2)``; odd ``k`` flip sign with ``b``, so
    ``LLR = 2 atanh(O / (1 + E))`` with ``E``, ``O`` the even and odd sums.
    """
    q = math.exp(-0.5 * (math.pi * sigma) ** 2)
    kmax = max(2, int(math.ceil(math.sqrt(40.0 / -math.log(q)))))
    k = np.arange(1, kmax + 1)
    terms = 2.0 * np.exp(-0.5 * (math.pi * sigma * k) ** 2) * np.cos(math.pi * k * y[..., None])
    odd = terms[..., 0::2].sum(axis=-1)
    even = terms[..., 1::2].sum(axis=-1)
    return 2.0 * np.arctanh(odd / (1.0 + even))


def aliased_density(x, m: float, sigma: float) -> np.ndarray:
    """Density of Gaussian noise folded onto ``(-m/2, m/2]``."""
    x = np.asarray(x, dtype=float)
    K = int(math.ceil(6.0 * sigma / m)) + 2
    k = m * np.arange(-K, K + 1)
    z = (x[..., None] - k) / sigma
    return np.exp(-0.5 * z * z).sum(axis=-1) / (sigma * math.sqrt(2 * math.pi))


def _unit_entropy(s: float) -> float:
    """Entropy in bits of the Z-aliased Gaussian with deviation ``s``."""
    if s <= 1.0 / 80.0:
        # folding changes the density by less than exp(-800)
        return 0.5 * math.log2(2 * math.pi * math.e * s * s)
    if s >= 0.35:
        q = math.exp(-2.0 * math.pi ** 2 * s * s)
        kmax = 1
        while q ** (kmax * kmax) > 1e-18:
            kmax += 1
        ks = np.arange(1, kmax + 1)
        coef = 2.0 * q ** (ks.astype(float) ** 2)

        def integrand(x):
            f = 1.0 + float(np.dot(coef, np.cos(2 * math.pi * ks * x)))
            return -special.xlogy(f, f) * _LOG2E
        points = None
    else:
        K = int(math.ceil(6.0 * s)) + 2
        ks = np.arange(-K, K + 1, dtype=float)
        c = -0.5 * math.log(2 * math.pi * s * s)

        def integrand(x):
            logf = c + special.logsumexp(-0.5 * ((x - ks) / s) ** 2)
            return -math.exp(logf) * logf * _LOG2E
        points = [p for p in (s, 2 * s, 4 * s, 8 * s) if p < 0.5]
    val, _ = integrate.quad(integrand, 0.0, 0.5, points=points, epsabs=1e-12,
                            epsrel=1e-12, limit=500)
    return 2.0 * val


def aliased_entropy(m: float, sigma: float) -> float:
    """Differential entropy ``h(mZ, sigma^2)`` in bits.

    Uses scale invariance ``h(mZ, sigma^2) = log2 m + h(Z, (sigma/m)^2)`` and
    adaptive quadrature of ``-f log2 f`` over one period; the folded density
    is a direct image sum for small ``sigma/m`` and a Fourier series for
    large ``sigma/m``.
    """
    if not (m > 0 and sigma > 0):
        raise ValueError("m and sigma must be positive")
    return math.log2(m) + _unit_entropy(sigma / m)


@dataclass(frozen=True)
class LevelCapacities:
    """Capacities (bits per dimension) of the chain ``Z / 2Z / ... / 2^r Z``.

    ``levels[ell-1] = C(Z/2Z, sigma^2/4^(ell-1))``; ``bottom = C(Z, sigma^2)``;
    ``top = C(2^r Z, sigma^2) = C(Z, sigma^2 4^-r)``; ``chain_total`` is
    ``C(Z/2^r Z, sigma^2) = top - bottom``.
    """

    sigma: float
    levels: tuple[float, ...]
    bottom: float
    top: float
    chain_total: float

    @property
    def r(self) -> int:
        return len(self.levels)


def partition_capacity(sigma: float, r: int) -> LevelCapacities:
    """Per-level and chain capacities via ``C(L/L') = C(L') - C(L)``.

    ``C(L, sigma^2) = log2 V(L) - h(L, sigma^2)``.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if r < 1:
        raise ValueError("r must be at least 1")
    levels = []
    for ell in range(1, r + 1):
        s = sigma / 2 ** (ell - 1)
        c_fine = -aliased_entropy(1.0, s)
        c_coarse = 1.0 - aliased_entropy(2.0, s)
        levels.append(min(1.0, max(0.0, c_coarse - c_fine)))
    bottom = -aliased_entropy(1.0, sigma)
    top = r - aliased_entropy(2.0 ** r, sigma)
    return LevelCapacities(float(sigma), tuple(levels), bottom, top, top - bottom)


@dataclass(frozen=True)
class ModTwoChannel:
    """``W(Z/2Z, sigma^2)`` with inputs ``{0, 1}`` and outputs in ``(-1, 1]``."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def llr(self, y) -> np.ndarray:
        return aliased_llr(y, self.sigma)

    def density(self, y, bit: int) -> np.ndarray:
        return aliased_density(np.asarray(y, dtype=float) - bit, 2.0, self.sigma)

    def capacity(self) -> float:
        return partition_capacity(self.sigma, 1).levels[0]

    def level(self, ell: int) -> "ModTwoChannel":
        """Effective channel seen by level ``ell`` (1-based)."""
        return ModTwoChannel(self.sigma / 2 ** (ell - 1))


# --------------------------------------------------------------------------
# reliabilities
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ReliabilityTable:
    """Estimated first-error probability of every synthetic subchannel.

    ``scores[ell-1, i-1]`` belongs to row ``i`` at level ``ell``; lower is
    more reliable.
    """

    N: int
    r: int
    sigma: float
    method: str
    trials: int
    seed: int
    scores: np.ndarray

    def header(self) -> dict:
        return {"N": self.N, "r": self.r, "sigma": float(self.sigma), "method": self.method,
                "trials": self.trials, "seed": self.seed, "format": CACHE_VERSION}


def genie_leaf_llrs(llr: np.ndarray) -> np.ndarray:
    """Leaf LLRs of SC decoding with every earlier bit revealed as 0.

    ``llr`` has shape ``(..., N)``; the output has the same shape and is
    indexed by the natural-order bit index.
    """
    llr = np.asarray(llr, dtype=float)
    if llr.shape[-1] == 1:
        return llr
    h = llr.shape[-1] // 2
    la, lb = llr[..., :h], llr[..., h:]
    return np.concatenate([genie_leaf_llrs(boxplus(la, lb)), genie_leaf_llrs(la + lb)], axis=-1)


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def _reliability_block(args) -> np.ndarray:
    sigma, N, ell, block, n, seed = args
    rng = _stream(seed, ell, block)
    s = sigma / 2 ** (ell - 1)
    noise = rng.normal(0.0, s, size=(n, N))
    y = noise - 2.0 * np.ceil((noise - 1.0) / 2.0)
    y = np.where(y <= -1.0, y + 2.0, y)
    leaf = genie_leaf_llrs(aliased_llr(y, s, check=False))
    # an exactly balanced leaf is a coin flip, not a success
    return (leaf < 0).sum(axis=0) + 0.5 * (leaf == 0).sum(axis=0)


def estimate_reliabilities(sigma: float, N: int, r: int, trials: int, seed: int,
                           workers: int = 1) -> ReliabilityTable:
    """Genie-aided Monte Carlo subchannel error frequencies for every level.

    The all-zero word is sent over ``W(Z/2Z, sigma^2/4^(ell-1))``. Trials
    are cut into fixed blocks, each with its own counter-based random
    stream keyed by ``(seed, level, block)``, so the table is identical for
    any ``workers``.
    """
    if trials < 1000:
        raise ValueError(f"at least 1000 trials are required, got {trials}")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    RateProfile(N, [])  # validates N
    jobs = []
    for ell in range(1, r + 1):
        for b, start in enumerate(range(0, trials, RELIABILITY_BLOCK)):
            jobs.append((float(sigma), N, ell, b, min(RELIABILITY_BLOCK, trials - start), int(seed)))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            counts = list(ex.map(_reliability_block, jobs))
    else:
        counts = [_reliability_block(j) for j in jobs]
    scores = np.zeros((r, N))
    for job, c in zip(jobs, counts):
        scores[job[2] - 1] += c
    return ReliabilityTable(N, r, float(sigma), RELIABILITY_METHOD, int(trials), int(seed),
                            scores / trials)


def select_profile(table: ReliabilityTable, *, targets: Sequence[int] | None = None,
                   thresholds: Sequence[float] | float | None = None) -> RateProfile:
    """Pick nested information sets from a reliability table.

    Rank policy (``targets = (K_1, ..., K_r)``) keeps the ``K_ell`` lowest
    scores at each level, breaking ties toward the lower index. Threshold
    policy keeps every index whose score is at most ``eps_ell``. Each set is
    then united with the previous one so that nesting always holds.
    """
    if (targets is None) == (thresholds is None):
        raise ValueError("give exactly one of targets or thresholds")
    r, N = table.r, table.N
    chosen = []
    if targets is not None:
        targets = [int(k) for k in targets]
        if len(targets) != r:
            raise ValueError(f"need {r} target sizes, got {len(targets)}")
        if any(k < 0 or k > N for k in targets):
            raise ValueError(f"target sizes must lie in [0, {N}]")
        if any(b < a for a, b in zip(targets, targets[1:])):
            raise ValueError(f"target sizes must be nondecreasing, got {targets}")
        for ell in range(r):
            order = np.argsort(table.scores[ell], kind="stable")
            chosen.append(set((order[:targets[ell]] + 1).tolist()))
    else:
        eps = np.broadcast_to(np.asarray(thresholds, dtype=float), (r,))
        for ell in range(r):
            chosen.append(set((np.nonzero(table.scores[ell] <= eps[ell])[0] + 1).tolist()))
    for ell in range(1, r):
        chosen[ell] |= chosen[ell - 1]
    return RateProfile(N, chosen)


def _cache_header_line(h: dict) -> str:
    return ("# polarlattice-reliability format={format} N={N} r={r} sigma={sigma!r} "
            "method={method} trials={trials} seed={seed}").format(**h)


def save_reliabilities(table: ReliabilityTable, path) -> Path:
    """Write the table: one header line, then ``r`` rows of ``N`` scores."""
    path = Path(path)
    lines = [_cache_header_line(table.header())]
    for row in table.scores:
        lines.append(" ".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def load_reliabilities(path, N: int, r: int, sigma: float, trials: int, seed: int,
                       method: str = RELIABILITY_METHOD) -> ReliabilityTable:
    """Read a cached table, refusing it unless the header matches the request."""
    text = Path(path).read_text().splitlines()
    want = {"N": N, "r": r, "sigma": float(sigma), "method": method, "trials": trials,
            "seed": seed, "format": CACHE_VERSION}
    if not text or text[0] != _cache_header_line(want):
        got = text[0] if text else "<empty>"
        raise ValueError(f"reliability cache header mismatch: expected "
                         f"{_cache_header_line(want)!r}, found {got!r}")
    rows = [list(map(float, line.split())) for line in text[1:] if line.strip()]
    scores = np.array(rows, dtype=float)
    if scores.shape != (r, N):
        raise ValueError(f"reliability cache holds {scores.shape} scores, expected {(r, N)}")
    return ReliabilityTable(N, r, float(sigma), method, trials, seed, scores)


def default_workers() -> int:
    return os.cpu_count() or 1
