"""Exact structural analysis: weights, minimum distances, minimal vectors, NVNR.

Minimal vectors are counted as lattice vectors: ``v`` and ``-v`` both count.
With this convention the level-1 support enumeration reproduces the
tabulated counts for the Construction D PAC lattices (``kind="pac-d"``) and
the 128 minimal vectors of the ``N = 16`` polar example.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import sympy

from .channel import aliased_entropy, partition_capacity
from .lattice import LatticeSpec, lattice_members, log2_volume, spec_hash

__all__ = [
    "WeightProfile",
    "LatticeDistanceReport",
    "code_weight_enum",
    "min_weight_codewords",
    "level_code_rows",
    "multilevel_dmin",
    "spec_dmin",
    "lattice_min_vectors",
    "small_lattice_enumerate",
    "nvnr",
    "nvnr_db",
    "nvnr_decomposition",
    "report_dict",
    "COUNT_CONVENTION",
]

MAX_ENUM_DIM = 28
COUNT_CONVENTION = "lattice-vectors"  # v and -v counted separately
_LOW_BITS = 16


@dataclass(frozen=True)
class WeightProfile:
    """Minimum distance and its multiplicity. ``K = 0`` gives ``d_H = count = 0``."""

    d_H: int
    count: int
    K: int


@dataclass(frozen=True)
class LatticeDistanceReport:
    d2min: int
    n_min: int
    contributions: tuple[int | None, ...]  # 4**(l-1) d_H(C_l) for l = 1..r, then 4**r
    achieving_levels: tuple[int, ...]      # 1-based; r + 1 is the top term
    convention: str = COUNT_CONVENTION
    method: str = "support-signs"
    alternatives: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# binary codes
# --------------------------------------------------------------------------

def _pack(rows: np.ndarray) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(rows, dtype=np.uint8) & 1)
    K, N = rows.shape
    W = (N + 63) // 64
    pad = np.zeros((K, W * 64), np.uint8)
    pad[:, :N] = rows
    return np.packbits(pad, axis=1, bitorder="little").view(np.uint64).reshape(K, W)


def _unpack(words: np.ndarray, N: int) -> np.ndarray:
    bits = np.unpackbits(words.view(np.uint8), axis=-1, bitorder="little")
    return bits[..., :N]


def _span_table(packed: np.ndarray) -> np.ndarray:
    table = np.zeros((1, packed.shape[1]), np.uint64)
    for row in packed:
        table = np.concatenate([table, table ^ row], axis=0)
    return table


def _code_blocks(rows):
    """Yield ``(codewords, weights)`` blocks covering all ``2**K`` codewords."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.uint8))
    K = rows.shape[0]
    if K > MAX_ENUM_DIM:
        raise ValueError(f"exhaustive enumeration is limited to K <= {MAX_ENUM_DIM}, got {K}")
    packed = _pack(rows)
    k0 = min(K, _LOW_BITS)
    low = _span_table(packed[:k0])
    high = packed[k0:]
    offset = np.zeros(packed.shape[1], np.uint64)
    for g in range(1 << (K - k0)):
        if g:
            # Gray code: flip the row at the lowest set bit of g
            offset = offset ^ high[(g & -g).bit_length() - 1]
        block = low ^ offset
        yield block, np.bitwise_count(block).sum(axis=1, dtype=np.int64)


def _gf2_basis(rows) -> np.ndarray:
    """Row-reduced basis of the GF(2) row space (dependent rows dropped)."""
    a = np.atleast_2d(np.asarray(rows, dtype=np.uint8) & 1).copy()
    K, N = a.shape
    rank = 0
    for col in range(N):
        if rank == K:
            break
        piv = np.nonzero(a[rank:, col])[0]
        if piv.size == 0:
            continue
        p = rank + piv[0]
        a[[rank, p]] = a[[p, rank]]
        hit = np.nonzero(a[:, col])[0]
        hit = hit[hit != rank]
        a[hit] ^= a[rank]
        rank += 1
    return a[:rank]


def code_weight_enum(rows) -> WeightProfile:
    """Exact minimum distance and number of minimum-weight codewords.

    ``rows`` generates a linear binary code; dependent rows are dropped, so
    ``K`` is the code dimension and every nonzero codeword is counted once
    (``K <= 28``).

    >>> code_weight_enum([[1, 1, 1, 0]])
    WeightProfile(d_H=3, count=1, K=1)
    """
    rows = np.asarray(rows)
    if rows.size == 0:
        return WeightProfile(0, 0, 0)
    basis = _gf2_basis(rows)
    K = basis.shape[0]
    if K == 0:
        return WeightProfile(0, 0, 0)
    best, count = None, 0
    for _, wt in _code_blocks(basis):
        wt = wt[wt > 0]
        if wt.size == 0:
            continue
        m = int(wt.min())
        c = int((wt == m).sum())
        if best is None or m < best:
            best, count = m, c
        elif m == best:
            count += c
    return WeightProfile(best, count, K)


def min_weight_codewords(rows) -> np.ndarray:
    """All minimum-weight codewords as a ``(count, N)`` uint8 array."""
    rows = _gf2_basis(rows)
    N = rows.shape[1]
    wp = code_weight_enum(rows)
    if wp.K == 0:
        return np.zeros((0, N), np.uint8)
    out = []
    for block, wt in _code_blocks(rows):
        sel = wt == wp.d_H
        if sel.any():
            out.append(_unpack(block[sel], N))
    return np.concatenate(out, axis=0)


def level_code_rows(spec: LatticeSpec, ell: int) -> np.ndarray:
    """Generator rows of the level-``ell`` binary code (rows ``I_ell`` of the level matrix)."""
    mask = spec.profile.info_mask(ell)
    return (np.asarray(spec.level_matrix)[mask] % 2).astype(np.uint8)


def multilevel_dmin(profiles: Sequence[WeightProfile], r: int) -> int:
    """``min(4**(l-1) d_H(C_l), 4**r)`` over levels with a nonzero code."""
    if len(profiles) != r:
        raise ValueError(f"need {r} weight profiles, got {len(profiles)}")
    terms = [4 ** (ell - 1) * p.d_H for ell, p in enumerate(profiles, start=1) if p.K > 0]
    return min(terms + [4 ** r])


def _level_profiles(spec: LatticeSpec) -> list[WeightProfile]:
    return [code_weight_enum(level_code_rows(spec, ell)) for ell in range(1, spec.r + 1)]


def spec_dmin(spec: LatticeSpec) -> int:
    """Multilevel squared minimum distance of an (unscaled) lattice spec."""
    return multilevel_dmin(_level_profiles(spec), spec.r)


# --------------------------------------------------------------------------
# minimal vectors
# --------------------------------------------------------------------------

def _sign_patterns(d: int) -> np.ndarray:
    return 1 - 2 * ((np.arange(1 << d)[:, None] >> np.arange(d)) & 1)


def lattice_min_vectors(spec: LatticeSpec) -> LatticeDistanceReport:
    """Squared minimum distance and number of minimal vectors.

    When the level-1 term is the strict minimum of the multilevel bound,
    minimal vectors have entries in ``{-1, 0, 1}`` and reduce mod 2 to
    minimum-weight level-1 codewords, so every signing of every such support
    is tested for exact membership. Otherwise, for ``N <= 6``, the lattice is
    enumerated in a provably sufficient box.
    """
    if spec.scale != 1:
        raise ValueError("analyse the unscaled lattice; scaling multiplies d2min by scale**2")
    profs = _level_profiles(spec)
    r = spec.r
    contrib = tuple([4 ** (ell - 1) * p.d_H if p.K else None for ell, p in enumerate(profs, 1)]
                    + [4 ** r])
    bound = min(c for c in contrib if c is not None)
    achieving = tuple(i + 1 for i, c in enumerate(contrib) if c == bound)
    strict = (r >= 1 and profs[0].K > 0 and achieving == (1,))
    if strict and spec.N <= 32:
        words = min_weight_codewords(level_code_rows(spec, 1))
        d = profs[0].d_H
        if len(words) << d > 1 << 24:
            raise ValueError("too many signed supports to enumerate")
        signs = _sign_patterns(d)
        total = 0
        pair_words = 0
        for w in words:
            supp = np.nonzero(w)[0]
            cand = np.zeros((len(signs), spec.N), np.int64)
            cand[:, supp] = signs
            hits = int(lattice_members(cand, spec).sum())
            total += hits
            pair_words += hits > 0
        if total > 0:
            return LatticeDistanceReport(
                d, total, contrib, achieving,
                alternatives={"codewords": pair_words, "antipodal-pairs": total // 2,
                              "lattice-vectors": total})
    if spec.N <= 6:
        d2, count = _enumerate_gram(np.asarray(spec.gen, np.int64) @ np.asarray(spec.gen, np.int64).T,
                                    1, max_dim=6)
        d2 = int(d2)
        return LatticeDistanceReport(
            d2, count, contrib, tuple(i + 1 for i, c in enumerate(contrib) if c == d2),
            method="box-enumeration",
            alternatives={"antipodal-pairs": count // 2, "lattice-vectors": count})
    raise ValueError("minimal vectors need N <= 32 with a strict level-1 minimum, or N <= 6")


# --------------------------------------------------------------------------
# small-dimension enumeration
# --------------------------------------------------------------------------

def _reduce_gram(q: list[list[int]]) -> list[list[int]]:
    """Pairwise (Lagrange style) size reduction of an integer Gram matrix."""
    n = len(q)
    q = [row[:] for row in q]
    changed = True
    while changed:
        changed = False
        for i in range(n):
            for j in range(n):
                if i == j or q[j][j] == 0:
                    continue
                mu = round(Fraction(q[i][j], q[j][j]))
                if mu == 0:
                    continue
                # b_i <- b_i - mu b_j
                new_ii = q[i][i] - 2 * mu * q[i][j] + mu * mu * q[j][j]
                if new_ii >= q[i][i]:
                    continue
                for k in range(n):
                    q[i][k] -= mu * q[j][k]
                for k in range(n):
                    q[k][i] = q[i][k]
                q[i][i] = new_ii
                changed = True
    return q


def _enumerate_gram(gram, den: int, max_dim: int) -> tuple[Fraction, int]:
    """Exact minimum of ``lam Q lam / den`` over nonzero integer ``lam``, and its count."""
    q = [[int(v) for v in row] for row in np.asarray(gram, dtype=object)]
    n = len(q)
    if n > max_dim:
        raise ValueError(f"enumeration is limited to dimension {max_dim}, got {n}")
    Q = sympy.Matrix(q)
    if Q.det() == 0:
        raise ValueError("generator is singular")
    q = _reduce_gram(q)
    Q = sympy.Matrix(q)
    inv = Q.inv()
    radius = min(q[i][i] for i in range(n))
    # |lam_i| <= sqrt(R * inv(Q)_ii) for every lam with lam Q lam <= R
    bounds = [int(math.isqrt(int(sympy.floor(radius * inv[i, i])))) for i in range(n)]
    grids = [np.arange(-b, b + 1) for b in bounds]
    lam = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, n).astype(object)
    norms = np.einsum("ki,ij,kj->k", lam, np.array(q, dtype=object), lam)
    norms = norms[np.any(lam != 0, axis=1)]
    m = norms.min()
    return Fraction(int(m), den), int((norms == m).sum())


def small_lattice_enumerate(gen=None, *, gram=None, max_dim: int = 4) -> tuple[Fraction, int]:
    """Exact ``(d2min, kissing number)`` of a low-dimensional lattice.

    Give a rational generator (rows are basis vectors) or a rational Gram
    matrix; entries may be ints, Fractions or strings such as ``"1/2"``.
    Coefficients are searched in the box ``|lam_i| <= sqrt(R inv(Q)_ii)``
    with ``R`` the smallest diagonal entry of the size-reduced Gram matrix.

    >>> small_lattice_enumerate([[1, 0], [0, 1]])
    (Fraction(1, 1), 4)
    """
    if (gen is None) == (gram is None):
        raise ValueError("give exactly one of gen or gram")
    if gen is not None:
        b = sympy.Matrix([[sympy.Rational(str(Fraction(v))) for v in row] for row in gen])
        if b.rows != b.cols:
            raise ValueError("generator must be square")
        g = b * b.T
    else:
        g = sympy.Matrix([[sympy.Rational(str(Fraction(v))) for v in row] for row in gram])
        if g != g.T:
            raise ValueError("Gram matrix must be symmetric")
    den = int(sympy.ilcm(*[sympy.fraction(v)[1] for v in g])) if g.rows else 1
    qi = (g * den).applyfunc(int)
    return _enumerate_gram(qi.tolist(), den, max_dim)


# --------------------------------------------------------------------------
# volume-to-noise ratio
# --------------------------------------------------------------------------

def _log2_det_scaled(spec: LatticeSpec) -> float:
    return log2_volume(spec.profile) + spec.N * math.log2(spec.scale)


def nvnr(spec: LatticeSpec, sigma: float) -> float:
    """``gamma = V**(2/N) / sigma**2`` computed from ``log2 V`` (no overflow)."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return 2.0 ** (2.0 * _log2_det_scaled(spec) / spec.N) / sigma ** 2


def nvnr_db(spec: LatticeSpec, sigma: float) -> float:
    """``10 log10(gamma / (2 pi e))``."""
    return 10.0 * math.log10(nvnr(spec, sigma) / (2 * math.pi * math.e))


def nvnr_decomposition(spec: LatticeSpec, sigma: float) -> dict:
    """Split ``log2(gamma / (2 pi e))`` into capacity, uncoded and aliasing terms.

    ``capacity_gap = 2 (C(Z/2^r Z) - sum K / N)``, ``uncoded = 2 C(Z)`` and
    ``aliasing = 2 h(2^r Z) - log2(2 pi e sigma^2)``, all at the noise level
    ``sigma / scale`` of the unscaled lattice.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    s = sigma / float(spec.scale)
    r, N = spec.r, spec.N
    if r:
        caps = partition_capacity(s, r)
        chain, bottom = caps.chain_total, caps.bottom
    else:
        chain, bottom = 0.0, -aliased_entropy(1.0, s)
    terms = {
        "capacity_gap": 2.0 * (chain - sum(spec.profile.sizes) / N),
        "uncoded": 2.0 * bottom,
        "aliasing": 2.0 * aliased_entropy(2.0 ** r, s) - math.log2(2 * math.pi * math.e * s * s),
    }
    terms["total"] = terms["capacity_gap"] + terms["uncoded"] + terms["aliasing"]
    terms["log2_nvnr_over_2pie"] = math.log2(nvnr(spec, sigma) / (2 * math.pi * math.e))
    return terms


def report_dict(report: LatticeDistanceReport, spec: LatticeSpec) -> dict:
    """JSON-ready summary of a distance report."""
    from . import __version__
    return {
        "spec_hash": spec_hash(spec),
        "tool_version": __version__,
        "kind": spec.kind,
        "N": spec.N,
        "r": spec.r,
        "d2min": report.d2min,
        "Nmin": report.n_min,
        "contributions": list(report.contributions),
        "achieving_levels": list(report.achieving_levels),
        "convention": report.convention,
        "method": report.method,
        "alternatives": dict(report.alternatives),
    }
