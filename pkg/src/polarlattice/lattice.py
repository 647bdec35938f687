"""Polar and PAC lattice construction, encoding and exact membership.

Row indices in the public API (profiles, taps) are 1-based and refer to rows
of the plain Kronecker power ``G_N = [[1, 0], [1, 1]]^{(x) n}``; no
bit-reversal permutation is applied anywhere in the package. Arrays are
0-based internally, so row ``k`` of a profile is ``gen[k - 1]``.

Three lattice kinds are supported:

``polar``
    ``D @ G_N`` where ``D`` scales row ``k`` by ``2**level(k)``.
``pac``
    ``Tbar @ D @ G_N == D @ T @ G_N`` with the convolution lifted to the
    reals entry by entry (dyadic ``Tbar``). Same volume as ``polar``.
``pac-d``
    Construction D over the nested PAC codes: the integer span of the rows of
    ``D @ ((T @ G_N) mod 2)`` together with ``2**r Z^N``. Same volume as
    ``polar``; this is the lattice whose minimal-vector counts are tabulated
    for the circulant-tap family in the PAC lattice literature.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "RateProfile",
    "ConvolutionProfile",
    "LatticeSpec",
    "CoordinateArray",
    "ProfileError",
    "polar_transform_f2",
    "polar_transform_int",
    "inverse_polar_transform_int",
    "kronecker_matrix",
    "build_generator",
    "log2_volume",
    "coordinate_array",
    "integer_from_array",
    "encode_lattice",
    "lift_convolution",
    "pac_generator",
    "construction_d_generator",
    "is_lattice_point",
    "lattice_members",
    "scale_lattice",
    "spec_to_dict",
    "spec_from_dict",
    "spec_hash",
]

KINDS = ("polar", "pac", "pac-d")
MAX_LEVELS = 16


class ProfileError(ValueError):
    """Raised for an invalid rate profile or convolution profile."""


def _log2_exact(n: int) -> int:
    if n < 1 or n & (n - 1):
        raise ValueError(f"length must be a power of two, got {n}")
    return n.bit_length() - 1


# --------------------------------------------------------------------------
# binary and integer butterflies
# --------------------------------------------------------------------------

def _butterfly(x: np.ndarray, combine) -> np.ndarray:
    """Apply ``G_N`` along the last axis of ``x`` using ``combine(a, b)``.

    ``combine`` receives the first and second half of every block and returns
    the new first half; the second half is passed through unchanged.
    """
    x = np.array(x, copy=True)
    N = x.shape[-1]
    n = _log2_exact(N)
    lead = x.shape[:-1]
    for s in range(n):
        block = 2 ** (n - s)
        half = block // 2
        v = x.reshape(lead + (N // block, 2, half))
        v[..., 0, :] = combine(v[..., 0, :], v[..., 1, :])
    return x


def polar_transform_f2(u) -> np.ndarray:
    """Return ``u @ G_N`` over GF(2) for the last axis of ``u``.

    Uses the O(N log N) butterfly. The transform is an involution.

    >>> polar_transform_f2([0, 1, 0, 1]).tolist()
    [0, 0, 1, 1]
    """
    u = np.asarray(u)
    if u.shape[-1] == 0:
        raise ValueError("empty input")
    return _butterfly(u.astype(np.uint8) & 1, np.bitwise_xor)


def polar_transform_int(a) -> np.ndarray:
    """Return ``a @ G_N`` over the integers (no reduction)."""
    a = np.asarray(a)
    if a.dtype == object:
        return _butterfly(a, lambda p, q: p + q)
    return _butterfly(a.astype(np.int64), np.add)


def inverse_polar_transform_int(x) -> np.ndarray:
    """Return ``x @ inv(G_N)`` over the integers; ``inv(G_N)`` is integral."""
    x = np.asarray(x)
    if x.dtype.kind == "f":
        return _butterfly(x, np.subtract)
    if x.dtype == object:
        return _butterfly(x, lambda p, q: p - q)
    return _butterfly(x.astype(np.int64), np.subtract)


def kronecker_matrix(N: int) -> np.ndarray:
    """Dense 0/1 matrix ``G_N`` (test oracle and small-N helper)."""
    n = _log2_exact(N)
    g = np.ones((1, 1), dtype=np.int64)
    for _ in range(n):
        g = np.kron(g, np.array([[1, 0], [1, 1]], dtype=np.int64))
    return g


# --------------------------------------------------------------------------
# profiles
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RateProfile:
    """Nested information sets ``I_1 <= ... <= I_r`` over rows ``1..N``.

    Level ``r + 1`` is implicitly the full set. ``r == 0`` describes ``Z^N``.
    """

    N: int
    sets: tuple[frozenset[int], ...]

    def __init__(self, N: int, sets: Iterable[Iterable[int]]):
        object.__setattr__(self, "N", int(N))
        object.__setattr__(self, "sets", tuple(frozenset(int(i) for i in s) for s in sets))
        self._validate()

    def _validate(self):
        _log2_exact(self.N)
        if self.r > MAX_LEVELS:
            raise ProfileError(f"at most {MAX_LEVELS} levels are supported, got {self.r}")
        for ell, s in enumerate(self.sets, start=1):
            bad = [i for i in s if not 1 <= i <= self.N]
            if bad:
                raise ProfileError(f"I_{ell} has indices outside [1, {self.N}]: {sorted(bad)}")
        for ell in range(1, self.r):
            lo, hi = self.sets[ell - 1], self.sets[ell]
            if not lo <= hi:
                missing = sorted(lo - hi)
                raise ProfileError(
                    f"I_{ell} is not a subset of I_{ell + 1}: {missing} missing from I_{ell + 1}"
                )

    @property
    def r(self) -> int:
        return len(self.sets)

    @property
    def sizes(self) -> tuple[int, ...]:
        """``(K_1, ..., K_r)``."""
        return tuple(len(s) for s in self.sets)

    @property
    def levels(self) -> np.ndarray:
        """Row scaling exponent: ``levels[k-1] = p`` iff ``k in I_{p+1} minus I_p``."""
        lev = np.full(self.N, self.r, dtype=np.int64)
        for ell in range(self.r, 0, -1):
            idx = np.fromiter(self.sets[ell - 1], dtype=np.int64, count=len(self.sets[ell - 1]))
            lev[idx - 1] = ell - 1
        return lev

    def info_mask(self, ell: int) -> np.ndarray:
        """Boolean mask of ``I_ell`` (1-based level)."""
        mask = np.zeros(self.N, dtype=bool)
        s = self.sets[ell - 1]
        mask[np.fromiter(s, dtype=np.int64, count=len(s)) - 1] = True
        return mask

    def sorted_sets(self) -> list[list[int]]:
        return [sorted(s) for s in self.sets]


@dataclass(frozen=True)
class ConvolutionProfile:
    """Upper unitriangular 0/1 precoding matrix ``T``.

    Give exactly one of ``taps`` (circulant form: ``T[i, i+j] = 1`` for
    ``j in {0} | taps``) or ``matrix`` (dense rows). ``seed`` is recorded
    when the matrix came from :meth:`random`.
    """

    N: int
    taps: tuple[int, ...] | None = None
    matrix: tuple[tuple[int, ...], ...] | None = None
    seed: int | None = None
    density: float | None = None

    def __post_init__(self):
        _log2_exact(self.N)
        if (self.taps is None) == (self.matrix is None):
            raise ProfileError("give exactly one of taps or matrix")
        if self.taps is not None:
            taps = tuple(sorted(set(int(j) for j in self.taps)))
            if any(j <= 0 for j in taps):
                raise ProfileError(f"taps must be strictly positive offsets, got {taps}")
            object.__setattr__(self, "taps", taps)
        else:
            m = np.asarray(self.matrix, dtype=np.int64)
            if m.shape != (self.N, self.N):
                raise ProfileError(f"T must be {self.N}x{self.N}, got {m.shape}")
            if not np.isin(m, (0, 1)).all():
                raise ProfileError("T must be 0/1 valued")
            if np.tril(m, -1).any() or not (np.diag(m) == 1).all():
                raise ProfileError("T must be upper triangular with unit diagonal")
            object.__setattr__(self, "matrix", tuple(tuple(int(v) for v in row) for row in m))

    @classmethod
    def identity(cls, N: int) -> "ConvolutionProfile":
        return cls(N, taps=())

    @classmethod
    def random(cls, N: int, seed: int, density: float = 0.5) -> "ConvolutionProfile":
        """Random upper unitriangular ``T``; each strict upper entry is 1 w.p. ``density``."""
        rng = np.random.default_rng(seed)
        m = np.triu((rng.random((N, N)) < density).astype(np.int64), 1)
        np.fill_diagonal(m, 1)
        return cls(N, matrix=tuple(map(tuple, m)), seed=int(seed), density=float(density))

    def dense(self) -> np.ndarray:
        """``T`` as an ``(N, N)`` int64 array."""
        if self.matrix is not None:
            return np.array(self.matrix, dtype=np.int64)
        t = np.eye(self.N, dtype=np.int64)
        for j in self.taps:
            if j < self.N:
                t[np.arange(self.N - j), np.arange(j, self.N)] = 1
        return t

    @property
    def is_identity(self) -> bool:
        if self.taps is not None:
            return all(j >= self.N for j in self.taps)
        return bool((self.dense() == np.eye(self.N, dtype=np.int64)).all())


@dataclass(frozen=True, eq=False)
class LatticeSpec:
    """Generator matrix of a polar-like lattice together with its description.

    ``gen`` is an integer basis (rows are basis vectors, points are
    ``lam @ gen``). ``scale`` multiplies every lattice point; it is a
    :class:`~fractions.Fraction` and leaves ``gen`` untouched.
    """

    profile: RateProfile
    gen: np.ndarray
    kind: str = "polar"
    conv: ConvolutionProfile | None = None
    scale: Fraction = Fraction(1)
    level_matrix: np.ndarray = field(default=None, repr=False)

    @property
    def N(self) -> int:
        return self.profile.N

    @property
    def r(self) -> int:
        return self.profile.r

    def __repr__(self):
        return (f"LatticeSpec(kind={self.kind!r}, N={self.N}, r={self.r}, "
                f"K={self.profile.sizes}, scale={self.scale})")


# --------------------------------------------------------------------------
# generators
# --------------------------------------------------------------------------

def _diag_scales(profile: RateProfile) -> np.ndarray:
    return np.left_shift(np.int64(1), profile.levels)


def build_generator(profile: RateProfile) -> LatticeSpec:
    """Polar lattice generator: rows of ``G_N`` scaled by ``2**level``.

    >>> build_generator(RateProfile(2, [{2}])).gen.tolist()
    [[2, 0], [1, 1]]
    """
    gen = _diag_scales(profile)[:, None] * kronecker_matrix(profile.N)
    gen.setflags(write=False)
    return LatticeSpec(profile, gen, "polar", None, Fraction(1), kronecker_matrix(profile.N))


def log2_volume(profile: RateProfile) -> int:
    """``r*N - sum(K_ell)``; the lattice volume is ``2**log2_volume``."""
    return profile.r * profile.N - sum(profile.sizes)


def _scaled_lift(conv: ConvolutionProfile, profile: RateProfile) -> np.ndarray:
    """``2**r * Tbar`` as an integer matrix."""
    if conv.N != profile.N:
        raise ProfileError(f"convolution is {conv.N}-dimensional, profile is {profile.N}")
    t = conv.dense()
    lev = profile.levels
    r = profile.r
    # Tbar[i, j] = T[i, j] * 2**(p_i - p_j), so 2**r * Tbar = T * 2**(r + p_i - p_j) >= 1
    expo = r + lev[:, None] - lev[None, :]
    return t * np.left_shift(np.int64(1), expo)


def lift_convolution(conv: ConvolutionProfile, profile: RateProfile) -> np.ndarray:
    """Lift ``T`` to ``Tbar`` with ``Tbar[i, j] = 2**(p - q)`` on the support of ``T``.

    Returns an object array of :class:`~fractions.Fraction` with the same
    zero pattern as ``T``. ``D @ T == Tbar @ D`` holds exactly.
    """
    scaled = _scaled_lift(conv, profile)
    den = 1 << profile.r
    out = np.empty(scaled.shape, dtype=object)
    for idx, v in np.ndenumerate(scaled):
        out[idx] = Fraction(int(v), den)
    return out


def pac_generator(conv: ConvolutionProfile, profile: RateProfile) -> LatticeSpec:
    """PAC lattice ``Tbar @ Gbar`` (equivalently ``D @ T @ G_N``).

    The product is checked to be integral and to have the polar volume.
    """
    polar = build_generator(profile)
    scaled = _scaled_lift(conv, profile)
    prod = scaled @ polar.gen
    den = 1 << profile.r
    if (prod % den).any():
        raise ArithmeticError("Tbar @ Gbar is not integral")
    gen = prod // den
    tg = conv.dense() @ kronecker_matrix(profile.N)
    if not np.array_equal(gen, _diag_scales(profile)[:, None] * tg):
        raise ArithmeticError("Tbar @ D != D @ T")
    gen.setflags(write=False)
    return LatticeSpec(profile, gen, "pac", conv, Fraction(1), tg)


def _modular_hnf(rows: np.ndarray, modulus: int) -> np.ndarray:
    """Upper-triangular basis of ``span_Z(rows) + modulus * Z^N``.

    Row ``i`` of the result has zeros left of column ``i``; diagonal entries
    divide ``modulus`` and off-diagonal entries are reduced modulo the
    diagonal of their column.
    """
    work = [list(map(int, row)) for row in np.asarray(rows) % modulus]
    N = len(work[0]) if work else 0
    basis = []
    for col in range(N):
        pivot = [0] * N
        pivot[col] = modulus
        rest = []
        for row in work:
            a = row[col] % modulus
            if a == 0:
                rest.append(row)
                continue
            b = pivot[col]
            # extended gcd: g = s*a + t*b
            g, s, t = _egcd(a, b)
            new_pivot = [(s * x + t * y) % modulus for x, y in zip(row, pivot)]
            new_pivot[col] = g
            ka, kb = a // g, b // g
            other = [(kb * x - ka * y) % modulus for x, y in zip(row, pivot)]
            other[col] = 0
            pivot = new_pivot
            rest.append(other)
        basis.append(pivot)
        work = [row for row in rest if any(row[col + 1:])]
    h = np.array(basis, dtype=np.int64)
    for col in range(N):
        d = h[col, col]
        for i in range(col):
            q = h[i, col] // d
            if q:
                h[i] -= q * h[col]
    return h


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    s0, s1, t0, t1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    return a, s0, t0


def construction_d_generator(conv: ConvolutionProfile, profile: RateProfile) -> LatticeSpec:
    """Construction D lattice over the nested PAC codes.

    Generated by ``2**level(k) * b_k`` (``b_k`` the 0/1 lift of row ``k`` of
    ``T @ G_N mod 2``) and ``2**r Z^N``; ``gen`` is its upper-triangular
    Hermite basis. ``level_matrix`` keeps the 0/1 rows ``b_k``.
    """
    b = (conv.dense() @ kronecker_matrix(profile.N)) % 2
    gens = _diag_scales(profile)[:, None] * b
    gen = _modular_hnf(gens, 1 << profile.r)
    gen.setflags(write=False)
    return LatticeSpec(profile, gen, "pac-d", conv, Fraction(1), b)


def scale_lattice(spec: LatticeSpec, factor) -> LatticeSpec:
    """Return ``spec`` with every lattice point multiplied by ``factor``.

    ``factor`` is converted to a Fraction (pass a string such as ``"1/3"``
    for exact non-dyadic values).
    """
    f = Fraction(factor)
    if f <= 0:
        raise ValueError("scale factor must be positive")
    return LatticeSpec(spec.profile, spec.gen, spec.kind, spec.conv, spec.scale * f,
                       spec.level_matrix)


# --------------------------------------------------------------------------
# coordinate arrays
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CoordinateArray:
    """Bit rows ``rows[ell-1]`` (the ``2**(ell-1)``'s bits) plus residual ``z``."""

    rows: np.ndarray
    residual: np.ndarray

    @property
    def r(self) -> int:
        return self.rows.shape[0]


def coordinate_array(lam, r: int) -> CoordinateArray:
    """Two's-complement coordinate array of an integer vector, LSB row first.

    >>> ca = coordinate_array([-4], 4)
    >>> ca.rows[:, 0].tolist(), ca.residual.tolist()
    ([0, 0, 1, 1], [-1])
    """
    lam = np.asarray(lam, dtype=np.int64)
    if r < 0:
        raise ValueError("r must be non-negative")
    rows = np.stack([(lam >> ell) & 1 for ell in range(r)]) if r else np.zeros((0,) + lam.shape, np.int64)
    # arithmetic shift is floor division, matching the "add 2**r" rule for negatives
    residual = lam >> r
    return CoordinateArray(rows.astype(np.uint8), residual)


def integer_from_array(arr: CoordinateArray) -> np.ndarray:
    """Inverse of :func:`coordinate_array`."""
    rows = np.asarray(arr.rows)
    if not np.isin(rows, (0, 1)).all():
        raise ValueError("coordinate array rows must be binary")
    r = rows.shape[0]
    out = np.asarray(arr.residual, dtype=np.int64) << r
    for ell in range(r):
        out = out + (rows[ell].astype(np.int64) << ell)
    return out


# --------------------------------------------------------------------------
# encoding and membership
# --------------------------------------------------------------------------

def encode_lattice(lam, spec: LatticeSpec) -> np.ndarray:
    """Lattice point ``lam @ gen`` (batched over leading axes).

    Integer result. Polar and PAC kinds use the scaling diagonal, the
    convolution and the integer butterfly instead of a dense product. A
    non-unit ``spec.scale`` gives an object array of Fractions.
    """
    lam = np.asarray(lam)
    if lam.shape[-1] != spec.N:
        raise ValueError(f"message has length {lam.shape[-1]}, lattice dimension is {spec.N}")
    lam = lam.astype(np.int64)
    if spec.kind == "polar":
        x = polar_transform_int(lam * _diag_scales(spec.profile))
    elif spec.kind == "pac":
        a = lam * _diag_scales(spec.profile)
        x = polar_transform_int(_apply_conv_int(a, spec.conv))
    else:
        x = lam @ spec.gen
    if spec.scale != 1:
        return x.astype(object) * spec.scale
    return x


def _apply_conv_int(a: np.ndarray, conv: ConvolutionProfile) -> np.ndarray:
    """``a @ T`` over the integers."""
    if conv.taps is not None:
        out = a.copy()
        N = conv.N
        for j in conv.taps:
            if j < N:
                out[..., j:] += a[..., :N - j]
        return out
    return a @ conv.dense()


def _gf2_inverse(m: np.ndarray) -> np.ndarray:
    """Inverse of a square 0/1 matrix over GF(2)."""
    n = m.shape[0]
    aug = np.concatenate([m % 2, np.eye(n, dtype=np.int64)], axis=1).astype(np.uint8)
    for col in range(n):
        piv = np.nonzero(aug[col:, col])[0]
        if piv.size == 0:
            raise np.linalg.LinAlgError("matrix is singular over GF(2)")
        p = col + piv[0]
        if p != col:
            aug[[col, p]] = aug[[p, col]]
        hits = np.nonzero(aug[:, col])[0]
        hits = hits[hits != col]
        aug[hits] ^= aug[col]
    return aug[:, n:].astype(np.int64)


def _level_inverse_f2(spec: LatticeSpec) -> np.ndarray:
    cached = getattr(spec, "_level_inv_f2", None)
    if cached is None:
        cached = _gf2_inverse(spec.level_matrix % 2)
        object.__setattr__(spec, "_level_inv_f2", cached)
    return cached


def is_lattice_point(v, spec: LatticeSpec) -> bool:
    """Exact membership test for ``v`` (integers, Fractions or integral floats).

    Peels one binary digit per level: the residual mod 2 must be a codeword
    of the level code supported on ``I_ell``; after ``r`` levels the
    remainder must lie in ``Z^N @ level_matrix``, which is ``Z^N`` for every
    supported kind. All arithmetic is on Python integers.
    """
    v = [Fraction(x) / spec.scale for x in np.asarray(v).ravel().tolist()]
    if len(v) != spec.N:
        raise ValueError(f"vector has length {len(v)}, lattice dimension is {spec.N}")
    if any(x.denominator != 1 for x in v):
        return False
    res = np.array([int(x) for x in v], dtype=object)
    inv = _level_inverse_f2(spec)
    m = spec.level_matrix.astype(object)
    for ell in range(1, spec.r + 1):
        bits = np.array([int(x) & 1 for x in res], dtype=np.int64)
        u = (bits @ inv) % 2
        if (u & ~spec.profile.info_mask(ell)).any():
            return False
        res = np.array([int(x) >> 1 for x in res - u.astype(object) @ m], dtype=object)
    return True


def lattice_members(V, spec: LatticeSpec) -> np.ndarray:
    """Vectorized :func:`is_lattice_point` for small integer vectors.

    ``V`` has shape ``(M, N)`` and is taken in unscaled lattice units
    (``spec.scale`` is ignored). Uses int64 arithmetic, so entries should
    stay well below ``2**62``.
    """
    V = np.atleast_2d(np.asarray(V, dtype=np.int64))
    if V.shape[-1] != spec.N:
        raise ValueError(f"vectors have length {V.shape[-1]}, lattice dimension is {spec.N}")
    inv = _level_inverse_f2(spec)
    m = np.asarray(spec.level_matrix, dtype=np.int64)
    ok = np.ones(V.shape[0], dtype=bool)
    res = V.copy()
    for ell in range(1, spec.r + 1):
        u = ((res & 1) @ inv) % 2
        ok &= ~(u[:, ~spec.profile.info_mask(ell)].any(axis=1))
        res = (res - u @ m) >> 1
    return ok


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

def spec_to_dict(spec: LatticeSpec) -> dict:
    """JSON-ready description: ``{N, r, sets, kind, taps | T, seed, scale}``."""
    d = {
        "N": spec.N,
        "r": spec.r,
        "sets": spec.profile.sorted_sets(),
        "kind": spec.kind,
    }
    if spec.conv is not None:
        if spec.conv.taps is not None:
            d["taps"] = list(spec.conv.taps)
        else:
            d["T"] = [list(row) for row in spec.conv.matrix]
        d["seed"] = spec.conv.seed
    if spec.scale != 1:
        d["scale"] = str(spec.scale)
    return d


def spec_from_dict(d: dict) -> LatticeSpec:
    """Rebuild a spec from :func:`spec_to_dict` output."""
    known = {"N", "r", "sets", "kind", "taps", "T", "seed", "scale", "density"}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown lattice fields: {sorted(unknown)}")
    kind = d.get("kind", "polar")
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    profile = RateProfile(d["N"], d["sets"])
    if "r" in d and d["r"] != profile.r:
        raise ProfileError(f"r={d['r']} but {profile.r} sets were given")
    if kind == "polar":
        if "taps" in d or "T" in d:
            raise ValueError("polar lattices take no convolution")
        spec = build_generator(profile)
    else:
        if ("taps" in d) == ("T" in d):
            raise ValueError("PAC lattices need exactly one of taps or T")
        if "taps" in d:
            conv = ConvolutionProfile(profile.N, taps=tuple(d["taps"]), seed=d.get("seed"))
        else:
            conv = ConvolutionProfile(profile.N, matrix=tuple(map(tuple, d["T"])),
                                      seed=d.get("seed"), density=d.get("density"))
        spec = pac_generator(conv, profile) if kind == "pac" else construction_d_generator(conv, profile)
    if "scale" in d:
        spec = scale_lattice(spec, Fraction(d["scale"]))
    return spec


def spec_hash(spec: LatticeSpec) -> str:
    """Short content hash of the canonical JSON description."""
    blob = json.dumps(spec_to_dict(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
