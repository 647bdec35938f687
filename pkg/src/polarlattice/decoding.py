"""SC, SCL and PAC-SCL decoding, and the multilevel lattice decoder.

All decoders are batched: LLR input of shape ``(N,)`` or ``(B, N)``, output
of the same leading shape. Bit ``i`` of the output is row ``i + 1`` of
``G_N`` in natural order.

Tie rules
---------
* an information bit whose LLR is exactly 0 is decided as 0;
* in list decoding, candidates with equal path metric are ordered first by
  agreement with their own LLR sign, then by lexicographic path history
  (the list is kept sorted lexicographically), so ``L = 1`` reproduces SC
  bit for bit;
* the final rounding step rounds half-integers to even.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import boxplus, centered_mod, softplus
from .channel import aliased_llr
from .lattice import (
    ConvolutionProfile,
    LatticeSpec,
    _apply_conv_int,
    _diag_scales,
    _gf2_inverse,
    inverse_polar_transform_int,
    polar_transform_f2,
    polar_transform_int,
)

__all__ = [
    "DecoderConfig",
    "DecodeResult",
    "LLR_INF",
    "sc_decode",
    "scl_decode",
    "pac_scl_decode",
    "multilevel_decode",
    "last_stage_round",
]

# stand-in for an infinite LLR in noiseless tests; the exact boxplus and
# the softplus metric stay finite for inputs of this size
LLR_INF = 1e6
DECODER_KINDS = ("SC", "SCL", "PAC-SCL")
# upper bound on B * L * N per internal batch
_BATCH_CELLS = 2 ** 19


@dataclass(frozen=True)
class DecoderConfig:
    kind: str = "SC"
    list_size: int = 1
    conv: ConvolutionProfile | None = None
    tie_rule: str = "zero"

    def __post_init__(self):
        if self.kind not in DECODER_KINDS:
            raise ValueError(f"decoder kind must be one of {DECODER_KINDS}, got {self.kind!r}")
        if int(self.list_size) != self.list_size or self.list_size < 1:
            raise ValueError(f"list size must be a positive integer, got {self.list_size}")
        if self.kind == "SC" and self.list_size != 1:
            raise ValueError("SC decoding has list size 1")
        if self.tie_rule != "zero":
            raise ValueError("only the 'zero' tie rule is implemented")


@dataclass(frozen=True, eq=False)
class DecodeResult:
    """Output of :func:`multilevel_decode` (batched along leading axes).

    ``levels[ell-1]`` is the decoded level-``ell`` message (for PAC lattices
    the pre-convolution message ``v``), ``residual`` the last-stage integer
    vector and ``metrics[ell-1]`` the winning path metric (NaN for SC).
    """

    lam: np.ndarray
    x: np.ndarray
    levels: tuple[np.ndarray, ...]
    residual: np.ndarray
    metrics: tuple[np.ndarray, ...]


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _frozen_mask(frozen, N: int) -> np.ndarray:
    """Boolean frozen mask from a mask or an iterable of 1-based indices."""
    arr = np.asarray(frozen if not isinstance(frozen, (set, frozenset)) else sorted(frozen))
    if arr.dtype == bool:
        if arr.shape != (N,):
            raise ValueError(f"frozen mask must have shape ({N},)")
        return arr.copy()
    mask = np.zeros(N, dtype=bool)
    idx = arr.astype(np.int64).ravel()
    if idx.size and (idx.min() < 1 or idx.max() > N):
        raise ValueError(f"frozen indices must lie in [1, {N}]")
    mask[idx - 1] = True
    return mask


def _as_batch(llrs) -> tuple[np.ndarray, bool]:
    llrs = np.asarray(llrs, dtype=float)
    single = llrs.ndim == 1
    llrs = np.atleast_2d(llrs)
    N = llrs.shape[-1]
    if N & (N - 1) or N == 0:
        raise ValueError(f"code length must be a power of two, got {N}")
    return llrs, single


def _chunks(B: int, per_row: int):
    step = max(1, _BATCH_CELLS // max(per_row, 1))
    for s in range(0, B, step):
        yield slice(s, min(B, s + step))


# --------------------------------------------------------------------------
# successive cancellation
# --------------------------------------------------------------------------

def _sc_rec(llr, lo, info, fvals, out):
    m = llr.shape[-1]
    if not info[lo:lo + m].any():
        u = fvals[:, lo:lo + m]
        out[:, lo:lo + m] = u
        return polar_transform_f2(u) if m > 1 else u
    if m == 1:
        u = (llr < 0).astype(np.uint8)
        out[:, lo:lo + 1] = u
        return u
    h = m // 2
    la, lb = llr[:, :h], llr[:, h:]
    ca = _sc_rec(boxplus(la, lb), lo, info, fvals, out)
    cb = _sc_rec(lb + (1.0 - 2.0 * ca) * la, lo + h, info, fvals, out)
    return np.concatenate([ca ^ cb, cb], axis=1)


def sc_decode(llrs, frozen, frozen_values=None) -> np.ndarray:
    """Successive cancellation decoding with the exact boxplus.

    ``frozen`` is a boolean mask or an iterable of 1-based indices;
    ``frozen_values`` (default all zero) gives the bits at frozen positions
    and may be batched. Returns the decoded ``u`` as uint8.
    """
    llrs, single = _as_batch(llrs)
    B, N = llrs.shape
    fz = _frozen_mask(frozen, N)
    fv = np.zeros((B, N), np.uint8) if frozen_values is None else \
        np.broadcast_to(np.asarray(frozen_values, np.uint8) & 1, (B, N))
    fv = np.where(fz, fv, 0).astype(np.uint8)
    out = np.zeros((B, N), np.uint8)
    for sl in _chunks(B, N):
        o = np.zeros((sl.stop - sl.start, N), np.uint8)
        _sc_rec(llrs[sl], 0, ~fz, fv[sl], o)
        out[sl] = o
    return out[0] if single else out


# --------------------------------------------------------------------------
# list decoding (plain and PAC)
# --------------------------------------------------------------------------

class _ListState:
    """Per-call scratch: path metrics and running frozen/convolution bits."""

    def __init__(self, B, L, N, info, base, t_up):
        self.L = L
        self.info = info
        self.pm = np.full((B, L), np.inf)
        self.pm[:, 0] = 0.0
        # w[b, l, i]: value that u_i takes when v_i = 0 on path l
        self.w = np.zeros((B, L, N), np.uint8)
        if base is not None:
            self.w[:] = base[:, None, :]
        self.t_up = t_up
        self.has_row = None if t_up is None else t_up.any(axis=1)

    def leaf(self, llr, i):
        B, L = llr.shape
        hd = (llr < 0).astype(np.uint8)
        a = np.abs(llr)
        pen = softplus(-a)
        u_vals = np.array([0, 1], np.uint8)
        other = (u_vals[None, None, :] != hd[..., None])
        metric = self.pm[..., None] + pen[..., None] + a[..., None] * other
        metric = metric.reshape(B, 2 * L)
        other = other.reshape(B, 2 * L)
        q = np.broadcast_to(np.arange(2 * L), (B, 2 * L))
        order = np.lexsort((q, other, metric), axis=-1)[:, :L]
        order.sort(axis=1)
        parent = order // 2
        u = (order % 2).astype(np.uint8)
        self.pm = np.take_along_axis(metric, order, axis=1)
        self.w = np.take_along_axis(self.w, parent[..., None], axis=1)
        if self.t_up is not None and self.has_row[i]:
            v = u ^ self.w[:, :, i]
            self.w[:, :, i + 1:] ^= v[..., None] * self.t_up[i, i + 1:]
        return u[..., None], parent

    def rec(self, llr, lo):
        m = llr.shape[-1]
        if not self.info[lo:lo + m].any():
            u = self.w[:, :, lo:lo + m]
            c = polar_transform_f2(u) if m > 1 else u.copy()
            self.pm = self.pm + softplus(-(1.0 - 2.0 * c) * llr).sum(axis=-1)
            return c, None
        if m == 1:
            return self.leaf(llr[..., 0], lo)
        h = m // 2
        la, lb = llr[..., :h], llr[..., h:]
        ca, pa = self.rec(boxplus(la, lb), lo)
        if pa is not None:
            la = np.take_along_axis(la, pa[..., None], axis=1)
            lb = np.take_along_axis(lb, pa[..., None], axis=1)
        cb, pb = self.rec(lb + (1.0 - 2.0 * ca) * la, lo + h)
        par = pa
        if pb is not None:
            ca = np.take_along_axis(ca, pb[..., None], axis=1)
            par = pb if pa is None else np.take_along_axis(pa, pb, axis=1)
        return np.concatenate([ca ^ cb, cb], axis=-1), par


def _list_decode(llrs, fz, L, base, t):
    """Shared list decoder; returns best ``u`` and its path metric."""
    B, N = llrs.shape
    t_up = None if t is None else np.triu(t, 1).astype(np.uint8)
    u_out = np.zeros((B, N), np.uint8)
    pm_out = np.zeros(B)
    for sl in _chunks(B, N * L):
        n = sl.stop - sl.start
        st = _ListState(n, L, N, ~fz, None if base is None else base[sl], t_up)
        llr = np.broadcast_to(llrs[sl][:, None, :], (n, L, N))
        c, _ = st.rec(llr, 0)
        best = np.argmin(st.pm, axis=1)
        rows = np.arange(n)
        u_out[sl] = polar_transform_f2(c[rows, best])
        pm_out[sl] = st.pm[rows, best]
    return u_out, pm_out


def scl_decode(llrs, frozen, frozen_values=None, L: int = 8, *, return_metric: bool = False):
    """Successive cancellation list decoding (no CRC); returns the best ``u``.

    The path metric is ``sum softplus(-(1 - 2 u_i) LLR_i)`` accumulated at
    every leaf, so the returned metric equals the negative log-likelihood of
    the chosen codeword under the independent channel LLRs.
    """
    if L < 1:
        raise ValueError("list size must be at least 1")
    llrs, single = _as_batch(llrs)
    B, N = llrs.shape
    fz = _frozen_mask(frozen, N)
    base = None
    if frozen_values is not None:
        base = np.where(fz, np.broadcast_to(np.asarray(frozen_values, np.uint8) & 1, (B, N)), 0)
        base = base.astype(np.uint8)
    u, pm = _list_decode(llrs, fz, int(L), base, None)
    if single:
        u, pm = u[0], pm[0]
    return (u, pm) if return_metric else u


def pac_scl_decode(llrs, frozen, L: int, conv: ConvolutionProfile, *,
                   return_metric: bool = False):
    """List decoding of the PAC code ``v -> (v @ T) @ G_N``.

    Frozen positions constrain ``v`` to 0; each path carries the running
    convolution state so that ``u_i = v_i + sum_{j<i} v_j T[j, i]``.
    Returns the winning ``v``.
    """
    if L < 1:
        raise ValueError("list size must be at least 1")
    llrs, single = _as_batch(llrs)
    B, N = llrs.shape
    if conv.N != N:
        raise ValueError(f"convolution is {conv.N}-dimensional, code length is {N}")
    fz = _frozen_mask(frozen, N)
    t = conv.dense()
    u, pm = _list_decode(llrs, fz, int(L), None, t)
    v = u if conv.is_identity else ((u.astype(np.int64) @ _gf2_inverse(t)) % 2).astype(np.uint8)
    if single:
        v, pm = v[0], pm[0]
    return (v, pm) if return_metric else v


# --------------------------------------------------------------------------
# multilevel lattice decoding
# --------------------------------------------------------------------------

def last_stage_round(y, r: int) -> np.ndarray:
    """``round(y / 2**r) @ inv(G_N)`` with half-integers rounded to even."""
    w = np.rint(np.asarray(y, dtype=float) / 2.0 ** r).astype(np.int64)
    return inverse_polar_transform_int(w)


def _level_code_map(u: np.ndarray, spec: LatticeSpec) -> np.ndarray:
    """Integer image ``u @ level_matrix`` of binary level messages."""
    u = u.astype(np.int64)
    if spec.kind == "polar":
        return polar_transform_int(u)
    if spec.kind == "pac":
        return polar_transform_int(_apply_conv_int(u, spec.conv))
    return u @ spec.level_matrix


def _forward_solve(rhs: np.ndarray, mat: np.ndarray) -> np.ndarray:
    """Integer solution ``z`` of ``z @ mat = rhs`` for upper triangular ``mat``.

    Runs in int64 and falls back to Python integers for rows whose
    intermediate values leave the exactly representable range.
    """
    B, N = rhs.shape
    diag = np.diag(mat)
    z = np.zeros((B, N), np.int64)
    zf = np.zeros((B, N))
    matf = mat.astype(float)
    for j in range(N):
        acc = rhs[:, j] - z[:, :j] @ mat[:j, j]
        z[:, j] = acc // diag[j]
        zf[:, j] = (rhs[:, j] - zf[:, :j] @ matf[:j, j]) / diag[j]
    bad = np.nonzero(np.abs(zf).max(axis=1, initial=0) > 2.0 ** 52)[0]
    if bad.size:
        zo = z.astype(object)
        mo = mat.astype(object)
        for b in bad:
            row = [0] * N
            for j in range(N):
                acc = int(rhs[b, j]) - sum(row[i] * int(mo[i, j]) for i in range(j) if mo[i, j])
                row[j] = acc // int(diag[j])
            zo[b] = row
        return zo
    return z


def _resolve_decoder(spec: LatticeSpec, config: DecoderConfig):
    if spec.kind == "polar":
        if config.kind == "PAC-SCL" and config.conv is not None and not config.conv.is_identity:
            raise ValueError("a non-trivial convolution needs a PAC lattice")
        return config.kind, None
    if config.kind != "PAC-SCL":
        raise ValueError(f"{spec.kind} lattices are decoded with PAC-SCL, not {config.kind}")
    if config.conv is not None and not np.array_equal(config.conv.dense(), spec.conv.dense()):
        raise ValueError("decoder convolution differs from the lattice convolution")
    return "PAC-SCL", spec.conv


def _decode_levels(y: np.ndarray, sigma: float, spec: LatticeSpec, config: DecoderConfig):
    """Core of Algorithm 1 on a batch ``y`` of shape ``(B, N)`` (unscaled units).

    Returns level messages, their metrics, the rounded last-stage vector
    ``w`` and the integer estimate ``x_hat``.
    """
    kind, conv = _resolve_decoder(spec, config)
    B, N = y.shape
    acc = np.zeros((B, N), np.int64)
    levels, metrics = [], []
    for ell in range(1, spec.r + 1):
        step = 2.0 ** (ell - 1)
        t = centered_mod((y - acc) / step, 2.0)
        llr = aliased_llr(t, sigma / step, check=False)
        fz = ~spec.profile.info_mask(ell)
        if kind == "SC":
            u, pm = sc_decode(llr, fz), np.full(B, np.nan)
        elif kind == "SCL":
            u, pm = scl_decode(llr, fz, L=config.list_size, return_metric=True)
        else:
            c = conv if conv is not None else ConvolutionProfile.identity(N)
            u, pm = pac_scl_decode(llr, fz, config.list_size, c, return_metric=True)
        levels.append(u)
        metrics.append(pm)
        acc = acc + (1 << (ell - 1)) * _level_code_map(u, spec)
    w = np.rint((y - acc) / 2.0 ** spec.r).astype(np.int64)
    x_hat = acc + (w << spec.r)
    return levels, metrics, w, x_hat


def _message_from_levels(levels, w, x_hat, spec: LatticeSpec) -> tuple[np.ndarray, np.ndarray]:
    """Exact ``(lam, residual)`` from decoded levels and the rounded top vector."""
    if spec.kind == "pac-d":
        return _forward_solve(x_hat, np.asarray(spec.gen, np.int64)), w
    s = inverse_polar_transform_int(w)
    if spec.kind == "pac":
        z = _forward_solve(s, spec.conv.dense())
    else:
        z = s
    a = z * (1 << spec.r)
    for ell, u in enumerate(levels):
        a = a + (u.astype(np.int64) << ell)
    lam = a // _diag_scales(spec.profile)
    return lam, z


def multilevel_decode(y, sigma: float, spec: LatticeSpec, config: DecoderConfig) -> DecodeResult:
    """Multilevel decoding of a lattice point observed in Gaussian noise.

    Level ``ell`` sees ``(y - sum_{j<ell} 2^(j-1) u_j M) / 2^(ell-1)`` reduced
    mod 2 with noise ``sigma / 2^(ell-1)``, where ``M`` is the level matrix
    of the lattice (``G_N``, ``T G_N`` or ``(T G_N) mod 2``). After ``r``
    levels the remainder is divided by ``2^r`` and rounded. ``y`` and
    ``sigma`` are in the units of the (possibly scaled) lattice.
    """
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    y2 = np.atleast_2d(y)
    if y2.shape[-1] != spec.N:
        raise ValueError(f"received vector has length {y2.shape[-1]}, lattice dimension is {spec.N}")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    sc = float(spec.scale)
    levels, metrics, w, x_hat = _decode_levels(y2 / sc, sigma / sc, spec, config)
    lam, z = _message_from_levels(levels, w, x_hat, spec)
    x = x_hat if spec.scale == 1 else x_hat.astype(object) * spec.scale
    if single:
        return DecodeResult(lam[0], x[0], tuple(u[0] for u in levels), z[0],
                            tuple(m[0] for m in metrics))
    return DecodeResult(lam, x, tuple(levels), z, tuple(metrics))
