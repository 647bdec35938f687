"""Seeded Monte Carlo estimation of lattice decoding error rates.

Trials are grouped into fixed blocks of :data:`SIM_BLOCK`. Block ``b`` of a
run at noise level ``sigma`` draws its messages and noise from a Philox
stream keyed by ``(seed, bits(sigma), b)``, so a record depends only on the
lattice, the decoder, ``sigma``, ``trials`` and ``seed``: never on the
number of worker processes. Early stopping is evaluated in block order.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .analysis import nvnr_db as _nvnr_db
from .decoding import DecoderConfig, _decode_levels
from .lattice import LatticeSpec, _level_inverse_f2, encode_lattice, log2_volume, spec_hash

__all__ = [
    "SimRecord",
    "SIM_BLOCK",
    "run_point",
    "vnr_sweep",
    "sigma_for_nvnr_db",
    "wilson_interval",
    "level_digits",
    "write_csv",
    "write_json",
    "csv_header",
]

SIM_BLOCK = 1000
_Z95 = float(stats.norm.ppf(0.975))


@dataclass(frozen=True)
class SimRecord:
    spec_hash: str
    kind: str
    N: int
    r: int
    decoder: str
    list_size: int
    sigma: float
    nvnr_db: float
    trials: int
    errors: int
    p_e: float
    ci_low: float
    ci_high: float
    level_errors: tuple[int, ...]
    laststage_errors: int
    seed: int
    stop_at_errors: int | None
    stopped_early: bool
    tool_version: str


def wilson_interval(k: int, n: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for ``k`` successes out of ``n``."""
    if n <= 0:
        return 0.0, 1.0
    p = k / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


def level_digits(x: np.ndarray, spec: LatticeSpec) -> list[np.ndarray]:
    """Binary level messages of integer lattice points ``x`` (batched).

    These are the messages a correct multilevel decoder returns; for PAC
    lattices they are the pre-convolution messages.
    """
    inv = _level_inverse_f2(spec)
    m = np.asarray(spec.level_matrix, dtype=np.int64)
    res = np.asarray(x, dtype=np.int64)
    out = []
    for _ in range(spec.r):
        u = ((res & 1) @ inv) % 2
        out.append(u.astype(np.uint8))
        res = (res - u @ m) >> 1
    return out


def _sigma_key(sigma: float) -> int:
    return int(np.float64(sigma).view(np.uint64))


def _sim_block(args) -> np.ndarray:
    """Counts ``[errors, level_1, ..., level_r, last_stage]`` for one block."""
    spec, config, sigma, seed, block, n, box = args
    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence(seed, spawn_key=(_sigma_key(sigma), block))))
    N, r = spec.N, spec.r
    lam = rng.integers(-box, box, size=(n, N), endpoint=True)
    noise = rng.normal(0.0, sigma, size=(n, N))
    x = encode_lattice(lam, spec if spec.scale == 1 else replace(spec, scale=Fraction(1)))
    sc = float(spec.scale)
    y = x * sc + noise
    levels, _, _, x_hat = _decode_levels(y / sc, sigma / sc, spec, config)
    wrong = (x_hat != x).any(axis=1)
    counts = np.zeros(r + 2, np.int64)
    counts[0] = wrong.sum()
    pending = wrong.copy()
    for ell, (u_hat, u) in enumerate(zip(levels, level_digits(x, spec)), start=1):
        first = pending & (u_hat != u).any(axis=1)
        counts[ell] = first.sum()
        pending &= ~first
    counts[r + 1] = pending.sum()
    return counts


def _run_blocks(jobs, workers: int, stop_at_errors: int | None):
    """Evaluate blocks in order (in waves when parallel) with early stopping."""
    total = None
    trials = 0
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        wave = max(1, workers) * 2
        for s in range(0, len(jobs), wave):
            chunk = jobs[s:s + wave]
            results = list(pool.map(_sim_block, chunk)) if pool else [_sim_block(j) for j in chunk]
            for job, c in zip(chunk, results):
                total = c if total is None else total + c
                trials += job[5]
                if stop_at_errors is not None and total[0] >= stop_at_errors:
                    return total, trials, True
    finally:
        if pool is not None:
            pool.shutdown()
    return total, trials, False


def run_point(spec: LatticeSpec, config: DecoderConfig, sigma: float, trials: int, seed: int, *,
              stop_at_errors: int | None = None, workers: int = 1,
              box: int | None = None) -> SimRecord:
    """Word error rate of multilevel decoding at one noise level.

    Messages are uniform on ``[-box, box]^N`` (default ``box = 2**(r+1)``);
    success means the decoded lattice point equals the transmitted one.
    """
    from . import __version__
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    box = 2 ** (spec.r + 1) if box is None else int(box)
    jobs = [(spec, config, float(sigma), int(seed), b, min(SIM_BLOCK, trials - start), box)
            for b, start in enumerate(range(0, trials, SIM_BLOCK))]
    counts, done, stopped = _run_blocks(jobs, workers, stop_at_errors)
    errors = int(counts[0])
    lo, hi = wilson_interval(errors, done)
    return SimRecord(
        spec_hash=spec_hash(spec), kind=spec.kind, N=spec.N, r=spec.r, decoder=config.kind,
        list_size=int(config.list_size), sigma=float(sigma), nvnr_db=_nvnr_db(spec, sigma),
        trials=int(done), errors=errors, p_e=errors / done, ci_low=lo, ci_high=hi,
        level_errors=tuple(int(c) for c in counts[1:spec.r + 1]),
        laststage_errors=int(counts[spec.r + 1]), seed=int(seed),
        stop_at_errors=stop_at_errors, stopped_early=bool(stopped and done < trials),
        tool_version=__version__)


def sigma_for_nvnr_db(spec: LatticeSpec, db: float) -> float:
    """Noise level at which ``10 log10(gamma / 2 pi e)`` equals ``db``."""
    log2v = log2_volume(spec.profile) + spec.N * math.log2(spec.scale)
    gamma = 2 * math.pi * math.e * 10.0 ** (db / 10.0)
    return math.sqrt(2.0 ** (2.0 * log2v / spec.N) / gamma)


def vnr_sweep(spec: LatticeSpec, config: DecoderConfig, *, sigmas: Sequence[float] | None = None,
              nvnr_db: Sequence[float] | None = None, trials: int, seed: int,
              stop_at_errors: int | None = 100, workers: int = 1,
              box: int | None = None) -> list[SimRecord]:
    """One :func:`run_point` per grid point, given as sigmas or NVNR values in dB."""
    if (sigmas is None) == (nvnr_db is None):
        raise ValueError("give exactly one of sigmas or nvnr_db")
    grid = list(sigmas) if sigmas is not None else [sigma_for_nvnr_db(spec, d) for d in nvnr_db]
    if not grid:
        raise ValueError("empty grid")
    return [run_point(spec, config, s, trials, seed, stop_at_errors=stop_at_errors,
                      workers=workers, box=box) for s in grid]


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def csv_header(r: int) -> list[str]:
    return (["spec_hash", "kind", "N", "r", "decoder", "list_size", "sigma", "nvnr_db",
             "trials", "errors", "p_e", "ci_low", "ci_high"]
            + [f"level{ell}_errors" for ell in range(1, r + 1)]
            + ["laststage_errors", "seed", "stop_at_errors", "stopped_early", "tool_version"])


def _row(rec: SimRecord, r: int) -> list[str]:
    lv = list(rec.level_errors) + [""] * (r - len(rec.level_errors))
    f = repr
    return ([rec.spec_hash, rec.kind, str(rec.N), str(rec.r), rec.decoder, str(rec.list_size),
             f(rec.sigma), f(rec.nvnr_db), str(rec.trials), str(rec.errors), f(rec.p_e),
             f(rec.ci_low), f(rec.ci_high)]
            + [str(v) for v in lv]
            + [str(rec.laststage_errors), str(rec.seed),
               "" if rec.stop_at_errors is None else str(rec.stop_at_errors),
               str(int(rec.stopped_early)), rec.tool_version])


def write_csv(records: Sequence[SimRecord], path) -> Path:
    path = Path(path)
    r = max((rec.r for rec in records), default=0)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_header(r))
        for rec in records:
            w.writerow(_row(rec, r))
    return path


def write_json(records: Sequence[SimRecord], path) -> Path:
    path = Path(path)
    data = []
    for rec in records:
        d = asdict(rec)
        d["level_errors"] = list(rec.level_errors)
        data.append(d)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path
