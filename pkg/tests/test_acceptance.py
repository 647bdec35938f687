"""Acceptance criteria 1 to 11, one test (or a small group) per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary ends
with one PASS/FAIL line per criterion.
"""
import json
import math
from fractions import Fraction

import numpy as np
import pytest

from polarlattice.analysis import (
    lattice_min_vectors,
    nvnr,
    nvnr_decomposition,
    report_dict,
    small_lattice_enumerate,
    spec_dmin,
)
from polarlattice.channel import estimate_reliabilities, partition_capacity, select_profile
from polarlattice.cli import main as cli_main
from polarlattice.decoding import DecoderConfig, multilevel_decode, pac_scl_decode, sc_decode, scl_decode
from polarlattice.lattice import (
    ConvolutionProfile,
    RateProfile,
    build_generator,
    coordinate_array,
    encode_lattice,
    integer_from_array,
    lift_convolution,
    log2_volume,
    pac_generator,
)
from polarlattice.simulate import run_point

from helpers import EX5, EX5_SETS, TABLE_J, random_profile, spec_of
from oracles import exact_abs_det, flint_abs_det

crit = pytest.mark.criterion


# 1 -------------------------------------------------------------------------

@crit(1, "bit-exact generator matrices of the worked examples")
def test_c01_generator_matrices():
    assert build_generator(RateProfile(2, [{2}])).gen.tolist() == [[2, 0], [1, 1]]
    ex2 = RateProfile(4, [{4}, {2, 3, 4}])
    assert build_generator(ex2).gen.tolist() == [[4, 0, 0, 0], [2, 2, 0, 0], [2, 0, 2, 0],
                                                 [1, 1, 1, 1]]
    T = ((1, 0, 1, 1), (0, 1, 0, 1), (0, 0, 1, 0), (0, 0, 0, 1))
    conv = ConvolutionProfile(4, matrix=T)
    tbar = lift_convolution(conv, ex2)
    assert tbar.tolist() == [[1, 0, 2, 4], [0, 1, 0, 2], [0, 0, 1, 0], [0, 0, 0, 1]]
    assert all(isinstance(v, Fraction) or isinstance(v, int) for v in tbar.ravel())
    assert pac_generator(conv, ex2).gen.tolist() == [[12, 4, 8, 4], [4, 4, 2, 2], [2, 0, 2, 0],
                                                     [1, 1, 1, 1]]


# 2 -------------------------------------------------------------------------

@crit(2, "volume identity log2|det| = rN - sum K on 100 random profiles per N")
@pytest.mark.parametrize("N", [4, 16, 64, 256])
def test_c02_volume(N):
    kinds = ("polar", "pac", "pac-d")
    for i in range(100):
        r = 1 + i % 4
        prof = random_profile(N, r, seed=1000 * N + i)
        spec = spec_of(kinds[i % 3], prof, ConvolutionProfile.random(N, seed=i))
        want = 1 << log2_volume(prof)
        assert flint_abs_det(spec.gen) == want
        if N <= 16:
            assert exact_abs_det(spec.gen) == want


# 3 -------------------------------------------------------------------------

@crit(3, "coordinate arrays: worked array, the -4 case, 1e5 round trips")
def test_c03_coordinate_arrays():
    lam = [3, 2, 1, 0, -1, -2, -3, -4]
    ca = coordinate_array(lam, 4)
    assert ca.rows.tolist() == [[1, 0, 1, 0, 1, 0, 1, 0],
                                [1, 1, 0, 0, 1, 1, 0, 0],
                                [0, 0, 0, 0, 1, 1, 1, 1],
                                [0, 0, 0, 0, 1, 1, 1, 1]]
    assert integer_from_array(ca).tolist() == lam
    m4 = coordinate_array([-4], 4)
    assert m4.rows[:, 0].tolist() == [0, 0, 1, 1] and m4.residual.tolist() == [-1]
    rng = np.random.default_rng(3)
    for r in (1, 2, 3, 4, 8):
        v = rng.integers(-1000, 1001, (20_000, 16))
        ca = coordinate_array(v, r)
        assert set(np.unique(ca.rows)) <= {0, 1}
        assert np.array_equal(integer_from_array(ca), v)


# 4 -------------------------------------------------------------------------

@crit(4, "squared minimum distance 8 for all six tap sets")
@pytest.mark.parametrize("J", TABLE_J)
def test_c04_table_one(J):
    spec = spec_of("pac-d", EX5, ConvolutionProfile(16, taps=J))
    assert spec_dmin(spec) == 8
    assert lattice_min_vectors(spec).d2min == 8


# 5 -------------------------------------------------------------------------

@crit(5, "minimal-vector counts 80/128/120/80/120/80 and 128 (polar)")
def test_c05_table_two():
    want = [80, 128, 120, 80, 120, 80]
    got = []
    for J in TABLE_J:
        spec = spec_of("pac-d", EX5, ConvolutionProfile(16, taps=J))
        rep = lattice_min_vectors(spec)
        assert report_dict(rep, spec)["convention"] == "lattice-vectors"
        got.append(rep.n_min)
    polar = lattice_min_vectors(build_generator(EX5))
    print("N_min by tap set:", dict(zip(TABLE_J, got)), "polar:", polar.n_min,
          "alternatives:", polar.alternatives)
    assert got == want
    assert (polar.d2min, polar.n_min) == (8, 128)


# 6 -------------------------------------------------------------------------

@crit(6, "precoding never lowers the multilevel distance (50 random T)")
def test_c06_lemma3():
    violations = 0
    for seed in range(50):
        conv = ConvolutionProfile.random(16, seed)
        for prof in (EX5, random_profile(16, 2, seed), random_profile(16, 3, seed + 99)):
            base = spec_dmin(build_generator(prof))
            for kind in ("pac", "pac-d"):
                violations += spec_dmin(spec_of(kind, prof, conv)) < base
    assert violations == 0


# 7 -------------------------------------------------------------------------

@crit(7, "two-dimensional gluing example: Z^2 (1,4) versus glued (1,2)")
def test_c07_fig5():
    z2 = small_lattice_enumerate([[1, 0], [0, 1]])
    glued = small_lattice_enumerate([[1, "1/2"], [0, 1]])
    assert z2 == (1, 4)
    assert glued == (1, 2)
    # equal packing radius sqrt(d2)/2 = 1/2, smaller kissing number
    assert z2[0] == glued[0] and glued[1] < z2[1]


# 8 -------------------------------------------------------------------------

@crit(8, "capacity telescoping, NVNR decomposition and capacity limits")
def test_c08_numerics():
    for sigma in (0.05, 0.2, 0.35, 0.6, 1.0, 3.0):
        for r in (1, 2, 3, 5):
            caps = partition_capacity(sigma, r)
            assert abs(sum(caps.levels) - caps.chain_total) < 1e-6
    rng = np.random.default_rng(20)
    for i in range(20):
        N = int(2 ** rng.integers(1, 8))
        r = int(rng.integers(1, 4))
        prof = random_profile(N, r, i)
        kind = ("polar", "pac", "pac-d")[i % 3]
        spec = spec_of(kind, prof, ConvolutionProfile.random(N, i))
        sigma = float(rng.uniform(0.05, 1.5))
        d = nvnr_decomposition(spec, sigma)
        assert abs(d["total"] - math.log2(nvnr(spec, sigma) / (2 * math.pi * math.e))) < 1e-6
    assert abs(partition_capacity(0.01, 1).levels[0] - 1.0) < 1e-4
    assert abs(partition_capacity(100.0, 1).levels[0]) < 1e-4


# 9 -------------------------------------------------------------------------

def _roundtrip_configs(kind, conv):
    if kind == "polar":
        return [DecoderConfig("SC"), DecoderConfig("SCL", 8),
                DecoderConfig("PAC-SCL", 8, ConvolutionProfile.identity(conv.N))]
    return [DecoderConfig("PAC-SCL", 8, conv)]


@crit(9, "decoders: noiseless round trips, SCL(1) = SC, identity PAC = SCL")
@pytest.mark.parametrize("N", [4, 16, 64])
@pytest.mark.parametrize("r", [1, 2, 3])
def test_c09_noiseless(N, r):
    rng = np.random.default_rng(10 * N + r)
    prof = random_profile(N, r, seed=N * r)
    conv = ConvolutionProfile.random(N, seed=N + r)
    lam = rng.integers(-2 ** (r + 1), 2 ** (r + 1) + 1, (10_000, N))
    for kind in ("polar", "pac", "pac-d"):
        spec = spec_of(kind, prof, conv)
        x = encode_lattice(lam, spec)
        for cfg in _roundtrip_configs(kind, conv):
            res = multilevel_decode(x.astype(float), 0.05, spec, cfg)
            assert np.array_equal(res.lam, lam), (kind, cfg.kind)


@crit(9, "decoders: noiseless round trips, SCL(1) = SC, identity PAC = SCL")
@pytest.mark.parametrize("N", [16, 64])
def test_c09_equivalences(N):
    rng = np.random.default_rng(N)
    frozen = rng.random(N) < 0.5
    sigma = 0.55
    u = rng.integers(0, 2, (10_000, N))
    u[:, frozen] = 0
    from polarlattice._kernels import centered_mod
    from polarlattice.channel import aliased_llr
    from polarlattice.lattice import polar_transform_f2
    y = centered_mod(polar_transform_f2(u) + rng.normal(0, sigma, u.shape), 2.0)
    llr = aliased_llr(y, sigma)
    sc = sc_decode(llr, frozen)
    assert (sc != u).any(axis=1).mean() > 0.01  # the instances are genuinely noisy
    assert np.array_equal(scl_decode(llr, frozen, L=1), sc)
    ident = ConvolutionProfile.identity(N)
    for L in (2, 8):
        assert np.array_equal(pac_scl_decode(llr, frozen, L, ident), scl_decode(llr, frozen, L=L))
    # the same equivalences through the multilevel decoder
    spec = build_generator(random_profile(N, 2, N))
    yv = encode_lattice(rng.integers(-8, 9, (10_000, N)), spec) + rng.normal(0, 0.45, (10_000, N))
    a = multilevel_decode(yv, 0.45, spec, DecoderConfig("SC"))
    b = multilevel_decode(yv, 0.45, spec, DecoderConfig("SCL", 1))
    c = multilevel_decode(yv, 0.45, spec, DecoderConfig("SCL", 8))
    d = multilevel_decode(yv, 0.45, spec, DecoderConfig("PAC-SCL", 8, ident))
    assert np.array_equal(a.lam, b.lam)
    assert np.array_equal(c.lam, d.lam)


# 10 ------------------------------------------------------------------------

BENCH_TRIALS = 100_000
BENCH_SIGMA = 0.35
BENCH_TAPS = (2, 3, 5, 6)


def _overlap(a, b):
    return a.ci_low <= b.ci_high and b.ci_low <= a.ci_high


@crit(10, "decoder ordering PAC-SCL8 <= SCL8 <= SC at N=128, r=2, 1e5 trials")
def test_c10_ordering():
    table = estimate_reliabilities(0.4, 128, 2, 20_000, seed=3)
    prof = select_profile(table, targets=(29, 90))
    conv = ConvolutionProfile(128, taps=BENCH_TAPS)
    polar = build_generator(prof)
    pac = pac_generator(conv, prof)
    sc = run_point(polar, DecoderConfig("SC"), BENCH_SIGMA, BENCH_TRIALS, seed=5)
    scl = run_point(polar, DecoderConfig("SCL", 8), BENCH_SIGMA, BENCH_TRIALS, seed=5)
    pacl = run_point(pac, DecoderConfig("PAC-SCL", 8, conv), BENCH_SIGMA, BENCH_TRIALS, seed=5)
    for rec in (sc, scl, pacl):
        print(f"{rec.kind:6s} {rec.decoder:8s} L={rec.list_size}  P_e={rec.p_e:.5f} "
              f"[{rec.ci_low:.5f}, {rec.ci_high:.5f}]  {rec.errors}/{rec.trials}")
    assert 1e-3 <= sc.p_e <= 1e-1
    assert all(rec.trials >= BENCH_TRIALS for rec in (sc, scl, pacl))
    assert scl.p_e <= sc.p_e or _overlap(scl, sc)
    assert pacl.p_e <= scl.p_e or _overlap(pacl, scl)


# 11 ------------------------------------------------------------------------

@crit(11, "byte-identical CSV for worker counts 1, 4 and 8")
def test_c11_determinism(tmp_path):
    configs = {
        "polar": {"lattice": {"N": 16, "kind": "polar", "sets": [sorted(s) for s in EX5_SETS]},
                  "channel": {"sigma": [0.3, 0.35, 0.4]},
                  "decoder": {"kind": "SCL", "list_size": 4},
                  "sim": {"trials": 12_000, "seed": 77, "stop_at_errors": 300}},
        "pac": {"lattice": {"N": 32, "r": 2, "kind": "pac", "taps": [1, 3],
                            "derive": {"sigma": 0.4, "trials": 4000, "seed": 1,
                                       "targets": [8, 20]}},
                "channel": {"nvnr_db": [2.0, 3.0]},
                "decoder": {"kind": "PAC-SCL", "list_size": 4},
                "sim": {"trials": 8000, "seed": 78}},
    }
    for name, data in configs.items():
        cfg = tmp_path / f"{name}.json"
        cfg.write_text(json.dumps(data))
        outs = []
        for w in (1, 4, 8):
            out = tmp_path / f"{name}_w{w}"
            assert cli_main(["simulate", "--config", str(cfg), "--out", str(out),
                             "--workers", str(w)]) == 0
            outs.append((out / "results.csv").read_bytes())
        assert outs[0] == outs[1] == outs[2]
        assert outs[0].count(b"\n") == 1 + len(next(iter(data["channel"].values())))
