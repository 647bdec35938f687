from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polarlattice.lattice import (
    ConvolutionProfile,
    ProfileError,
    RateProfile,
    build_generator,
    construction_d_generator,
    coordinate_array,
    encode_lattice,
    integer_from_array,
    inverse_polar_transform_int,
    is_lattice_point,
    kronecker_matrix,
    lattice_members,
    lift_convolution,
    log2_volume,
    pac_generator,
    polar_transform_f2,
    polar_transform_int,
    scale_lattice,
    spec_from_dict,
    spec_hash,
    spec_to_dict,
)

from oracles import circulant, dense_polar, exact_abs_det, kron_power

EX2 = RateProfile(4, [{4}, {2, 3, 4}])
EX5 = RateProfile(16, [{8, 12, 14, 15, 16}, {4, 6, 7, 8, 12, 14, 15, 16}])
EX4_T = ((1, 0, 1, 1), (0, 1, 0, 1), (0, 0, 1, 0), (0, 0, 0, 1))


@st.composite
def profiles(draw, max_n=5, max_r=3):
    n = draw(st.integers(0, max_n))
    N = 2 ** n
    r = draw(st.integers(0, max_r))
    perm = draw(st.permutations(list(range(1, N + 1))))
    sizes = sorted(draw(st.lists(st.integers(0, N), min_size=r, max_size=r)))
    return RateProfile(N, [set(perm[:k]) for k in sizes])


class TestTransforms:
    def test_kronecker_matches_block_recursion(self):
        for N in (1, 2, 4, 8, 32):
            assert np.array_equal(kronecker_matrix(N), kron_power(N))

    def test_f2_example(self):
        assert polar_transform_f2([0, 1, 0, 1]).tolist() == [0, 0, 1, 1]

    @given(st.integers(0, 6).flatmap(lambda n: st.lists(st.integers(0, 1), min_size=2 ** n,
                                                        max_size=2 ** n)))
    def test_f2_involution_and_dense(self, u):
        u = np.array(u)
        x = polar_transform_f2(u)
        assert np.array_equal(x, (u @ kron_power(len(u))) % 2)
        assert np.array_equal(polar_transform_f2(x), u)

    @given(st.integers(0, 5).flatmap(lambda n: st.lists(st.integers(-50, 50), min_size=2 ** n,
                                                        max_size=2 ** n)))
    def test_integer_butterfly_inverse(self, a):
        a = np.array(a)
        x = polar_transform_int(a)
        assert np.array_equal(x, a @ kron_power(len(a)))
        assert np.array_equal(inverse_polar_transform_int(x), a)

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            polar_transform_f2(np.zeros(0))

    def test_batched(self):
        u = np.random.default_rng(0).integers(0, 2, (3, 5, 16))
        x = polar_transform_f2(u)
        assert np.array_equal(x, (u @ kron_power(16)) % 2)


class TestProfiles:
    def test_nesting_error_names_pair(self):
        with pytest.raises(ProfileError, match="I_1 is not a subset of I_2"):
            RateProfile(4, [{1, 4}, {2, 3, 4}])

    def test_index_range(self):
        with pytest.raises(ProfileError, match="outside"):
            RateProfile(4, [{5}])

    def test_power_of_two(self):
        with pytest.raises(ValueError):
            RateProfile(6, [{1}])

    def test_levels_and_sizes(self):
        assert EX2.sizes == (1, 3)
        assert EX2.levels.tolist() == [2, 1, 1, 0]

    def test_conv_validation(self):
        with pytest.raises(ProfileError):
            ConvolutionProfile(4, matrix=((1, 0, 0, 0), (1, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)))
        with pytest.raises(ProfileError):
            ConvolutionProfile(4, matrix=((0, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)))
        with pytest.raises(ProfileError):
            ConvolutionProfile(4)

    def test_circulant_taps(self):
        assert np.array_equal(ConvolutionProfile(16, taps=(1, 4)).dense(), circulant(16, (1, 4)))
        assert ConvolutionProfile.identity(8).is_identity

    def test_random_conv_reproducible(self):
        a = ConvolutionProfile.random(16, seed=3)
        b = ConvolutionProfile.random(16, seed=3)
        assert a.matrix == b.matrix and a.seed == 3


class TestGenerators:
    def test_example1(self):
        gen = build_generator(RateProfile(2, [{2}])).gen
        assert gen.tolist() == [[2, 0], [1, 1]]

    def test_example2(self):
        gen = build_generator(EX2).gen
        assert gen.tolist() == [[4, 0, 0, 0], [2, 2, 0, 0], [2, 0, 2, 0], [1, 1, 1, 1]]

    def test_example4_lift_and_product(self):
        conv = ConvolutionProfile(4, matrix=EX4_T)
        tbar = lift_convolution(conv, EX2)
        assert tbar.tolist() == [[1, 0, 2, 4], [0, 1, 0, 2], [0, 0, 1, 0], [0, 0, 0, 1]]
        spec = pac_generator(conv, EX2)
        assert spec.gen.tolist() == [[12, 4, 8, 4], [4, 4, 2, 2], [2, 0, 2, 0], [1, 1, 1, 1]]

    def test_lift_has_fractional_entries(self):
        # 1/2 appears when a better row is glued to a worse one
        prof = RateProfile(4, [{2, 4}, {2, 3, 4}])
        conv = ConvolutionProfile(4, taps=(1,))
        tbar = lift_convolution(conv, prof)
        assert Fraction(1, 2) in set(tbar.ravel().tolist())
        lhs = tbar @ build_generator(prof).gen.astype(object)
        assert np.array_equal(lhs.astype(np.int64), pac_generator(conv, prof).gen)

    def test_generator_is_read_only(self):
        with pytest.raises(ValueError):
            build_generator(EX2).gen[0, 0] = 5

    @settings(max_examples=60, deadline=None)
    @given(profiles())
    def test_polar_matches_dense_oracle(self, prof):
        assert np.array_equal(build_generator(prof).gen, dense_polar(prof.N, prof.sets))

    @settings(max_examples=40, deadline=None)
    @given(profiles(max_n=4), st.integers(0, 2 ** 31))
    def test_volume_all_kinds(self, prof, seed):
        conv = ConvolutionProfile.random(prof.N, seed)
        want = 1 << log2_volume(prof)
        for spec in (build_generator(prof), pac_generator(conv, prof),
                     construction_d_generator(conv, prof)):
            assert exact_abs_det(spec.gen) == want

    def test_pac_d_basis_is_triangular(self):
        spec = construction_d_generator(ConvolutionProfile(16, taps=(1, 4)), EX5)
        assert not np.tril(spec.gen, -1).any()
        assert int(np.prod(np.diag(spec.gen))) == 2 ** log2_volume(EX5)


class TestCoordinateArray:
    def test_eq8_example(self):
        lam = np.array([3, 2, 1, 0, -1, -2, -3, -4])
        ca = coordinate_array(lam, 4)
        assert ca.rows.tolist() == [[1, 0, 1, 0, 1, 0, 1, 0],
                                    [1, 1, 0, 0, 1, 1, 0, 0],
                                    [0, 0, 0, 0, 1, 1, 1, 1],
                                    [0, 0, 0, 0, 1, 1, 1, 1]]
        assert ca.residual.tolist() == [0, 0, 0, 0, -1, -1, -1, -1]
        assert np.array_equal(integer_from_array(ca), lam)

    def test_minus_four(self):
        ca = coordinate_array([-4], 4)
        assert ca.rows[:, 0].tolist() == [0, 0, 1, 1]
        assert ca.residual.tolist() == [-1]

    def test_rejects_non_binary(self):
        ca = coordinate_array([3, 1], 2)
        bad = type(ca)(ca.rows * 2, ca.residual)
        with pytest.raises(ValueError):
            integer_from_array(bad)

    @given(st.lists(st.integers(-10 ** 6, 10 ** 6), min_size=1, max_size=16), st.integers(0, 8))
    def test_round_trip(self, lam, r):
        ca = coordinate_array(lam, r)
        assert set(np.unique(ca.rows)) <= {0, 1}
        assert np.array_equal(integer_from_array(ca), lam)


class TestEncodingMembership:
    def test_example2_encoding(self):
        spec = build_generator(EX2)
        assert encode_lattice([1, 1, 0, 0], spec).tolist() == [6, 2, 0, 0]

    @settings(max_examples=40, deadline=None)
    @given(profiles(max_n=4), st.integers(0, 2 ** 31))
    def test_encoding_matches_dense(self, prof, seed):
        rng = np.random.default_rng(seed)
        conv = ConvolutionProfile.random(prof.N, seed)
        lam = rng.integers(-9, 10, (5, prof.N))
        for spec in (build_generator(prof), pac_generator(conv, prof),
                     construction_d_generator(conv, prof)):
            x = encode_lattice(lam, spec)
            assert np.array_equal(x, lam @ spec.gen)
            assert all(is_lattice_point(v, spec) for v in x)
            assert lattice_members(x, spec).all()

    def test_d2_membership(self):
        spec = build_generator(RateProfile(2, [{2}]))
        assert not is_lattice_point([1, 0], spec)
        assert is_lattice_point([1, 1], spec)
        assert not is_lattice_point([Fraction(1, 2), 0], spec)

    @settings(max_examples=40, deadline=None)
    @given(profiles(max_n=3, max_r=2), st.integers(0, 2 ** 31))
    def test_membership_matches_brute_force(self, prof, seed):
        # every vector in a small box, checked against the integer span
        spec = pac_generator(ConvolutionProfile.random(prof.N, seed), prof)
        inv = np.linalg.inv(spec.gen.astype(float))
        rng = np.random.default_rng(seed)
        V = rng.integers(-4, 5, (200, prof.N))
        coef = V @ inv
        truth = np.all(np.abs(coef - np.rint(coef)) < 1e-9, axis=1)
        assert np.array_equal(lattice_members(V, spec), truth)
        assert [is_lattice_point(v, spec) for v in V] == truth.tolist()

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            encode_lattice([1, 2], build_generator(EX2))

    def test_scaled_lattice(self):
        spec = scale_lattice(build_generator(EX2), "1/3")
        x = encode_lattice([1, 1, 0, 0], spec)
        assert x.tolist() == [2, Fraction(2, 3), 0, 0]
        assert is_lattice_point(x, spec)
        assert not is_lattice_point([2, Fraction(2, 3), Fraction(1, 3), 0], spec)
        assert not is_lattice_point([Fraction(1, 2), 0, 0, 0], spec)


class TestSerialization:
    @pytest.mark.parametrize("kind", ["polar", "pac", "pac-d"])
    def test_round_trip(self, kind):
        conv = ConvolutionProfile(16, taps=(1, 4))
        spec = {"polar": lambda: build_generator(EX5),
                "pac": lambda: pac_generator(conv, EX5),
                "pac-d": lambda: construction_d_generator(conv, EX5)}[kind]()
        back = spec_from_dict(spec_to_dict(spec))
        assert np.array_equal(back.gen, spec.gen)
        assert spec_hash(back) == spec_hash(spec)

    def test_unknown_field(self):
        d = spec_to_dict(build_generator(EX2))
        d["extra"] = 1
        with pytest.raises(ValueError, match="unknown"):
            spec_from_dict(d)

    def test_hash_distinguishes(self):
        a = pac_generator(ConvolutionProfile(16, taps=(1, 4)), EX5)
        b = pac_generator(ConvolutionProfile(16, taps=(2, 4)), EX5)
        assert spec_hash(a) != spec_hash(b)
