import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rebit import gf2
from rebit.gf2 import (
    GF2Error,
    GF2Subspace,
    GF2Vector,
    PhasePoint,
    RealFunctionOnSubspace,
    enumerate_maximal_isotropic,
    fwht,
    is_isotropic,
    sym_inner,
    walsh_transform,
)


def brute_span(vectors):
    out = {0}
    for v in vectors:
        out |= {e ^ v for e in out}
    return out


def brute_complement(vectors, dim, pair):
    span = brute_span(vectors)
    return {w for w in range(1 << dim) if all(pair(w, v) == 0 for v in span)}


def sym_pair(n):
    return lambda u, v: gf2.sym_inner_int(u, v, n)


def euclid(u, v):
    return (u & v).bit_count() & 1


vectors = st.lists(st.integers(0, 63), max_size=5)


# --- vectors and phase points ------------------------------------------------


def test_vector_addition_is_xor_and_self_inverse():
    v = GF2Vector.from_str("1011")
    w = GF2Vector.from_str("0110")
    assert str(v + w) == "1101"
    assert -v == v
    assert (v + v).bits == 0


def test_vector_length_cap():
    with pytest.raises(GF2Error):
        GF2Vector(0, 2 * gf2.N_MAX + 1)
    with pytest.raises(GF2Error):
        GF2Vector(0b100, 2)


def test_phase_point_index_round_trip():
    p = PhasePoint.from_str("10", "01")
    assert p.index == 0b1001
    assert PhasePoint.from_index(p.index, 2) == p
    assert str(p.z_part) == "10" and str(p.x_part) == "01"


@pytest.mark.parametrize(
    "u, v, expected",
    [
        (PhasePoint(1, 0, 1), PhasePoint(0, 1, 1), 1),
        (PhasePoint(0, 0, 1), PhasePoint(1, 1, 1), 0),
        (PhasePoint(1, 1, 1), PhasePoint(1, 1, 1), 0),
    ],
)
def test_sym_inner_examples(u, v, expected):
    assert sym_inner(u, v) == expected


@given(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255))
def test_sym_inner_is_alternating_bilinear(u, v, w):
    n = 4
    s = sym_pair(n)
    assert s(u, u) == 0
    assert s(u, v) == s(v, u)
    assert s(u ^ v, w) == s(u, w) ^ s(v, w)


# --- row reduction -----------------------------------------------------------


@given(vectors)
def test_rref_spans_the_same_space(rows):
    basis = gf2.rref(rows)
    assert brute_span(basis) == brute_span(rows)
    assert len(basis) == gf2.rank(rows)
    assert gf2.rref(basis) == basis


@given(vectors, st.integers(0, 63))
def test_reduce_vector_detects_membership(rows, v):
    basis = gf2.rref(rows)
    assert (gf2.reduce_vector(v, basis) == 0) == (v in brute_span(rows))


@given(vectors)
def test_nullspace_matches_brute_force(rows):
    null = gf2.nullspace(rows, 6)
    assert brute_span(null) == brute_complement(rows, 6, euclid)


@given(st.lists(st.integers(0, 15), min_size=1, max_size=4), st.integers(0, 15))
def test_solve_finds_solution_when_one_exists(rows, target_mask):
    rhs = [(target_mask >> i) & 1 for i in range(len(rows))]
    sol = gf2.solve(rows, rhs, 4)
    feasible = [x for x in range(16) if all(euclid(r, x) == b for r, b in zip(rows, rhs))]
    if feasible:
        assert sol is not None and sol == min(feasible)
    else:
        assert sol is None


def test_span_elements_coordinate_order():
    basis = [0b100, 0b010]
    # element c uses basis[i] when bit (k-1-i) of c is set
    assert gf2.span_elements(basis) == [0, 0b010, 0b100, 0b110]


@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_gf2_inverse(k, seed):
    rng = np.random.default_rng(seed)
    m = rng.integers(0, 2, size=(k, k))
    if gf2.rank(gf2.array_to_bits(r) for r in m) < k:
        with pytest.raises(GF2Error):
            gf2.gf2_inv(m)
    else:
        assert np.array_equal(gf2.gf2_matmul(m, gf2.gf2_inv(m)), np.eye(k, dtype=m.dtype))


# --- subspaces -----------------------------------------------------------------


def test_orthogonal_complement_examples():
    full = GF2Subspace.zero(2).orthogonal_complement("symplectic")
    assert full.dim == 2
    z_point = PhasePoint(1, 0, 1).index
    u = GF2Subspace.span([z_point], 2)
    assert u.orthogonal_complement("symplectic") == u
    diag = GF2Subspace.span([0b11], 2)
    assert diag.orthogonal_complement("euclidean") == diag


@given(st.lists(st.integers(0, 63), max_size=4))
def test_orthogonal_complements_match_brute_force(rows):
    u = GF2Subspace.span(rows, 6)
    assert set(u.orthogonal_complement("euclidean").elements()) == brute_complement(rows, 6, euclid)
    assert set(u.orthogonal_complement("symplectic").elements()) == brute_complement(rows, 6, sym_pair(3))
    assert u.dim + u.orthogonal_complement("symplectic").dim == 6


def test_is_isotropic_examples():
    assert is_isotropic(GF2Subspace.zero(2))
    assert not is_isotropic(GF2Subspace.span([PhasePoint(1, 0, 1).index, PhasePoint(0, 1, 1).index], 2))
    xz = PhasePoint.from_str("01", "10")  # X on rebit 0, Z on rebit 1
    zx = PhasePoint.from_str("10", "01")
    assert is_isotropic(GF2Subspace.span([xz.index, zx.index], 4))


def brute_lagrangian_count(n):
    s = sym_pair(n)
    found = set()
    for combo in itertools.combinations(range(1, 1 << (2 * n)), n):
        if gf2.rank(combo) == n and all(s(a, b) == 0 for a, b in itertools.combinations(combo, 2)):
            found.add(gf2.rref(combo))
    return len(found)


@pytest.mark.parametrize("n, count", [(1, 3), (2, 15), (3, 135)])
def test_lagrangian_counts(n, count):
    lags = enumerate_maximal_isotropic(n)
    assert len(lags) == count == gf2.count_maximal_isotropic(n)
    if n <= 2:
        assert count == brute_lagrangian_count(n)
    for u in lags:
        assert u.orthogonal_complement("symplectic") == u


def test_lagrangian_cap():
    with pytest.raises(GF2Error):
        enumerate_maximal_isotropic(gf2.LAGRANGIAN_CAP + 1)


def test_symplectic_form_and_check():
    j = gf2.symplectic_form(2)
    assert gf2.is_symplectic(np.eye(4, dtype=np.uint8))
    assert gf2.is_symplectic(np.roll(np.eye(4, dtype=np.uint8), 2, axis=0))
    assert not gf2.is_symplectic(np.array([[1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]))
    assert np.array_equal(j, j.T)


# --- Walsh transform -------------------------------------------------------


def test_fwht_matches_character_sum(rng):
    vals = rng.standard_normal(16)
    expected = [sum((-1) ** ((u & x).bit_count()) * vals[x] for x in range(16)) for u in range(16)]
    assert np.allclose(fwht(vals), expected, atol=1e-12)


def test_walsh_delta_is_constant():
    m = GF2Subspace.full(2)
    f = RealFunctionOnSubspace(m, np.array([1.0, 0, 0, 0]))
    assert np.allclose(walsh_transform(f).values, 0.5, atol=1e-12)


@given(st.floats(-5, 5))
def test_walsh_constant_is_scaled_delta(c):
    m = GF2Subspace.full(3)
    out = walsh_transform(RealFunctionOnSubspace(m, np.full(8, c))).values
    assert np.allclose(out, [np.sqrt(8) * c] + [0.0] * 7, atol=1e-12)


@given(st.lists(st.integers(1, 255), min_size=1, max_size=4), st.integers(0, 2**32 - 1))
def test_walsh_involution_on_nondegenerate_subspaces(rows, seed):
    m = GF2Subspace.span(rows, 8)
    radical = {v for v in m.elements() if all(euclid(v, w) == 0 for w in m.elements())}
    f = RealFunctionOnSubspace(m, np.random.default_rng(seed).standard_normal(len(m)))
    twice = walsh_transform(walsh_transform(f)).values
    if radical == {0}:
        assert np.allclose(twice, f.values, atol=1e-12)


@given(st.lists(st.integers(1, 255), min_size=1, max_size=4), st.integers(0, 2**32 - 1))
def test_walsh_matches_definition(rows, seed):
    m = GF2Subspace.span(rows, 8)
    f = RealFunctionOnSubspace(m, np.random.default_rng(seed).standard_normal(len(m)))
    got = walsh_transform(f).as_mapping()
    mapping = f.as_mapping()
    for u in m.elements():
        expected = sum((-1) ** euclid(u, x) * v for x, v in mapping.items()) / np.sqrt(len(m))
        assert got[u] == pytest.approx(expected, abs=1e-12)


def test_walsh_degenerate_subspace_is_not_involutive():
    # span{11} is orthogonal to itself, so the character is trivial
    m = GF2Subspace.span([0b11], 2)
    f = RealFunctionOnSubspace(m, np.array([1.0, 0.0]))
    assert not np.allclose(walsh_transform(walsh_transform(f)).values, f.values)
