import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rebit import gf2
from rebit.contextuality import (
    ROTATED_MERMIN_SQUARE,
    ContextualityError,
    MeasureStep,
    Rejected,
    Verdict,
    WitnessSpec,
    born_predict,
    check_line,
    classify,
    classify_stabilizer_diagonal,
    conjugate_basis,
    coset_sum,
    coset_sums,
    hvm_consistency_audit,
    hvm_predict,
    sweep,
    value_assignment,
    witness_pullback,
    witness_value,
    witness_value_dense,
    witness_value_wigner,
)
from rebit.css import CSSGroup, StabilizerGroup, css_state, enumerate_css_groups, random_css_word, real_stabilizer_groups
from rebit.dense import (
    DenseDensity,
    DenseState,
    apply_circuit,
    apply_gate_density,
    pauli_branches,
    random_density,
    random_real_state,
)
from rebit.gf2 import GF2Subspace, PhasePoint
from rebit.pauli import ObservableSet, PauliOp, in_set_A, is_jointly_measurable, parse_pauli
from rebit.wigner import complete_graph_state, one_rebit_family, two_rebit_family, wigner_of

seeds = st.integers(0, 2**32 - 1)


def stab(text):
    return StabilizerGroup.parse(text.replace(",", "\n"))


def random_spec(n, rng):
    """Random isotropic basis inside A: a subset of a real stabilizer group's generators."""
    groups = real_stabilizer_groups(n)
    group = groups[int(rng.integers(len(groups)))]
    m = int(rng.integers(1, n + 1))
    gens = list(group.generators)
    rng.shuffle(gens)
    return WitnessSpec.from_basis([g.point for g in gens[:m]])


# --- witnesses ---------------------------------------------------------------------


def test_witness_values_on_graph_states():
    spec = WitnessSpec.from_labels("XZ,ZX")
    k2 = stab("-XZ,-ZX").state()
    assert witness_value(k2, spec, "00") == pytest.approx(-2, abs=1e-10)
    g2 = stab("XZ,ZX").state()
    assert witness_value(g2, spec, "11") == pytest.approx(-2, abs=1e-10)
    assert witness_value(DenseState.basis("00"), spec, "00") == pytest.approx(1, abs=1e-10)


def test_encoded_graph_state_witness():
    g2 = stab("XZI,ZXI,IIZ").state()
    spec = WitnessSpec.from_labels("XZI,ZXI")
    assert witness_value(g2, spec, "11") == pytest.approx(-2, abs=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_witness_routes_agree(seed):
    rng = np.random.default_rng(seed)
    for _ in range(100):
        n = int(rng.integers(1, 4))
        spec = random_spec(n, rng)
        rho = random_density(n, rng)
        x = tuple(int(v) for v in rng.integers(0, 2, size=spec.m))
        dense = witness_value_dense(rho, spec, x)
        assert witness_value_wigner(wigner_of(rho), spec, x) == pytest.approx(dense, abs=1e-9)


@given(seeds)
def test_witness_lower_bound_for_nonnegative_states(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    group = enumerate_css_groups(n)[int(rng.integers(len(enumerate_css_groups(n))))]
    spec = random_spec(n, rng)
    for x in itertools.product((0, 1), repeat=spec.m):
        assert witness_value(css_state(group), spec, x) >= -1e-10


def test_conjugate_basis():
    a = parse_pauli("XZ").point
    (b,) = conjugate_basis([a])
    assert gf2.sym_inner(a, b) == 1
    assert conjugate_basis([]) == []
    basis = [p.point for p in map(parse_pauli, ["XZI", "ZXI", "IIZ"])]
    conj = conjugate_basis(basis)
    assert [[gf2.sym_inner(x, y) for y in conj] for x in basis] == np.eye(3).tolist()


def test_witness_spec_validation():
    with pytest.raises(ContextualityError):
        WitnessSpec.from_labels("X,Z")
    with pytest.raises(ContextualityError):
        WitnessSpec.from_labels("XX,XX")
    with pytest.raises(Exception):
        WitnessSpec.from_basis([PhasePoint(1, 1, 1)])


# --- classifier ---------------------------------------------------------------------


def brute_coset_minimum(w):
    n = w.n
    best = np.inf
    for u in gf2.enumerate_maximal_isotropic(n):
        elems = u.elements()
        for v in range(1 << (2 * n)):
            best = min(best, sum(w.values[e ^ v] for e in elems))
    return best


@given(st.integers(1, 2), seeds)
def test_coset_sums_match_brute_force(n, seed):
    w = wigner_of(random_density(n, np.random.default_rng(seed)))
    assert coset_sums(w).min() == pytest.approx(brute_coset_minimum(w), abs=1e-12)


def test_coset_sums_k3():
    w = wigner_of(complete_graph_state(3))
    assert coset_sums(w).min() == pytest.approx(brute_coset_minimum(w), abs=1e-12)


def test_classify_one_rebit_examples():
    assert classify(one_rebit_family(0.5, 0.4)).verdict == Verdict.NONCONTEXTUAL
    assert classify(one_rebit_family(2**-0.5, 2**-0.5)).verdict == Verdict.INDETERMINATE


def test_classify_k3():
    result = classify(complete_graph_state(3))
    assert result.verdict == Verdict.CONTEXTUAL
    expected = GF2Subspace.span([parse_pauli(s).point.index for s in ("XZZ", "ZXZ", "ZZX")], 6)
    assert result.subspace == expected
    assert result.coset_sum == pytest.approx(-0.5, abs=1e-10)
    assert result.recheck()
    assert result.as_dict()["certificate"]["coset_sum"] < 0


@given(st.integers(1, 3), seeds)
def test_classify_certificates_recheck(n, seed):
    rng = np.random.default_rng(seed)
    rho = random_real_state(n, rng) if rng.random() < 0.5 else random_density(n, rng, rank=1)
    result = classify(rho)
    assert result.recheck()
    if result.verdict == Verdict.CONTEXTUAL:
        assert coset_sum(result.table, result.subspace, result.nu) == pytest.approx(result.coset_sum)


def test_classify_stabilizer_diagonal_examples():
    group = stab("XZ,ZX")
    assert classify_stabilizer_diagonal(two_rebit_family(0, 0), group).verdict == Verdict.NONCONTEXTUAL
    corner = classify_stabilizer_diagonal(two_rebit_family(1, 1), group)
    assert corner.verdict == Verdict.CONTEXTUAL and corner.recheck()
    with pytest.raises(ContextualityError):
        classify_stabilizer_diagonal(DenseState.basis("00").density(), group)


def signed_condition(a, b):
    return min(1 + s * a + t * b - s * t * a * b for s in (1, -1) for t in (1, -1))


@given(st.floats(-1, 1), st.floats(-1, 1))
def test_two_rebit_contextual_condition(a, b):
    verdict = classify_stabilizer_diagonal(two_rebit_family(a, b), stab("XZ,ZX")).verdict
    margin = signed_condition(a, b)
    if margin < -1e-6:
        assert verdict == Verdict.CONTEXTUAL
    elif margin > 1e-6:
        assert verdict == Verdict.NONCONTEXTUAL
    if abs(margin) > 1e-6:
        assert classify(two_rebit_family(a, b)).verdict == verdict


def test_one_rebit_sweep_small():
    rows = sweep("one-rebit-xz", resolution=21)
    for r in rows:
        x, z = r.params
        if not r.physical:
            assert x * x + z * z > 1
            continue
        if abs(x) + abs(z) <= 1 - 1e-9:
            assert r.verdict == Verdict.NONCONTEXTUAL
        elif abs(x) + abs(z) > 1 + 1e-9:
            assert r.verdict == Verdict.INDETERMINATE


def test_sweep_resolution_cap():
    with pytest.raises(ContextualityError):
        sweep("one-rebit-xz", resolution=2002)
    with pytest.raises(ContextualityError):
        sweep("three-rebit", resolution=5)


# --- hidden-variable model ---------------------------------------------------------------


def test_hvm_ghz():
    ghz = css_state(CSSGroup(3, (0b110, 0b011), (0b111,)))
    dist = hvm_predict(wigner_of(ghz), ObservableSet.parse(["ZZI", "IZZ"]))
    assert dist["++"] == pytest.approx(1.0)


def test_hvm_mixed():
    dist = hvm_predict(wigner_of(DenseDensity.maximally_mixed(2)), ObservableSet.parse(["XZ"]))
    assert dist == pytest.approx({"+": 0.5, "-": 0.5})


def test_hvm_rejects_negative_tables_and_incompatible_sets():
    with pytest.raises(ContextualityError):
        hvm_predict(wigner_of(complete_graph_state(2)), ObservableSet.parse(["ZZ"]))
    with pytest.raises(ContextualityError):
        hvm_predict(wigner_of(DenseDensity.maximally_mixed(2)), ObservableSet.parse(["XZ", "ZX"]))


@given(seeds)
def test_hvm_matches_born_on_css_states(seed):
    rng = np.random.default_rng(seed)
    groups = enumerate_css_groups(3)
    psi = css_state(groups[int(rng.integers(len(groups)))])
    from rebit.pauli import set_A_indices

    a_points = [PauliOp(PhasePoint.from_index(int(i), 3)) for i in set_A_indices(3) if i]
    chosen = []
    for k in rng.permutation(len(a_points)):
        cand = chosen + [a_points[k]]
        if is_jointly_measurable(cand):
            chosen = cand
        if len(chosen) == 3:
            break
    obs = ObservableSet(tuple(chosen))
    hvm = hvm_predict(wigner_of(psi), obs)
    born = born_predict(psi.density(), obs)
    assert hvm == pytest.approx(born, abs=1e-10)


@pytest.mark.parametrize("n", [2, 3])
def test_no_state_independent_contextuality(n):
    report = hvm_consistency_audit(n)
    assert report.violations == 0 and report.ok
    assert report.assignments_checked == 4**n


def test_rotated_mermin_square():
    bottom = check_line(ROTATED_MERMIN_SQUARE[2])
    assert not bottom.jointly_measurable
    assert not bottom.all_plus_consistent
    for line in ROTATED_MERMIN_SQUARE[:2]:
        check = check_line(line)
        assert check.jointly_measurable and check.all_plus_consistent


def test_value_assignment_is_multiplicative_on_commuting_triple():
    a, b = parse_pauli("XI").point, parse_pauli("IZ").point
    for i in range(16):
        u = PhasePoint.from_index(i, 2)
        assert value_assignment(u, a + b) == value_assignment(u, a) * value_assignment(u, b)


# --- pullback -----------------------------------------------------------------------------------


def test_pullback_through_identity():
    spec = WitnessSpec.from_labels("XZ,ZX")
    assert witness_pullback(spec, "11", []) == (spec, (1, 1))


def test_pullback_recovers_encoded_graph_witness():
    rng = np.random.default_rng(8)
    g2 = stab("XZI,ZXI,IIZ").state()
    word = random_css_word(3, 8, rng)
    # g2 = word(initial) with initial = word^-1 g2
    inverse = [w for w in reversed(word)]  # every CSS generator is an involution
    initial = apply_circuit(g2, inverse)
    assert np.allclose(apply_circuit(initial, word).amplitudes, g2.amplitudes)
    spec, x = WitnessSpec.from_labels("XZI,ZXI"), (1, 1)
    pulled, x0 = witness_pullback(spec, x, word)
    assert witness_value(initial, pulled, x0) == pytest.approx(-2, abs=1e-10)


@given(st.integers(1, 3), seeds)
def test_pullback_preserves_values(n, seed):
    rng = np.random.default_rng(seed)
    rho = random_density(n, rng)
    spec = random_spec(n, rng)
    word = random_css_word(n, 6, rng)
    after = rho
    for g in word:
        after = apply_gate_density(after, g)
    x = tuple(int(v) for v in rng.integers(0, 2, size=spec.m))
    pulled, x0 = witness_pullback(spec, x, word)
    assert witness_value(rho, pulled, x0) == pytest.approx(witness_value(after, spec, x), abs=1e-10)


def test_pullback_through_commuting_measurement():
    rng = np.random.default_rng(3)
    rho = random_density(2, rng)
    spec = WitnessSpec.from_labels("XX,ZZ")
    c = parse_pauli("ZZ").point
    result = witness_pullback(spec, "10", MeasureStep(c))
    assert result == (spec, (1, 0))
    branches = pauli_branches(rho, PauliOp(c))
    averaged = DenseDensity(sum(p * post.matrix for p, post in branches.values() if post is not None))
    assert witness_value(averaged, spec, "10") == pytest.approx(witness_value(rho, spec, "10"), abs=1e-10)


def test_pullback_rejects_anticommuting_measurement():
    spec = WitnessSpec.from_labels("XZ,ZX")
    assert isinstance(witness_pullback(spec, "00", MeasureStep(parse_pauli("ZI").point)), Rejected)
    with pytest.raises(ContextualityError):
        MeasureStep(parse_pauli("XZ").point)
