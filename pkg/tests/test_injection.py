import numpy as np
import pytest
from hypothesis import given, strategies as st

from rebit.dense import DenseState, GateOp, apply_gate, gate_matrix, random_complex_state
from rebit.injection import (
    ALLOWED_PRIMITIVES,
    EncodedState,
    Executor,
    InjectionError,
    LogicalCircuit,
    LogicalOp,
    WhitelistViolation,
    ZeroProbabilityBranch,
    ancilla,
    audit_log,
    decode,
    encode,
    gadget,
    gadget_branches,
    logical_gate,
    overlap,
    project_z,
    random_logical_circuit,
    run_encoded,
    verify_circuit,
)
from rebit.pauli import parse_pauli

seeds = st.integers(0, 2**32 - 1)
SQ2 = np.sqrt(2)


def cstate(*amps):
    return DenseState.from_unnormalized(np.array(amps, dtype=complex), complex_mode=True)


PLUS = cstate(1, 1)
MAGIC = cstate(1, np.exp(1j * np.pi / 4))


# --- encoding -----------------------------------------------------------------------


def test_encode_real_input_uses_real_tracker():
    enc = encode(cstate(0.6, 0.8))
    assert np.allclose(enc.state.amplitudes, [0.6, 0, 0.8, 0])


def test_encode_magic_state_is_ancilla_A():
    assert np.allclose(encode(MAGIC).state.amplitudes, ancilla("A").amplitudes)
    assert overlap(decode(EncodedState(ancilla("A"), 1)), MAGIC) == pytest.approx(1.0)


def test_encode_imaginary_unit():
    assert np.allclose(encode(cstate(1j, 0)).state.amplitudes, [0, 1, 0, 0])


@given(st.integers(1, 4), seeds)
def test_round_trip(n, seed):
    psi = random_complex_state(n, np.random.default_rng(seed))
    enc = encode(psi)
    assert not enc.state.complex_mode
    assert overlap(decode(enc), psi) == pytest.approx(1.0, abs=1e-10)


@given(st.integers(1, 3), seeds)
def test_conjugate_is_a_tracker_flip(n, seed):
    psi = random_complex_state(n, np.random.default_rng(seed))
    enc = encode(psi).state.amplitudes
    flipped = EncodedState(DenseState(enc * np.tile([1, -1], 1 << n)), n)
    assert np.allclose(decode(flipped).amplitudes, np.conj(psi.amplitudes))


def test_ancillas():
    assert np.linalg.norm(ancilla("A").amplitudes) == pytest.approx(1.0)
    b = ancilla("B")
    assert np.allclose(b.amplitudes, np.array([1, 1, 1, -1]) / 2)
    for label in ("XZ", "ZX"):
        assert np.allclose(parse_pauli(label).dense() @ b.amplitudes, b.amplitudes)
    with pytest.raises(InjectionError):
        ancilla("C")


# --- gadgets --------------------------------------------------------------------------


def check_all_branches(kind, psi, qubits=(0,)):
    op = LogicalOp(kind, qubits)
    branches = gadget_branches(op, encode(psi))
    assert sum(b.probability for b in branches) == pytest.approx(1.0, abs=1e-10)
    expected = apply_gate(psi, logical_gate(op))
    for b in branches:
        assert overlap(decode(b.result), expected) == pytest.approx(1.0, abs=1e-10)
        assert audit_log(b.log) == []
    return branches


def test_hadamard_gadget_on_zero():
    branches = check_all_branches("H", cstate(1, 0))
    assert len(branches) == 4
    for b in branches:
        assert overlap(decode(b.result), PLUS) == pytest.approx(1.0, abs=1e-10)


def test_t_gadget_on_plus():
    for b in check_all_branches("T", PLUS):
        assert overlap(decode(b.result), MAGIC) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("kind", ["H", "T", "TDG"])
@pytest.mark.parametrize("seed", range(3))
def test_gadgets_on_random_inputs(kind, seed):
    psi = random_complex_state(2, np.random.default_rng(seed))
    check_all_branches(kind, psi, (seed % 2,))


def test_both_t_outcomes_occur():
    # the phase arrives directly on some branches and inverted (then repaired) on others
    branches = gadget_branches("T", encode(PLUS))
    repaired = [any(e["gadget"].endswith("/S") for e in b.log) for b in branches]
    assert any(repaired) and not all(repaired)
    assert sum(b.probability for b, r in zip(branches, repaired) if r) == pytest.approx(0.5)


def test_cnot_and_measurement_are_pass_through():
    psi = random_complex_state(2, np.random.default_rng(1))
    (b,) = gadget_branches(LogicalOp("CNOT", (0, 1)), encode(psi))
    assert [e["op"] for e in b.log] == ["CNOT"]
    assert overlap(decode(b.result), apply_gate(psi, GateOp("CNOT", (0, 1)))) == pytest.approx(1.0)
    branches = gadget_branches(LogicalOp("MEASZ", (1,)), encode(psi))
    for br in branches:
        prob, post = project_z(psi, 1, br.outcomes[0])
        assert br.probability == pytest.approx(prob)
        assert overlap(decode(br.result), post) == pytest.approx(1.0)


def test_gadget_with_rng_and_forced_outcomes():
    enc = encode(PLUS)
    out, outcomes, ex = gadget("H", enc, rng=3)
    assert overlap(decode(out), cstate(1, 0)) == pytest.approx(1.0)
    assert len(outcomes) == 2
    with pytest.raises(ZeroProbabilityBranch):
        gadget("MEASZ", encode(cstate(1, 0)), forced=[1])


def test_intermediate_states_stay_real():
    ex = Executor(rng=np.random.default_rng(0))
    from rebit.injection import _load, apply_logical

    _load(ex, encode(random_complex_state(2, np.random.default_rng(2))))
    for op in LogicalCircuit.parse("H 0\nT 1\nCNOT 1 0\nTDG 0").ops:
        apply_logical(ex, op)
        assert ex.psi.dtype == np.float64


# --- whitelist -------------------------------------------------------------------------------


def test_executor_refuses_unlisted_primitives():
    ex = Executor()
    with pytest.raises(WhitelistViolation):
        ex._record("H", ["d0"])
    assert "H" not in ALLOWED_PRIMITIVES and "CZ" not in ALLOWED_PRIMITIVES


def test_audit_flags_bad_logs():
    assert audit_log([{"op": "CNOT", "wires": ["a", "b"], "gadget": "x"}]) == []
    assert audit_log([{"op": "RZ", "wires": ["a"], "gadget": "x"}])
    assert audit_log([{"op": "CNOT", "wires": ["a", "a"], "gadget": "x"}])
    assert audit_log([{"op": "MEASZ", "wires": ["a", "b"], "gadget": "x"}])


def test_discard_requires_a_measured_rebit():
    ex = Executor()
    ex.load(np.array([1.0, 0.0, 0.0, 0.0]), ["p", "q"])
    with pytest.raises(InjectionError):
        ex.discard("p")
    ex.measz("p")
    ex.discard("p")
    assert ex.wires == ["q"]


def test_register_cap():
    ex = Executor(max_rebits=3)
    ex.load(np.array([1.0, 0.0]), ["d"])
    ex.inject("B", ["b1", "b2"])
    with pytest.raises(InjectionError):
        ex.prep0("extra")


def test_propagation_identity():
    n = 3
    h_all = gate_matrix(GateOp("H_ALL", ()), n)
    for i, j in [(0, 1), (2, 0)]:
        lhs = gate_matrix(GateOp("CNOT", (i, j)), n) @ h_all
        rhs = h_all @ gate_matrix(GateOp("CNOT", (j, i)), n)
        assert np.allclose(lhs, rhs)


# --- circuits ----------------------------------------------------------------------------------


def test_parse_logical_circuit():
    c = LogicalCircuit.parse("H 0\nT 1  # phase\n\nCNOT 0 1\nMEASZ 1\n")
    assert c.data_count == 2 and [op.kind for op in c.ops] == ["H", "T", "CNOT", "MEASZ"]
    assert LogicalCircuit.parse(c.to_text()) == c
    for bad in ["H\n", "CNOT 0 0\n", "RX 0\n", "H x\n"]:
        with pytest.raises(InjectionError):
            LogicalCircuit.parse(bad)
    with pytest.raises(InjectionError):
        LogicalCircuit.parse("H 3\n", data_count=2)


def test_hth_on_zero():
    run = run_encoded(LogicalCircuit.parse("H 0\nT 0\nH 0"), cstate(1, 0), seed=1)
    h = np.array([[1, 1], [1, -1]]) / SQ2
    expected = h @ np.diag([1, np.exp(1j * np.pi / 4)]) @ h @ np.array([1, 0])
    assert overlap(run.final, DenseState(expected, complex_mode=True)) == pytest.approx(1.0, abs=1e-10)
    assert audit_log(run.log) == []
    assert all(entry["gadget"] for entry in run.log)


def test_empty_circuit_is_identity():
    psi = random_complex_state(2, np.random.default_rng(0))
    run = run_encoded(LogicalCircuit(2), psi)
    assert np.allclose(run.final.amplitudes, psi.amplitudes)
    assert run.log == ()


def test_clifford_circuit_branch_by_branch():
    circuit = LogicalCircuit.parse("H 0\nCNOT 0 1\nH 1")
    psi = random_complex_state(2, np.random.default_rng(4))
    assert all(step.ok for step in verify_circuit(circuit, psi, rng=0))


@pytest.mark.parametrize("seed", range(6))
def test_random_three_gate_circuits(seed):
    rng = np.random.default_rng(seed)
    n = 1 + seed % 2
    circuit = random_logical_circuit(n, 3, rng)
    checks = verify_circuit(circuit, random_complex_state(n, rng), rng=rng)
    assert all(c.ok for c in checks), checks


def test_logical_measurement_statistics():
    circuit = LogicalCircuit.parse("H 0\nT 0\nH 0\nMEASZ 0")
    ones = sum(run_encoded(circuit, cstate(1, 0), seed=s).logical_outcomes[0] for s in range(400))
    p1 = abs((1 - np.exp(1j * np.pi / 4)) / 2) ** 2
    assert abs(ones / 400 - p1) < 4 * np.sqrt(p1 * (1 - p1) / 400)


def test_peak_register_size():
    run = run_encoded(LogicalCircuit.parse("T 0\nT 1"), random_complex_state(2, np.random.default_rng(0)))
    assert run.peak_rebits == 7
