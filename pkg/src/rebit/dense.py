"""Brute-force dense oracle: state vectors, density matrices, gates and
Pauli measurements for up to six qubits.  Qubit 0 is the most significant
bit of the basis index.

States are real by default.  Complex amplitudes are accepted only with
``complex_mode=True``; that path exists to check the injection gadgets
against plain qubit evolution.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .pauli import PauliOp, dense_matrix

MAX_N = 6
NORM_TOL = 1e-10
REAL_TOL = 1e-12
PSD_TOL = -1e-9


class DenseError(ValueError):
    pass


def make_rng(seed: int | np.random.SeedSequence | None) -> np.random.Generator:
    """Counter-based generator (Philox) from an explicit seed."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def spawn_rngs(seed: int, count: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.Philox(s)) for s in np.random.SeedSequence(seed).spawn(count)]


def _num_qubits(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise DenseError(f"dimension {dim} is not a power of two")
    if n > MAX_N:
        raise DenseError(f"dense oracle capped at n={MAX_N}, got {n}")
    return n


@dataclass(frozen=True)
class DenseState:
    amplitudes: np.ndarray
    complex_mode: bool = False

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex if self.complex_mode else None, copy=True)
        if np.iscomplexobj(amps) and not self.complex_mode:
            if np.max(np.abs(amps.imag), initial=0.0) > REAL_TOL:
                raise DenseError("complex amplitudes in real mode")
            amps = amps.real
        amps = amps.astype(complex if self.complex_mode else float)
        if amps.ndim != 1:
            raise DenseError("amplitudes must be one-dimensional")
        _num_qubits(amps.size)
        if abs(np.linalg.norm(amps) - 1.0) > NORM_TOL:
            raise DenseError(f"state not normalized (norm {np.linalg.norm(amps)})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @classmethod
    def basis(cls, bits: str | int, n: int | None = None) -> DenseState:
        if isinstance(bits, str):
            n, bits = len(bits), int(bits, 2) if bits else 0
        vec = np.zeros(1 << n)
        vec[bits] = 1.0
        return cls(vec)

    @classmethod
    def from_unnormalized(cls, vec, complex_mode: bool = False) -> DenseState:
        vec = np.asarray(vec, dtype=complex if complex_mode else float)
        return cls(vec / np.linalg.norm(vec), complex_mode)

    def density(self) -> DenseDensity:
        if self.complex_mode:
            raise DenseError("density of a complex state is not a rebit density")
        return DenseDensity(np.outer(self.amplitudes, self.amplitudes))

    def tensor(self, other: DenseState) -> DenseState:
        return DenseState(np.kron(self.amplitudes, other.amplitudes), self.complex_mode or other.complex_mode)

    def to_json(self) -> str:
        if self.complex_mode:
            payload = {"n": self.n, "real": self.amplitudes.real.tolist(), "imag": self.amplitudes.imag.tolist()}
        else:
            payload = {"n": self.n, "amplitudes": self.amplitudes.tolist()}
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> DenseState:
        data = json.loads(text)
        if "amplitudes" in data:
            return cls(np.array(data["amplitudes"], dtype=float))
        return cls(np.array(data["real"]) + 1j * np.array(data["imag"]), complex_mode=True)


@dataclass(frozen=True)
class DenseDensity:
    matrix: np.ndarray
    checked: bool = field(default=True, compare=False)

    def __post_init__(self):
        m = np.array(self.matrix, copy=True)
        if np.iscomplexobj(m):
            if np.max(np.abs(m.imag), initial=0.0) > REAL_TOL:
                raise DenseError("density matrix is not real")
            m = m.real
        m = m.astype(float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DenseError("density matrix must be square")
        _num_qubits(m.shape[0])
        if np.max(np.abs(m - m.T), initial=0.0) > NORM_TOL:
            raise DenseError("density matrix is not symmetric")
        if self.checked:
            if abs(np.trace(m) - 1.0) > NORM_TOL:
                raise DenseError(f"trace {np.trace(m)} != 1")
            if np.linalg.eigvalsh(m).min() < PSD_TOL:
                raise DenseError("density matrix is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0].bit_length() - 1

    @classmethod
    def operator(cls, matrix) -> DenseDensity:
        """Symmetric real operator without the trace and positivity checks."""
        return cls(matrix, checked=False)

    @classmethod
    def maximally_mixed(cls, n: int) -> DenseDensity:
        return cls(np.eye(1 << n) / (1 << n))

    def tensor(self, other: DenseDensity) -> DenseDensity:
        return DenseDensity(np.kron(self.matrix, other.matrix), checked=self.checked and other.checked)

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "matrix": self.matrix.tolist()})

    @classmethod
    def from_json(cls, text: str) -> DenseDensity:
        data = json.loads(text)
        return cls(np.array(data["matrix"], dtype=float))


# ---------------------------------------------------------------------------
# Gates

GATE_KINDS = {"CNOT": 2, "CZ": 2, "H": 1, "H_ALL": 0, "X": 1, "Z": 1, "RZ": 1}
CSS_KINDS = {"CNOT", "H_ALL", "X", "Z"}


@dataclass(frozen=True)
class GateOp:
    kind: str
    qubits: tuple[int, ...] = ()
    theta: float = 0.0

    def __post_init__(self):
        kind = self.kind.upper()
        if kind == "HALL":
            kind = "H_ALL"
        if kind not in GATE_KINDS:
            raise DenseError(f"unknown gate {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != GATE_KINDS[kind]:
            raise DenseError(f"{kind} takes {GATE_KINDS[kind]} qubit indices")
        if len(set(self.qubits)) != len(self.qubits):
            raise DenseError(f"{kind} needs distinct qubits")

    @property
    def in_css_group(self) -> bool:
        return self.kind in CSS_KINDS

    @property
    def is_real(self) -> bool:
        if self.kind != "RZ":
            return True
        return bool(np.isclose(np.cos(self.theta) ** 2, 1.0, atol=1e-15))

    def matrix(self, n: int) -> np.ndarray:
        return gate_matrix(self, n)


_H = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)


def _embed(local: np.ndarray, target: int, n: int) -> np.ndarray:
    return np.kron(np.kron(np.eye(1 << target), local), np.eye(1 << (n - target - 1)))


def gate_matrix(g: GateOp, n: int) -> np.ndarray:
    if n > MAX_N:
        raise DenseError(f"dense oracle capped at n={MAX_N}")
    if any(not 0 <= q < n for q in g.qubits):
        raise DenseError(f"qubit index out of range in {g}")
    dim = 1 << n
    idx = np.arange(dim)

    def bit(q):
        return (idx >> (n - 1 - q)) & 1

    if g.kind == "H_ALL":
        out = np.ones((1, 1))
        for _ in range(n):
            out = np.kron(out, _H)
        return out
    if g.kind == "H":
        return _embed(_H, g.qubits[0], n)
    if g.kind == "X":
        return np.eye(dim)[idx ^ (1 << (n - 1 - g.qubits[0]))].T
    if g.kind == "Z":
        return np.diag(1.0 - 2.0 * bit(g.qubits[0]))
    if g.kind == "CNOT":
        c, t = g.qubits
        perm = idx ^ (bit(c) << (n - 1 - t))
        return np.eye(dim)[perm].T
    if g.kind == "CZ":
        a, b = g.qubits
        return np.diag(1.0 - 2.0 * (bit(a) & bit(b)))
    # RZ(theta) = diag(1, e^{i theta})
    phases = np.exp(1j * g.theta * bit(g.qubits[0]))
    if g.is_real:
        return np.diag(phases.real)
    return np.diag(phases)


def apply_gate(state: DenseState, g: GateOp) -> DenseState:
    if not state.complex_mode and not g.is_real:
        raise DenseError(f"{g.kind}({g.theta}) is not real; use complex_mode")
    return DenseState(gate_matrix(g, state.n) @ state.amplitudes, state.complex_mode)


def apply_gate_density(rho: DenseDensity, g: GateOp) -> DenseDensity:
    if not g.is_real:
        raise DenseError(f"{g.kind}({g.theta}) is not real")
    u = gate_matrix(g, rho.n)
    return DenseDensity(u @ rho.matrix @ u.T, checked=rho.checked)


def apply_circuit(state, gates: Sequence[GateOp]):
    for g in gates:
        state = apply_gate_density(state, g) if isinstance(state, DenseDensity) else apply_gate(state, g)
    return state


# ---------------------------------------------------------------------------
# Expectations and measurement


def expectation(rho: DenseDensity | DenseState, p: PauliOp) -> float:
    if rho.n != p.n:
        raise DenseError("size mismatch")
    mat = dense_matrix(p)
    if isinstance(rho, DenseState):
        amps = rho.amplitudes
        return float(np.real(np.vdot(amps, mat @ amps)))
    return float(np.trace(rho.matrix @ mat))


def _check_observable(p: PauliOp) -> np.ndarray:
    mat = dense_matrix(p)
    if not np.array_equal(mat, mat.T):
        raise DenseError(f"{p} is not Hermitian; cannot be measured")
    return mat


def pauli_branches(state: DenseState | DenseDensity, p: PauliOp) -> dict[int, tuple[float, object]]:
    """Both outcomes of measuring P: ``{s: (probability, post_state or None)}``."""
    mat = _check_observable(p)
    dim = mat.shape[0]
    out = {}
    for s in (1, -1):
        proj = (np.eye(dim) + s * mat) / 2
        if isinstance(state, DenseState):
            vec = proj @ state.amplitudes
            prob = float(np.real(np.vdot(vec, vec)))
            post = DenseState(vec / np.sqrt(prob), state.complex_mode) if prob > 1e-14 else None
        else:
            m = proj @ state.matrix @ proj
            prob = float(np.trace(m))
            post = DenseDensity(m / prob, checked=state.checked) if prob > 1e-14 else None
        out[s] = (prob, post)
    return out


def measure_pauli(state, p: PauliOp, rng: np.random.Generator | int | None = None, forced: int | None = None):
    """Born-rule measurement; returns ``(outcome, post_state)``."""
    branches = pauli_branches(state, p)
    if forced is None:
        rng = make_rng(rng)
        s = 1 if rng.random() < branches[1][0] else -1
    else:
        s = forced
    prob, post = branches[s]
    if post is None:
        raise DenseError(f"outcome {s} has probability {prob:.3g}")
    return s, post


def is_rebit(obj) -> bool:
    if isinstance(obj, DenseState):
        return bool(np.max(np.abs(np.imag(obj.amplitudes)), initial=0.0) < REAL_TOL)
    if isinstance(obj, DenseDensity):
        return True  # validated at construction
    m = np.asarray(obj)
    if m.ndim == 1:
        return bool(np.max(np.abs(np.imag(m)), initial=0.0) < REAL_TOL)
    if np.max(np.abs(np.imag(m)), initial=0.0) > REAL_TOL:
        return False
    m = np.real(m)
    return bool(
        np.allclose(m, m.T, atol=NORM_TOL)
        and abs(np.trace(m) - 1) < NORM_TOL
        and np.linalg.eigvalsh(m).min() > PSD_TOL
    )


def random_real_state(n: int, rng: np.random.Generator) -> DenseState:
    return DenseState.from_unnormalized(rng.standard_normal(1 << n))


def random_complex_state(n: int, rng: np.random.Generator) -> DenseState:
    vec = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return DenseState.from_unnormalized(vec, complex_mode=True)


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> DenseDensity:
    dim = 1 << n
    g = rng.standard_normal((dim, rank or dim))
    m = g @ g.T
    return DenseDensity(m / np.trace(m))
