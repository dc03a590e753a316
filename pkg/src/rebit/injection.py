"""Universal computation on rebits by state injection.

A complex n-qubit state is stored on n+1 rebits: the real part of each
amplitude sits on tracker value 0 and the imaginary part on tracker value 1.
Real operations act on the data rebits and commute with this encoding.
The Hadamard and the pi/8 phase gate are built from a restricted set of
primitives: CNOT, X, Z, simultaneous Hadamard, single-rebit X or Z
measurements, fresh |0> rebits, and consumption of the two magic ancillas.

Every primitive goes through ``Executor``, which logs it with the name of
the gadget that issued it, so a run can be audited afterwards.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dense import DenseError, DenseState, GateOp, apply_gate, make_rng

MAX_REBITS = 8
BRANCH_TOL = 1e-12

ALLOWED_PRIMITIVES = frozenset(
    {"CNOT", "X", "Z", "H_ALL", "MEASX", "MEASZ", "INJECT_A", "INJECT_B", "PREP0", "DISCARD", "RELABEL"}
)

_H = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)


class InjectionError(ValueError):
    pass


class WhitelistViolation(InjectionError):
    pass


class ZeroProbabilityBranch(InjectionError):
    pass


def ancilla(kind: str) -> DenseState:
    """The two magic ancillas on (data, tracker) resp. (rebit 1, rebit 2)."""
    kind = kind.upper()
    if kind == "A":
        c = np.cos(np.pi / 4)
        s = np.sin(np.pi / 4)
        return DenseState(np.array([1.0, 0.0, c, s]) / np.sqrt(2))
    if kind == "B":
        return DenseState(np.array([1.0, 1.0, 1.0, -1.0]) / 2)
    raise InjectionError(f"unknown ancilla {kind!r}")


# ---------------------------------------------------------------------------
# Encoding


@dataclass(frozen=True)
class EncodedState:
    state: DenseState
    data_count: int

    def __post_init__(self):
        if self.state.complex_mode:
            raise InjectionError("encoded states are real")
        if self.state.n != self.data_count + 1:
            raise InjectionError("encoded state needs exactly one tracker rebit")


def encode(psi: DenseState) -> EncodedState:
    amps = np.asarray(psi.amplitudes, dtype=complex)
    pairs = np.stack([amps.real, amps.imag], axis=1).reshape(-1)
    return EncodedState(DenseState(pairs), psi.n)


def decode(enc: EncodedState) -> DenseState:
    pairs = enc.state.amplitudes.reshape(-1, 2)
    return DenseState(pairs[:, 0] + 1j * pairs[:, 1], complex_mode=True)


def overlap(a: DenseState, b: DenseState) -> float:
    """``|<a|b>|``; equals 1 iff the states agree up to a global phase."""
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)))


# ---------------------------------------------------------------------------
# Register and primitives


@dataclass
class Executor:
    """Mutable rebit register driven only through whitelisted primitives.

    Measurement outcomes come from ``forced`` while it lasts, then from
    ``rng``; with ``rng=None`` the first possible outcome (0 before 1) is
    taken and the alternatives are remembered for branch enumeration.
    """

    rng: np.random.Generator | None = None
    forced: Sequence[int] = ()
    max_rebits: int = MAX_REBITS
    psi: np.ndarray = field(default_factory=lambda: np.ones(()))
    wires: list[str] = field(default_factory=list)
    log: list[dict] = field(default_factory=list)
    outcomes: list[int] = field(default_factory=list)
    alternatives: list[bool] = field(default_factory=list)
    probability: float = 1.0
    gadget: str = ""
    peak: int = 0
    _eigen: dict = field(default_factory=dict)
    _fresh: int = 0

    # --- bookkeeping -----------------------------------------------------
    def _record(self, op: str, wires: Sequence[str], **extra) -> None:
        if op not in ALLOWED_PRIMITIVES:
            raise WhitelistViolation(f"primitive {op!r} is not allowed")
        entry = {"op": op, "wires": list(wires), "gadget": self.gadget}
        entry.update(extra)
        self.log.append(entry)

    def fresh(self, prefix: str = "anc") -> str:
        self._fresh += 1
        return f"{prefix}{self._fresh}"

    def axis(self, wire: str) -> int:
        try:
            return self.wires.index(wire)
        except ValueError:
            raise InjectionError(f"no wire named {wire!r}") from None

    def _grow(self, local: np.ndarray, names: Sequence[str]) -> None:
        if len(self.wires) + len(names) > self.max_rebits:
            raise InjectionError(f"register would exceed {self.max_rebits} rebits")
        if set(names) & set(self.wires):
            raise InjectionError(f"wire names {names} already in use")
        self.psi = np.multiply.outer(self.psi, local.reshape((2,) * len(names)))
        self.wires.extend(names)
        self.peak = max(self.peak, len(self.wires))

    def load(self, vector: np.ndarray, names: Sequence[str]) -> None:
        """Set the initial register contents (not a primitive)."""
        self.psi = np.ones(())
        self.wires = []
        self._grow(np.asarray(vector, dtype=float), names)

    # --- primitives --------------------------------------------------------
    def prep0(self, name: str) -> None:
        self._record("PREP0", [name])
        self._grow(np.array([1.0, 0.0]), [name])

    def inject(self, kind: str, names: Sequence[str]) -> None:
        self._record(f"INJECT_{kind.upper()}", names)
        self._grow(ancilla(kind).amplitudes, names)

    def cnot(self, control: str, target: str) -> None:
        self._record("CNOT", [control, target])
        c, t = self.axis(control), self.axis(target)
        if c == t:
            raise InjectionError("CNOT needs two distinct wires")
        psi = self.psi.copy()
        sl = [slice(None)] * psi.ndim
        sl[c] = 1
        sub_axis = t - (t > c)
        psi[tuple(sl)] = np.flip(self.psi[tuple(sl)], axis=sub_axis)
        self.psi = psi

    def x(self, wire: str) -> None:
        self._record("X", [wire])
        self.psi = np.flip(self.psi, axis=self.axis(wire)).copy()

    def z(self, wire: str) -> None:
        self._record("Z", [wire])
        psi = self.psi.copy()
        sl = [slice(None)] * psi.ndim
        sl[self.axis(wire)] = 1
        psi[tuple(sl)] *= -1
        self.psi = psi

    def h_all(self) -> None:
        self._record("H_ALL", list(self.wires))
        psi = self.psi
        for ax in range(psi.ndim):
            psi = np.moveaxis(np.tensordot(_H, psi, axes=([1], [ax])), 0, ax)
        self.psi = psi

    def _choose(self, probs: np.ndarray) -> int:
        k = len(self.outcomes)
        possible = [m for m in (0, 1) if probs[m] > BRANCH_TOL]
        if k < len(self.forced):
            m = int(self.forced[k])
            if probs[m] <= BRANCH_TOL:
                raise ZeroProbabilityBranch(f"forced outcome {m} has probability {probs[m]:.3g}")
            alt = False
        elif self.rng is not None:
            m = int(self.rng.random() >= probs[0])
            alt = False
        else:
            m = possible[0]
            alt = len(possible) == 2
        self.outcomes.append(m)
        self.alternatives.append(alt)
        self.probability *= float(probs[m])
        return m

    def _measure(self, wire: str, basis: np.ndarray) -> int:
        ax = self.axis(wire)
        rotated = np.moveaxis(np.tensordot(basis.T, self.psi, axes=([1], [ax])), 0, ax)
        probs = np.array([np.sum(np.take(rotated, m, axis=ax) ** 2) for m in (0, 1)])
        probs = probs / probs.sum()
        m = self._choose(probs)
        keep = np.zeros(2)
        keep[m] = 1.0
        mask_shape = [1] * rotated.ndim
        mask_shape[ax] = 2
        rotated = rotated * keep.reshape(mask_shape)
        rotated /= np.sqrt(probs[m])
        self.psi = np.moveaxis(np.tensordot(basis, rotated, axes=([1], [ax])), 0, ax)
        self._eigen[wire] = basis[:, m]
        return m

    def measz(self, wire: str) -> int:
        m = self._measure(wire, np.eye(2))
        self._record("MEASZ", [wire], outcome=m)
        return m

    def measx(self, wire: str) -> int:
        m = self._measure(wire, _H)
        self._record("MEASX", [wire], outcome=m)
        return m

    def discard(self, wire: str) -> None:
        """Drop a rebit left in a known eigenstate by its last measurement."""
        if wire not in self._eigen:
            raise InjectionError(f"{wire!r} was not measured; cannot discard")
        self._record("DISCARD", [wire])
        ax = self.axis(wire)
        rest = np.tensordot(self._eigen.pop(wire), self.psi, axes=([0], [ax]))
        if abs(np.linalg.norm(rest) - 1.0) > 1e-9:
            raise InjectionError(f"{wire!r} is entangled with the register")
        self.psi = rest
        del self.wires[ax]

    def relabel(self, old: str, new: str) -> None:
        self._record("RELABEL", [old, new])
        if new in self.wires:
            raise InjectionError(f"wire {new!r} already exists")
        self.wires[self.axis(old)] = new
        self._eigen.pop(old, None)

    # --- views ---------------------------------------------------------------
    def vector(self, order: Sequence[str]) -> np.ndarray:
        if sorted(order) != sorted(self.wires):
            raise InjectionError(f"register holds {self.wires}, not {list(order)}")
        perm = [self.axis(w) for w in order]
        return np.transpose(self.psi, perm).reshape(-1)


DATA = "d{}"
TRACKER = "t"


def _data_wires(n: int) -> list[str]:
    return [DATA.format(i) for i in range(n)]


def _load(ex: Executor, enc: EncodedState) -> None:
    ex.load(enc.state.amplitudes, _data_wires(enc.data_count) + [TRACKER])


def _unload(ex: Executor, n: int) -> EncodedState:
    return EncodedState(DenseState(ex.vector(_data_wires(n) + [TRACKER])), n)


# ---------------------------------------------------------------------------
# Gadgets


def _hadamard(ex: Executor, i: int) -> None:
    """Teleport through |B> = (I x H)|Phi+>; the data moves onto the second ancilla rebit."""
    d = DATA.format(i)
    b1, b2 = ex.fresh("b"), ex.fresh("b")
    ex.inject("B", [b1, b2])
    ex.cnot(d, b1)
    m1 = ex.measx(d)
    m2 = ex.measz(b1)
    # b2 now holds Z^{m2} X^{m1} H psi
    if m2:
        ex.z(b2)
    if m1:
        ex.x(b2)
    ex.discard(d)
    ex.discard(b1)
    ex.relabel(b2, d)


def _tracker_cz(ex: Executor, r1: str, r2: str) -> tuple[str, str]:
    """CZ on two trackers by teleporting both into |B> = CZ|++>; returns the new wires."""
    b1, b2 = ex.fresh("b"), ex.fresh("b")
    ex.inject("B", [b1, b2])
    ex.cnot(b1, r1)
    m1 = ex.measz(r1)
    ex.cnot(b2, r2)
    m2 = ex.measz(r2)
    if m1:
        ex.x(b1)
        ex.z(b2)
    if m2:
        ex.x(b2)
        ex.z(b1)
    ex.discard(r1)
    ex.discard(r2)
    return b1, b2


def _merge(ex: Executor, r1: str, r2: str) -> tuple[str, int]:
    """Fuse two code blocks with trackers r1, r2 into one block.

    Returns the surviving tracker and a flag: 0 if the second block came
    through as itself, 1 if it came through complex-conjugated.
    """
    t1, t2 = _tracker_cz(ex, r1, r2)
    ex.cnot(t2, t1)
    conj = ex.measx(t2)
    ex.discard(t2)
    return t1, conj


def _phase_injection(ex: Executor, i: int, kind: str) -> int:
    """Merge an encoded phase ancilla, then consume it with CNOT + Z measurement.

    Returns 0 if the data received the phase, 1 if it received the inverse.
    """
    d = DATA.format(i)
    a, ra = ex.fresh("a"), ex.fresh("r")
    if kind == "A":
        ex.inject("A", [a, ra])
    else:  # encoded |+i>: Bell pair (|0>|R> + |1>|I>)/sqrt(2) on (a, ra)
        ex.prep0(a)
        if ex.measx(a):
            ex.z(a)
        ex.prep0(ra)
        ex.cnot(a, ra)
    tracker, conj = _merge(ex, TRACKER, ra)
    ex.relabel(tracker, TRACKER)
    ex.cnot(d, a)
    m = ex.measz(a)
    ex.discard(a)
    return m ^ conj


def _phase_s(ex: Executor, i: int) -> None:
    tag = ex.gadget
    ex.gadget = tag + "/S"
    if _phase_injection(ex, i, "S"):
        ex.z(DATA.format(i))  # Z S^dag = S
    ex.gadget = tag


def _phase_t(ex: Executor, i: int, dagger: bool = False) -> None:
    got_inverse = _phase_injection(ex, i, "A")
    if bool(got_inverse) != dagger:
        # T^dag -> T needs S; T -> T^dag needs S^dag = Z S
        _phase_s(ex, i)
        if dagger:
            ex.z(DATA.format(i))


LOGICAL_KINDS = {"H": 1, "T": 1, "TDG": 1, "CNOT": 2, "MEASZ": 1}


@dataclass(frozen=True)
class LogicalOp:
    kind: str
    qubits: tuple[int, ...]

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if kind not in LOGICAL_KINDS:
            raise InjectionError(f"unknown logical operation {self.kind!r}")
        if len(self.qubits) != LOGICAL_KINDS[kind]:
            raise InjectionError(f"{kind} takes {LOGICAL_KINDS[kind]} indices")
        if len(set(self.qubits)) != len(self.qubits):
            raise InjectionError(f"{kind} needs distinct qubits")

    def __str__(self) -> str:
        return " ".join([self.kind, *map(str, self.qubits)])


@dataclass(frozen=True)
class LogicalCircuit:
    data_count: int
    ops: tuple[LogicalOp, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        for op in self.ops:
            if any(not 0 <= q < self.data_count for q in op.qubits):
                raise InjectionError(f"index out of range in {op}")

    @classmethod
    def parse(cls, text: str, data_count: int | None = None) -> LogicalCircuit:
        ops = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            parts = raw.split("#", 1)[0].split()
            if not parts:
                continue
            try:
                ops.append(LogicalOp(parts[0], tuple(int(p) for p in parts[1:])))
            except ValueError as exc:
                raise InjectionError(f"line {lineno}: {exc}") from exc
        if data_count is None:
            data_count = 1 + max((q for op in ops for q in op.qubits), default=0)
        return cls(data_count, tuple(ops))

    def to_text(self) -> str:
        return "".join(f"{op}\n" for op in self.ops)


def apply_logical(ex: Executor, op: LogicalOp) -> int | None:
    """Run one logical operation on a register in canonical form."""
    ex.gadget = f"{op.kind}{list(op.qubits)}"
    if op.kind == "CNOT":
        ex.cnot(DATA.format(op.qubits[0]), DATA.format(op.qubits[1]))
        return None
    if op.kind == "MEASZ":
        return ex.measz(DATA.format(op.qubits[0]))
    if op.kind == "H":
        _hadamard(ex, op.qubits[0])
    elif op.kind == "T":
        _phase_t(ex, op.qubits[0])
    else:
        _phase_t(ex, op.qubits[0], dagger=True)
    return None


def gadget(
    kind: str | LogicalOp,
    enc: EncodedState,
    rng: np.random.Generator | int | None = None,
    qubits: Sequence[int] = (0,),
    forced: Sequence[int] = (),
) -> tuple[EncodedState, list[int], Executor]:
    """Apply one logical gate to an encoded state; returns (state, outcomes, executor)."""
    op = kind if isinstance(kind, LogicalOp) else LogicalOp(kind, tuple(qubits))
    ex = Executor(rng=None if rng is None else make_rng(rng), forced=forced)
    _load(ex, enc)
    apply_logical(ex, op)
    return _unload(ex, enc.data_count), list(ex.outcomes), ex


@dataclass(frozen=True)
class Branch:
    probability: float
    outcomes: tuple[int, ...]
    result: EncodedState
    log: tuple[dict, ...]


def enumerate_branches(run: Callable[[Executor], EncodedState]) -> list[Branch]:
    """All measurement branches of ``run`` by depth-first forcing of outcomes."""
    out = []
    stack: list[tuple[int, ...]] = [()]
    while stack:
        prefix = stack.pop()
        ex = Executor(rng=None, forced=prefix)
        try:
            result = run(ex)
        except ZeroProbabilityBranch:
            continue
        out.append(Branch(ex.probability, tuple(ex.outcomes), result, tuple(ex.log)))
        for k in range(len(prefix), len(ex.outcomes)):
            if ex.alternatives[k]:
                stack.append(tuple(ex.outcomes[:k]) + (1 - ex.outcomes[k],))
    out.sort(key=lambda b: b.outcomes)
    return out


def gadget_branches(kind: str | LogicalOp, enc: EncodedState, qubits: Sequence[int] = (0,)) -> list[Branch]:
    op = kind if isinstance(kind, LogicalOp) else LogicalOp(kind, tuple(qubits))

    def run(ex: Executor) -> EncodedState:
        _load(ex, enc)
        apply_logical(ex, op)
        return _unload(ex, enc.data_count)

    return enumerate_branches(run)


def audit_log(log: Sequence[dict]) -> list[str]:
    """Problems found in an execution log; empty means the run is clean."""
    problems = []
    for k, entry in enumerate(log):
        op = entry.get("op")
        if op not in ALLOWED_PRIMITIVES:
            problems.append(f"entry {k}: {op!r} is not a restricted primitive")
        elif op in ("MEASX", "MEASZ", "X", "Z", "PREP0", "DISCARD") and len(entry.get("wires", [])) != 1:
            problems.append(f"entry {k}: {op} must act on a single rebit")
        elif op == "CNOT" and len(set(entry.get("wires", []))) != 2:
            problems.append(f"entry {k}: CNOT needs two distinct rebits")
        elif op.startswith("INJECT") and len(entry.get("wires", [])) != 2:
            problems.append(f"entry {k}: ancillas occupy two rebits")
    return problems


# ---------------------------------------------------------------------------
# Reference evolution and encoded runs


def logical_gate(op: LogicalOp) -> GateOp:
    if op.kind == "H":
        return GateOp("H", op.qubits)
    if op.kind == "CNOT":
        return GateOp("CNOT", op.qubits)
    if op.kind == "T":
        return GateOp("RZ", op.qubits, np.pi / 4)
    if op.kind == "TDG":
        return GateOp("RZ", op.qubits, -np.pi / 4)
    raise InjectionError(f"{op.kind} is not a unitary")


def project_z(psi: DenseState, qubit: int, outcome: int) -> tuple[float, DenseState | None]:
    n = psi.n
    idx = np.arange(1 << n)
    keep = ((idx >> (n - 1 - qubit)) & 1) == outcome
    vec = np.where(keep, psi.amplitudes, 0)
    prob = float(np.vdot(vec, vec).real)
    if prob <= BRANCH_TOL:
        return prob, None
    return prob, DenseState(vec / np.sqrt(prob), complex_mode=True)


@dataclass(frozen=True)
class EncodedRun:
    final: DenseState
    logical_outcomes: tuple[int, ...]
    log: tuple[dict, ...]
    peak_rebits: int

    def log_json(self) -> str:
        return json.dumps(list(self.log))


def run_encoded(
    circuit: LogicalCircuit, psi: DenseState, seed: int | None = 0, forced: Sequence[int] = ()
) -> EncodedRun:
    """Execute a logical circuit on the encoded input and decode the result."""
    if psi.n != circuit.data_count:
        raise InjectionError("input size does not match the circuit")
    if not psi.complex_mode:
        psi = DenseState(psi.amplitudes, complex_mode=True)
    ex = Executor(rng=None if seed is None else make_rng(seed), forced=forced)
    _load(ex, encode(psi))
    logical = []
    for op in circuit.ops:
        m = apply_logical(ex, op)
        if m is not None:
            logical.append(m)
    final = decode(_unload(ex, circuit.data_count))
    return EncodedRun(final, tuple(logical), tuple(ex.log), ex.peak)


@dataclass(frozen=True)
class StepCheck:
    op: str
    branches: int
    total_probability: float
    min_overlap: float
    audit_problems: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return abs(self.total_probability - 1.0) < 1e-9 and self.min_overlap > 1 - 1e-9 and not self.audit_problems


def verify_circuit(
    circuit: LogicalCircuit, psi: DenseState, rng: np.random.Generator | int | None = 0
) -> list[StepCheck]:
    """Check every gadget of a circuit on all of its measurement branches.

    After each step the run continues on one branch picked by ``rng`` (all
    branches agree after correction, so the choice does not matter for
    unitary steps; for a logical Z measurement it picks the outcome).
    """
    rng = make_rng(rng)
    if not psi.complex_mode:
        psi = DenseState(psi.amplitudes, complex_mode=True)
    enc = encode(psi)
    reference = psi
    checks = []
    for op in circuit.ops:
        branches = gadget_branches(op, enc)
        total = sum(b.probability for b in branches)
        problems = []
        for b in branches:
            problems += audit_log(b.log)
        if op.kind == "MEASZ":
            worst = 1.0
            for b in branches:
                prob, expect = project_z(reference, op.qubits[0], b.outcomes[-1])
                if expect is None or abs(prob - b.probability) > 1e-9:
                    worst = 0.0
                    continue
                worst = min(worst, overlap(decode(b.result), expect))
            pick = branches[int(rng.choice(len(branches), p=[b.probability / total for b in branches]))]
            _, reference = project_z(reference, op.qubits[0], pick.outcomes[-1])
            enc = pick.result
        else:
            reference = apply_gate(reference, logical_gate(op))
            worst = min(overlap(decode(b.result), reference) for b in branches)
            enc = branches[int(rng.integers(len(branches)))].result
        checks.append(StepCheck(str(op), len(branches), total, worst, tuple(problems)))
    return checks


def random_logical_circuit(data_count: int, length: int, rng: np.random.Generator) -> LogicalCircuit:
    kinds = ["H", "T"] + (["CNOT"] if data_count > 1 else [])
    ops = []
    for _ in range(length):
        kind = str(rng.choice(kinds))
        if kind == "CNOT":
            i, j = rng.choice(data_count, size=2, replace=False)
            ops.append(LogicalOp(kind, (int(i), int(j))))
        else:
            ops.append(LogicalOp(kind, (int(rng.integers(data_count)),)))
    return LogicalCircuit(data_count, tuple(ops))
