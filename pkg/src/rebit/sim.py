"""Sampling simulator for CSS-preserving circuits on states with a nonnegative
Wigner function.

Each sample is a phase point.  Gates move it by their affine map; measuring
``T_a`` (a pure X or pure Z observable) reads ``s = (-1)^{[u,a]}`` and then
replaces u by ``u + a`` on a fair coin.  Samples are processed in fixed-size
batches with one independent Philox stream per batch, so the output depends
only on the seed and never on the thread count.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .css import AffineSymplectic, CSSCliffordGate, CSSError, css_gate, gate_to_affine
from .dense import DenseDensity, GateOp, apply_gate_density, make_rng, pauli_branches
from .gf2 import PhasePoint, str_to_bits
from .pauli import PauliOp, in_set_O
from .wigner import NONNEG_TOL, WignerTable, reconstruct, tensor_tables

BATCH_SIZE = 8192


class SimError(ValueError):
    pass


ONE_REBIT_TABLES = {
    "ZERO": WignerTable(1, [0.5, 0.0, 0.5, 0.0]),
    "ONE": WignerTable(1, [0.0, 0.5, 0.0, 0.5]),
    "PLUS": WignerTable(1, [0.5, 0.5, 0.0, 0.0]),
    "MINUS": WignerTable(1, [0.0, 0.0, 0.5, 0.5]),
    "MIXED": WignerTable(1, [0.25, 0.25, 0.25, 0.25]),
}
INIT_ALIASES = {"0": "ZERO", "1": "ONE", "+": "PLUS", "-": "MINUS", "M": "MIXED"}


@dataclass(frozen=True)
class Unitary:
    gate: CSSCliffordGate


@dataclass(frozen=True)
class Measure:
    observable: PhasePoint

    def __post_init__(self):
        if not in_set_O(self.observable):
            raise SimError(f"{PauliOp(self.observable)} is not a pure X or pure Z observable")
        if self.observable.index == 0:
            raise SimError("measuring the identity")


Step = Union[Unitary, Measure]


def _check_table(w: WignerTable) -> None:
    if w.values.min() < NONNEG_TOL:
        raise SimError("initial Wigner table has negative entries")
    if abs(w.total - 1.0) > 1e-10:
        raise SimError(f"initial Wigner table sums to {w.total}, not 1")


@dataclass(frozen=True)
class SimCircuit:
    n: int
    initial: tuple[WignerTable, ...] | WignerTable
    steps: tuple[Step, ...] = ()

    def __post_init__(self):
        init = self.initial
        if isinstance(init, WignerTable):
            if init.n != self.n:
                raise SimError("initial table size does not match n")
            _check_table(init)
        else:
            init = tuple(init)
            if len(init) != self.n or any(t.n != 1 for t in init):
                raise SimError("need one single-rebit table per rebit")
            for t in init:
                _check_table(t)
        object.__setattr__(self, "initial", init)
        steps = tuple(self.steps)
        for st in steps:
            if isinstance(st, Unitary):
                if any(not 0 <= q < self.n for q in st.gate.qubits):
                    raise SimError(f"gate index out of range: {st.gate}")
            elif isinstance(st, Measure):
                if st.observable.n != self.n:
                    raise SimError("measurement size mismatch")
            else:
                raise SimError(f"unknown step {st!r}")
        object.__setattr__(self, "steps", steps)

    @property
    def num_measurements(self) -> int:
        return sum(isinstance(s, Measure) for s in self.steps)

    def initial_table(self) -> WignerTable:
        if isinstance(self.initial, WignerTable):
            return self.initial
        out = self.initial[0]
        for t in self.initial[1:]:
            out = tensor_tables(out, t)
        return out

    @classmethod
    def parse(cls, text: str, base_dir: str | Path = ".") -> SimCircuit:
        return parse_circuit(text, base_dir)


def parse_circuit(text: str, base_dir: str | Path = ".") -> SimCircuit:
    """Parse the line-oriented circuit format (see README)."""
    initial = None
    n = None
    steps: list[Step] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        op, args = parts[0].upper(), parts[1:]
        try:
            if op == "INIT":
                if initial is not None:
                    raise SimError("INIT given twice")
                names = [INIT_ALIASES.get(a.upper(), a.upper()) for a in args]
                if len(args) == 1 and names[0] not in ONE_REBIT_TABLES:
                    initial = _load_table(Path(base_dir) / args[0])
                    n = initial.n
                else:
                    initial = tuple(ONE_REBIT_TABLES[a] for a in names)
                    n = len(initial)
                continue
            if n is None:
                raise SimError("INIT must come first")
            if op in ("HALL", "H_ALL"):
                _nargs(args, 0)
                steps.append(Unitary(css_gate("H_ALL")))
            elif op == "CNOT":
                _nargs(args, 2)
                steps.append(Unitary(css_gate("CNOT", int(args[0]), int(args[1]))))
            elif op in ("X", "Z"):
                _nargs(args, 1)
                steps.append(Unitary(css_gate(op, int(args[0]))))
            elif op in ("MEASX", "MEASZ"):
                _nargs(args, 1)
                if len(args[0]) != n:
                    raise SimError(f"mask {args[0]!r} must have {n} bits")
                mask = str_to_bits(args[0])
                point = PhasePoint(0, mask, n) if op == "MEASX" else PhasePoint(mask, 0, n)
                steps.append(Measure(point))
            else:
                raise SimError(f"unknown instruction {op!r}")
        except (SimError, CSSError, ValueError, KeyError) as exc:
            raise SimError(f"line {lineno}: {exc}") from exc
    if initial is None:
        raise SimError("circuit has no INIT line")
    return SimCircuit(n, initial, tuple(steps))


def _nargs(args, k):
    if len(args) != k:
        raise SimError(f"expected {k} arguments, got {len(args)}")


def _load_table(path: Path) -> WignerTable:
    text = path.read_text()
    if path.suffix.lower() == ".json":
        return WignerTable.from_json(text)
    return WignerTable.from_csv(text)


def format_circuit(circuit: SimCircuit) -> str:
    lines = []
    if isinstance(circuit.initial, WignerTable):
        raise SimError("explicit initial tables are written as separate files")
    tokens = []
    for t in circuit.initial:
        match = [k for k, v in ONE_REBIT_TABLES.items() if np.array_equal(v.values, t.values)]
        if not match:
            raise SimError("initial factor is not a named one-rebit table")
        tokens.append(match[0])
    lines.append("INIT " + " ".join(tokens))
    for st in circuit.steps:
        if isinstance(st, Unitary):
            g = st.gate
            lines.append("HALL" if g.kind == "H_ALL" else " ".join([g.kind, *map(str, g.qubits)]))
        else:
            p = st.observable
            if p.x:
                lines.append(f"MEASX {format(p.x, f'0{p.n}b')}")
            else:
                lines.append(f"MEASZ {format(p.z, f'0{p.n}b')}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Single-point primitives


def sample_initial(circuit: SimCircuit, rng: np.random.Generator, size: int | None = None):
    """Phase point(s) drawn from the initial table; product states factor-wise."""
    count = 1 if size is None else size
    n = circuit.n
    if isinstance(circuit.initial, WignerTable):
        probs = np.clip(circuit.initial.values, 0.0, None)
        pts = rng.choice(probs.size, size=count, p=probs / probs.sum())
    else:
        pts = np.zeros(count, dtype=np.int64)
        for i, t in enumerate(circuit.initial):
            probs = np.clip(t.values, 0.0, None)
            local = rng.choice(4, size=count, p=probs / probs.sum())
            z, x = local >> 1, local & 1
            shift = n - 1 - i
            pts |= (z << (n + shift)) | (x << shift)
    pts = np.asarray(pts, dtype=np.int64)
    return PhasePoint.from_index(int(pts[0]), n) if size is None else pts


def step_unitary(u: PhasePoint, gate: GateOp | AffineSymplectic) -> PhasePoint:
    affine = gate if isinstance(gate, AffineSymplectic) else gate_to_affine(gate, u.n)
    return affine(u)


def _sym_parity(points: np.ndarray, a: PhasePoint) -> np.ndarray:
    n = a.n
    mask = (1 << n) - 1
    return np.bitwise_count(((points >> n) & a.x) ^ (points & mask & a.z)) & 1


def step_measure(u: PhasePoint, a: PhasePoint, rng: np.random.Generator) -> tuple[int, PhasePoint]:
    if not in_set_O(a):
        raise SimError(f"{PauliOp(a)} is not a pure X or pure Z observable")
    s = -1 if ((u.z & a.x) ^ (a.z & u.x)).bit_count() & 1 else 1
    u_next = u + a if rng.random() < 0.5 else u
    return s, u_next


@dataclass(frozen=True)
class SampleTrace:
    seed: int
    points: tuple[PhasePoint, ...]
    outcomes: tuple[int, ...]


def trace(circuit: SimCircuit, seed: int) -> SampleTrace:
    """One sample followed step by step (points after every step)."""
    rng = make_rng(seed)
    u = sample_initial(circuit, rng)
    points, outcomes = [u], []
    for st in circuit.steps:
        if isinstance(st, Unitary):
            u = step_unitary(u, st.gate)
        else:
            s, u = step_measure(u, st.observable, rng)
            outcomes.append(s)
        points.append(u)
    return SampleTrace(seed, tuple(points), tuple(outcomes))


# ---------------------------------------------------------------------------
# Batched runs


@dataclass(frozen=True)
class SimResult:
    num_samples: int
    counts: dict[str, int] = field(default_factory=dict)

    def frequencies(self) -> dict[str, float]:
        return {k: v / self.num_samples for k, v in sorted(self.counts.items())}

    def to_csv(self) -> str:
        rows = ["outcome,count,frequency"]
        for k, v in sorted(self.counts.items()):
            rows.append(f"{k},{v},{v / self.num_samples!r}")
        return "\n".join(rows) + "\n"


def outcome_key(bits: Sequence[int]) -> str:
    """Outcome string, one character per measurement: '+' for +1, '-' for -1."""
    return "".join("-" if b else "+" for b in bits)


def _compile(circuit: SimCircuit):
    ops = []
    pending: list[GateOp] = []
    for st in circuit.steps:
        if isinstance(st, Unitary):
            pending.append(st.gate)
        else:
            if pending:
                ops.append(("U", gate_to_affine(pending, circuit.n)))
                pending = []
            ops.append(("M", st.observable))
    if pending:
        ops.append(("U", gate_to_affine(pending, circuit.n)))
    return ops


def _run_batch(circuit: SimCircuit, ops, seed_seq: np.random.SeedSequence, size: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(seed_seq))
    pts = sample_initial(circuit, rng, size)
    m = circuit.num_measurements
    codes = np.zeros(size, dtype=np.int64)
    k = 0
    for kind, payload in ops:
        if kind == "U":
            pts = payload.apply_indices(pts)
        else:
            s = _sym_parity(pts, payload)
            codes |= s.astype(np.int64) << (m - 1 - k)
            k += 1
            coin = rng.integers(0, 2, size=size, dtype=np.int64)
            pts = pts ^ (coin * payload.index)
    return codes


def run(circuit: SimCircuit, num_samples: int, seed: int, threads: int | None = None) -> SimResult:
    """Empirical distribution of measurement-outcome strings."""
    if num_samples <= 0:
        raise SimError("num_samples must be positive")
    threads = threads or int(os.environ.get("REBIT_THREADS", "1") or 1)
    ops = _compile(circuit)
    nbatch = -(-num_samples // BATCH_SIZE)
    seqs = np.random.SeedSequence(seed).spawn(nbatch)
    sizes = [min(BATCH_SIZE, num_samples - i * BATCH_SIZE) for i in range(nbatch)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda args: _run_batch(circuit, ops, *args), zip(seqs, sizes)))
    else:
        results = [_run_batch(circuit, ops, s, z) for s, z in zip(seqs, sizes)]
    m = circuit.num_measurements
    tally = np.bincount(np.concatenate(results), minlength=1 << m)
    counts = {}
    for code in np.nonzero(tally)[0]:
        counts[outcome_key((int(code) >> (m - 1 - j)) & 1 for j in range(m))] = int(tally[code])
    return SimResult(num_samples, counts)


# ---------------------------------------------------------------------------
# Table-level updates and the dense reference


def wigner_update_measurement(w: WignerTable, a: PhasePoint, s: int, normalize: bool = False) -> WignerTable:
    """``W'(u) = (W(u) + W(u+a)) / 2`` where ``(-1)^{[u,a]} = s``, zero elsewhere."""
    if not in_set_O(a):
        raise SimError(f"{PauliOp(a)} is not a pure X or pure Z observable")
    if s not in (1, -1):
        raise SimError("outcome must be +1 or -1")
    idx = np.arange(w.values.size, dtype=np.int64)
    keep = _sym_parity(idx, a) == (0 if s == 1 else 1)
    vals = np.where(keep, (w.values + w.values[idx ^ a.index]) / 2, 0.0)
    if normalize:
        prob = vals.sum()
        if prob <= 0:
            raise SimError(f"outcome {s} has probability zero")
        vals = vals / prob
    return WignerTable(w.n, vals)


def wigner_update_unitary(w: WignerTable, gate: GateOp | Sequence[GateOp]) -> WignerTable:
    affine = gate_to_affine(gate, w.n)
    idx = np.arange(w.values.size)
    out = np.empty_like(w.values)
    out[affine.apply_indices(idx)] = w.values
    return WignerTable(w.n, out)


def exact_distribution(circuit: SimCircuit) -> dict[str, float]:
    """Outcome distribution from the Wigner tables (exact, 4^n per step)."""
    branches = {"": circuit.initial_table()}
    for st in circuit.steps:
        if isinstance(st, Unitary):
            branches = {k: wigner_update_unitary(w, st.gate) for k, w in branches.items()}
        else:
            nxt = {}
            for k, w in branches.items():
                for s in (1, -1):
                    w2 = wigner_update_measurement(w, st.observable, s)
                    if w2.total > 1e-15:
                        nxt[k + outcome_key([s == -1])] = w2
            branches = nxt
    return {k: w.total for k, w in sorted(branches.items())}


def dense_distribution(circuit: SimCircuit) -> dict[str, float]:
    """Born-rule outcome distribution from the dense oracle."""
    rho = reconstruct(circuit.initial_table())
    rho = DenseDensity.operator(rho.matrix)
    branches = {"": (1.0, rho)}
    for st in circuit.steps:
        if isinstance(st, Unitary):
            branches = {k: (p, apply_gate_density(r, st.gate)) for k, (p, r) in branches.items()}
        else:
            nxt = {}
            obs = PauliOp(st.observable)
            for k, (p, r) in branches.items():
                for s, (q, post) in pauli_branches(r, obs).items():
                    if post is not None and p * q > 1e-15:
                        nxt[k + outcome_key([s == -1])] = (p * q, post)
            branches = nxt
    return {k: p for k, (p, _) in sorted(branches.items())}


def tv_distance(p: dict[str, float], q: dict[str, float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def random_circuit(
    n: int, num_steps: int, rng: np.random.Generator, max_measurements: int | None = None
) -> SimCircuit:
    """Random CSS circuit; once ``max_measurements`` is reached only gates are drawn."""
    names = list(ONE_REBIT_TABLES)
    init = tuple(ONE_REBIT_TABLES[names[i]] for i in rng.integers(len(names), size=n))
    steps: list[Step] = []
    for _ in range(num_steps):
        r = rng.random()
        measured = sum(isinstance(st, Measure) for st in steps)
        if r < 0.55 or (max_measurements is not None and measured >= max_measurements):
            kind = rng.choice(["CNOT", "H_ALL", "X", "Z"], p=[0.55, 0.15, 0.15, 0.15]) if n > 1 else rng.choice(
                ["H_ALL", "X", "Z"]
            )
            if kind == "CNOT":
                i, j = rng.choice(n, size=2, replace=False)
                steps.append(Unitary(css_gate("CNOT", int(i), int(j))))
            elif kind == "H_ALL":
                steps.append(Unitary(css_gate("H_ALL")))
            else:
                steps.append(Unitary(css_gate(str(kind), int(rng.integers(n)))))
        else:
            mask = int(rng.integers(1, 1 << n))
            point = PhasePoint(0, mask, n) if rng.random() < 0.5 else PhasePoint(mask, 0, n)
            steps.append(Measure(point))
    return SimCircuit(n, init, tuple(steps))
