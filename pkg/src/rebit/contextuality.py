"""Contextuality: value assignments, witness functions, the Wigner-based
classifier and witness pullback through CSS-preserving circuits.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import gf2
from .css import AffineSymplectic, StabilizerGroup, gate_to_affine
from .dense import DenseDensity, DenseState, GateOp
from .gf2 import GF2Subspace, PhasePoint, fwht, span_elements, swap_halves, sym_inner, sym_inner_int
from .pauli import ObservableSet, PauliOp, dense_matrix, format_label, in_set_A, in_set_O, is_jointly_measurable, pauli_product
from .wigner import NONNEG_TOL, WignerTable, wigner_of

CONTEXTUAL_TOL = -1e-9
ROUTE_TOL = 1e-9


class ContextualityError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Witnesses


def conjugate_basis(basis: Sequence[PhasePoint]) -> list[PhasePoint]:
    """Points ``b(j)`` with ``[a(i), b(j)] = delta_ij``; minimal-integer solutions."""
    if not basis:
        return []
    n = basis[0].n
    idx = [a.index for a in basis]
    if gf2.rank(idx) != len(idx):
        raise ContextualityError("basis is linearly dependent")
    if any(sym_inner(a, b) for a, b in itertools.combinations(basis, 2)):
        raise ContextualityError("basis is not isotropic")
    rows = [swap_halves(i, n) for i in idx]
    out = []
    for j in range(len(basis)):
        rhs = [int(i == j) for i in range(len(basis))]
        sol = gf2.solve(rows, rhs, 2 * n)
        if sol is None:  # cannot happen for independent rows
            raise ContextualityError("no dual vector exists")
        out.append(PhasePoint.from_index(sol, n))
    return out


@dataclass(frozen=True)
class WitnessSpec:
    basis: tuple[PhasePoint, ...]
    conjugate: tuple[PhasePoint, ...]

    def __post_init__(self):
        basis, conj = tuple(self.basis), tuple(self.conjugate)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "conjugate", conj)
        if len(basis) != len(conj):
            raise ContextualityError("basis and conjugate basis differ in length")
        if len({p.n for p in basis + conj}) > 1:
            raise ContextualityError("mixed sizes")
        if not all(in_set_A(a) for a in basis):
            raise ContextualityError("witness basis must lie in the set A")
        if gf2.rank(a.index for a in basis) != len(basis):
            raise ContextualityError("basis is linearly dependent")
        for a, b in itertools.combinations(basis, 2):
            if sym_inner(a, b):
                raise ContextualityError("basis is not isotropic")
        for i, a in enumerate(basis):
            for j, b in enumerate(conj):
                if sym_inner(a, b) != (i == j):
                    raise ContextualityError("conjugate basis fails the duality relation")

    @classmethod
    def from_basis(cls, basis: Sequence[PhasePoint]) -> WitnessSpec:
        return cls(tuple(basis), tuple(conjugate_basis(basis)))

    @classmethod
    def from_labels(cls, labels: Sequence[str] | str) -> WitnessSpec:
        if isinstance(labels, str):
            labels = [s for s in labels.split(",") if s.strip()]
        return cls.from_basis([PauliOp.from_str(s).point for s in labels])

    @property
    def m(self) -> int:
        return len(self.basis)

    @property
    def n(self) -> int:
        return self.basis[0].n

    def subspace(self) -> GF2Subspace:
        return GF2Subspace.span((a.index for a in self.basis), 2 * self.n)

    def label(self, z: Sequence[int]) -> int:
        out = 0
        for zi, a in zip(z, self.basis):
            if zi:
                out ^= a.index
        return out

    def eta_bar(self, x: Sequence[int]) -> int:
        out = 0
        for xi, b in zip(x, self.conjugate):
            if xi:
                out ^= b.index
        return out


def _bits(x, m: int) -> tuple[int, ...]:
    if isinstance(x, str):
        x = [int(c) for c in x]
    x = tuple(int(v) & 1 for v in x)
    if len(x) != m:
        raise ContextualityError(f"witness argument needs {m} bits")
    return x


def witness_value_dense(rho: DenseDensity | DenseState, spec: WitnessSpec, x) -> float:
    """``sum_z prod_i (-1)^{z_i x_i} <T_{sum z_i a(i)}>``."""
    x = _bits(x, spec.m)
    mat = rho.matrix if isinstance(rho, DenseDensity) else np.outer(rho.amplitudes, rho.amplitudes)
    total = 0.0
    for z in itertools.product((0, 1), repeat=spec.m):
        sign = -1.0 if sum(a & b for a, b in zip(z, x)) % 2 else 1.0
        op = PauliOp(PhasePoint.from_index(spec.label(z), spec.n))
        total += sign * float(np.trace(dense_matrix(op) @ mat))
    return total


def witness_value_wigner(w: WignerTable, spec: WitnessSpec, x) -> float:
    """``2^m sum_{v in U^perp} W(v + eta_bar(x))``."""
    x = _bits(x, spec.m)
    perp = spec.subspace().orthogonal_complement("symplectic")
    eta = spec.eta_bar(x)
    pts = np.array(perp.elements(), dtype=np.int64) ^ eta
    return float((1 << spec.m) * w.values[pts].sum())


def witness_value(rho: DenseDensity | DenseState, spec: WitnessSpec, x) -> float:
    """Witness value; both evaluation routes are computed and must agree."""
    dense = witness_value_dense(rho, spec, x)
    via_w = witness_value_wigner(wigner_of(rho), spec, x)
    if abs(dense - via_w) > ROUTE_TOL:
        raise ContextualityError(f"witness routes disagree: {dense} vs {via_w}")
    return dense


# ---------------------------------------------------------------------------
# Classifier


class Verdict(str, Enum):
    NONCONTEXTUAL = "NONCONTEXTUAL"
    CONTEXTUAL = "CONTEXTUAL"
    INDETERMINATE = "INDETERMINATE"


@dataclass(frozen=True)
class Classification:
    verdict: Verdict
    table: WignerTable
    subspace: GF2Subspace | None = None
    nu: PhasePoint | None = None
    coset_sum: float | None = None
    min_value: float = 0.0
    notes: tuple[str, ...] = field(default=())

    def recheck(self) -> bool:
        """Re-evaluate the certificate from scratch."""
        if self.verdict == Verdict.NONCONTEXTUAL:
            return bool(self.table.values.min() >= NONNEG_TOL)
        if self.verdict == Verdict.CONTEXTUAL:
            return coset_sum(self.table, self.subspace, self.nu) < CONTEXTUAL_TOL
        return bool(self.table.values.min() < NONNEG_TOL)

    def as_dict(self) -> dict:
        n = self.table.n
        out = {"verdict": self.verdict.value, "min_value": self.min_value}
        if self.verdict == Verdict.CONTEXTUAL:
            out["certificate"] = {
                "subspace": [format_label(PhasePoint.from_index(b, n)) for b in self.subspace.basis],
                "subspace_bits": [gf2.bits_to_str(b, 2 * n) for b in self.subspace.basis],
                "nu": {"u_Z": gf2.bits_to_str(self.nu.z, n), "u_X": gf2.bits_to_str(self.nu.x, n)},
                "coset_sum": self.coset_sum,
            }
        elif self.verdict == Verdict.NONCONTEXTUAL:
            out["certificate"] = {"wigner": self.table.values.tolist()}
        if self.notes:
            out["notes"] = list(self.notes)
        return out


def coset_sum(w: WignerTable, u: GF2Subspace, nu: PhasePoint) -> float:
    pts = np.array(u.elements(), dtype=np.int64) ^ nu.index
    return float(w.values[pts].sum())


@lru_cache(maxsize=None)
def _lagrangian_tables(n: int):
    """For each Lagrangian U: its elements in coordinate order and the conjugate basis."""
    lags = gf2.enumerate_maximal_isotropic(n)
    elems = np.array([span_elements(u.basis) for u in lags], dtype=np.int64)
    elems.setflags(write=False)
    return lags, elems


def _conjugate_of_subspace(u: GF2Subspace, n: int) -> list[int]:
    rows = [swap_halves(b, n) for b in u.basis]
    return [gf2.solve(rows, [int(i == j) for i in range(len(rows))], 2 * n) for j in range(len(rows))]


def coset_sums(w: WignerTable) -> np.ndarray:
    """``S[U, x] = sum_{v in U} W(v + nu_U(x))`` for every Lagrangian U.

    ``nu_U(x) = sum_i x_i b_i`` with b the dual of U's canonical basis.  Uses
    ``S = 2^-n WHT(Wh restricted to U)`` where Wh is the symplectic Fourier
    transform of W.
    """
    n = w.n
    _, elems = _lagrangian_tables(n)
    return fwht(symplectic_fourier(w)[elems]) / (1 << n)


def symplectic_fourier(w: WignerTable) -> np.ndarray:
    """``Wh(a) = sum_u (-1)^{[u,a]} W(u)`` indexed by a = (a_Z << n) | a_X."""
    grid = w.grid  # [u_Z, u_X]; [u,a] = u_Z.a_X + u_X.a_Z
    out = fwht(fwht(grid).T)  # [a_Z, a_X]
    return out.reshape(-1)


def _nu_for(u: GF2Subspace, x: int, n: int) -> int:
    conj = _conjugate_of_subspace(u, n)
    k = len(conj)
    nu = 0
    for i, b in enumerate(conj):
        if (x >> (k - 1 - i)) & 1:
            nu ^= b
    return u.coset_rep(nu)


def classify(rho_or_table, cap: int = gf2.LAGRANGIAN_CAP) -> Classification:
    w = wigner_of(rho_or_table)
    n = w.n
    if n > cap:
        raise ContextualityError(f"classifier capped at n={cap}")
    mn = float(w.values.min())
    if mn >= NONNEG_TOL:
        return Classification(Verdict.NONCONTEXTUAL, w, min_value=mn)
    sums = coset_sums(w)
    lags, _ = _lagrangian_tables(n)
    lowest = float(sums.min())
    if lowest >= CONTEXTUAL_TOL:
        return Classification(Verdict.INDETERMINATE, w, min_value=mn)
    # strongest violation; ties go to the first subspace in canonical order
    hits = np.argwhere(sums <= lowest + 1e-12)
    k = int(hits[0, 0])
    u = lags[k]
    candidates = sorted((_nu_for(u, int(x), n), float(sums[k, x])) for x in hits[hits[:, 0] == k, 1])
    nu, value = candidates[0]
    return Classification(Verdict.CONTEXTUAL, w, u, PhasePoint.from_index(nu, n), value, mn)


def classify_stabilizer_diagonal(rho: DenseDensity, group: StabilizerGroup, atol: float = 1e-10) -> Classification:
    """Classification for states diagonal in a real stabilizer eigenbasis.

    Such a W is constant on cosets of the stabilizer's label space U, so the
    coset sum over U at the most negative point is ``2^n min W``.
    """
    if group.rank != group.n or group.n != rho.n:
        raise ContextualityError("need a maximal stabilizer group on the same rebits")
    for g in group.generators:
        t = dense_matrix(g)
        if np.max(np.abs(t @ rho.matrix @ t.T - rho.matrix)) > atol:
            raise ContextualityError(f"state is not diagonal in the eigenbasis of {g}")
    w = wigner_of(rho)
    mn = float(w.values.min())
    if mn >= NONNEG_TOL:
        return Classification(Verdict.NONCONTEXTUAL, w, min_value=mn)
    u = group.label_space()
    nu = u.coset_rep(int(np.argmin(w.values)))
    value = coset_sum(w, u, PhasePoint.from_index(nu, w.n))
    return Classification(Verdict.CONTEXTUAL, w, u, PhasePoint.from_index(nu, w.n), value, mn)


# ---------------------------------------------------------------------------
# Parameter sweeps


@dataclass(frozen=True)
class SweepRow:
    params: tuple[float, float]
    physical: bool
    min_w: float
    verdict: Verdict


def sweep_linear_family(base: WignerTable, directions: Sequence[WignerTable], grid: np.ndarray, physical) -> list[SweepRow]:
    """Classify ``W = base + sum_k p_k dir_k`` at every parameter row of ``grid``.

    Wigner tables and coset sums are linear in the parameters, so the whole
    sweep is two matrix products.
    """
    n = base.n
    tables = np.stack([base.values] + [d.values for d in directions])
    sums = np.stack([coset_sums(WignerTable(n, t)).reshape(-1) for t in tables])
    coeffs = np.column_stack([np.ones(len(grid)), grid])
    w_vals = coeffs @ tables
    s_vals = coeffs @ sums
    min_w = w_vals.min(axis=1)
    min_s = s_vals.min(axis=1)
    rows = []
    for p, mw, ms in zip(grid, min_w, min_s):
        if mw >= NONNEG_TOL:
            verdict = Verdict.NONCONTEXTUAL
        elif ms < CONTEXTUAL_TOL:
            verdict = Verdict.CONTEXTUAL
        else:
            verdict = Verdict.INDETERMINATE
        rows.append(SweepRow((float(p[0]), float(p[1])), bool(physical(*p)), float(mw), verdict))
    return rows


def sweep(family: str, resolution: int = 201, lo: float = -1.0, hi: float = 1.0) -> list[SweepRow]:
    from .wigner import one_rebit_family, two_rebit_family, wigner_of_operator

    if not 2 <= resolution <= 2001:
        raise ContextualityError("resolution must be in [2, 2001]")
    axis = np.linspace(lo, hi, resolution)
    grid = np.array([(p, q) for p in axis for q in axis])
    if family == "one-rebit-xz":
        make = lambda p, q: wigner_of_operator(one_rebit_family(p, q, checked=False).matrix)
        physical = lambda x, z: x * x + z * z <= 1 + 1e-12
    elif family == "two-rebit-ab":
        make = lambda p, q: wigner_of_operator(two_rebit_family(p, q, checked=False).matrix)
        physical = lambda a, b: abs(a) <= 1 + 1e-12 and abs(b) <= 1 + 1e-12
    else:
        raise ContextualityError(f"unknown family {family!r}")
    base = make(0.0, 0.0)
    d1 = WignerTable(base.n, make(1.0, 0.0).values - base.values)
    d2 = WignerTable(base.n, make(0.0, 1.0).values - base.values)
    if family == "two-rebit-ab":
        # (I + aXZ)(I + bZX)/4 has a bilinear ab term
        d12 = WignerTable(base.n, make(1.0, 1.0).values - base.values - d1.values - d2.values)
        grid3 = np.column_stack([grid, grid[:, 0] * grid[:, 1]])
        rows = sweep_linear_family(base, [d1, d2, d12], grid3, lambda a, b, _ab: physical(a, b))
        return [SweepRow(r.params[:2], r.physical, r.min_w, r.verdict) for r in rows]
    return sweep_linear_family(base, [d1, d2], grid, physical)


# ---------------------------------------------------------------------------
# Hidden-variable model


def value_assignment(u: PhasePoint, a: PhasePoint) -> int:
    """``lambda_u(T_a) = (-1)^{[u,a]}``."""
    return -1 if sym_inner(u, a) else 1


def hvm_predict(w: WignerTable, observables: ObservableSet) -> dict[str, float]:
    """Outcome distribution of the Wigner-function hidden-variable model."""
    if w.values.min() < NONNEG_TOL:
        raise ContextualityError("the hidden-variable model needs a nonnegative Wigner function")
    if not is_jointly_measurable(observables):
        raise ContextualityError("observables are not jointly measurable")
    n = w.n
    idx = np.arange(w.values.size, dtype=np.int64)
    mask = (1 << n) - 1
    code = np.zeros_like(idx)
    m = len(observables.elements)
    for i, p in enumerate(observables.elements):
        a = p.point
        bit = np.bitwise_count(((idx >> n) & a.x) ^ (idx & mask & a.z)) & 1
        code |= bit << (m - 1 - i)
    probs = np.bincount(code, weights=w.values, minlength=1 << m)
    return {_outcome(c, m): float(probs[c]) for c in range(1 << m)}


def born_predict(rho: DenseDensity, observables: ObservableSet) -> dict[str, float]:
    m = len(observables.elements)
    dim = 1 << rho.n
    out = {}
    mats = [dense_matrix(p) for p in observables.elements]
    for c in range(1 << m):
        proj = np.eye(dim)
        for i, t in enumerate(mats):
            s = -1 if (c >> (m - 1 - i)) & 1 else 1
            proj = proj @ (np.eye(dim) + s * t) / 2
        out[_outcome(c, m)] = float(np.trace(proj @ rho.matrix))
    return out


def _outcome(code: int, m: int) -> str:
    return "".join("-" if (code >> (m - 1 - i)) & 1 else "+" for i in range(m))


ROTATED_MERMIN_SQUARE = (
    ("+XI", "+IX", "+XX"),
    ("+IZ", "+ZI", "+ZZ"),
    ("+XZ", "+ZX", "-YY"),
)


@dataclass(frozen=True)
class LineCheck:
    labels: tuple[str, ...]
    jointly_measurable: bool
    product_sign: int
    all_plus_consistent: bool


@dataclass(frozen=True)
class ConsistencyReport:
    n: int
    assignments_checked: int
    constraints_checked: int
    violations: int
    mermin_lines: tuple[LineCheck, ...]

    @property
    def ok(self) -> bool:
        excluded = [ln for ln in self.mermin_lines if not ln.jointly_measurable]
        kept = [ln for ln in self.mermin_lines if ln.jointly_measurable]
        mermin_ok = not self.mermin_lines or (
            all(ln.all_plus_consistent for ln in kept) and any(not ln.all_plus_consistent for ln in excluded)
        )
        return self.violations == 0 and mermin_ok

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "assignments_checked": self.assignments_checked,
            "constraints_checked": self.constraints_checked,
            "violations": self.violations,
            "mermin_lines": [
                {
                    "labels": list(ln.labels),
                    "jointly_measurable": ln.jointly_measurable,
                    "product_sign": ln.product_sign,
                    "all_plus_consistent": ln.all_plus_consistent,
                }
                for ln in self.mermin_lines
            ],
            "ok": self.ok,
        }


def mermin_lines() -> list[tuple[str, ...]]:
    rows = [tuple(r) for r in ROTATED_MERMIN_SQUARE]
    cols = [tuple(r[j] for r in ROTATED_MERMIN_SQUARE) for j in range(3)]
    return rows + cols


def check_line(labels: Sequence[str], u: PhasePoint | None = None) -> LineCheck:
    ops = [PauliOp.from_str(s) for s in labels]
    n = ops[0].n
    u = u or PhasePoint(0, 0, n)
    prod = ops[0]
    for p in ops[1:]:
        prod = pauli_product(prod, p)
    if prod.point.index != 0:
        raise ContextualityError("line operators do not multiply to +-I")
    unsigned = [PauliOp(p.point) for p in ops]
    measurable = is_jointly_measurable(unsigned)
    predicted = 1
    for p in ops:
        predicted *= p.sign * value_assignment(u, p.point)
    return LineCheck(tuple(labels), measurable, prod.sign, predicted == prod.sign)


def hvm_consistency_audit(n: int) -> ConsistencyReport:
    """Every ``lambda_u`` against every in-context product rule on the set A."""
    if n > 3:
        raise ContextualityError("consistency audit capped at n=3")
    from .pauli import set_A_indices

    pts = set_A_indices(n).astype(np.int64)
    mask = (1 << n) - 1
    az, ax = pts >> n, pts & mask
    # ordered pairs (a, b) with T_a T_b = T_{a+b}
    ok_pair = (np.bitwise_count(ax[:, None] & az[None, :]) & 1) == 0
    ok_pair &= ok_pair.T
    ia, ib = np.nonzero(ok_pair)
    a, b = pts[ia], pts[ib]
    s = a ^ b
    us = np.arange(1 << (2 * n), dtype=np.int64)[:, None]

    def lam(v):
        return np.bitwise_count(((us >> n) & (v & mask)) ^ (us & mask & (v >> n))) & 1

    violations = int(np.count_nonzero(lam(s) != (lam(a) ^ lam(b))))
    lines = tuple(check_line(ln) for ln in mermin_lines()) if n == 2 else ()
    return ConsistencyReport(n, 1 << (2 * n), int(a.size) * (1 << (2 * n)), violations, lines)


# ---------------------------------------------------------------------------
# Witness pullback


@dataclass(frozen=True)
class Rejected:
    reason: str


@dataclass(frozen=True)
class MeasureStep:
    observable: PhasePoint

    def __post_init__(self):
        if not in_set_O(self.observable):
            raise ContextualityError("measured observable must be pure X or pure Z")


def witness_pullback(spec: WitnessSpec, x, step) -> tuple[WitnessSpec, tuple[int, ...]] | Rejected:
    """Witness on the state before ``step`` with the same value.

    For a unitary g with affine map (F, t): ``a' = F^-1 a``, ``b' = F^-1 b``,
    ``x'_i = x_i + [t, a(i)]``.  A measurement commuting with the whole of U
    leaves the witness unchanged (the value is that of the outcome-averaged
    state).  An anticommuting measurement is rejected.
    """
    x = _bits(x, spec.m)
    n = spec.n
    if isinstance(step, MeasureStep):
        c = step.observable
        if c.n != n:
            raise ContextualityError("size mismatch")
        if all(sym_inner(a, c) == 0 for a in spec.basis):
            return spec, x
        return Rejected("measured observable anticommutes with the witness subspace")
    if isinstance(step, GateOp):
        affine = gate_to_affine(step, n)
    elif isinstance(step, AffineSymplectic):
        affine = step
    elif isinstance(step, (list, tuple)) and all(isinstance(g, GateOp) for g in step):
        affine = gate_to_affine(list(step), n)
    else:
        raise ContextualityError(f"malformed step {step!r}")
    inv = affine.inverse()
    t = affine.shift.index
    basis = tuple(PhasePoint.from_index(inv.apply_linear(a.index), n) for a in spec.basis)
    conj = tuple(PhasePoint.from_index(inv.apply_linear(b.index), n) for b in spec.conjugate)
    x_new = tuple(xi ^ sym_inner_int(t, a.index, n) for xi, a in zip(x, spec.basis))
    return WitnessSpec(basis, conj), x_new
