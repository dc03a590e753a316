"""CSS stabilizer groups, real stabilizer states, the CSS-preserving gate
group and its affine symplectic action on phase space.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import gf2
from .dense import CSS_KINDS, DenseDensity, DenseError, DenseState, GateOp, apply_gate_density, make_rng
from .gf2 import GF2Subspace, PhasePoint, dot, rref, solve
from .pauli import PauliOp, commutes, dense_matrix, in_set_A, parse_pauli, pauli_product
from .wigner import NONNEG_TOL, WignerTable, negativity, wigner_of, wigner_of_density, wigner_of_pure_fast


class CSSError(ValueError):
    pass


def _sign_bit(sign: int) -> int:
    return 0 if sign == 1 else 1


# ---------------------------------------------------------------------------
# CSS groups


@dataclass(frozen=True)
class CSSGroup:
    """Generators ``alpha_i Z(a_i)`` and ``beta_j X(b_j)``."""

    n: int
    z_rows: tuple[int, ...] = ()
    x_rows: tuple[int, ...] = ()
    z_signs: tuple[int, ...] | None = None
    x_signs: tuple[int, ...] | None = None

    def __post_init__(self):
        z_signs = tuple(self.z_signs) if self.z_signs is not None else (1,) * len(self.z_rows)
        x_signs = tuple(self.x_signs) if self.x_signs is not None else (1,) * len(self.x_rows)
        object.__setattr__(self, "z_rows", tuple(self.z_rows))
        object.__setattr__(self, "x_rows", tuple(self.x_rows))
        object.__setattr__(self, "z_signs", z_signs)
        object.__setattr__(self, "x_signs", x_signs)
        if len(z_signs) != len(self.z_rows) or len(x_signs) != len(self.x_rows):
            raise CSSError("one sign per generator")
        if any(s not in (1, -1) for s in z_signs + x_signs):
            raise CSSError("signs must be +1 or -1")
        if any(r <= 0 or r >> self.n for r in self.z_rows + self.x_rows):
            raise CSSError("generator rows must be nonzero n-bit masks")
        if gf2.rank(self.z_rows) != len(self.z_rows) or gf2.rank(self.x_rows) != len(self.x_rows):
            raise CSSError("generators are not independent")
        if any(dot(a, b) for a in self.z_rows for b in self.x_rows):
            raise CSSError("Z and X generators do not commute")

    @property
    def is_full_rank(self) -> bool:
        return len(self.z_rows) + len(self.x_rows) == self.n

    def generators(self) -> list[PauliOp]:
        return [PauliOp.z_type(r, self.n, s) for r, s in zip(self.z_rows, self.z_signs)] + [
            PauliOp.x_type(r, self.n, s) for r, s in zip(self.x_rows, self.x_signs)
        ]

    def stabilizer_group(self) -> StabilizerGroup:
        return StabilizerGroup(tuple(self.generators()))

    @classmethod
    def from_stabilizer(cls, group: StabilizerGroup) -> CSSGroup:
        """Split a CSS stabilizer group into pure-Z and pure-X generators."""
        if not is_css(group):
            raise CSSError("group is not CSS")
        n = group.n
        elems = group.elements()
        z_basis = rref(p.point.z for p in elems if p.point.x == 0)
        x_basis = rref(p.point.x for p in elems if p.point.z == 0)
        lookup = {p.point.index: p.sign for p in elems}
        return cls(
            n,
            z_basis,
            x_basis,
            tuple(lookup[z << n] for z in z_basis),
            tuple(lookup[x] for x in x_basis),
        )


def css_state(group: CSSGroup) -> DenseState:
    """The unique joint +1 eigenstate of a full-rank CSS group."""
    if not group.is_full_rank:
        raise CSSError("css_state needs n independent generators")
    n = group.n
    x0 = solve(group.z_rows, [_sign_bit(s) for s in group.z_signs], n)
    if x0 is None:
        raise CSSError("inconsistent Z signs")
    amps = np.zeros(1 << n)
    k = len(group.x_rows)
    for c in range(1 << k):
        x, sign = x0, 1
        for j in range(k):
            if (c >> j) & 1:
                x ^= group.x_rows[j]
                sign *= group.x_signs[j]
        amps[x] = sign
    return DenseState.from_unnormalized(amps)


def wigner_css_closed_form(group: CSSGroup) -> tuple[PhasePoint, GF2Subspace]:
    """Support coset ``t + V_S`` of the (uniform, value 2^-n) Wigner function."""
    if not group.is_full_rank:
        raise CSSError("closed form needs a full-rank group")
    n = group.n
    span_x = GF2Subspace.span(group.x_rows, n)
    perp = span_x.orthogonal_complement()
    v_s = GF2Subspace.span([z << n for z in perp.basis] + list(span_x.basis), 2 * n)
    t_x = solve(group.z_rows, [_sign_bit(s) for s in group.z_signs], n)
    t_z = solve(group.x_rows, [_sign_bit(s) for s in group.x_signs], n)
    if t_x is None or t_z is None:
        raise CSSError("inconsistent signs")
    t = v_s.coset_rep((t_z << n) | t_x)
    return PhasePoint.from_index(t, n), v_s


def closed_form_table(group: CSSGroup) -> WignerTable:
    t, v_s = wigner_css_closed_form(group)
    n = group.n
    vals = np.zeros(1 << (2 * n))
    vals[[t.index ^ v for v in v_s]] = 1.0 / (1 << n)
    return WignerTable(n, vals)


def enumerate_css_groups(n: int) -> list[CSSGroup]:
    """Every full-rank CSS group with every sign pattern."""
    out = []
    for x_basis in gf2._subspaces(n):
        z_basis = gf2.nullspace(x_basis, n)
        for signs in itertools.product((1, -1), repeat=n):
            out.append(CSSGroup(n, z_basis, x_basis, signs[: len(z_basis)], signs[len(z_basis):]))
    return out


# ---------------------------------------------------------------------------
# General real stabilizer groups


@dataclass(frozen=True)
class StabilizerGroup:
    generators: tuple[PauliOp, ...]

    def __post_init__(self):
        gens = tuple(self.generators)
        object.__setattr__(self, "generators", gens)
        if not gens:
            raise CSSError("a stabilizer group needs at least one generator")
        if len({g.n for g in gens}) > 1:
            raise CSSError("generators of different sizes")
        for g in gens:
            if not in_set_A(g.point):
                raise CSSError(f"{g} is not a real observable")
        for g, h in itertools.combinations(gens, 2):
            if not commutes(g, h):
                raise CSSError(f"{g} and {h} anticommute")
        if gens and gf2.rank(g.point.index for g in gens) != len(gens):
            raise CSSError("generators are dependent (group would contain -I or repeat)")

    @property
    def n(self) -> int:
        return self.generators[0].n

    @property
    def rank(self) -> int:
        return len(self.generators)

    @classmethod
    def parse(cls, text: str) -> StabilizerGroup:
        lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
        return cls(tuple(parse_pauli(ln) for ln in lines if ln))

    def to_text(self) -> str:
        return "".join(f"{g}\n" for g in self.generators)

    def elements(self) -> list[PauliOp]:
        elems = [PauliOp.identity(self.n)]
        for g in self.generators:
            elems = elems + [pauli_product(e, g) for e in elems]
        return elems

    def label_space(self) -> GF2Subspace:
        return GF2Subspace.span((g.point.index for g in self.generators), 2 * self.n)

    def projector(self) -> np.ndarray:
        dim = 1 << self.n
        out = np.zeros((dim, dim))
        for e in self.elements():
            out += dense_matrix(e)
        return out / len(self.elements())

    def state(self) -> DenseState:
        if self.rank != self.n:
            raise CSSError("a stabilizer state needs n generators")
        proj = self.projector()
        col = int(np.argmax(np.abs(np.diag(proj))))
        vec = proj[:, col]
        return DenseState.from_unnormalized(vec)

    def density(self) -> DenseDensity:
        if self.rank != self.n:
            raise CSSError("a stabilizer state needs n generators")
        return DenseDensity(self.projector())


def is_css(group: StabilizerGroup) -> bool:
    n = group.n
    labels = [g.point.index for g in group.generators]
    mask = (1 << n) - 1
    dim = gf2.rank(labels)
    rank_x = gf2.rank(v & mask for v in labels)
    rank_z = gf2.rank(v >> n for v in labels)
    # pure-Z part is the kernel of the x-projection, and vice versa
    return (dim - rank_x) + (dim - rank_z) == dim


def real_stabilizer_groups(n: int) -> list[StabilizerGroup]:
    """All maximal real stabilizer groups: Lagrangians inside A with all sign patterns."""
    out = []
    for lag in gf2.enumerate_maximal_isotropic(n):
        mask = (1 << n) - 1
        if not all(dot(b >> n, b & mask) == 0 for b in lag.basis):
            continue
        points = [PhasePoint.from_index(b, n) for b in lag.basis]
        for signs in itertools.product((1, -1), repeat=n):
            out.append(StabilizerGroup(tuple(PauliOp(p, s) for p, s in zip(points, signs))))
    return out


# ---------------------------------------------------------------------------
# Affine symplectic maps


def _css_block_form(f: np.ndarray) -> bool:
    n = f.shape[0] // 2
    a, b, c, d = f[:n, :n], f[:n, n:], f[n:, :n], f[n:, n:]
    if not b.any() and not c.any():
        fz, fx = a, d
    elif not a.any() and not d.any():
        fz, fx = b, c
    else:
        return False
    try:
        return bool(np.array_equal(gf2.gf2_inv(fz).T, fx))
    except gf2.GF2Error:
        return False


@dataclass(frozen=True)
class AffineSymplectic:
    """``u -> F u + t`` with F a CSS-form symplectic matrix."""

    matrix: np.ndarray
    shift: PhasePoint

    def __post_init__(self):
        f = np.asarray(self.matrix, dtype=np.uint8) % 2
        n = self.shift.n
        if f.shape != (2 * n, 2 * n):
            raise CSSError(f"F must be {2 * n}x{2 * n}")
        if not gf2.is_symplectic(f):
            raise CSSError("F is not symplectic")
        if not _css_block_form(f):
            raise CSSError("F does not have CSS block form")
        f.setflags(write=False)
        object.__setattr__(self, "matrix", f)
        object.__setattr__(self, "_cols", gf2.matrix_columns(f))

    @property
    def n(self) -> int:
        return self.shift.n

    @classmethod
    def identity(cls, n: int) -> AffineSymplectic:
        return cls(np.eye(2 * n, dtype=np.uint8), PhasePoint(0, 0, n))

    def apply_index(self, u: int) -> int:
        return gf2.apply_columns(self._cols, u) ^ self.shift.index

    def apply_linear(self, u: int) -> int:
        return gf2.apply_columns(self._cols, u)

    def __call__(self, u: PhasePoint) -> PhasePoint:
        return PhasePoint.from_index(self.apply_index(u.index), self.n)

    def apply_indices(self, idx: np.ndarray) -> np.ndarray:
        """Vectorized action on an array of phase-space indices."""
        idx = np.asarray(idx, dtype=np.int64)
        size = 2 * self.n
        out = np.full(idx.shape, self.shift.index, dtype=np.int64)
        for j, col in enumerate(self._cols):
            out ^= np.where((idx >> (size - 1 - j)) & 1, col, 0)
        return out

    def compose(self, inner: AffineSymplectic) -> AffineSymplectic:
        """``self o inner``: apply ``inner`` first."""
        f = gf2.gf2_matmul(self.matrix, inner.matrix)
        t = self.apply_linear(inner.shift.index) ^ self.shift.index
        return AffineSymplectic(f, PhasePoint.from_index(t, self.n))

    def inverse(self) -> AffineSymplectic:
        finv = gf2.gf2_inv(self.matrix)
        t = gf2.apply_columns(gf2.matrix_columns(finv), self.shift.index)
        return AffineSymplectic(finv, PhasePoint.from_index(t, self.n))

    def key(self) -> tuple[bytes, int]:
        return self.matrix.tobytes(), self.shift.index

    def __eq__(self, other) -> bool:
        return isinstance(other, AffineSymplectic) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())


class CSSCliffordGate(GateOp):
    """A generator of the CSS-preserving group: H_ALL, CNOT, X or Z."""

    def __post_init__(self):
        super().__post_init__()
        if self.kind not in CSS_KINDS:
            raise CSSError(f"{self.kind} is not in the CSS-preserving group")


def css_gate(kind: str, *qubits: int) -> CSSCliffordGate:
    return CSSCliffordGate(kind, tuple(qubits))


def gate_to_affine(gates: GateOp | Sequence[GateOp], n: int) -> AffineSymplectic:
    """Affine map of a gate or a gate sequence (first element applied first)."""
    if isinstance(gates, GateOp):
        gates = [gates]
    out = AffineSymplectic.identity(n)
    for g in gates:
        out = _single_affine(g, n).compose(out)
    return out


def _single_affine(g: GateOp, n: int) -> AffineSymplectic:
    if g.kind not in CSS_KINDS:
        raise CSSError(f"{g.kind} has no affine symplectic image")
    if any(not 0 <= q < n for q in g.qubits):
        raise CSSError(f"qubit index out of range in {g}")
    f = np.eye(2 * n, dtype=np.uint8)
    t = 0
    if g.kind == "H_ALL":
        f = np.roll(f, n, axis=0)
    elif g.kind == "CNOT":
        i, j = g.qubits
        f[i, j] = 1  # z_i += z_j
        f[n + j, n + i] = 1  # x_j += x_i
    elif g.kind == "X":
        t = 1 << (n - 1 - g.qubits[0])
    else:
        t = 1 << (2 * n - 1 - g.qubits[0])
    return AffineSymplectic(f, PhasePoint.from_index(t, n))


def conjugate_pauli(p: PauliOp, affine: AffineSymplectic) -> PauliOp:
    """``g (sign T_a) g^dag = sign (-1)^{[t, Fa]} T_{Fa}`` for a in A."""
    if not in_set_A(p.point):
        raise CSSError(f"{p} is outside the set A")
    fa = affine.apply_linear(p.point.index)
    sign = p.sign * (-1 if gf2.sym_inner_int(affine.shift.index, fa, p.n) else 1)
    return PauliOp(PhasePoint.from_index(fa, p.n), sign)


def tableau_apply(group: StabilizerGroup, gate: GateOp | Sequence[GateOp]) -> StabilizerGroup:
    affine = gate_to_affine(gate, group.n)
    return StabilizerGroup(tuple(conjugate_pauli(g, affine) for g in group.generators))


def covariance_check(rho: DenseDensity, gates: GateOp | Sequence[GateOp], atol: float = 1e-10) -> bool:
    """``W_{g rho g^dag}(F u + t) = W_rho(u)`` at every phase point."""
    if isinstance(gates, GateOp):
        gates = [gates]
    n = rho.n
    try:
        affine = gate_to_affine(gates, n)
    except CSSError:
        return False
    out = rho
    for g in gates:
        out = apply_gate_density(out, g)
    w_in = wigner_of_density(rho).values
    w_out = wigner_of_density(out).values
    moved = affine.apply_indices(np.arange(w_in.size))
    return bool(np.allclose(w_out[moved], w_in, atol=atol, rtol=0))


def covariance_exists(w_in: WignerTable, w_out: WignerTable, atol: float = 1e-10) -> bool:
    """Whether *any* map in the affine image carries ``w_in`` onto ``w_out``."""
    for affine in affine_image(w_in.n):
        moved = affine.apply_indices(np.arange(w_in.values.size))
        if np.allclose(w_out.values[moved], w_in.values, atol=atol, rtol=0):
            return True
    return False


def css_generators(n: int) -> list[CSSCliffordGate]:
    gens = [css_gate("H_ALL")]
    gens += [css_gate("CNOT", i, j) for i in range(n) for j in range(n) if i != j]
    gens += [css_gate("X", i) for i in range(n)] + [css_gate("Z", i) for i in range(n)]
    return gens


def affine_image(n: int) -> set[AffineSymplectic]:
    """Closure of the generator images under composition (breadth-first)."""
    gens = [gate_to_affine(g, n) for g in css_generators(n)]
    seen = {AffineSymplectic.identity(n)}
    frontier = list(seen)
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                b = g.compose(a)
                if b not in seen:
                    seen.add(b)
                    nxt.append(b)
        frontier = nxt
    return seen


def random_css_word(n: int, length: int, rng: np.random.Generator) -> list[CSSCliffordGate]:
    gens = css_generators(n)
    return [gens[i] for i in rng.integers(len(gens), size=length)]


# ---------------------------------------------------------------------------
# Hudson verification


@dataclass(frozen=True)
class HudsonReport:
    n: int
    num_states: int
    num_css: int
    css_nonnegative: bool
    non_css_negative: bool
    failures: tuple[str, ...]
    random_samples: int
    random_negative_fraction: float
    random_mean_neg_mass: float

    @property
    def ok(self) -> bool:
        return self.css_nonnegative and self.non_css_negative

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "num_states": self.num_states,
            "num_css": self.num_css,
            "css_nonnegative": self.css_nonnegative,
            "non_css_negative": self.non_css_negative,
            "failures": list(self.failures),
            "random_samples": self.random_samples,
            "random_negative_fraction": self.random_negative_fraction,
            "random_mean_neg_mass": self.random_mean_neg_mass,
            "ok": self.ok,
        }


def hudson_verify(n: int, samples: int = 1000, seed: int = 0, tol: float = NONNEG_TOL) -> HudsonReport:
    """Check that a real stabilizer state has W >= 0 exactly when it is CSS."""
    if n > 3:
        raise CSSError("exhaustive Hudson check is capped at n=3")
    failures = []
    css_fail = non_css_fail = False
    num_css = 0
    groups = real_stabilizer_groups(n)
    for group in groups:
        css = is_css(group)
        num_css += css
        nonneg = negativity(wigner_of_pure_fast(group.state()), tol).is_nonnegative
        if css != nonneg:
            failures.append(" ".join(str(g) for g in group.generators))
            css_fail |= css
            non_css_fail |= not css
    rng = make_rng(seed)
    stats = [
        negativity(wigner_of_pure_fast(DenseState.from_unnormalized(rng.standard_normal(1 << n))), tol)
        for _ in range(samples)
    ]
    neg_frac = float(np.mean([not s.is_nonnegative for s in stats])) if stats else 0.0
    mass = float(np.mean([s.neg_mass for s in stats])) if stats else 0.0
    return HudsonReport(
        n, len(groups), num_css, not css_fail, not non_css_fail, tuple(failures), samples, neg_frac, mass
    )
