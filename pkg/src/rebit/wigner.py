"""The rebit Wigner function.

``W(u) = 2^-n Tr(A_u rho)`` with phase-point operators
``A_u = 2^-n sum_{a in A} (-1)^{[u,a]} T_a``.  Tables are indexed by the
phase-space integer ``(u_Z << n) | u_X``.

The dense route goes through Pauli coefficients ``c_a = Tr(T_a rho)``: one
Walsh transform per X-shift gives all of them, and a second two-dimensional
Walsh transform over the symplectic pairing gives W.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .dense import MAX_N, DenseDensity, DenseError, DenseState
from .gf2 import PhasePoint, bits_to_str, fwht
from .pauli import PauliOp, dense_matrix, set_A_indices

EQ_TOL = 1e-10
NONNEG_TOL = -1e-10


class WignerError(ValueError):
    pass


@dataclass(frozen=True)
class WignerTable:
    n: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True).reshape(-1)
        if vals.size != 1 << (2 * self.n):
            raise WignerError(f"table for n={self.n} needs {1 << (2 * self.n)} values, got {vals.size}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __getitem__(self, u: PhasePoint | int) -> float:
        idx = u.index if isinstance(u, PhasePoint) else u
        return float(self.values[idx])

    @property
    def grid(self) -> np.ndarray:
        """Values as a ``[u_Z, u_X]`` array."""
        return self.values.reshape(1 << self.n, 1 << self.n)

    @property
    def total(self) -> float:
        return float(self.values.sum())

    def support(self, tol: float = EQ_TOL) -> list[int]:
        return np.nonzero(np.abs(self.values) > tol)[0].tolist()

    def allclose(self, other: WignerTable, atol: float = EQ_TOL) -> bool:
        return self.n == other.n and bool(np.allclose(self.values, other.values, atol=atol, rtol=0))

    @classmethod
    def uniform(cls, n: int) -> WignerTable:
        return cls(n, np.full(1 << (2 * n), 1.0 / (1 << (2 * n))))

    @classmethod
    def delta(cls, u: PhasePoint) -> WignerTable:
        vals = np.zeros(1 << (2 * u.n))
        vals[u.index] = 1.0
        return cls(u.n, vals)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["u_Z", "u_X", "value"])
        mask = (1 << self.n) - 1
        for idx, v in enumerate(self.values):
            w.writerow([bits_to_str(idx >> self.n, self.n), bits_to_str(idx & mask, self.n), repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> WignerTable:
        rows = list(csv.DictReader(ln for ln in io.StringIO(text) if not ln.startswith("#")))
        if not rows:
            raise WignerError("empty Wigner CSV")
        n = len(rows[0]["u_Z"])
        vals = np.full(1 << (2 * n), np.nan)
        for r in rows:
            if len(r["u_Z"]) != n or len(r["u_X"]) != n:
                raise WignerError("inconsistent bit-string lengths in CSV")
            vals[(int(r["u_Z"], 2) << n) | int(r["u_X"], 2)] = float(r["value"])
        if np.isnan(vals).any():
            raise WignerError("CSV does not cover every phase point")
        return cls(n, vals)

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "values": self.values.tolist()})

    @classmethod
    def from_json(cls, text: str) -> WignerTable:
        data = json.loads(text)
        return cls(int(data["n"]), np.array(data["values"], dtype=float))


def _check_n(n: int) -> None:
    if n > MAX_N:
        raise WignerError(f"dense Wigner computations capped at n={MAX_N}")


def phase_point_operator(u: PhasePoint, n: int | None = None) -> np.ndarray:
    n = u.n if n is None else n
    _check_n(n)
    out = np.zeros((1 << n, 1 << n))
    mask = (1 << n) - 1
    for a in set_A_indices(n):
        a = int(a)
        point = PhasePoint(a >> n, a & mask, n)
        sgn = -1.0 if ((u.z & point.x) ^ (point.z & u.x)).bit_count() & 1 else 1.0
        out += sgn * dense_matrix(PauliOp(point))
    return out / (1 << n)


def _set_A_mask(n: int) -> np.ndarray:
    """Boolean ``[a_X, a_Z]`` grid marking the set A."""
    idx = np.arange(1 << n)
    overlap = np.bitwise_count(idx[:, None] & idx[None, :]) & 1
    return overlap == 0


def pauli_coefficients(matrix: np.ndarray) -> np.ndarray:
    """``C[a_X, a_Z] = Tr(T_a M)`` for every label a."""
    dim = matrix.shape[0]
    x = np.arange(dim)
    shifted = matrix[x[None, :] ^ x[:, None], x[None, :]]  # [a_X, x] -> M[x ^ a_X, x]
    return fwht(shifted)


def wigner_of_operator(matrix: np.ndarray) -> WignerTable:
    """Wigner table of any real symmetric operator (no trace/PSD checks)."""
    m = np.asarray(matrix, dtype=float)
    n = m.shape[0].bit_length() - 1
    _check_n(n)
    coeffs = np.where(_set_A_mask(n), pauli_coefficients(m), 0.0)
    # [a_X, a_Z] -> [u_Z, u_X] through (-1)^{u_Z.a_X + u_X.a_Z}
    grid = fwht(fwht(coeffs).T).T / (1 << (2 * n))
    return WignerTable(n, grid)


def wigner_of_density(rho: DenseDensity) -> WignerTable:
    return wigner_of_operator(rho.matrix)


def wigner_of_pure_fast(psi: DenseState) -> WignerTable:
    """``W(p, q) = 2^-n sum_x (-1)^{p.x} psi(q) psi(q+x)`` with ``p = u_Z, q = u_X``."""
    if psi.complex_mode:
        raise WignerError("fast pure-state path needs a real state")
    amps = psi.amplitudes
    dim = amps.size
    q = np.arange(dim)
    corr = amps[:, None] * amps[q[:, None] ^ q[None, :]]  # [q, x]
    return WignerTable(psi.n, fwht(corr).T / dim)


def wigner_of(obj) -> WignerTable:
    if isinstance(obj, WignerTable):
        return obj
    if isinstance(obj, DenseState):
        return wigner_of_pure_fast(obj)
    if isinstance(obj, DenseDensity):
        return wigner_of_density(obj)
    raise WignerError(f"cannot take the Wigner function of {type(obj).__name__}")


def reconstruct(w: WignerTable) -> DenseDensity:
    """``rho = sum_u W(u) A_u``; inverse of the Wigner map on symmetric operators."""
    n = w.n
    _check_n(n)
    dim = 1 << n
    # Pauli coefficients from the table: C[a_X, a_Z] = sum_u (-1)^{[u,a]} W(u)
    coeffs = fwht(fwht(w.grid).T).T
    coeffs = np.where(_set_A_mask(n), coeffs, 0.0)
    # rho[y, y ^ a_X] = 2^-n sum_{a_Z} C[a_X, a_Z] (-1)^{a_Z . y}
    rows = fwht(coeffs) / dim  # [a_X, y]
    y = np.arange(dim)
    rho = np.zeros((dim, dim))
    rho[y[None, :], y[None, :] ^ y[:, None]] = rows
    try:
        return DenseDensity(rho)
    except DenseError:
        return DenseDensity.operator(rho)


def trace_inner(wa: WignerTable, wb: WignerTable) -> float:
    """``Tr(rho sigma) = 2^n sum_u W_rho(u) W_sigma(u)``."""
    if wa.n != wb.n:
        raise WignerError("size mismatch")
    return float((1 << wa.n) * np.dot(wa.values, wb.values))


@dataclass(frozen=True)
class Negativity:
    min_value: float
    neg_mass: float
    is_nonnegative: bool


def negativity(w: WignerTable, tol: float = NONNEG_TOL) -> Negativity:
    vals = w.values
    return Negativity(float(vals.min()), float(-vals[vals < 0].sum()) + 0.0, bool(vals.min() >= tol))


def tensor_tables(wa: WignerTable, wb: WignerTable) -> WignerTable:
    """Table of the product ``W_A(u_A) W_B(u_B)`` on the joined phase space."""
    na, nb = wa.n, wb.n
    a = wa.grid.reshape(1 << na, 1 << na, 1, 1)
    b = wb.grid.reshape(1, 1, 1 << nb, 1 << nb)
    joint = (a * b).transpose(0, 2, 1, 3)  # [zA, zB, xA, xB]
    return WignerTable(na + nb, joint.reshape(-1))


def product_check(wa: WignerTable, wb: WignerTable, wab: WignerTable, atol: float = EQ_TOL) -> bool:
    if wab.n != wa.n + wb.n:
        return False
    return tensor_tables(wa, wb).allclose(wab, atol)


# ---------------------------------------------------------------------------
# Reference states


def one_rebit_family(x: float, z: float, checked: bool = True) -> DenseDensity:
    """``(I + x X + z Z) / 2``."""
    m = np.array([[1 + z, x], [x, 1 - z]]) / 2
    return DenseDensity(m) if checked else DenseDensity.operator(m)


def two_rebit_family(a: float, b: float, checked: bool = True) -> DenseDensity:
    """``(I + a X1Z2)(I + b Z1X2) / 4``."""
    xz = dense_matrix(PauliOp.from_str("XZ"))
    zx = dense_matrix(PauliOp.from_str("ZX"))
    m = (np.eye(4) + a * xz) @ (np.eye(4) + b * zx) / 4
    m = (m + m.T) / 2
    return DenseDensity(m) if checked else DenseDensity.operator(m)


def graph_state(n: int, edges) -> DenseState:
    """``prod CZ_e |+>^n``."""
    dim = 1 << n
    idx = np.arange(dim)
    phase = np.zeros(dim, dtype=np.int64)
    for i, j in edges:
        phase ^= ((idx >> (n - 1 - i)) & (idx >> (n - 1 - j))) & 1
    return DenseState((1.0 - 2.0 * phase) / np.sqrt(dim))


def complete_graph_state(n: int) -> DenseState:
    return graph_state(n, [(i, j) for i in range(n) for j in range(i + 1, n)])
