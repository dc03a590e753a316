"""Exact linear algebra over Z_2.

Vectors are packed into Python ints, most significant bit first: coordinate 0
of a length-``L`` vector is bit ``L - 1``.  A phase-space point of ``n`` rebits
is the length-``2n`` vector ``(z_part || x_part)``, so its integer index is
``(z << n) | x``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

#: Maximum number of rebits for phase-space operations (vectors up to 2*N_MAX bits).
N_MAX = 32
#: Enumeration cap for maximal isotropic subspaces.
LAGRANGIAN_CAP = 5


class GF2Error(ValueError):
    """Raised on malformed GF(2) input (length mismatch, cap exceeded, ...)."""


def parity(x: int) -> int:
    return x.bit_count() & 1


def dot(a: int, b: int) -> int:
    """Euclidean inner product mod 2 of two packed vectors."""
    return (a & b).bit_count() & 1


def bits_to_str(bits: int, length: int) -> str:
    return format(bits, f"0{length}b") if length else ""


def str_to_bits(text: str) -> int:
    text = text.strip()
    if text and set(text) - {"0", "1"}:
        raise GF2Error(f"not a binary string: {text!r}")
    return int(text, 2) if text else 0


def bits_to_array(bits: int, length: int) -> np.ndarray:
    return np.array([(bits >> (length - 1 - i)) & 1 for i in range(length)], dtype=np.uint8)


def array_to_bits(arr: Iterable[int]) -> int:
    out = 0
    for b in arr:
        out = (out << 1) | (int(b) & 1)
    return out


@dataclass(frozen=True)
class GF2Vector:
    bits: int
    length: int

    def __post_init__(self):
        if self.length < 0 or self.length > 2 * N_MAX:
            raise GF2Error(f"vector length {self.length} outside [0, {2 * N_MAX}]")
        if self.bits < 0 or self.bits >> self.length:
            raise GF2Error(f"bits {self.bits:#x} do not fit in length {self.length}")

    @classmethod
    def from_str(cls, text: str) -> GF2Vector:
        return cls(str_to_bits(text), len(text.strip()))

    def __add__(self, other: GF2Vector) -> GF2Vector:
        _check_len(self.length, other.length)
        return GF2Vector(self.bits ^ other.bits, self.length)

    __sub__ = __add__

    def __neg__(self) -> GF2Vector:
        return self

    def dot(self, other: GF2Vector) -> int:
        _check_len(self.length, other.length)
        return dot(self.bits, other.bits)

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(i)
        return (self.bits >> (self.length - 1 - i)) & 1

    def __str__(self) -> str:
        return bits_to_str(self.bits, self.length)


@dataclass(frozen=True)
class PhasePoint:
    """A point ``u = (u_Z, u_X)`` of the phase space Z_2^{2n}."""

    z: int
    x: int
    n: int

    def __post_init__(self):
        if self.n < 0 or self.n > N_MAX:
            raise GF2Error(f"n={self.n} outside [0, {N_MAX}]")
        if self.z < 0 or self.x < 0 or self.z >> self.n or self.x >> self.n:
            raise GF2Error("phase point parts do not fit in n bits")

    @classmethod
    def from_index(cls, index: int, n: int) -> PhasePoint:
        mask = (1 << n) - 1
        return cls(index >> n, index & mask, n)

    @classmethod
    def from_parts(cls, z_part: GF2Vector, x_part: GF2Vector) -> PhasePoint:
        _check_len(z_part.length, x_part.length)
        return cls(z_part.bits, x_part.bits, z_part.length)

    @classmethod
    def from_str(cls, z: str, x: str) -> PhasePoint:
        if len(z) != len(x):
            raise GF2Error("z and x parts differ in length")
        return cls(str_to_bits(z), str_to_bits(x), len(z))

    @property
    def index(self) -> int:
        return (self.z << self.n) | self.x

    @property
    def z_part(self) -> GF2Vector:
        return GF2Vector(self.z, self.n)

    @property
    def x_part(self) -> GF2Vector:
        return GF2Vector(self.x, self.n)

    @property
    def vector(self) -> GF2Vector:
        return GF2Vector(self.index, 2 * self.n)

    def __add__(self, other: PhasePoint) -> PhasePoint:
        _check_len(self.n, other.n)
        return PhasePoint(self.z ^ other.z, self.x ^ other.x, self.n)

    def __str__(self) -> str:
        return f"({bits_to_str(self.z, self.n)}|{bits_to_str(self.x, self.n)})"


def _check_len(a: int, b: int) -> None:
    if a != b:
        raise GF2Error(f"length mismatch: {a} != {b}")


def swap_halves(v: int, n: int) -> int:
    """(z || x) -> (x || z); turns the symplectic form into a dot product."""
    mask = (1 << n) - 1
    return ((v & mask) << n) | (v >> n)


def sym_inner_int(u: int, v: int, n: int) -> int:
    """Symplectic product of two packed phase-space indices."""
    mask = (1 << n) - 1
    return (((u >> n) & v) ^ ((v >> n) & u & mask)).bit_count() & 1


def sym_inner(u: PhasePoint, v: PhasePoint) -> int:
    """``[u, v] = u_Z . v_X + v_Z . u_X  (mod 2)``."""
    _check_len(u.n, v.n)
    return dot(u.z, v.x) ^ dot(v.z, u.x)


# ---------------------------------------------------------------------------
# Row reduction on packed rows


def rref(rows: Iterable[int]) -> tuple[int, ...]:
    """Reduced row-echelon form, leftmost (highest-bit) pivots first.

    Zero rows are dropped, so the result is a basis of the row space.
    """
    basis: list[int] = []
    for r in rows:
        for b in basis:
            if r ^ b < r:  # b's pivot bit is set in r
                r ^= b
        if r:
            p = r.bit_length() - 1
            basis = [b ^ r if (b >> p) & 1 else b for b in basis]
            basis.append(r)
    basis.sort(reverse=True)
    return tuple(basis)


def reduce_vector(v: int, basis: Sequence[int]) -> int:
    """Minimal element of the coset ``v + span(basis)`` (basis in RREF)."""
    for b in basis:
        if v ^ b < v:
            v ^= b
    return v


def rank(rows: Iterable[int]) -> int:
    return len(rref(rows))


def nullspace(rows: Iterable[int], length: int) -> tuple[int, ...]:
    """Basis (RREF) of ``{x : dot(r, x) = 0 for every row r}``."""
    red = rref(rows)
    pivots = {b.bit_length() - 1 for b in red}
    out = []
    for f in range(length):
        if f in pivots:
            continue
        x = 1 << f
        for b in red:
            if (b >> f) & 1:
                x |= 1 << (b.bit_length() - 1)
        out.append(x)
    return rref(out)


def solve(rows: Sequence[int], rhs: Sequence[int], length: int) -> int | None:
    """Minimal-integer ``x`` with ``dot(rows[i], x) = rhs[i]``, or None if inconsistent."""
    aug = [(r << 1) | (b & 1) for r, b in zip(rows, rhs)]
    red = rref(aug)
    x = 0
    for row in red:
        if row == 1:
            return None
        if row & 1:
            x |= 1 << (row.bit_length() - 2)
    return reduce_vector(x, nullspace(rows, length))


def span_elements(basis: Sequence[int]) -> list[int]:
    """All 2^k elements; element ``c`` uses basis[i] when bit ``k-1-i`` of c is set."""
    elems = [0]
    for b in reversed(basis):
        elems = elems + [e ^ b for e in elems]
    return elems


# ---------------------------------------------------------------------------
# Matrices (numpy uint8, acting on column vectors)


def gf2_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (np.asarray(a, dtype=np.int64) @ np.asarray(b, dtype=np.int64) % 2).astype(np.uint8)


def gf2_inv(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.uint8) % 2
    size = m.shape[0]
    if m.shape != (size, size):
        raise GF2Error("matrix is not square")
    aug = np.concatenate([m, np.eye(size, dtype=np.uint8)], axis=1)
    for col in range(size):
        hits = np.nonzero(aug[col:, col])[0]
        if hits.size == 0:
            raise GF2Error("matrix is singular over GF(2)")
        piv = col + hits[0]
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        others = np.nonzero(aug[:, col])[0]
        for r in others:
            if r != col:
                aug[r] ^= aug[col]
    return aug[:, size:].copy()


def matrix_columns(m: np.ndarray) -> tuple[int, ...]:
    """Columns of ``m`` packed as ints (for fast repeated application)."""
    return tuple(array_to_bits(m[:, j]) for j in range(m.shape[1]))


def apply_columns(cols: Sequence[int], v: int) -> int:
    length = len(cols)
    out = 0
    for j in range(length):
        if (v >> (length - 1 - j)) & 1:
            out ^= cols[j]
    return out


def symplectic_form(n: int) -> np.ndarray:
    """Gram matrix J of the symplectic product, ``[u, v] = u^T J v``."""
    j = np.zeros((2 * n, 2 * n), dtype=np.uint8)
    j[:n, n:] = np.eye(n, dtype=np.uint8)
    j[n:, :n] = np.eye(n, dtype=np.uint8)
    return j


def is_symplectic(m: np.ndarray) -> bool:
    n = m.shape[0] // 2
    j = symplectic_form(n)
    return bool(np.array_equal(gf2_matmul(gf2_matmul(m.T, j), m), j))


# ---------------------------------------------------------------------------
# Subspaces


@dataclass(frozen=True)
class GF2Subspace:
    """Subspace of Z_2^ambient_dim stored by its canonical RREF basis."""

    basis: tuple[int, ...]
    ambient_dim: int

    def __post_init__(self):
        if rref(self.basis) != tuple(self.basis):
            raise GF2Error("basis is not in canonical RREF; use GF2Subspace.span")
        if any(b >> self.ambient_dim for b in self.basis):
            raise GF2Error("basis vector exceeds ambient dimension")

    @classmethod
    def span(cls, vectors: Iterable[int], ambient_dim: int) -> GF2Subspace:
        return cls(rref(vectors), ambient_dim)

    @classmethod
    def zero(cls, ambient_dim: int) -> GF2Subspace:
        return cls((), ambient_dim)

    @classmethod
    def full(cls, ambient_dim: int) -> GF2Subspace:
        return cls(tuple(1 << i for i in reversed(range(ambient_dim))), ambient_dim)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def __len__(self) -> int:
        return 1 << len(self.basis)

    def __contains__(self, v: int) -> bool:
        return reduce_vector(v, self.basis) == 0

    def __iter__(self) -> Iterator[int]:
        return iter(span_elements(self.basis))

    def elements(self) -> list[int]:
        return span_elements(self.basis)

    def coset_rep(self, v: int) -> int:
        """Minimal-integer representative of ``v + self``."""
        return reduce_vector(v, self.basis)

    def orthogonal_complement(self, form: str = "euclidean") -> GF2Subspace:
        if form == "euclidean":
            return GF2Subspace(nullspace(self.basis, self.ambient_dim), self.ambient_dim)
        if form == "symplectic":
            if self.ambient_dim % 2:
                raise GF2Error("symplectic form needs even ambient dimension")
            n = self.ambient_dim // 2
            rows = [swap_halves(b, n) for b in self.basis]
            return GF2Subspace(nullspace(rows, self.ambient_dim), self.ambient_dim)
        raise GF2Error(f"unknown form {form!r}")

    def __str__(self) -> str:
        return "span{" + ", ".join(bits_to_str(b, self.ambient_dim) for b in self.basis) + "}"


def orthogonal_complement(u: GF2Subspace, form: str = "euclidean") -> GF2Subspace:
    return u.orthogonal_complement(form)


def is_isotropic(u: GF2Subspace) -> bool:
    if u.ambient_dim % 2:
        raise GF2Error("isotropy needs an even ambient dimension")
    n = u.ambient_dim // 2
    return all(sym_inner_int(a, b, n) == 0 for a, b in itertools.combinations(u.basis, 2))


def _subspaces(n: int) -> Iterator[tuple[int, ...]]:
    """All subspaces of Z_2^n as canonical RREF bases."""
    for k in range(n + 1):
        for pivots in itertools.combinations(range(n - 1, -1, -1), k):
            pivot_set = set(pivots)
            free = [[b for b in range(p) if b not in pivot_set] for p in pivots]
            nfree = sum(len(f) for f in free)
            for fill in range(1 << nfree):
                rows, pos = [], 0
                for p, fr in zip(pivots, free):
                    r = 1 << p
                    for b in fr:
                        if (fill >> pos) & 1:
                            r |= 1 << b
                        pos += 1
                    rows.append(r)
                yield tuple(rows)


@lru_cache(maxsize=None)
def _lagrangians(n: int) -> tuple[GF2Subspace, ...]:
    out = []
    for k_basis in _subspaces(n):
        k = len(k_basis)
        kperp = nullspace(k_basis, n)
        pivots = [b.bit_length() - 1 for b in k_basis]
        sym_slots = [(i, j) for i in range(k) for j in range(i, k)]
        for s_bits in range(1 << len(sym_slots)):
            s = [[0] * k for _ in range(k)]
            for idx, (i, j) in enumerate(sym_slots):
                if (s_bits >> idx) & 1:
                    s[i][j] = s[j][i] = 1
            gens = [z << n for z in kperp]
            for i, ki in enumerate(k_basis):
                phi = 0
                for j in range(k):
                    if s[i][j]:
                        phi |= 1 << pivots[j]
                gens.append((phi << n) | ki)
            out.append(GF2Subspace.span(gens, 2 * n))
    out.sort(key=lambda u: u.basis)
    return tuple(out)


def enumerate_maximal_isotropic(n: int, cap: int = LAGRANGIAN_CAP) -> list[GF2Subspace]:
    """All Lagrangian subspaces of Z_2^{2n}, in canonical RREF order.

    Each Lagrangian is determined by its x-projection K and a symmetric
    bilinear form on K, which is how they are generated here.
    """
    if n < 0:
        raise GF2Error("n must be non-negative")
    if n > cap:
        raise GF2Error(f"n={n} exceeds the Lagrangian enumeration cap {cap}")
    return list(_lagrangians(n))


def count_maximal_isotropic(n: int) -> int:
    out = 1
    for i in range(1, n + 1):
        out *= (1 << i) + 1
    return out


# ---------------------------------------------------------------------------
# Walsh (binary Fourier) transform


def fwht(values: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis.

    ``out[..., u] = sum_x (-1)^{popcount(u & x)} values[..., x]``.
    """
    a = np.array(values, dtype=float, copy=True)
    size = a.shape[-1]
    if size & (size - 1):
        raise GF2Error("length must be a power of two")
    lead = a.shape[:-1]
    h = 1
    while h < size:
        a = a.reshape(lead + (size // (2 * h), 2, h))
        lo = a[..., 0, :]
        hi = a[..., 1, :]
        a = np.stack([lo + hi, lo - hi], axis=-2)
        h *= 2
    return a.reshape(lead + (size,))


@dataclass(frozen=True)
class RealFunctionOnSubspace:
    """Real function on a subspace M; ``values[c]`` is the value at element c.

    Element ``c`` is ``span_elements(domain.basis)[c]``, so on a full space
    ``Z_2^k`` the element with coordinate c is the vector c itself.
    """

    domain: GF2Subspace
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (len(self.domain),):
            raise GF2Error(f"need {len(self.domain)} values, got shape {vals.shape}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_mapping(cls, domain: GF2Subspace, mapping: dict[int, float]) -> RealFunctionOnSubspace:
        elems = domain.elements()
        if set(mapping) != set(elems):
            raise GF2Error("mapping keys must be exactly the domain elements")
        return cls(domain, np.array([mapping[e] for e in elems]))

    def as_mapping(self) -> dict[int, float]:
        return dict(zip(self.domain.elements(), self.values.tolist()))

    def __call__(self, v: int) -> float:
        return float(self.as_mapping()[v])


def walsh_transform(f: RealFunctionOnSubspace) -> RealFunctionOnSubspace:
    """``(Ff)(u) = |M|^{-1/2} sum_{x in M} (-1)^{(u, x)} f(x)`` for u in M.

    The pairing is the ambient dot product.  Writing it in coordinates gives
    ``c_u . (G c_x)`` with G the Gram matrix of the basis, so f is pushed
    forward along G and a plain butterfly finishes the job.  F is an
    involution exactly when M meets its own orthogonal complement only in 0.
    """
    basis = f.domain.basis
    k = len(basis)
    size = 1 << k
    gram_rows = [array_to_bits(dot(bi, bj) for bj in basis) for bi in basis]
    coords = np.arange(size, dtype=np.int64)
    image = np.zeros(size, dtype=np.int64)
    for i, row in enumerate(gram_rows):
        image ^= np.where((coords >> (k - 1 - i)) & 1, row, 0)
    pushed = np.bincount(image, weights=f.values, minlength=size)
    return RealFunctionOnSubspace(f.domain, fwht(pushed) / np.sqrt(size))
