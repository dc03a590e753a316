"""Sign-tracked real Pauli operators ``±T_a`` with ``T_a = Z(a_Z) X(a_X)``.

Product convention: ``T_a T_b = (-1)^{a_X . b_Z} T_{a+b}``.  With this
labelling every product of real translation operators is again real, so the
sign group is just ``{+1, -1}``.

Text notation: one letter per rebit, left to right is rebit 0..n-1, with an
optional leading sign.  ``I X Z`` are the usual matrices, ``y`` is the real
product ``ZX`` and ``Y`` is the Hermitian ``-i ZX``.  A string is accepted only
if its ``Y`` count is even, so that the operator is real.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .gf2 import PhasePoint, dot, sym_inner

DENSE_MAX_N = 6


class PauliError(ValueError):
    pass


def in_set_A(a: PhasePoint) -> bool:
    """``a_Z . a_X = 0``: T_a is symmetric (a real observable)."""
    return dot(a.z, a.x) == 0


def in_set_O(a: PhasePoint) -> bool:
    """Pure X or pure Z type."""
    return a.z == 0 or a.x == 0


@dataclass(frozen=True)
class PauliOp:
    point: PhasePoint
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise PauliError(f"sign must be +1 or -1, got {self.sign!r}")

    @property
    def n(self) -> int:
        return self.point.n

    @classmethod
    def identity(cls, n: int) -> PauliOp:
        return cls(PhasePoint(0, 0, n))

    @classmethod
    def from_str(cls, text: str) -> PauliOp:
        return parse_pauli(text)

    @classmethod
    def x_type(cls, mask: int, n: int, sign: int = 1) -> PauliOp:
        return cls(PhasePoint(0, mask, n), sign)

    @classmethod
    def z_type(cls, mask: int, n: int, sign: int = 1) -> PauliOp:
        return cls(PhasePoint(mask, 0, n), sign)

    @property
    def is_symmetric(self) -> bool:
        return in_set_A(self.point)

    def __mul__(self, other: PauliOp) -> PauliOp:
        return pauli_product(self, other)

    def __neg__(self) -> PauliOp:
        return PauliOp(self.point, -self.sign)

    def commutes(self, other: PauliOp) -> bool:
        return commutes(self, other)

    def dense(self) -> np.ndarray:
        return dense_matrix(self)

    def __str__(self) -> str:
        return format_pauli(self)


def pauli_product(p: PauliOp, q: PauliOp) -> PauliOp:
    if p.n != q.n:
        raise PauliError(f"size mismatch: {p.n} vs {q.n}")
    a, b = p.point, q.point
    sign = p.sign * q.sign * (-1 if dot(a.x, b.z) else 1)
    return PauliOp(a + b, sign)


def commutes(p: PauliOp, q: PauliOp) -> bool:
    return sym_inner(p.point, q.point) == 0


def parse_pauli(text: str) -> PauliOp:
    s = text.strip()
    sign = 1
    if s[:1] in "+-":
        sign = -1 if s[0] == "-" else 1
        s = s[1:]
    if not s:
        raise PauliError(f"empty Pauli string {text!r}")
    z = x = 0
    hermitian_y = 0
    for ch in s:
        z <<= 1
        x <<= 1
        if ch == "I":
            pass
        elif ch == "X":
            x |= 1
        elif ch == "Z":
            z |= 1
        elif ch in "Yy":
            z |= 1
            x |= 1
            hermitian_y += ch == "Y"
        else:
            raise PauliError(f"bad Pauli letter {ch!r} in {text!r}")
    if hermitian_y % 2:
        raise PauliError(f"{text!r} is imaginary (odd number of Y)")
    # Y^{(k)} = (-i)^k (ZX)^{(k)}
    if hermitian_y % 4 == 2:
        sign = -sign
    return PauliOp(PhasePoint(z, x, len(s)), sign)


def format_pauli(p: PauliOp) -> str:
    n = p.n
    both = p.point.z & p.point.x
    k = both.bit_count()
    use_upper = k % 2 == 0
    sign = p.sign * (-1 if use_upper and k % 4 == 2 else 1)
    letters = []
    for i in range(n):
        bit = n - 1 - i
        zb, xb = (p.point.z >> bit) & 1, (p.point.x >> bit) & 1
        letters.append("IXZ" [xb + 2 * zb] if not (zb and xb) else ("Y" if use_upper else "y"))
    return ("+" if sign == 1 else "-") + "".join(letters)


def format_label(point: PhasePoint) -> str:
    """Unsigned label of ``T_a``, writing the real product ZX as ``y``."""
    n = point.n
    out = []
    for i in range(n):
        bit = n - 1 - i
        out.append("IXZy"[((point.x >> bit) & 1) + 2 * ((point.z >> bit) & 1)])
    return "".join(out)


_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
_LOCAL = {(0, 0): np.eye(2), (0, 1): _X, (1, 0): _Z, (1, 1): _Z @ _X}


def dense_matrix(p: PauliOp) -> np.ndarray:
    """Real ``2^n x 2^n`` matrix of ``sign * T_a``; qubit 0 is the most significant."""
    n = p.n
    if n > DENSE_MAX_N:
        raise PauliError(f"dense matrices capped at n={DENSE_MAX_N}")
    out = np.ones((1, 1))
    for i in range(n):
        bit = n - 1 - i
        out = np.kron(out, _LOCAL[((p.point.z >> bit) & 1, (p.point.x >> bit) & 1)])
    return p.sign * out


@lru_cache(maxsize=None)
def set_A_indices(n: int) -> np.ndarray:
    """Phase-space indices ``(z << n) | x`` of all points in the set A."""
    idx = np.arange(1 << (2 * n), dtype=np.int64)
    mask = (1 << n) - 1
    overlap = np.bitwise_count((idx >> n) & idx & mask) & 1
    out = idx[overlap == 0]
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ObservableSet:
    elements: tuple[PauliOp, ...]

    def __post_init__(self):
        elems = tuple(self.elements)
        object.__setattr__(self, "elements", elems)
        if any(e.sign != 1 for e in elems):
            raise PauliError("observable set elements carry sign +1")
        if len({e.point for e in elems}) != len(elems):
            raise PauliError("duplicate observables")
        if len({e.n for e in elems}) > 1:
            raise PauliError("mixed sizes in observable set")
        if not all(in_set_A(e.point) for e in elems):
            raise PauliError("observables must lie in the set A")

    @classmethod
    def parse(cls, labels: Iterable[str]) -> ObservableSet:
        return cls(tuple(parse_pauli(s) for s in labels))


def is_jointly_measurable(m: ObservableSet | Sequence[PauliOp]) -> bool:
    """True iff ``T_a T_b = T_{a+b}`` for every ordered pair."""
    elems = m.elements if isinstance(m, ObservableSet) else tuple(m)
    for p in elems:
        for q in elems:
            if dot(p.point.x, q.point.z):
                return False
    return True
