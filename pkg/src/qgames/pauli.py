"""Phase-tracked Pauli observables on up to three qubits.

An observable is stored in symplectic form: one x bit and one z bit per
qubit, plus a global phase ``i**phase_exp``.  Qubit 0 is the leftmost
letter, so ``"XY"`` is ``X`` on qubit 0 and ``Y`` on qubit 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 3

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_BITS_LETTER = {bits: letter for letter, bits in _LETTER_BITS.items()}
_PHASE_TEXT = {0: "+", 1: "+i", 2: "-", 3: "-i"}

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class PauliError(ValueError):
    """Base class for Pauli algebra errors."""


class PauliParseError(PauliError):
    def __init__(self, text: str, position: int, reason: str):
        self.text = text
        self.position = position
        super().__init__(f"cannot parse {text!r} at position {position}: {reason}")


class DimensionMismatch(PauliError):
    pass


class NonCommuting(PauliError):
    pass


class NotAContext(PauliError):
    pass


@dataclass(frozen=True, order=True)
class PauliObservable:
    """An n-qubit Pauli operator ``i**phase_exp * P_0 ⊗ ... ⊗ P_{n-1}``."""

    x_bits: tuple[int, ...]
    z_bits: tuple[int, ...]
    phase_exp: int = 0

    def __post_init__(self) -> None:
        if len(self.x_bits) != len(self.z_bits):
            raise DimensionMismatch("x_bits and z_bits differ in length")
        if not 1 <= len(self.x_bits) <= MAX_QUBITS:
            raise PauliError(f"qubit count must be in 1..{MAX_QUBITS}")
        object.__setattr__(self, "x_bits", tuple(int(b) & 1 for b in self.x_bits))
        object.__setattr__(self, "z_bits", tuple(int(b) & 1 for b in self.z_bits))
        object.__setattr__(self, "phase_exp", int(self.phase_exp) % 4)

    @property
    def n(self) -> int:
        return len(self.x_bits)

    @property
    def phase(self) -> complex:
        return 1j**self.phase_exp

    @property
    def letters(self) -> str:
        """The unsigned Pauli string, e.g. ``"XY"``."""
        return "".join(_BITS_LETTER[b] for b in zip(self.x_bits, self.z_bits))

    @property
    def is_identity(self) -> bool:
        return not any(self.x_bits) and not any(self.z_bits)

    def unsigned(self) -> PauliObservable:
        return PauliObservable(self.x_bits, self.z_bits, 0)

    def factor(self, k: int) -> str:
        return _BITS_LETTER[(self.x_bits[k], self.z_bits[k])]

    def __mul__(self, other: PauliObservable) -> PauliObservable:
        return multiply(self, other)

    def __neg__(self) -> PauliObservable:
        return PauliObservable(self.x_bits, self.z_bits, self.phase_exp + 2)

    def __str__(self) -> str:
        return format_pauli(self)

    def __repr__(self) -> str:
        return f"PauliObservable({format_pauli(self)!r})"


def parse(text: str) -> PauliObservable:
    """Parse ``"XY"``, ``"-ZZ"``, ``"+iXI"`` and similar strings.

    Both ASCII ``-`` and the unicode minus sign are accepted.
    """
    s = text.strip().replace("−", "-")
    phase_exp = 0
    pos = 0
    if s[:1] in ("+", "-"):
        phase_exp = 0 if s[0] == "+" else 2
        pos = 1
        if s[pos : pos + 1] == "i":
            phase_exp += 1
            pos += 1
    body = s[pos:]
    if not body:
        raise PauliParseError(text, pos, "empty operator")
    if len(body) > MAX_QUBITS:
        raise PauliParseError(text, pos + MAX_QUBITS, f"more than {MAX_QUBITS} qubits")
    xs, zs = [], []
    for k, ch in enumerate(body.upper()):
        if ch not in _LETTER_BITS:
            raise PauliParseError(text, pos + k, f"invalid symbol {body[k]!r}")
        x, z = _LETTER_BITS[ch]
        xs.append(x)
        zs.append(z)
    return PauliObservable(tuple(xs), tuple(zs), phase_exp)


def format_pauli(p: PauliObservable, explicit_plus: bool = False) -> str:
    prefix = _PHASE_TEXT[p.phase_exp]
    if prefix == "+" and not explicit_plus:
        prefix = ""
    return prefix + p.letters


def identity(n: int) -> PauliObservable:
    return PauliObservable((0,) * n, (0,) * n, 0)


def _check_dims(p: PauliObservable, q: PauliObservable) -> None:
    if p.n != q.n:
        raise DimensionMismatch(f"{p} acts on {p.n} qubits, {q} on {q.n}")


def multiply(p: PauliObservable, q: PauliObservable) -> PauliObservable:
    """Exact product ``p @ q`` including the phase."""
    _check_dims(p, q)
    # X^x Z^z form: P = i^(x.z) X^x Z^z, so the Y factors carry an extra i each.
    exp = p.phase_exp + q.phase_exp
    exp += sum(x & z for x, z in zip(p.x_bits, p.z_bits))
    exp += sum(x & z for x, z in zip(q.x_bits, q.z_bits))
    # Z^zp X^xq = (-1)^(zp.xq) X^xq Z^zp
    exp += 2 * sum(z & x for z, x in zip(p.z_bits, q.x_bits))
    xs = tuple(a ^ b for a, b in zip(p.x_bits, q.x_bits))
    zs = tuple(a ^ b for a, b in zip(p.z_bits, q.z_bits))
    exp -= sum(x & z for x, z in zip(xs, zs))
    return PauliObservable(xs, zs, exp)


def symplectic_form(p: PauliObservable, q: PauliObservable) -> int:
    _check_dims(p, q)
    return sum(a & d ^ b & c for a, b, c, d in zip(p.x_bits, p.z_bits, q.x_bits, q.z_bits)) & 1


def commutes(p: PauliObservable, q: PauliObservable) -> bool:
    return symplectic_form(p, q) == 0


def product(ops: Iterable[PauliObservable]) -> PauliObservable:
    ops = list(ops)
    if not ops:
        raise PauliError("empty product")
    return reduce(multiply, ops)


def context_sign(ops: Sequence[PauliObservable]) -> int:
    """Return +1 or -1 such that the product of ``ops`` is that multiple of identity.

    Raises :class:`NonCommuting` or :class:`NotAContext` when ``ops`` is not a
    set of mutually commuting observables multiplying to a signed identity.
    """
    ops = list(ops)
    for i in range(len(ops)):
        for j in range(i + 1, len(ops)):
            if not commutes(ops[i], ops[j]):
                raise NonCommuting(f"{ops[i]} and {ops[j]} anticommute")
    prod = product(ops)
    if not prod.is_identity:
        raise NotAContext(f"product of {[str(o) for o in ops]} is {prod}, not ±I")
    assert prod.phase_exp in (0, 2), "commuting Hermitian factors gave an imaginary phase"
    return 1 if prod.phase_exp == 0 else -1


def y_count(p: PauliObservable) -> int:
    return sum(x & z for x, z in zip(p.x_bits, p.z_bits))


def is_symmetric(p: PauliObservable) -> bool:
    """True when ``p`` has an even number of Y factors (so ``p.T == p`` up to phase)."""
    return y_count(p) % 2 == 0


def to_matrix(p: PauliObservable) -> np.ndarray:
    mats = [_SINGLE[p.factor(k)] for k in range(p.n)]
    return p.phase * reduce(np.kron, mats)


def all_paulis(n: int, include_identity: bool = False) -> list[PauliObservable]:
    """All unsigned n-qubit Pauli strings in lexicographic order of their text."""
    from itertools import product as cartesian

    out = [parse("".join(t)) for t in cartesian("IXYZ", repeat=n)]
    out.sort(key=lambda p: p.letters)
    if not include_identity:
        out = [p for p in out if not p.is_identity]
    return out
