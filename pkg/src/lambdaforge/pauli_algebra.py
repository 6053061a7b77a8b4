"""Exact n-qubit Pauli arithmetic in binary symplectic form.

A :class:`PauliString` stores the operator

    i**phase * (X**x[0] Z**z[0]) (x) (X**x[1] Z**z[1]) (x) ...

so that ``Y = iXZ`` has ``x = z = 1`` and ``phase = 1``.  Qubit 0 is the
leftmost tensor factor and the leftmost character of the text form.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DimensionError, DomainError

_PHASE_PREFIX = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_PREFIX_PHASE = {"+": 0, "+i": 1, "-": 2, "-i": 3, "": 0, "i": 1}


def _bits(values: Iterable[int], n: int | None = None) -> np.ndarray:
    arr = np.array(values, dtype=np.uint8).reshape(-1)
    if n is not None and arr.size != n:
        raise DimensionError(f"expected {n} bits, got {arr.size}")
    if np.any(arr > 1):
        raise DomainError("bit vectors may only hold 0 or 1")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


class PauliString:
    """An n-qubit Pauli operator with a phase that is a power of i."""

    __slots__ = ("x", "z", "phase")

    def __init__(self, x: Sequence[int], z: Sequence[int], phase: int = 0):
        self.x = _bits(x)
        self.z = _bits(z, self.x.size)
        if self.x.size == 0:
            raise DomainError("a PauliString needs at least one qubit")
        self.phase = int(phase) % 4

    @property
    def n_qubits(self) -> int:
        return int(self.x.size)

    @property
    def sign(self) -> int:
        """Power of i multiplying the ``X**x Z**z`` product."""
        return self.phase

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(np.zeros(n_qubits, np.uint8), np.zeros(n_qubits, np.uint8))

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse ``"XIZ"``, ``"-iYY"``, ``"+XX"`` and the like."""
        body = label.lstrip("+-i")
        prefix = label[: len(label) - len(body)]
        if prefix not in _PREFIX_PHASE or not body:
            raise DomainError(f"cannot parse Pauli label {label!r}")
        if set(body) - set("IXYZ"):
            raise DomainError(f"cannot parse Pauli label {label!r}")
        x = [c in "XY" for c in body]
        z = [c in "ZY" for c in body]
        # Each Y letter is i*XZ.
        return cls(x, z, _PREFIX_PHASE[prefix] + body.count("Y"))

    @classmethod
    def single(cls, n_qubits: int, qubit: int, letter: str) -> "PauliString":
        if not 0 <= qubit < n_qubits:
            raise DomainError(f"qubit {qubit} out of range for {n_qubits} qubits")
        chars = ["I"] * n_qubits
        chars[qubit] = letter
        return cls.from_label("".join(chars))

    @classmethod
    def on_support(cls, n_qubits: int, support: Iterable[int], letter: str) -> "PauliString":
        """The same letter (``X`` or ``Z``) on every qubit in ``support``."""
        chars = ["I"] * n_qubits
        for q in support:
            chars[q] = letter
        return cls.from_label("".join(chars))

    def label(self) -> str:
        letters = np.array(["I", "X", "Z", "Y"])[self.x + 2 * self.z]
        n_y = int(np.count_nonzero(self.x & self.z))
        return _PHASE_PREFIX[(self.phase - n_y) % 4] + "".join(letters)

    def weight(self) -> int:
        return int(np.count_nonzero(self.x | self.z))

    def support(self) -> list[int]:
        return [int(q) for q in np.flatnonzero(self.x | self.z)]

    def same_operator(self, other: "PauliString") -> bool:
        """Equal up to phase."""
        return np.array_equal(self.x, other.x) and np.array_equal(self.z, other.z)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliString):
            return NotImplemented
        return self.phase == other.phase and self.same_operator(other)

    def __hash__(self) -> int:
        return hash((self.x.tobytes(), self.z.tobytes(), self.phase))

    def __repr__(self) -> str:
        return f"PauliString({self.label()!r})"

    __str__ = label


def _check(a: PauliString, b: PauliString) -> None:
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"{a.n_qubits}-qubit and {b.n_qubits}-qubit operators")


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Operator product ``a * b``.

    Moving each ``Z`` of ``a`` past an ``X`` of ``b`` on the same qubit
    contributes a factor of -1.
    """
    _check(a, b)
    crossings = int(np.count_nonzero(a.z & b.x))
    return PauliString(a.x ^ b.x, a.z ^ b.z, a.phase + b.phase + 2 * crossings)


def symplectic_product(a: PauliString, b: PauliString) -> int:
    _check(a, b)
    return int(np.count_nonzero(a.x & b.z) + np.count_nonzero(a.z & b.x)) % 2


def commutes(a: PauliString, b: PauliString) -> bool:
    return symplectic_product(a, b) == 0


def commutator_is_zero(a: PauliString, b: PauliString) -> bool:
    """Whether ``ab - ba`` vanishes, decided by comparing the two products."""
    return multiply(a, b) == multiply(b, a)


def all_paulis(n_qubits: int, with_phases: bool = False) -> Iterator[PauliString]:
    """Every Pauli operator on ``n_qubits`` (phase 0 unless ``with_phases``)."""
    phases = range(4) if with_phases else (0,)
    for letters in itertools.product("IXYZ", repeat=n_qubits):
        base = PauliString.from_label("".join(letters))
        for ph in phases:
            yield PauliString(base.x, base.z, base.phase + ph)


def commutator_report(n_qubits: int = 2) -> dict:
    """Cross-check :func:`commutes` against explicit products for all pairs.

    Also evaluates the parity identities used in error correction: single
    X and Z anticommute while the two-qubit parities XX and ZZ commute.
    """
    paulis = list(all_paulis(n_qubits))
    agree = 0
    product_consistent = 0
    for a, b in itertools.product(paulis, repeat=2):
        c = commutes(a, b)
        if c == commutator_is_zero(a, b):
            agree += 1
        ab, ba = multiply(a, b), multiply(b, a)
        expected = ab.phase if c else (ab.phase + 2) % 4
        if ab.same_operator(ba) and ba.phase == expected:
            product_consistent += 1
    total = len(paulis) ** 2
    x, z = PauliString.from_label("X"), PauliString.from_label("Z")
    xx, zz = PauliString.from_label("XX"), PauliString.from_label("ZZ")
    return {
        "n_qubits": n_qubits,
        "pairs": total,
        "commutes_agrees_with_commutator": agree,
        "product_sign_consistent": product_consistent,
        "X*Z": multiply(x, z).label(),
        "Z*X": multiply(z, x).label(),
        "commutes(X,Z)": commutes(x, z),
        "commutes(XX,ZZ)": commutes(xx, zz),
        "ok": agree == total and product_consistent == total,
    }
