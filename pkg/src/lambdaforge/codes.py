"""Repetition and unrotated surface code instances of order n.

Both constructions place qubits on a grid and give every qubit a global
index.  Stabilizers and logical operators are :class:`PauliString` objects
over the *data* qubits only (index ``i`` means ``code.data_qubits[i]``),
while the gate schedule addresses global indices.

Layout conventions
------------------
Repetition code: a chain of ``4n+1`` qubits, data on even positions and
one ancilla between each neighbouring data pair.  Each ancilla measures
``Z Z`` on its two neighbours via two CNOTs with the ancilla as target.

Surface code: a ``(4n+1) x (4n+1)`` grid with data on sites where
``row + col`` is even.  Z-type ancillas sit on (odd row, even col) and
X-type ancillas on (even row, odd col).  Z stabilizers are therefore cut
by the left/right edges and X stabilizers by the top/bottom edges, so the
logical Z is a horizontal Z chain along row 0 and the logical X a vertical
X chain down column 0.  Every ancilla visits its neighbours in the fixed
order north, west, east, south; missing neighbours on the boundary leave
that CNOT layer idle for the ancilla.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import DomainError
from .pauli_algebra import PauliString, commutes


class CodeKind(str, enum.Enum):
    REPETITION = "repetition"
    SURFACE = "surface"


@dataclass(frozen=True)
class Op:
    """One gate in a schedule layer.

    ``kind`` is ``prepare``, ``hadamard``, ``cnot`` or ``measure``.  For a
    CNOT ``qubits`` is ``(control, target)``.  ``basis`` selects the
    preparation/measurement basis; Hadamards on X-type ancillas are folded
    into it.
    """

    kind: str
    qubits: tuple[int, ...]
    basis: str = "Z"


# The four CNOT layers of a surface code round, as (drow, dcol).
ZIGZAG = (("N", (-1, 0)), ("W", (0, -1)), ("E", (0, 1)), ("S", (1, 0)))


@dataclass(frozen=True, eq=False)
class CodeSpec:
    kind: CodeKind
    order_n: int
    data_qubits: tuple[int, ...]
    ancilla_qubits: tuple[int, ...]
    stabilizers: tuple[PauliString, ...]
    stabilizer_types: tuple[str, ...]
    logical_x: PauliString
    logical_z: PauliString
    schedule: tuple[tuple[Op, ...], ...]
    coords: dict[int, tuple[int, int]] = field(repr=False)

    @property
    def distance(self) -> int:
        return 2 * self.order_n + 1

    @property
    def n_data(self) -> int:
        return len(self.data_qubits)

    @property
    def n_ancilla(self) -> int:
        return len(self.ancilla_qubits)

    @property
    def total_qubits(self) -> int:
        return self.n_data + self.n_ancilla

    def data_position(self) -> dict[int, int]:
        """Global qubit index -> position in ``data_qubits``."""
        return {q: i for i, q in enumerate(self.data_qubits)}

    def ancilla_position(self) -> dict[int, int]:
        return {q: i for i, q in enumerate(self.ancilla_qubits)}

    def stabilizer_supports(self) -> list[list[int]]:
        return [s.support() for s in self.stabilizers]

    def parity_check_matrix(self, stab_type: str) -> np.ndarray:
        """Rows: stabilizers of ``stab_type`` in ancilla order (others zero)."""
        h = np.zeros((self.n_ancilla, self.n_data), dtype=np.uint8)
        for i, (s, t) in enumerate(zip(self.stabilizers, self.stabilizer_types)):
            if t == stab_type:
                h[i] = s.x | s.z
        return h

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "order_n": self.order_n,
            "distance": self.distance,
            "n_data": self.n_data,
            "n_ancilla": self.n_ancilla,
            "total_qubits": self.total_qubits,
            "qubits": [
                {
                    "index": q,
                    "coord": list(self.coords[q]),
                    "role": "data" if q in set(self.data_qubits) else "ancilla",
                }
                for q in sorted(self.coords)
            ],
            "stabilizers": [
                {
                    "ancilla": a,
                    "type": t,
                    "data_support": [self.data_qubits[i] for i in s.support()],
                    "pauli": s.label(),
                }
                for a, s, t in zip(self.ancilla_qubits, self.stabilizers, self.stabilizer_types)
            ],
            "logical_x": [self.data_qubits[i] for i in self.logical_x.support()],
            "logical_z": [self.data_qubits[i] for i in self.logical_z.support()],
            "schedule": [
                [{"kind": op.kind, "qubits": list(op.qubits), "basis": op.basis} for op in layer]
                for layer in self.schedule
            ],
        }


def _check_order(order_n: int) -> int:
    if isinstance(order_n, bool) or int(order_n) != order_n or order_n < 1:
        raise DomainError(f"order_n must be an integer >= 1, got {order_n!r}")
    return int(order_n)


def build_repetition(order_n: int) -> CodeSpec:
    """Bit-flip repetition code protecting against ``order_n`` X errors."""
    n = _check_order(order_n)
    n_data = 2 * n + 1
    data = tuple(2 * i for i in range(n_data))
    anc = tuple(2 * i + 1 for i in range(2 * n))
    stabs = tuple(PauliString.on_support(n_data, (i, i + 1), "Z") for i in range(2 * n))
    schedule = (
        tuple(Op("prepare", (a,)) for a in anc),
        tuple(Op("cnot", (data[i], a)) for i, a in enumerate(anc)),
        tuple(Op("cnot", (data[i + 1], a)) for i, a in enumerate(anc)),
        tuple(Op("measure", (a,)) for a in anc),
    )
    return CodeSpec(
        kind=CodeKind.REPETITION,
        order_n=n,
        data_qubits=data,
        ancilla_qubits=anc,
        stabilizers=stabs,
        stabilizer_types=("Z",) * len(anc),
        logical_x=PauliString.on_support(n_data, range(n_data), "X"),
        logical_z=PauliString.on_support(n_data, (0,), "Z"),
        schedule=schedule,
        coords={q: (0, q) for q in range(4 * n + 1)},
    )


def build_surface(order_n: int) -> CodeSpec:
    """Unrotated surface code on a ``(4n+1) x (4n+1)`` grid."""
    n = _check_order(order_n)
    side = 4 * n + 1

    def index(r: int, c: int) -> int:
        return r * side + c

    sites = [(r, c) for r in range(side) for c in range(side)]
    data_sites = [rc for rc in sites if sum(rc) % 2 == 0]
    anc_sites = [rc for rc in sites if sum(rc) % 2 == 1]
    data = tuple(index(*rc) for rc in data_sites)
    pos = {rc: i for i, rc in enumerate(data_sites)}
    n_data = len(data)

    anc = []
    stabs = []
    types = []
    for r, c in anc_sites:
        kind = "Z" if r % 2 == 1 else "X"
        nbrs = [(r + dr, c + dc) for _, (dr, dc) in ZIGZAG]
        support = [pos[rc] for rc in nbrs if rc in pos]
        anc.append(index(r, c))
        stabs.append(PauliString.on_support(n_data, support, kind))
        types.append(kind)

    prepare = tuple(
        Op("prepare", (index(r, c),), "Z" if r % 2 == 1 else "X") for r, c in anc_sites
    )
    measure = tuple(
        Op("measure", (index(r, c),), "Z" if r % 2 == 1 else "X") for r, c in anc_sites
    )
    cnot_layers = []
    for _, (dr, dc) in ZIGZAG:
        layer = []
        for r, c in anc_sites:
            nb = (r + dr, c + dc)
            if nb not in pos:
                continue
            a, d = index(r, c), index(*nb)
            # Z checks copy data X onto the ancilla; X checks copy ancilla X onto data.
            layer.append(Op("cnot", (d, a) if r % 2 == 1 else (a, d)))
        cnot_layers.append(tuple(layer))

    return CodeSpec(
        kind=CodeKind.SURFACE,
        order_n=n,
        data_qubits=data,
        ancilla_qubits=tuple(anc),
        stabilizers=tuple(stabs),
        stabilizer_types=tuple(types),
        logical_x=PauliString.on_support(n_data, [pos[(r, 0)] for r in range(0, side, 2)], "X"),
        logical_z=PauliString.on_support(n_data, [pos[(0, c)] for c in range(0, side, 2)], "Z"),
        schedule=(prepare, *cnot_layers, measure),
        coords={index(r, c): (r, c) for r, c in sites},
    )


def build_code(kind: CodeKind | str, order_n: int) -> CodeSpec:
    kind = CodeKind(kind)
    if kind is CodeKind.REPETITION:
        return build_repetition(order_n)
    return build_surface(order_n)


def check_code(code: CodeSpec) -> list[str]:
    """Return a list of violated structural invariants (empty when valid)."""
    problems = []
    for (i, a), (j, b) in itertools.combinations(enumerate(code.stabilizers), 2):
        if not commutes(a, b):
            problems.append(f"stabilizers {i} and {j} anticommute")
    for i, s in enumerate(code.stabilizers):
        if not commutes(s, code.logical_x):
            problems.append(f"logical X anticommutes with stabilizer {i}")
        if not commutes(s, code.logical_z):
            problems.append(f"logical Z anticommutes with stabilizer {i}")
    if commutes(code.logical_x, code.logical_z):
        problems.append("logical X and Z commute")
    problems.extend(check_schedule(code))
    return problems


def check_schedule(code: CodeSpec) -> list[str]:
    """Layer disjointness, prepare-before-use, and measurement coverage.

    Also checks that every X-type and Z-type check sharing data qubits
    interleave their CNOTs compatibly: the number of shared qubits the X
    check touches first must be even, or the simultaneous measurement
    would not measure the stabilizers.
    """
    problems = []
    anc = set(code.ancilla_qubits)
    prepared: set[int] = set()
    measured: set[int] = set()
    first_touch: dict[tuple[int, int], int] = {}
    for t, layer in enumerate(code.schedule):
        seen: set[int] = set()
        for op in layer:
            for q in op.qubits:
                if q in seen:
                    problems.append(f"qubit {q} used twice in layer {t}")
                seen.add(q)
            if op.kind == "prepare":
                prepared.add(op.qubits[0])
            elif op.kind == "measure":
                measured.add(op.qubits[0])
            elif op.kind == "cnot":
                for q in op.qubits:
                    if q in anc and q not in prepared:
                        problems.append(f"ancilla {q} used before preparation in layer {t}")
                a = op.qubits[0] if op.qubits[0] in anc else op.qubits[1]
                d = op.qubits[1] if a == op.qubits[0] else op.qubits[0]
                first_touch[(a, d)] = t
    if measured != anc:
        problems.append("not every ancilla is measured each round")

    types = dict(zip(code.ancilla_qubits, code.stabilizer_types))
    touched: dict[int, dict[int, int]] = {}
    for (a, d), t in first_touch.items():
        touched.setdefault(a, {})[d] = t
    for ax, az in itertools.product(code.ancilla_qubits, repeat=2):
        if types[ax] != "X" or types[az] != "Z":
            continue
        shared = set(touched.get(ax, {})) & set(touched.get(az, {}))
        if shared and sum(touched[ax][d] < touched[az][d] for d in shared) % 2:
            problems.append(f"checks {ax} (X) and {az} (Z) interleave incompatibly")
    return problems


@dataclass(frozen=True)
class TruthTableRow:
    input_bits: tuple[int, ...]
    parities: tuple[int, ...]
    decodable: bool
    decoded_error: tuple[int, ...] | None

    @property
    def parity_AB(self) -> int:
        return self.parities[0]

    @property
    def parity_BC(self) -> int:
        return self.parities[1]

    @property
    def weight(self) -> int:
        return sum(self.input_bits)


def repetition_truth_table(n_bits: int) -> list[TruthTableRow]:
    """All inputs of an ``n_bits`` classical repetition code and their parities.

    Rows are ordered by flip count, then lexicographically, so the first
    ``sum(C(n_bits, k) for k <= (n_bits-1)/2)`` rows are the decodable ones.
    Bit 0 (``A``) is the leftmost character.
    """
    if isinstance(n_bits, bool) or int(n_bits) != n_bits or n_bits % 2 == 0 or not 3 <= n_bits <= 15:
        raise DomainError(f"n_bits must be odd and in [3, 15], got {n_bits!r}")
    n_bits = int(n_bits)
    t = (n_bits - 1) // 2

    inputs = list(itertools.product((0, 1), repeat=n_bits))

    def parities(bits: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(bits[i] ^ bits[i + 1] for i in range(n_bits - 1))

    # Lowest-weight error for each syndrome; ties are impossible for odd n_bits.
    best: dict[tuple[int, ...], tuple[int, ...]] = {}
    for bits in inputs:
        s = parities(bits)
        if s not in best or sum(bits) < sum(best[s]):
            best[s] = bits

    rows = []
    for bits in sorted(inputs, key=lambda b: (sum(b), b)):
        ok = sum(bits) <= t
        s = parities(bits)
        rows.append(TruthTableRow(bits, s, ok, best[s] if ok else None))
    return rows


def decodable_count(n_bits: int) -> int:
    return sum(comb(n_bits, k) for k in range((n_bits - 1) // 2 + 1))
