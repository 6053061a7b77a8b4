import itertools
from math import comb

import numpy as np
import pytest

from lambdaforge.codes import (
    CodeKind,
    build_code,
    build_repetition,
    build_surface,
    check_code,
    check_schedule,
    repetition_truth_table,
)
from lambdaforge.errors import DomainError
from lambdaforge.pauli_algebra import PauliString, commutes


@pytest.mark.parametrize("n,data,stabs,total", [(1, 3, 2, 5), (2, 5, 4, 9), (4, 9, 8, 17)])
def test_repetition_counts(n, data, stabs, total):
    code = build_repetition(n)
    assert code.n_data == data
    assert len(code.stabilizers) == stabs
    assert code.n_ancilla == stabs
    assert code.total_qubits == total


@pytest.mark.parametrize("n,total,data,anc", [(1, 25, 13, 12), (2, 81, 41, 40), (17, 4761, 2381, 2380)])
def test_surface_counts(n, total, data, anc):
    code = build_surface(n)
    assert code.total_qubits == total
    d = 2 * n + 1
    assert code.distance == d
    assert code.n_data == data == d * d + (d - 1) ** 2
    assert code.n_ancilla == anc == 2 * d * (d - 1)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_surface_grid_is_4n_plus_1_squared(n):
    assert build_surface(n).total_qubits == (4 * n + 1) ** 2


@pytest.mark.parametrize("kind", list(CodeKind))
@pytest.mark.parametrize("n", [1, 2, 3])
def test_structural_invariants(kind, n):
    assert check_code(build_code(kind, n)) == []


def test_repetition_stabilizers_are_adjacent_zz():
    code = build_repetition(2)
    assert [s.label() for s in code.stabilizers] == ["+ZZIII", "+IZZII", "+IIZZI", "+IIIZZ"]
    assert code.logical_z.label() == "+ZIIII"
    assert code.logical_x.label() == "+XXXXX"


def test_repetition_schedule_shape():
    code = build_repetition(1)
    kinds = [[op.kind for op in layer] for layer in code.schedule]
    assert kinds == [["prepare"] * 2, ["cnot"] * 2, ["cnot"] * 2, ["measure"] * 2]
    # data i then data i+1 onto ancilla i
    assert [op.qubits for op in code.schedule[1]] == [(0, 1), (2, 3)]
    assert [op.qubits for op in code.schedule[2]] == [(2, 1), (4, 3)]


def test_surface_stabilizer_weights():
    code = build_surface(2)
    weights = sorted({s.weight() for s in code.stabilizers})
    assert weights == [3, 4]
    assert sum(t == "Z" for t in code.stabilizer_types) == code.n_ancilla // 2
    assert len(code.schedule) == 6


def test_surface_logicals_are_straight_chains():
    code = build_surface(1)
    zq = [code.coords[code.data_qubits[i]] for i in code.logical_z.support()]
    xq = [code.coords[code.data_qubits[i]] for i in code.logical_x.support()]
    assert zq == [(0, 0), (0, 2), (0, 4)]
    assert xq == [(0, 0), (2, 0), (4, 0)]


def test_schedule_checker_catches_clash():
    code = build_surface(1)
    layer = code.schedule[1]
    bad = code.__class__(**{**code.__dict__, "schedule": (code.schedule[0], layer + layer[:1], *code.schedule[2:])})
    assert any("used twice" in p for p in check_schedule(bad))


def _min_logical_weight(code):
    """Smallest X error with trivial syndrome that flips logical Z (brute force)."""
    n = code.n_data
    z_checks = [s for s, t in zip(code.stabilizers, code.stabilizer_types) if t == "Z"]
    for w in range(1, n + 1):
        for support in itertools.combinations(range(n), w):
            e = PauliString.on_support(n, support, "X")
            if all(commutes(e, s) for s in z_checks) and not commutes(e, code.logical_z):
                return w
    return None


@pytest.mark.parametrize("n", [1, 2, 3])
def test_repetition_distance(n):
    assert _min_logical_weight(build_repetition(n)) == 2 * n + 1


def test_surface_distance_n1():
    assert _min_logical_weight(build_surface(1)) == 3


def test_order_must_be_positive():
    for bad in (0, -1, 1.5):
        with pytest.raises(DomainError):
            build_repetition(bad)
        with pytest.raises(DomainError):
            build_surface(bad)


def test_truth_table_three_bits():
    rows = repetition_truth_table(3)
    assert len(rows) == 8
    top = [r.input_bits for r in rows[:4]]
    assert top == [(0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0)]
    assert [r.decodable for r in rows] == [True] * 4 + [False] * 4
    assert rows[0].parities == (0, 0) and rows[0].decoded_error == (0, 0, 0)
    for r in rows[:4]:
        assert r.decoded_error == r.input_bits
    for r in rows[4:]:
        assert r.decoded_error is None
    assert (rows[2].parity_AB, rows[2].parity_BC) == (1, 1)


def test_truth_table_five_bits_decodable_count():
    rows = repetition_truth_table(5)
    assert len(rows) == 32
    # oracle: count inputs of weight <= 2 directly
    expected = sum(1 for bits in itertools.product((0, 1), repeat=5) if sum(bits) <= 2)
    assert expected == comb(5, 0) + comb(5, 1) + comb(5, 2) == 16
    assert sum(r.decodable for r in rows) == expected


def test_truth_table_rejects_even_and_large():
    for bad in (2, 4, 1, 17):
        with pytest.raises(DomainError):
            repetition_truth_table(bad)


def test_layout_dict_is_serialisable():
    import json

    d = build_surface(1).to_dict()
    assert json.loads(json.dumps(d))["total_qubits"] == 25
    assert len(d["qubits"]) == 25
    assert sum(q["role"] == "ancilla" for q in d["qubits"]) == 12
