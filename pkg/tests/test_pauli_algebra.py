import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lambdaforge.errors import DimensionError, DomainError
from lambdaforge.pauli_algebra import (
    PauliString,
    all_paulis,
    commutator_is_zero,
    commutator_report,
    commutes,
    multiply,
)

P = PauliString.from_label


def test_x_times_z_is_minus_i_y():
    assert multiply(P("X"), P("Z")) == P("-iY")
    assert multiply(P("Z"), P("X")) == P("+iY")
    # XZ = -ZX
    xz, zx = multiply(P("X"), P("Z")), multiply(P("Z"), P("X"))
    assert xz.same_operator(zx) and (xz.phase - zx.phase) % 4 == 2


def test_identity_is_neutral():
    for p in all_paulis(2, with_phases=True):
        assert multiply(PauliString.identity(2), p) == p
        assert multiply(p, PauliString.identity(2)) == p


def test_two_qubit_parities_commute():
    xx, zz = P("XX"), P("ZZ")
    assert multiply(xx, zz) == multiply(zz, xx)
    assert commutes(xx, zz)
    assert commutator_is_zero(xx, zz)


def test_single_flips_do_not_commute():
    assert not commutes(P("X"), P("Z"))
    assert not commutator_is_zero(P("XI"), P("ZI"))


def test_identity_commutes_with_everything():
    assert all(commutes(p, PauliString.identity(2)) for p in all_paulis(2))


def test_exhaustive_two_qubit_agreement():
    pairs = list(itertools.product(all_paulis(2), repeat=2))
    assert len(pairs) == 256
    assert sum(commutes(a, b) == commutator_is_zero(a, b) for a, b in pairs) == 256


@pytest.mark.parametrize("n", [1, 2, 3])
def test_products_differ_by_sign_of_commutation(n):
    for a, b in itertools.product(all_paulis(n), repeat=2):
        ab, ba = multiply(a, b), multiply(b, a)
        assert ab.same_operator(ba)
        assert ((ab.phase - ba.phase) % 4 == 0) == commutes(a, b)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_commutes_symmetric_reflexive_and_squares(n):
    ps = list(all_paulis(n, with_phases=True))
    for a in ps:
        assert commutes(a, a)
        sq = multiply(a, a)
        assert not sq.x.any() and not sq.z.any()
        assert sq.phase in (0, 2)
    for a, b in itertools.product(all_paulis(n), repeat=2):
        assert commutes(a, b) == commutes(b, a)


def test_hermitian_paulis_square_to_plus_identity():
    for p in all_paulis(3):
        assert multiply(p, p) == PauliString.identity(3)


pauli_labels = st.integers(1, 5).flatmap(
    lambda n: st.tuples(*[st.text("IXYZ", min_size=n, max_size=n)] * 3)
)


@given(pauli_labels, st.integers(0, 3), st.integers(0, 3))
def test_multiplication_is_associative(labels, pa, pb):
    a, b, c = (P(lb) for lb in labels)
    a = PauliString(a.x, a.z, a.phase + pa)
    b = PauliString(b.x, b.z, b.phase + pb)
    assert multiply(multiply(a, b), c) == multiply(a, multiply(b, c))


@pytest.mark.parametrize("label", ["+XIZ", "-iYY", "+iZ", "-XYZI", "+IIII"])
def test_label_round_trip(label):
    assert P(label).label() == label


def test_y_convention():
    y = P("Y")
    assert y.x[0] == 1 and y.z[0] == 1 and y.phase == 1
    assert multiply(P("+i" + "I"), multiply(P("X"), P("Z"))) == y


def test_dimension_errors():
    with pytest.raises(DimensionError):
        multiply(P("X"), P("XX"))
    with pytest.raises(DimensionError):
        commutes(P("X"), P("XX"))
    with pytest.raises(DimensionError):
        commutator_is_zero(P("XZ"), P("X"))


def test_bad_labels():
    for bad in ["", "XQ", "++X", "-"]:
        with pytest.raises(DomainError):
            P(bad)


def test_tensor_order_qubit_zero_leftmost():
    p = PauliString.single(3, 0, "X")
    assert p.label() == "+XII"
    assert np.array_equal(p.x, [1, 0, 0])


def test_commutator_report():
    rep = commutator_report(2)
    assert rep["ok"] and rep["pairs"] == 256
    assert rep["commutes(XX,ZZ)"] and not rep["commutes(X,Z)"]
