import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pauli_compress.pauli import (
    PauliString,
    PauliSum,
    commutes,
    multiply,
    overlap_with_zero,
    weight,
)

labels = lambda n: st.text(alphabet="IXYZ", min_size=n, max_size=n)  # noqa: E731


def P(label):
    return PauliString.from_label(label)


def test_weight_examples():
    assert weight(P("IIII")) == 0
    assert weight(P("IXZI")) == 2
    assert weight(P("Z" * 12)) == 12


def test_label_round_trip_and_site_order():
    p = P("XIZY")
    assert p.label == "XIZY"
    assert p.symbol(0) == "X" and p.symbol(3) == "Y"
    assert p.support() == [0, 2, 3]
    assert PauliString.from_sites(4, {0: "X", 2: "Z", 3: "Y"}) == p


def test_to_matrix_site_zero_is_bit_zero():
    # X on site 0 flips the least significant bit of the basis index
    m = P("XI").to_matrix()
    assert m[1, 0] == 1 and m[2, 0] == 0


def test_commutes_examples():
    assert commutes(P("XI"), P("IZ"))
    assert not commutes(P("X"), P("Y"))
    assert commutes(P("XY"), P("YX"))
    a, b = P("XY").to_matrix(), P("YX").to_matrix()
    assert np.allclose(a @ b, b @ a)


def test_multiply_examples():
    assert multiply(P("X"), P("Y")) == (P("Z"), 1j)
    assert multiply(P("XYZ"), P("III")) == (P("XYZ"), 1)


def test_multiply_xz_yi_matches_matrices():
    r, phase = multiply(P("XZ"), P("YI"))
    assert r == P("ZZ")
    assert np.allclose(P("XZ").to_matrix() @ P("YI").to_matrix(), phase * r.to_matrix())
    assert phase == 1j


def test_length_mismatch_is_structural_error():
    with pytest.raises(ValueError):
        commutes(P("X"), P("XX"))
    with pytest.raises(ValueError):
        multiply(P("X"), P("XX"))


@pytest.mark.parametrize("n", [1, 2])
def test_multiply_matches_matrices_exhaustively(n):
    for a, b in itertools.product(range(4**n), repeat=2):
        p, q = PauliString(n, a), PauliString(n, b)
        r, phase = multiply(p, q)
        assert np.allclose(p.to_matrix() @ q.to_matrix(), phase * r.to_matrix())


def test_multiply_associative_n3():
    strings = [PauliString(3, c) for c in range(64)]
    rng = np.random.default_rng(3)
    for _ in range(400):
        a, b, c = (strings[i] for i in rng.integers(64, size=3))
        ab, p1 = multiply(a, b)
        left, p2 = multiply(ab, c)
        bc, q1 = multiply(b, c)
        right, q2 = multiply(a, bc)
        assert left == right
        assert p1 * p2 == q1 * q2


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(labels(n), labels(n))))
def test_commutes_agrees_with_group_commutator(pair):
    p, q = P(pair[0]), P(pair[1])
    pq, a = multiply(p, q)
    qp, b = multiply(q, p)
    assert pq == qp
    assert commutes(p, q) == (a == b)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8).flatmap(lambda n: st.tuples(labels(n), labels(n))))
def test_product_weight_is_subadditive(pair):
    p, q = P(pair[0]), P(pair[1])
    assert weight(multiply(p, q)[0]) <= weight(p) + weight(q)


def test_large_register_uses_exact_integers():
    label = "X" + "I" * 38 + "Z"
    p = P(label)
    assert p.weight == 2 and p.label == label
    s = PauliSum.from_dict({label: 0.5, "Z" * 40: 0.25})
    assert overlap_with_zero(s) == 0.25


def test_overlap_with_zero_examples():
    assert overlap_with_zero(PauliSum.from_dict({"III": 1.0})) == 1.0
    assert overlap_with_zero(PauliSum.from_dict({"X": 0.7})) == 0.0
    s = PauliSum.from_dict({"ZI": 0.5, "ZZ": 0.25, "IY": 0.3})
    assert overlap_with_zero(s) == pytest.approx(0.75)


def test_overlap_with_zero_is_expectation_in_zero_state():
    rng = np.random.default_rng(0)
    terms = {PauliString(3, c).label: float(rng.normal()) for c in rng.choice(64, 20, replace=False)}
    s = PauliSum.from_dict(terms)
    assert overlap_with_zero(s) == pytest.approx(s.to_matrix()[0, 0].real)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=8, max_size=8), st.floats(-3, 3))
def test_overlap_with_zero_is_linear(values, scale):
    labels_ = ["II", "ZI", "IZ", "ZZ", "XI", "IY", "XY", "ZX"]
    a = PauliSum.from_dict(dict(zip(labels_, values)))
    b = PauliSum.from_dict(dict(zip(labels_, [scale * v for v in values])))
    assert overlap_with_zero(b) == pytest.approx(scale * overlap_with_zero(a), abs=1e-12)


def test_pauli_sum_merges_and_drops_zeros():
    s = PauliSum.from_terms(2, [("XZ", 0.5, 3), ("XZ", 0.25, 1), ("YY", 0.0)])
    assert len(s) == 1
    term = s["XZ"]
    assert term.coefficient == 0.75 and term.sine_count == 1
    assert "YY" not in s


def test_pauli_sum_rejects_duplicates():
    with pytest.raises(ValueError):
        PauliSum(1, [1, 1], [0.1, 0.2])
