import pytest
from hypothesis import given, strategies as st

from artifact.chain import (
    ChainComplex, InvalidComplexError, RingMismatchError, complex_from_function, decode_label,
    direct_sum, encode_label, homology, identity_map, map_from_function, shift,
    tensor_complexes,
)
from artifact.coeff import Q, Z, Z2


def circle(R):
    # cellular chains of RP^2: Z in degree 0, Z/2 in degree 1, 0 in degree 2
    return complex_from_function(R, {0: ["v"], 1: ["e"], 2: ["f"]},
                                 lambda l: {"e": 2} if l == "f" else {}, lower_bound=0)


def test_rp2_homology_depends_on_ring():
    H = homology(circle(Z))
    assert H.groups[0] == (1, ()) and H.torsion(1) == (2,) and H.is_zero(2)
    assert homology(circle(Q)).ranks(range(3)) == (1, 0, 0)
    assert homology(circle(Z2)).ranks(range(3)) == (1, 1, 1)


def test_square_nonzero_rejected():
    with pytest.raises(InvalidComplexError):
        complex_from_function(Z, {0: ["a"], 1: ["b"], 2: ["c"]},
                              lambda l: {"b": 1} if l == "c" else ({"a": 1} if l == "b" else {}))


def test_differential_must_stay_in_basis():
    with pytest.raises(InvalidComplexError):
        complex_from_function(Z, {1: ["b"]}, lambda l: {"missing": 1})


def test_json_roundtrip():
    C = circle(Z)
    D = ChainComplex.from_json(C.to_json())
    assert D.to_json() == C.to_json()
    assert homology(D).groups == homology(C).groups




labels = st.recursive(st.one_of(st.integers(-5, 5), st.text(max_size=3)),
                      lambda inner: st.lists(inner, max_size=3).map(tuple), max_leaves=8)


@given(labels)
def test_label_encoding_roundtrip(label):
    assert decode_label(encode_label(label)) == label


def test_kunneth_over_field():
    C = circle(Z2)
    T = tensor_complexes(C, C)
    assert T.check_square_zero() is None
    assert homology(T).ranks(range(5)) == (1, 2, 3, 2, 1)


def test_shift_and_sum():
    C = circle(Z)
    S = shift(C, 2)
    H = homology(S)
    assert H.rank(2) == 1 and H.torsion(3) == (2,)
    total, inc, pr = direct_sum(C, S)
    Ht = homology(total)
    assert Ht.rank(0) == 1 and Ht.rank(2) == 1 and Ht.torsion(1) == (2,) and Ht.torsion(3) == (2,)


def test_chain_maps():
    C = circle(Z)
    idm = identity_map(C)
    assert idm.check() is None
    double = map_from_function(C, C, 0, lambda l: {l: 2})
    assert double.check() is None
    assert idm.compose(double).equals(double)
    bad = map_from_function(C, C, 0, lambda l: {"f": 1} if l == "f" else {})
    assert bad.check() is not None


def test_ring_mismatch():
    with pytest.raises(RingMismatchError):
        tensor_complexes(circle(Z), circle(Q))
