from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from artifact.coeff import (
    Infeasible, Q, RingSpec, SparseMatrix, UnsupportedRingError, Z, Z2, diagonal_matrix,
    nullspace_field, rank, smith_normal_form, solve_linear, vec_add_into, vec_canon,
)


def small_matrices(max_dim=5, lo=-4, hi=4):
    return st.integers(1, max_dim).flatmap(
        lambda r: st.integers(1, max_dim).flatmap(
            lambda c: st.lists(st.lists(st.integers(lo, hi), min_size=c, max_size=c),
                               min_size=r, max_size=r)))


def test_parse_and_names():
    for text in ("z", "q", "z2", "zp:7"):
        assert RingSpec.parse(text).name == text
    with pytest.raises(ValueError):
        RingSpec.parse("zp:6")
    with pytest.raises(ValueError):
        RingSpec.parse("reals")


def test_field_arithmetic():
    F5 = RingSpec.prime_field(5)
    assert F5.mul(F5.inv(3), 3) == 1
    assert Q.inv(4) == Fraction(1, 4)
    assert Z.sign(3) == -1 and Z2.sign(3) == 1
    with pytest.raises(UnsupportedRingError):
        Z.inv(2)
    assert F5.canon(Fraction(1, 2)) == 3


def test_scalar_serialization_roundtrip(ring):
    for x in (0, 1, 2, -3):
        assert ring.parse_scalar(ring.serialize_scalar(x)) == ring.canon(x)
    assert Q.parse_scalar(Q.serialize_scalar(Fraction(-7, 3))) == Fraction(-7, 3)


def test_vectors_drop_zeros():
    acc = {"a": 1}
    vec_add_into(Z2, acc, {"a": 1, "b": 1})
    assert acc == {"b": 1}
    assert vec_canon(Z, {"x": 0, "y": 2}) == {"y": 2}


def test_smith_normal_form_known():
    A = SparseMatrix.from_dense([[2, 4, 4], [-6, 6, 12], [10, -4, -16]], Z)
    factors, U, V = smith_normal_form(A)
    assert factors == (2, 6, 12)
    D = U.matmul(A, Z).matmul(V, Z)
    assert D.same_as(diagonal_matrix(factors, 3, 3))


@given(small_matrices())
def test_smith_normal_form_properties(rows):
    A = SparseMatrix.from_dense(rows, Z)
    factors, U, V = smith_normal_form(A)
    assert U.matmul(A, Z).matmul(V, Z).same_as(diagonal_matrix(factors, A.rows, A.cols))
    assert abs(U.det(Z)) == 1 and abs(V.det(Z)) == 1
    nz = [f for f in factors if f]
    assert all(f > 0 for f in nz)
    assert all(b % a == 0 for a, b in zip(nz, nz[1:]))
    assert len(nz) == rank(A, Z)


def test_smith_rejects_fields():
    with pytest.raises(UnsupportedRingError):
        smith_normal_form(SparseMatrix.identity(2, Q), Q)


def test_rank_depends_on_characteristic():
    A = SparseMatrix.from_dense([[1, 1], [1, -1]], Z)
    assert rank(A, Z) == 2 and rank(A, Q) == 2
    assert rank(SparseMatrix.from_dense([[1, 1], [1, 1]], Z2), Z2) == 1


@given(small_matrices(lo=-2, hi=2), st.sampled_from([Q, Z2, RingSpec.prime_field(3)]))
def test_nullspace_over_fields(rows, R):
    A = SparseMatrix.from_dense(rows, R)
    basis = nullspace_field(A, R)
    assert len(basis) == A.cols - rank(A, R)
    for v in basis:
        assert not A.apply(v, R)


@given(small_matrices(lo=-3, hi=3), st.sampled_from([Z, Q, Z2]), st.data())
def test_solve_linear_solution_or_certificate(rows, R, data):
    A = SparseMatrix.from_dense(rows, R)
    b = data.draw(st.lists(st.integers(-3, 3), min_size=A.rows, max_size=A.rows))
    sol = solve_linear(A, b, R)
    if isinstance(sol, Infeasible):
        if R.is_field:
            assert sol.verify(A, b, R)
    else:
        image = A.apply(dict(enumerate(sol)), R)
        assert [image.get(i, R.zero()) for i in range(A.rows)] == [R.canon(v) for v in b]


def test_infeasible_over_z_without_rational_obstruction():
    A = SparseMatrix.from_dense([[2]], Z)
    sol = solve_linear(A, [1], Z)
    assert isinstance(sol, Infeasible)
    assert sol.certificate is None and sol.reason
    assert solve_linear(A, [1], Q) == [Fraction(1, 2)]


def test_least_solution_over_field():
    A = SparseMatrix.from_dense([[1, 1, 0]], Z2)
    assert solve_linear(A, [1], Z2) == [1, 0, 0]
