import math
import random

import pytest
from hypothesis import given, strategies as st

from artifact.chain import homology
from artifact.coeff import Q, Z, Z2, RingSpec, vec_add_into
from artifact.diffract import (
    AWCoRing, Diffraction, MilgramMap, associative_comonoid, constant_comonoid, describe,
    diffracted_map, diffraction_bimodule, graded_comonoid_on_VX, j_comonoid, simplicial_faces,
    tor_complex,
)
from artifact.operad import associative_operad, verify_module
from artifact.symmetric import TruncationProfile, all_perms, compose

TR4 = TruncationProfile(4)


def coring(R, level=4):
    return AWCoRing(TruncationProfile(level), R)


def test_basis_sizes_are_free_orbits():
    # F(n) is Σ_n-free on 3^{n-1} generators
    F = coring(Z2, 5)
    assert [len(F.basis(n)) for n in range(1, 6)] == [math.factorial(n) * 3 ** (n - 1) for n in range(1, 6)]


def test_euler_characteristic_is_n_factorial():
    F = coring(Z, 5)
    for n in range(1, 6):
        chi = sum((-1) ** F.degree(f) for f in F.basis(n))
        assert chi == math.factorial(n)


def test_generators_and_degrees():
    F = coring(Z)
    assert F.degree(F.f(3)) == 2
    assert F.counit(F.f(1)) == (0,)
    assert F.diff(F.f(1)) == {}
    d2 = {describe(k): v for k, v in F.diff(F.f(2)).items()}
    assert d2 == {"f_1[0,1]": 1, "f_1[0] · f_1[1]": -1}


@pytest.mark.parametrize("R", [Z, Q, Z2, RingSpec.prime_field(3)], ids=lambda r: r.name)
def test_square_zero_through_level_four(R):
    F = coring(R)
    for n in range(1, 5):
        for f in F.basis(n):
            assert F.diff_vec(F.diff(f)) == {}, describe(f)


@given(st.integers(1, 4), st.randoms(use_true_random=False))
def test_psi_chain_and_coassociative_sampled(n, rnd):
    F = coring(Z)
    f = rnd.choice(F.basis(n))
    p = F.psi(f)
    assert F.diff_vec(p) == F.psi_vec(F.diff(f))
    assert F.psi_vec(p) == F.psi_lower_vec(p)


def test_psi_golden_level_two():
    F = coring(Z)
    assert {describe(k): v for k, v in F.psi(F.f(2)).items()} == {"f_1[f_2[0|1]]": 1, "f_2[f_1[0]|f_1[1]]": 1}


def test_counit_both_sides():
    F = coring(Q, 3)
    for n in range(1, 4):
        for f in F.basis(n):
            for side in (F.counit_top, F.counit_bottom):
                acc = {}
                for g, c in F.psi(f).items():
                    r = side(g)
                    if r is not None:
                        vec_add_into(Q, acc, F.canon_forest(r), c)
                assert acc == {f: 1}


def test_diagonal_closed_formula_matches_interchange():
    F = coring(Z)
    J = F.X
    q = MilgramMap(J, J, TR4)
    to_jj = diffracted_map(F, q.source, lambda x: {("t", ("j",), ("j",)): 1})
    for n in range(1, 4):
        assert q.check_chain(n) is None
        for f in F.basis(n):
            assert q.apply_vec(to_jj(f)) == F.diagonal(f)
    d1 = F.diagonal(F.f(1))
    assert d1 == {(F.f(1), F.f(1)): 1}
    d2 = {(describe(a), describe(b)): c for (a, b), c in F.diagonal(F.f(2)).items()}
    assert d2 == {("f_1[0,1]", "f_2[0|1]"): 1, ("f_2[0|1]", "f_1[0] · f_1[1]"): 1}


def test_interchange_is_natural_for_constant_comonoid():
    C = constant_comonoid(TR4, Z)
    J = j_comonoid(TR4, Z)
    q, qC = MilgramMap(J, J, TR4), MilgramMap(C, C, TR4)
    F = coring(Z)
    to_c = diffracted_map(F, Diffraction(C, TR4), lambda x: {("c", 1): 1})
    to_cc = diffracted_map(q.source, qC.source, lambda x: {("t", ("c", 1), ("c", 1)): 1})
    for n in range(1, 4):
        for f in q.level_one_basis(n):
            rhs = {}
            for (a, b), c in q.apply(f).items():
                for a2, d in to_c(a).items():
                    for b2, e in to_c(b).items():
                        rhs[(a2, b2)] = rhs.get((a2, b2), 0) + c * d * e
            assert qC.apply_vec(to_cc(f)) == {k: v for k, v in rhs.items() if v}


@pytest.mark.parametrize("R,N", [(Q, 4), (Z2, 4), (Z, 3), (RingSpec.prime_field(3), 3)], ids=str)
def test_homology_is_the_associative_operad(R, N):
    F = coring(R, N)
    for n in range(1, N + 1):
        H = homology(F.sequence.level(n))
        assert {d: g for d, g in H.groups.items() if g != (0, ())} == {0: (math.factorial(n), ())}


def test_tor_small_levels():
    F = coring(Z)
    for n in range(1, 5):
        ja = homology(tor_complex(F, "JA", n))
        jj = homology(tor_complex(F, "JJ", n))
        assert {d: g for d, g in ja.groups.items() if g != (0, ())} == ({0: (1, ())} if n == 1 else {})
        assert {d: g for d, g in jj.groups.items() if g != (0, ())} == {n - 1: (math.factorial(n), ())}
    with pytest.raises(ValueError):
        tor_complex(F, "AA", 2)


def test_diffraction_bimodule():
    tr = TruncationProfile(3)
    FB = diffraction_bimodule(AWCoRing(tr, Z), associative_operad(tr, Z))
    assert verify_module(FB, 3).passed


def test_vx_diagonal_coassociative():
    for X in (j_comonoid(TR4, Z), associative_comonoid(TR4, Z)):
        assert graded_comonoid_on_VX(Diffraction(X)).check_coassociative(range(1, 5)) is None
    D = Diffraction(j_comonoid(TR4, Z))
    V = graded_comonoid_on_VX(D)
    terms = V.delta(D.generator(("j",), (4,)))
    assert len(terms) == 3 and set(terms.values()) == {1}


def test_simplicial_faces():
    S = simplicial_faces(TruncationProfile(5), Z)
    assert S.check_identities(range(1, 6)) is None
    assert S.face(1, ((1, 1), (0, 1))) == {((2,), (0, 1)): 1}
    assert {d: g for d, g in homology(S.complex(1)).groups.items() if g != (0, ())} == {0: (1, ())}
    for n in range(2, 5):
        assert all(g == (0, ()) for g in homology(S.complex(n)).groups.values())


def test_diffraction_is_a_functor():
    A = associative_comonoid(TR4, Z)
    DA = Diffraction(A)
    rng = random.Random(4)
    t1 = {n: rng.choice(all_perms(n)) for n in range(1, 5)}
    t2 = {n: rng.choice(all_perms(n)) for n in range(1, 5)}
    b1 = lambda x: {("w", compose(x[1], t1[len(x[1])])): 1}
    b2 = lambda x: {("w", compose(x[1], t2[len(x[1])])): 1}
    b12 = lambda x: {k2: c * c2 for k, c in b2(x).items() for k2, c2 in b1(k).items()}
    F1, F2, F12 = (diffracted_map(DA, DA, b) for b in (b1, b2, b12))
    for n in range(1, 4):
        for f in DA.basis(n):
            mid = {}
            for g, c in F2(f).items():
                vec_add_into(Z, mid, F1(g), c)
            assert mid == F12(f)
            lhs, rhs = {}, {}
            for g, c in DA.diff(f).items():
                vec_add_into(Z, lhs, F1(g), c)
            for g, c in F1(f).items():
                vec_add_into(Z, rhs, DA.diff(g), c)
            assert lhs == rhs


class SignFaultCoring(AWCoRing):
    """Negates the splitting terms of the level-3 corolla."""

    def node_boundary(self, node):
        terms = super().node_boundary(node)
        x, blocks = node
        if sum(len(b) for b in blocks) == 3:
            return [(self.ring.neg(c), r) if len(r) == 2 else (c, r) for c, r in terms]
        return terms


def test_sign_fault_breaks_square_zero():
    F = SignFaultCoring(TR4, Z)
    bad = [f for f in F.basis(3) if F.diff_vec(F.diff(f))]
    assert bad
