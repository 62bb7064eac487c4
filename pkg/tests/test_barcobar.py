import random

import pytest
from hypothesis import given, strategies as st

from artifact.barcobar import (
    COUNTEREXAMPLE_F2_VALUE, COUNTEREXAMPLE_F3_CYCLE, MultiplicativeMorphism, TensorDiffraction,
    _counterexample_theta, _solve_boundary, action_module_map, bar, bar_identity_family,
    bar_induce, bar_linearize, bar_verify, check_diffracted, check_module_square,
    check_w_resolution, cobar, compose_multiplicative, counterexample_suite, dcsh_extend,
    diffracted_instances, hopf_test_coalgebra, identity_epsilon, identity_multiplicative,
    induce, kleisli_compose, linearize, precompose_comonoid, precompose_multiplicative,
    random_bar_family, random_family, random_multiplicative, tensor_coalgebra,
)
from artifact.coeff import Infeasible, Z, Z2
from artifact.diffract import AWCoRing, Diffraction, associative_comonoid
from artifact.operad import ChainAlgebra, ChainCoalgebra, StructureError, nonrealizable_coalgebra, reduce_counital
from artifact.symmetric import TruncationProfile

T3 = TruncationProfile(3)


def pair(R=Z):
    C = ChainCoalgebra(R, {"a": 2, "b": 3, "c": 4}, {}, {"c": {("a", "a"): 1}}, name="C")
    Cp = ChainCoalgebra(R, {"p": 2, "q": 3, "r": 4}, {"r": {"q": 1}}, {"r": {("p", "p"): 1}}, name="C'")
    return C, Cp


def interval(R=Z):
    return ChainCoalgebra(R, {"e0": 0, "e1": 1}, {"e1": {"e0": 1}},
                          {"e0": {("e0", "e0"): 1}, "e1": {("e1", "e0"): 1}}, name="E")


def test_cobar_differential():
    O = cobar(reduce_counital(nonrealizable_coalgebra()), 3)
    assert O.verify(12).passed
    C = ChainCoalgebra(Z, {"u": 2, "w": 4}, {}, {"w": {("u", "u"): 1}})
    # d(s^{-1}w) = ± s^{-1}u · s^{-1}u
    assert set(cobar(C, 3).generator_diff("w")) == {("u", "u")}


def test_cobar_rejects_counital():
    with pytest.raises(StructureError):
        cobar(nonrealizable_coalgebra(), 3)


def test_bar_coalgebra():
    A = ChainAlgebra(Z, {"a": 1, "b": 2}, {}, {("a", "a"): {"b": 1}})
    B = bar(A, 3)
    assert bar_verify(B).passed
    assert B.diff(("a", "a")) == {("b",): 1} or B.diff(("a", "a")) == {("b",): -1}


@pytest.mark.parametrize("which", ["J", "A"])
def test_cobar_duality_roundtrips(which):
    C, Cp = pair()
    D = AWCoRing(T3, Z) if which == "J" else Diffraction(associative_comonoid(T3, Z))
    O, Op = cobar(C, 3), cobar(Cp, 3)
    TD = TensorDiffraction(C, D)
    rng = random.Random(11)
    for _ in range(4):
        th = random_family(TD, Cp, 3, rng, [1, 2, 3])
        assert th.check_equivariance(3) is None
        back = linearize(induce(th, O, Op), D, 3)
        assert th.family_equals(back, [1, 2, 3]) is None
        psi = random_multiplicative(O, D.X, Op, rng, 3, 2)
        assert psi.equals(induce(linearize(psi, D, 6), O, Op), 3, 2, 6) is None


def test_induction_is_natural_in_the_comonoid():
    C, Cp = pair()
    F = AWCoRing(T3, Z)
    DA = Diffraction(associative_comonoid(T3, Z))
    O, Op = cobar(C, 3), cobar(Cp, 3)
    beta = lambda y: {("w", (0,)): 1}
    th = random_family(TensorDiffraction(C, DA), Cp, 3, random.Random(2), [1, 2, 3])
    lhs = induce(precompose_comonoid(th, beta, F), O, Op)
    rhs = precompose_multiplicative(induce(th, O, Op), beta, F.X)
    assert lhs.equals(rhs, 3, 3, 8) is None


def test_identity_correspondence():
    C, _ = pair()
    F = AWCoRing(T3, Z)
    O = cobar(C, 3)
    eps = identity_epsilon(TensorDiffraction(C, F))
    assert induce(eps, O, O).equals(identity_multiplicative(O, F.X), 1, 3, 8) is None
    assert linearize(identity_multiplicative(O, F.X), F, 3).equals(eps, 3, 8) is None


def test_linearization_detects_chain_failure():
    C = ChainCoalgebra(Z, {"a": 2, "b": 2, "c": 4}, {}, {"c": {("a", "b"): 1}})
    O = cobar(C, 4)
    F = AWCoRing(T3, Z)
    good = {"a": {(("a",),): 1}, "b": {(("b",),): 1}, "c": {(("c",),): 1, (("a", "a", "b"),): 1}}
    bad = {"a": {(("a",),): 1}, "b": {(("b",),): 1}, "c": {(("c",),): 2}}
    p_good = MultiplicativeMorphism(O, F.X, O, lambda c, x: good[c])
    p_bad = MultiplicativeMorphism(O, F.X, O, lambda c, x: bad[c])
    assert p_good.check_chain(1, 3, 6) is None and linearize(p_good, F, 3).check_chain(3, 8) is None
    assert p_bad.check_chain(1, 3, 6) is not None and linearize(p_bad, F, 3).check_chain(3, 8) is not None


def test_kleisli_category():
    C = ChainCoalgebra(Z, {"a": 2, "b": 2, "c": 4}, {}, {"c": {("a", "b"): 1}})
    O = cobar(C, 4)
    F = AWCoRing(T3, Z)
    g1 = {"a": {(("a",),): 1}, "b": {(("b",),): 1}, "c": {(("c",),): 1, (("a", "a", "b"),): 1}}
    g2 = {"a": {(("a",),): -1}, "b": {(("b",),): 1}, "c": {(("c",),): -1, (("b", "a", "b"),): 1}}
    p1 = MultiplicativeMorphism(O, F.X, O, lambda c, x: g1[c])
    p2 = MultiplicativeMorphism(O, F.X, O, lambda c, x: g2[c])
    t1, t2 = linearize(p1, F, 3), linearize(p2, F, 3)
    k = kleisli_compose(t2, t1, F)
    assert induce(k, O, O).equals(compose_multiplicative(p2, p1), 1, 3, 6) is None
    eps = identity_epsilon(t1.source)
    assert kleisli_compose(eps, t1, F).family_equals(t1, [1, 2, 3]) is None
    assert kleisli_compose(t1, eps, F).family_equals(t1, [1, 2, 3]) is None
    lhs = kleisli_compose(t1, k, F)
    rhs = kleisli_compose(kleisli_compose(t1, t2, F), t1, F)
    assert lhs.family_equals(rhs, [1, 2]) is None


def test_dcsh_lift_with_contraction():
    E = interval()
    res = dcsh_extend({"e0": {"e0": 1}, "e1": {"e1": 1}}, E, E, 4, contraction={"e0": {"e1": 1}})
    assert res.ok and res.theta.check_chain(4) is None
    K = ChainCoalgebra(Z, {"a": 2, "b": 2, "c": 4}, {}, {"c": {("a", "b"): 1}})
    KE = tensor_coalgebra(K, E)
    h = {(k, "e0"): {(k, "e1"): (-1) ** K.degree(k)} for k in K.labels}
    tau = {"a": {("a", "e0"): 1, ("b", "e0"): 1}, "b": {("b", "e0"): 1}, "c": {("c", "e0"): 1}}
    res = dcsh_extend(tau, K, KE, 4, contraction=h)
    assert res.ok
    assert res.values[("c", ("j",), (2,))]  # τ is not multiplicative, so θ_2 is forced to be nonzero
    assert induce(res.theta, cobar(K, 3), cobar(KE, 3)).check_chain(1, 3, 6) is None


def test_dcsh_rejects_non_chain_tau():
    E = interval()
    with pytest.raises(StructureError):
        dcsh_extend({"e1": {"e1": 2}, "e0": {"e0": 1}}, E, E, 2)


def test_counterexample_suite_passes():
    rep = counterexample_suite()
    assert rep.passed, str(rep)
    assert len(rep.checks) == 6


def test_counterexample_resolution_fault():
    M = nonrealizable_coalgebra()
    theta = _counterexample_theta(M)
    assert check_w_resolution(M, theta, 13) is None
    dropped = lambda i, a: {} if (i, a) == (3, "v") else theta(i, a)
    assert check_w_resolution(M, dropped, 13) is not None
    # the transposed value T(v⊗x + y⊗v) is another valid choice; a lone term is not
    transposed = lambda i, a: {("x", "v"): 1, ("v", "y"): 1} if (i, a) == (3, "v") else theta(i, a)
    assert check_w_resolution(M, transposed, 13) is None
    halved = lambda i, a: {("v", "x"): 1} if (i, a) == (3, "v") else theta(i, a)
    assert check_w_resolution(M, halved, 13) is not None


def test_counterexample_obstruction_and_certificate():
    M = nonrealizable_coalgebra()
    MM = tensor_coalgebra(M, M)
    sol, A, b = _solve_boundary(MM, 3, 8, COUNTEREXAMPLE_F3_CYCLE)
    assert isinstance(sol, Infeasible) and sol.verify(A, b, Z2)
    tau = {c: dict(M.delta(c)) for c in M.labels}
    res = dcsh_extend(tau, M, MM, 3, prescribed={("w", 2): COUNTEREXAMPLE_F2_VALUE})
    assert not res.ok and res.obstruction.generator == ("w", 3)
    assert res.obstruction.cycle == COUNTEREXAMPLE_F3_CYCLE
    # a wrong prescribed value is caught instead of trusted
    with pytest.raises(StructureError):
        dcsh_extend(tau, M, MM, 2, prescribed={("w", 2): {(("1", "v"), ("z", "1")): 1}})


def test_hopf_action_and_diffracted_maps():
    O, act = hopf_test_coalgebra(Z)
    assert act.verify(3, 3).passed
    A = associative_comonoid(T3, Z)
    DA = Diffraction(A)
    f = {"p": {("p",): 1, ("p", "p"): 1}, "q": {("q",): 1, ("p", "q"): 2, ("q", "p"): -1}}
    for side in ("right", "balanced"):
        th = linearize(action_module_map(f, side, act, O, O, A), DA, 3)
        assert check_diffracted(th, side, act, O, O)
        assert check_module_square(induce(th, O, O), side, act, 3, 2, 2, 3)


def test_diffracted_verdicts_agree():
    for side in ("right", "balanced"):
        for name, th, O, act in diffracted_instances(side, random.Random(5), 8, T3, Z):
            a = check_diffracted(th, side, act, O, O).holds
            b = check_module_square(induce(th, O, O), side, act, 3, 2, 2, 3).holds
            assert a == b, name
            assert a == (name in ("zero", "action map"))


@given(st.integers(0, 10 ** 6))
def test_bar_duality_roundtrip_property(seed):
    A = ChainAlgebra(Z, {"a": 1, "b": 2}, {}, {("a", "a"): {"b": 1}})
    BA = bar(A, 4)
    fam = random_bar_family(A, A, 4, random.Random(seed))
    F = bar_induce(fam, A, A, BA, BA)
    assert F.check_comultiplicative() is None
    back = bar_linearize(F, A, 4)
    assert back == {k: v for k, v in fam.items() if v}
    assert bar_induce(back, A, A, BA, BA).equals(F) is None


def test_bar_identity_and_sign():
    A = ChainAlgebra(Z, {"a": 1, "b": 2}, {}, {("a", "a"): {"b": 1}})
    BA = bar(A, 4)
    Id = bar_induce(bar_identity_family(A), A, A, BA, BA)
    assert all(Id.apply(w) == {w: 1} for w in BA.labels) and Id.check_chain() is None
    # into A' with ∂e = b the quadratic term θ_2(a, a) = s·e makes Ind a chain map for one sign only
    Ap = ChainAlgebra(Z, {"a": 1, "b": 2, "e": 3}, {"e": {"b": 1}}, {})
    BAp = bar(Ap, 4)
    verdicts = {}
    for s in (1, -1, 0):
        fam = {("a",): {"a": 1}, ("b",): {"b": 1}}
        if s:
            fam[("a", "a")] = {"e": s}
        verdicts[s] = bar_induce(fam, A, Ap, BA, BAp).check_chain() is None
    assert sorted(verdicts.values()) == [False, False, True]
