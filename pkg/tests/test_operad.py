import pytest

from artifact.coeff import Z, Z2
from artifact.operad import (
    ChainAlgebra, ChainCoalgebra, Cosimplicial, OperadStructure, StructureError,
    associative_operad, augmentation_module, delta_word, dual_interior_splittings, embed_const,
    embed_T, nonrealizable_coalgebra, reduce_counital, regular_module, sphere_and_dual,
    sphere_operad, verify_cooperad_sphere, verify_module, verify_operad,
)
from artifact.symmetric import TruncationProfile

TR4 = TruncationProfile(4)


def test_associative_operad_axioms(ring):
    rep = verify_operad(associative_operad(TR4, ring), max_level=4)
    assert rep.passed, str(rep)


def test_gamma_substitutes_words():
    A = associative_operad(TR4, Z)
    # (1 0) ∘ ((0 1), (0)) = letters of block 1 then block 0
    assert A.gamma(("w", (1, 0)), [("w", (0, 1)), ("w", (0,))]) == {("w", (2, 0, 1)): 1}


def test_sphere_operad_and_cooperad(ring):
    S = sphere_operad(TR4, ring)
    assert verify_operad(S, max_level=4).passed
    assert verify_cooperad_sphere(TR4, ring, 4).passed
    _, dual = sphere_and_dual(TR4, ring)
    assert [len(dual.basis(n)) for n in range(1, 5)] == [1, 2, 6, 24]
    assert dual_interior_splittings(4) == [(1, 3), (2, 2), (3, 1)]


def test_sphere_without_its_sign_is_rejected():
    S = sphere_operad(TR4, Z)
    unsigned = OperadStructure(S.seq, lambda x, ys: {("s", sum(y[1] for y in ys)): 1}, S.unit, "S?")
    assert not verify_operad(unsigned, max_level=4).passed


def test_regular_and_augmentation_modules():
    A = associative_operad(TruncationProfile(3), Z)
    assert verify_module(regular_module(A, "bi"), 3).passed
    assert verify_module(augmentation_module(A, TruncationProfile(3), "right"), 3).passed
    assert verify_module(augmentation_module(A, TruncationProfile(3), "left"), 3).passed


def primitive(R):
    return ChainCoalgebra(R, {"g": 0, "x": 1}, {}, {"g": {("g", "g"): 1}, "x": {("g", "x"): 1, ("x", "g"): 1}},
                          counit="g", name="G")


def test_tensor_bimodule_small():
    A = associative_operad(TruncationProfile(3), Z)
    T = embed_T(primitive(Z), A)
    assert verify_module(T, 3).passed
    # ρ(x; δ^{(2)}) = g⊗x + x⊗g
    assert T.right(("x",), (delta_word(2),)) == {("g", "x"): 1, ("x", "g"): 1}


def test_embed_T_rejects_broken_coalgebra():
    bad = ChainCoalgebra(Z, {"a": 1, "b": 2}, {"b": {"a": 1}}, {"b": {("b", "b"): 1}})
    with pytest.raises(StructureError):
        embed_T(bad, associative_operad(TruncationProfile(2), Z))


def test_constant_modules():
    alg = ChainAlgebra(Z, {"a": 0, "b": 1}, {}, {("a", "a"): {"a": 1}, ("a", "b"): {"b": 1}, ("b", "a"): {"b": 1}})
    assert alg.verify().passed
    A = associative_operad(TruncationProfile(3), Z)
    for mode in "cz":
        assert verify_module(embed_const(alg, A, mode), 3).passed


def test_nonrealizable_coalgebra_structure():
    M = nonrealizable_coalgebra()
    assert M.ring == Z2 and M.verify().passed
    assert M.diff("v") == {"x": 1, "y": 1}
    assert M.delta("w") == {("1", "w"): 1, ("w", "1"): 1, ("x", "z"): 1, ("z", "y"): 1}
    Mb = reduce_counital(M)
    assert "1" not in Mb.degrees and Mb.delta("v") == {("u", "u"): 1}


def test_cosimplicial_on_tensor_coalgebra():
    M = nonrealizable_coalgebra()
    A = associative_operad(TR4, Z2)
    assert Cosimplicial(embed_T(M, A), {("1",): 1}).verify(4).passed
    assert Cosimplicial(embed_T(reduce_counital(M), A), {}).verify(4).passed
    with pytest.raises(StructureError):
        Cosimplicial(embed_T(M, A), {("u",): 1})
