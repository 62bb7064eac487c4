import itertools

from hypothesis import given, strategies as st

from artifact.coeff import Z, Z2
from artifact.diffract import AWCoRing
from artifact.symmetric import (
    TruncationProfile, adjacent, all_perms, block_perm, block_sum, compose, compositions,
    identity_perm, inverse, koszul_parity, perm_parity, unit_sequences, weak_compositions,
)


def perms(n):
    return st.permutations(list(range(n))).map(tuple)


@st.composite
def perm_triple(draw, max_n=6):
    n = draw(st.integers(1, max_n))
    return n, draw(perms(n)), draw(perms(n)), draw(perms(n))


@given(perm_triple())
def test_group_laws(t):
    n, p, q, r = t
    assert compose(compose(p, q), r) == compose(p, compose(q, r))
    assert compose(p, inverse(p)) == identity_perm(n)
    assert perm_parity(compose(p, q)) == perm_parity(p) ^ perm_parity(q)


@given(st.integers(2, 7).flatmap(lambda n: perms(n)))
def test_koszul_parity_all_odd_is_sign(p):
    assert koszul_parity(p, [1] * len(p)) == perm_parity(p)
    assert koszul_parity(p, [0] * len(p)) == 0


def test_adjacent_generates():
    assert adjacent(3, 1) == (1, 0, 2)
    assert perm_parity(adjacent(5, 3)) == 1
    assert len(all_perms(4)) == 24


def test_block_permutations():
    assert block_perm((1, 0), (2, 1)) == (2, 0, 1)
    assert block_perm((0, 1, 2), (1, 2, 1)) == identity_perm(4)
    assert block_sum([(1, 0), (0,)]) == (1, 0, 2)


@given(st.integers(1, 4).flatmap(lambda k: st.tuples(perms(k), perms(k),
                                                     st.lists(st.integers(0, 3), min_size=k, max_size=k))))
def test_block_perm_is_a_homomorphism(data):
    p, q, sizes = data
    # π⟨n⃗⟩ ∘ ρ⟨π·n⃗⟩ = (π∘ρ)⟨n⃗⟩ with the sizes permuted along
    rsizes = [sizes[p[i]] for i in range(len(p))]
    assert compose(block_perm(p, sizes), block_perm(q, rsizes)) == block_perm(compose(p, q), sizes)


def test_compositions_counts():
    assert len(list(compositions(5, 2))) == 4
    assert sum(1 for k in range(1, 6) for _ in compositions(5, k)) == 16
    assert len(list(weak_compositions(3, 3))) == 10


def test_unit_sequences():
    tr = TruncationProfile(3)
    J = unit_sequences("J", tr, Z)
    assert [len(J.basis(n)) for n in range(4)] == [0, 1, 0, 0]
    C = unit_sequences("C", tr, Z)
    assert [len(C.basis(n)) for n in range(4)] == [1, 1, 1, 1]


@given(st.integers(1, 4).flatmap(lambda n: st.tuples(st.just(n), perms(n), perms(n), st.data())))
def test_coring_action_is_an_action(args):
    n, p, q, data = args
    F = AWCoRing(TruncationProfile(4), Z)
    f = data.draw(st.sampled_from(F.basis(n)))
    seq = F.sequence
    assert seq.act_vec(seq.act(f, p), q) == seq.act(f, compose(p, q))
    # ∂ commutes with the action
    lhs = seq.diff_vec(seq.act(f, p))
    rhs = seq.act_vec(seq.diff(f), p)
    assert lhs == rhs


def test_coring_levels_are_free():
    for R in (Z, Z2):
        F = AWCoRing(TruncationProfile(4), R)
        for n in range(1, 5):
            orbits = {frozenset(g for p in all_perms(n) for g in F.sequence.act(f, p)) for f in F.basis(n)}
            assert all(len(o) == len(list(itertools.permutations(range(n)))) for o in orbits)
