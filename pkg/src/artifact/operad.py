"""Operads, modules over them, and the standard examples.

Structure maps are given on *standard* composites: ``gamma(x, ys)`` is the
composite of ``x ∈ P(k)`` with ``y_1, ..., y_k`` attached to consecutive
leaf ranges in block order.  Leaf-labelled composites (see
:mod:`artifact.symmetric`) are evaluated by reducing to the standard form
and acting by the leaf permutation.

Checks return :class:`Report` objects: one :class:`Check` per axiom, each
carrying a concrete witness when it fails.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .chain import ChainComplex, complex_from_function, label_key
from .coeff import RingSpec, SparseMatrix, rank, vec_add_into, vec_add_term, vec_scale
from .symmetric import (SymmetricSequence, SymSeqMorphism, TruncationProfile, _canon_composite,
                        _relabel_block, adjacent, all_perms, composition_product, compositions,
                        inverse, koszul_parity, perm_parity, unit_sequences)


class StructureError(ValueError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass
class Check:
    name: str
    passed: bool
    witness: object = None
    detail: str = ""


@dataclass
class Report:
    target: str
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, witness=None, detail=""):
        self.checks.append(Check(name, witness is None, witness, detail))

    def failures(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    def __str__(self):
        lines = [f"{self.target}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            lines.append(f"  [{'ok' if c.passed else 'FAIL'}] {c.name}" +
                         (f"  witness={c.witness!r}" if not c.passed else ""))
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# chain (co)algebras

class ChainCoalgebra:
    """A chain complex with a coassociative chain-map diagonal.

    ``degrees`` maps basis labels to degrees; ``diff`` and ``delta`` are
    dicts of vectors.  ``counit`` optionally names the grouplike label with
    ε = 1 (the coaugmentation); such coalgebras must be reduced before cobar."""

    def __init__(self, ring: RingSpec, degrees: Dict, diff: Optional[Dict] = None,
                 delta: Optional[Dict] = None, counit=None, name: str = "C"):
        self.ring = ring
        self.degrees = dict(degrees)
        self.labels = sorted(self.degrees, key=lambda l: (self.degrees[l], label_key(l)))
        self._diff = {k: dict(v) for k, v in (diff or {}).items()}
        self._delta = {k: dict(v) for k, v in (delta or {}).items()}
        self.counit = counit
        self.name = name

    def degree(self, label) -> int:
        return self.degrees[label]

    def diff(self, label) -> Dict:
        return self._diff.get(label, {})

    def delta(self, label) -> Dict:
        return self._delta.get(label, {})

    def diff_vec(self, vec):
        out = {}
        for l, c in vec.items():
            vec_add_into(self.ring, out, self.diff(l), c)
        return out

    def iterated_delta(self, label, pieces: int) -> Dict:
        """Δ^{(pieces-1)} as {tuple of labels: coeff}."""
        R = self.ring
        cur = {(label,): R.one()}
        for _ in range(pieces - 1):
            new = {}
            for tup, c in cur.items():
                for (a, b), d in self.delta(tup[-1]).items():
                    vec_add_term(R, new, tup[:-1] + (a, b), R.mul(c, d))
            cur = new
        return cur

    def complex(self) -> ChainComplex:
        bases = {}
        for l in self.labels:
            bases.setdefault(self.degrees[l], []).append(l)
        return complex_from_function(self.ring, bases, self.diff, lower_bound=min(bases) if bases else 0)

    def verify(self) -> Report:
        R = self.ring
        rep = Report(f"coalgebra {self.name}")
        bad = None
        for l in self.labels:
            if self.diff_vec(self.diff(l)):
                bad = l
                break
        rep.add("d∘d = 0", bad)
        bad = None
        for l in self.labels:
            left, right = {}, {}
            for (a, b), c in self.delta(l).items():
                for (a1, a2), d in self.delta(a).items():
                    vec_add_term(R, left, (a1, a2, b), R.mul(c, d))
                for (b1, b2), d in self.delta(b).items():
                    vec_add_term(R, right, (a, b1, b2), R.mul(c, d))
            if left != right:
                bad = l
                break
        rep.add("coassociativity", bad)
        bad = None
        for l in self.labels:
            lhs = {}
            for y, c in self.diff(l).items():
                vec_add_into(R, lhs, self.delta(y), c)
            rhs = {}
            for (a, b), c in self.delta(l).items():
                for a2, d in self.diff(a).items():
                    vec_add_term(R, rhs, (a2, b), R.mul(c, d))
                for b2, d in self.diff(b).items():
                    vec_add_term(R, rhs, (a, b2), R.mul(c, R.mul(d, R.sign(self.degrees[a]))))
            if lhs != rhs:
                bad = l
                break
        rep.add("Δ is a chain map", bad)
        for l, vec in self._delta.items():
            for (a, b) in vec:
                if self.degrees[a] + self.degrees[b] != self.degrees[l]:
                    rep.add("Δ has degree 0", (l, (a, b)))
                    return rep
        if self.counit is not None:
            bad = None
            u = self.counit
            for l in self.labels:
                # (ε⊗1)Δ = 1 = (1⊗ε)Δ with ε dual to the counit label
                left = {b: c for (a, b), c in self.delta(l).items() if a == u}
                right = {a: c for (a, b), c in self.delta(l).items() if b == u}
                if left != {l: R.one()} or right != {l: R.one()}:
                    bad = l
                    break
            rep.add("counit laws", bad)
        return rep


def reduce_counital(C: ChainCoalgebra) -> ChainCoalgebra:
    """Split C = R ⊕ C̄ along the coaugmentation and return C̄ with the
    reduced diagonal Δ̄x = Δx − 1⊗x − x⊗1."""
    if C.counit is None:
        raise StructureError("coalgebra has no counit to split off")
    u = C.counit
    R = C.ring
    degs = {l: d for l, d in C.degrees.items() if l != u}
    delta = {}
    for l in degs:
        vec = {k: v for k, v in C.delta(l).items() if u not in k}
        if vec:
            delta[l] = vec
    diff = {l: {k: v for k, v in C.diff(l).items() if k != u} for l in degs}
    return ChainCoalgebra(R, degs, diff, delta, None, C.name + "̄")


class ChainAlgebra:
    """A chain complex with an associative chain-map product (no unit)."""

    def __init__(self, ring: RingSpec, degrees: Dict, diff: Optional[Dict] = None,
                 mul: Optional[Dict] = None, name: str = "A"):
        self.ring = ring
        self.degrees = dict(degrees)
        self.labels = sorted(self.degrees, key=lambda l: (self.degrees[l], label_key(l)))
        self._diff = {k: dict(v) for k, v in (diff or {}).items()}
        self._mul = {k: dict(v) for k, v in (mul or {}).items()}
        self.name = name

    def degree(self, l):
        return self.degrees[l]

    def diff(self, l):
        return self._diff.get(l, {})

    def diff_vec(self, vec):
        out = {}
        for l, c in vec.items():
            vec_add_into(self.ring, out, self.diff(l), c)
        return out

    def mul(self, a, b) -> Dict:
        return self._mul.get((a, b), {})

    def mul_vec(self, u: Dict, v: Dict) -> Dict:
        out = {}
        for a, c in u.items():
            for b, d in v.items():
                vec_add_into(self.ring, out, self.mul(a, b), self.ring.mul(c, d))
        return out

    def product(self, labels: Sequence) -> Dict:
        """Iterated product μ^{(k)}(a_1, ..., a_k)."""
        cur = {labels[0]: self.ring.one()}
        for l in labels[1:]:
            cur = self.mul_vec(cur, {l: self.ring.one()})
        return cur

    def verify(self) -> Report:
        R = self.ring
        rep = Report(f"algebra {self.name}")
        bad = None
        for l in self.labels:
            if self.diff_vec(self.diff(l)):
                bad = l
                break
        rep.add("d∘d = 0", bad)
        bad = None
        for a, b, c in itertools.product(self.labels, repeat=3):
            if self.mul_vec(self.mul(a, b), {c: 1}) != self.mul_vec({a: 1}, self.mul(b, c)):
                bad = (a, b, c)
                break
        rep.add("associativity", bad)
        bad = None
        for a, b in itertools.product(self.labels, repeat=2):
            lhs = self.diff_vec(self.mul(a, b))
            rhs = self.mul_vec(self.diff(a), {b: 1})
            vec_add_into(R, rhs, self.mul_vec({a: 1}, self.diff(b)), R.sign(self.degrees[a]))
            if lhs != rhs:
                bad = (a, b)
                break
        rep.add("Leibniz rule", bad)
        return rep


# ---------------------------------------------------------------------------
# operads and modules

class OperadStructure:
    """An operad P given by γ on standard composites and a unit label in P(1)."""

    def __init__(self, seq: SymmetricSequence, gamma: Callable, unit, name: str = "P",
                 generators: Optional[Callable] = None):
        self.seq = seq
        self.ring = seq.ring
        self._gamma = gamma
        self.unit = unit
        self.name = name
        self._generators = generators

    def generators(self, n: int) -> List:
        """Labels generating P(n) as a Σ_n-module (the whole basis by default)."""
        return list(self._generators(n)) if self._generators else list(self.seq.basis(n))

    def gamma(self, x, ys) -> Dict:
        return self._gamma(x, tuple(ys))

    def gamma_vec(self, xv: Dict, yvs: Sequence[Dict]) -> Dict:
        """Multilinear γ on vectors (x a vector, each y a vector)."""
        R = self.ring
        out = {}
        for combo in itertools.product(*[list(v.items()) for v in yvs]):
            c = R.one()
            ys = []
            for y, d in combo:
                c = R.mul(c, d)
                ys.append(y)
            for x, e in xv.items():
                vec_add_into(R, out, self.gamma(x, ys), R.mul(c, e))
        return out


class ModuleStructure:
    """Left, right or bimodule structure on a sequence over an operad.

    ``left(p, ms)`` is λ on a standard composite p⊗(m_1..m_k);
    ``right(m, ps)`` is ρ on m⊗(p_1..p_k)."""

    def __init__(self, carrier: SymmetricSequence, operad: OperadStructure,
                 left: Optional[Callable] = None, right: Optional[Callable] = None, name: str = "M"):
        self.carrier = carrier
        self.operad = operad
        self.ring = carrier.ring
        self._left = left
        self._right = right
        self.name = name

    @property
    def side(self) -> str:
        if self._left and self._right:
            return "bi"
        return "left" if self._left else "right"

    def left(self, p, ms) -> Dict:
        return self._left(p, tuple(ms))

    def right(self, m, ps) -> Dict:
        return self._right(m, tuple(ps))

    def right_vec(self, mv: Dict, ps) -> Dict:
        out = {}
        for m, c in mv.items():
            vec_add_into(self.ring, out, self.right(m, ps), c)
        return out

    def left_vec(self, p, mvs: Sequence[Dict]) -> Dict:
        R = self.ring
        out = {}
        for combo in itertools.product(*[list(v.items()) for v in mvs]):
            c = R.one()
            ms = []
            for m, d in combo:
                c = R.mul(c, d)
                ms.append(m)
            vec_add_into(R, out, self.left(p, ms), c)
        return out


# ---------------------------------------------------------------------------
# the associative operad, S and A⊥

def _word_act(ring):
    return lambda l, p: {(l[0], tuple(inverse(p)[v] for v in l[1])): ring.one()}


def associative_operad(trunc: TruncationProfile, ring: RingSpec) -> OperadStructure:
    """A(n) = R[Σ_n] as words; γ substitutes words into letters."""
    seq = SymmetricSequence(ring, trunc, lambda n: [("w", p) for p in all_perms(n)] if n >= 1 else [],
                            lambda l: 0, _word_act(ring), name="A")

    def gamma(x, ys):
        sizes = [len(y[1]) for y in ys]
        offs = [0]
        for s in sizes:
            offs.append(offs[-1] + s)
        word = []
        for letter in x[1]:
            word.extend(offs[letter] + t for t in ys[letter][1])
        return {("w", tuple(word)): ring.one()}

    return OperadStructure(seq, gamma, ("w", (0,)), "A",
                           generators=lambda n: [delta_word(n)] if n >= 1 else [])


def delta_word(n: int):
    """δ^{(n)}: the identity word of A(n)."""
    return ("w", tuple(range(n)))


def _sphere_sign(k: int, sizes: Sequence[int]) -> int:
    return sum((s - 1) * (k - 1 - i) for i, s in enumerate(sizes)) & 1


def sphere_operad(trunc: TruncationProfile, ring: RingSpec) -> OperadStructure:
    """S(n) = R·s_{n-1} in degree n−1 with the sign representation."""
    seq = SymmetricSequence(ring, trunc, lambda n: [("s", n)] if n >= 1 else [], lambda l: l[1] - 1,
                            lambda l, p: {l: ring.sign(perm_parity(p))}, name="S")

    def gamma(x, ys):
        sizes = [y[1] for y in ys]
        return {("s", sum(sizes)): ring.sign(_sphere_sign(x[1], sizes))}

    return OperadStructure(seq, gamma, ("s", 1), "S")


def sphere_decomposition(k: int, sizes: Sequence[int], ring: RingSpec):
    """Component of the cooperad map S(n) → S(k)⊗S(n_1)⊗...⊗S(n_k) (standard
    leaves); dual to γ, so it carries the same sign."""
    return ring.sign(_sphere_sign(k, sizes))


def sphere_and_dual(trunc: TruncationProfile, ring: RingSpec):
    """(S, A⊥): A⊥(n) is free of rank one over R[Σ_n] on α_n (degree n−1),
    with the action twisted by the sign: (α⊗w)·σ = sgn(σ)·α⊗(w·σ)."""
    S = sphere_operad(trunc, ring)

    def act(l, p):
        return {("alpha", tuple(inverse(p)[v] for v in l[1])): ring.sign(perm_parity(p))}

    dual = SymmetricSequence(ring, trunc, lambda n: [("alpha", p) for p in all_perms(n)] if n >= 1 else [],
                             lambda l: len(l[1]) - 1, act, name="A⊥")
    return S, dual


def dual_interior_splittings(n: int) -> List[Tuple[int, int]]:
    """ψ(α_n) = Σ_{0<k<n} α_k ⊗ α_{n-k}: the interior splittings (k, n-k)."""
    return [(k, n - k) for k in range(1, n)]


# ---------------------------------------------------------------------------
# structure checks

def _sizes_upto(k: int, max_total: int, min_part: int = 1):
    """Tuples of k sizes ≥ min_part with sum ≤ max_total."""
    if min_part >= 1:
        for total in range(k * min_part, max_total + 1):
            yield from compositions(total, k)
        return
    for sizes in itertools.product(range(0, max_total + 1), repeat=k):
        if sum(sizes) <= max_total:
            yield sizes


def _labels(fn: Callable, sizes: Sequence[int]):
    return itertools.product(*[fn(s) for s in sizes])


def _leaf_extension(M: SymmetricSequence, std: Callable):
    """Evaluate a structure map given on standard composites at a leaf-labelled
    composite label ("o", x, ((y, L), ...))."""
    def fn(label):
        _, x, blocks = label
        ys = tuple(y for y, _ in blocks)
        flat = tuple(l for _, L in blocks for l in L)
        val = std(x, ys)
        if flat == tuple(range(len(flat))):
            return dict(val)
        return M.act_vec(val, inverse(flat))
    return fn


def _standard_vec(X: SymmetricSequence, Y: SymmetricSequence, x, ys, sizes) -> Dict:
    blocks, pos = [], 0
    for y, s in zip(ys, sizes):
        blocks.append((y, tuple(range(pos, pos + s))))
        pos += s
    return _canon_composite(X, Y, x, tuple(blocks))


def _test_perms(n: int, exhaustive_level: int, rng) -> List[Tuple[int, ...]]:
    if n <= exhaustive_level:
        return list(all_perms(n)[1:])
    perms = [adjacent(n, i) for i in range(1, n)]
    pool = all_perms(n)
    return perms + [pool[rng.randrange(len(pool))] for _ in range(4)]


def _check_equivariant(composite: SymmetricSequence, fn: Callable, target: SymmetricSequence,
                       elements, exhaustive_level: int = 4, seed: int = 0):
    """fn(E·h) = fn(E)·h for composite vectors E spanning a generating set.

    Elements come as (level, vector, description).  All of Σ_n is tested up
    to ``exhaustive_level``; above it, the adjacent transpositions and a
    seeded sample."""
    import random
    rng = random.Random(seed)
    R = composite.ring
    for n, vec, desc in elements:
        img = _apply(fn, vec, R)
        for h in _test_perms(n, exhaustive_level, rng):
            if _apply(fn, composite.act_vec(vec, h), R) != target.act_vec(img, h):
                return (desc, h)
    return None


def _check_chain(composite: SymmetricSequence, fn: Callable, target: SymmetricSequence, elements):
    R = composite.ring
    for n, vec, desc in elements:
        if target.diff_vec(_apply(fn, vec, R)) != _apply(fn, composite.diff_vec(vec), R):
            return desc
    return None


def _apply(fn, vec, R):
    out = {}
    for l, c in vec.items():
        vec_add_into(R, out, fn(l), c)
    return out


def _regroup_sign(R, outer_pars: Sequence[int], inner_pars: Sequence[int], counts: Sequence[int]):
    """Koszul sign of (a_1..a_k, b_1..b_N) → (a_1, b's of a_1, a_2, ...)."""
    order, pos = [], 0
    for i, c in enumerate(counts):
        order.append(i)
        order.extend(len(counts) + pos + t for t in range(c))
        pos += c
    return R.sign(koszul_parity(order, list(outer_pars) + list(inner_pars)))


def _multi(R, fn: Callable, head, vecs: Sequence[Dict]) -> Dict:
    out = {}
    for combo in itertools.product(*[list(v.items()) for v in vecs]):
        c = R.one()
        labs = []
        for l, d in combo:
            c = R.mul(c, d)
            labs.append(l)
        vec_add_into(R, out, fn(head, labs), c)
    return out


def verify_operad(P: OperadStructure, max_level: Optional[int] = None,
                  exhaustive_level: int = 4) -> Report:
    """Unit, associativity, equivariance and chain-map axioms of γ.

    Associativity and equivariance are tested on Σ-module generators of P;
    together with equivariance of γ this covers every composite."""
    R = P.ring
    seq = P.seq
    L = max_level or seq.trunc.max_level
    deg = seq.degree
    gens = P.generators
    rep = Report(f"operad {P.name}")
    bad = None
    for n in range(1, L + 1):
        for x in seq.basis(n):
            if P.gamma(P.unit, (x,)) != {x: R.one()} or P.gamma(x, (P.unit,) * n) != {x: R.one()}:
                bad = x
                break
        if bad:
            break
    rep.add("unit laws", bad)
    bad = None
    for k in range(1, L + 1):
        for x in gens(k):
            for sizes in _sizes_upto(k, L):
                for ys in _labels(gens, sizes):
                    for zsizes in _sizes_upto(sum(sizes), L):
                        for zs in _labels(gens, zsizes):
                            lhs = P.gamma_vec(P.gamma(x, ys), [{z: R.one()} for z in zs])
                            inner, pos = [], 0
                            for y, s in zip(ys, sizes):
                                inner.append(P.gamma(y, zs[pos:pos + s]))
                                pos += s
                            sg = _regroup_sign(R, [deg(y) & 1 for y in ys], [deg(z) & 1 for z in zs], sizes)
                            if lhs != vec_scale(R, P.gamma_vec({x: R.one()}, inner), sg):
                                bad = (x, ys, zs)
                                break
                        if bad:
                            break
                    if bad:
                        break
                if bad:
                    break
            if bad:
                break
        if bad:
            break
    rep.add("associativity", bad)
    comp, _ = composition_product(seq, seq, TruncationProfile(L, seq.trunc.max_degree))
    fn = _leaf_extension(seq, P.gamma)
    elements = [(sum(sizes), _standard_vec(seq, seq, x, ys, sizes), (x, ys))
                for k in range(1, L + 1) for x in gens(k)
                for sizes in _sizes_upto(k, L) for ys in _labels(gens, sizes)]
    rep.add("equivariance of γ", _check_equivariant(comp, fn, seq, elements, exhaustive_level))
    rep.add("γ is a chain map", _check_chain(comp, fn, seq, elements))
    return rep


def verify_cooperad_sphere(trunc: TruncationProfile, ring: RingSpec, max_level: int) -> Report:
    """Coassociativity and counit of the decomposition maps of S.

    Decomposing s_N first along (k; m_1..m_k) and then each s_{m_i} along
    its group of inner sizes must agree, after the Koszul regrouping, with
    decomposing along all inner sizes and then regrouping them under k."""
    rep = Report("cooperad S")
    bad = None
    for k in range(1, max_level + 1):
        for counts in _sizes_upto(k, max_level):
            total = sum(counts)
            for inner in _sizes_upto(total, max_level):
                groups, pos = [], 0
                for c in counts:
                    groups.append(inner[pos:pos + c])
                    pos += c
                m = [sum(g) for g in groups]
                a = _sphere_sign(k, m) + sum(_sphere_sign(len(g), g) for g in groups)
                a += koszul_parity(*_regroup_order([(c - 1) & 1 for c in counts],
                                                   [(v - 1) & 1 for v in inner], counts))
                b = _sphere_sign(k, counts) + _sphere_sign(total, inner)
                if (a - b) % 2:
                    bad = (k, counts, inner)
                    break
            if bad:
                break
        if bad:
            break
    rep.add("coassociativity of the decomposition", bad)
    rep.add("counit", None if all(_sphere_sign(1, (n,)) == 0 and _sphere_sign(n, (1,) * n) == 0
                                  for n in range(1, max_level + 1)) else "counit sign")
    return rep


def _regroup_order(outer_pars, inner_pars, counts):
    order, pos = [], 0
    for i, c in enumerate(counts):
        order.append(i)
        order.extend(len(counts) + pos + t for t in range(c))
        pos += c
    return order, list(outer_pars) + list(inner_pars)


def verify_module(M: ModuleStructure, max_level: int, exhaustive_level: int = 4) -> Report:
    """Axiom suite for a left, right or bimodule (operad inputs on generators)."""
    R = M.ring
    P = M.operad
    X = M.carrier
    gens = P.generators
    trunc = TruncationProfile(max_level, X.trunc.max_degree)
    rep = Report(f"{M.side} module {M.name} over {P.name}")
    pdeg, mdeg = P.seq.degree, X.degree
    if M._left:
        bad = None
        for n in range(0, max_level + 1):
            for m in X.basis(n):
                if M.left(P.unit, (m,)) != {m: R.one()}:
                    bad = m
                    break
            if bad:
                break
        rep.add("left unit", bad)
        bad = None
        for k in range(1, max_level + 1):
            for p in gens(k):
                for js in _sizes_upto(k, max_level):
                    for qs in _labels(gens, js):
                        for msizes in _sizes_upto(sum(js), max_level, 0):
                            for ms in _labels(X.basis, msizes):
                                lhs = {}
                                for pq, c in P.gamma(p, qs).items():
                                    vec_add_into(R, lhs, M.left(pq, ms), c)
                                inner, pos = [], 0
                                for q, j in zip(qs, js):
                                    inner.append(M.left(q, ms[pos:pos + j]))
                                    pos += j
                                sg = _regroup_sign(R, [pdeg(q) & 1 for q in qs], [mdeg(m) & 1 for m in ms], js)
                                if lhs != vec_scale(R, M.left_vec(p, inner), sg):
                                    bad = (p, qs, ms)
                                    break
                            if bad:
                                break
                        if bad:
                            break
                    if bad:
                        break
                if bad:
                    break
            if bad:
                break
        rep.add("left associativity", bad)
        comp, _ = composition_product(P.seq, X, trunc)
        fn = _leaf_extension(X, M.left)
        elements = [(sum(ms_sizes), _standard_vec(P.seq, X, p, ms, ms_sizes), (p, ms))
                    for k in range(1, max_level + 1) for p in gens(k)
                    for ms_sizes in _sizes_upto(k, max_level, 0) for ms in _labels(X.basis, ms_sizes)]
        rep.add("equivariance of λ", _check_equivariant(comp, fn, X, elements, exhaustive_level))
        rep.add("λ is a chain map", _check_chain(comp, fn, X, elements))
    if M._right:
        bad = None
        for n in range(1, max_level + 1):
            for m in X.basis(n):
                if M.right(m, (P.unit,) * n) != {m: R.one()}:
                    bad = m
                    break
            if bad:
                break
        rep.add("right unit", bad)
        bad = None
        for k in range(1, max_level + 1):
            for m in X.basis(k):
                for sizes in _sizes_upto(k, max_level):
                    for ps in _labels(gens, sizes):
                        for qsizes in _sizes_upto(sum(sizes), max_level):
                            for qs in _labels(gens, qsizes):
                                lhs = M.right_vec(M.right(m, ps), qs)
                                inner, pos = [], 0
                                for p, s in zip(ps, sizes):
                                    inner.append(P.gamma(p, qs[pos:pos + s]))
                                    pos += s
                                sg = _regroup_sign(R, [pdeg(p) & 1 for p in ps], [pdeg(q) & 1 for q in qs], sizes)
                                if lhs != vec_scale(R, _multi(R, M.right, m, inner), sg):
                                    bad = (m, ps, qs)
                                    break
                            if bad:
                                break
                        if bad:
                            break
                    if bad:
                        break
                if bad:
                    break
            if bad:
                break
        rep.add("right associativity", bad)
        comp, _ = composition_product(X, P.seq, trunc)
        fn = _leaf_extension(X, M.right)
        elements = [(sum(sizes), _standard_vec(X, P.seq, m, ps, sizes), (m, ps))
                    for k in range(1, max_level + 1) for m in X.basis(k)
                    for sizes in _sizes_upto(k, max_level) for ps in _labels(gens, sizes)]
        rep.add("equivariance of ρ", _check_equivariant(comp, fn, X, elements, exhaustive_level))
        rep.add("ρ is a chain map", _check_chain(comp, fn, X, elements))
    if M._left and M._right:
        rep.add("bimodule compatibility", _check_bimodule(M, max_level))
    return rep


def _check_bimodule(M: ModuleStructure, max_level: int):
    """ρ(λ(p; m_1..m_k); qs) = ± λ(p; ρ(m_1; q's of m_1), ..., ρ(m_k; ...))."""
    R = M.ring
    P = M.operad
    X = M.carrier
    gens = P.generators
    for k in range(1, max_level + 1):
        for p in gens(k):
            for msizes in _sizes_upto(k, max_level, 0):
                for ms in _labels(X.basis, msizes):
                    n = sum(msizes)
                    for qsizes in (_sizes_upto(n, max_level) if n else [()]):
                        for qs in _labels(gens, qsizes):
                            lhs = M.right_vec(M.left(p, ms), qs)
                            inner, pos = [], 0
                            for m, s in zip(ms, msizes):
                                inner.append(M.right(m, qs[pos:pos + s]))
                                pos += s
                            sg = _regroup_sign(R, [X.degree(m) & 1 for m in ms],
                                               [P.seq.degree(q) & 1 for q in qs], msizes)
                            if lhs != vec_scale(R, M.left_vec(p, inner), sg):
                                return (p, ms, qs)
    return None


def verify_structure(target, **kw) -> Report:
    """Dispatch to the axiom suite for an operad, module, algebra or coalgebra."""
    if isinstance(target, OperadStructure):
        return verify_operad(target, **kw)
    if isinstance(target, ModuleStructure):
        return verify_module(target, **kw)
    if isinstance(target, (ChainAlgebra, ChainCoalgebra)):
        return target.verify()
    if hasattr(target, "verify_coring"):
        return target.verify_coring(**kw)
    raise TypeError(f"no structure checks for {type(target).__name__}")


# ---------------------------------------------------------------------------
# T(C), c(A), z(A)

def tensor_power_sequence(C: ChainCoalgebra, trunc: TruncationProfile) -> SymmetricSequence:
    """T(C)(n) = C^{⊗n} (labels: tuples), Σ_n permuting factors with Koszul signs."""
    R = C.ring
    deg = C.degree

    def basis(n):
        return [tuple(t) for t in itertools.product(C.labels, repeat=n)]

    def act(lab, perm):
        new = tuple(lab[perm[i]] for i in range(len(lab)))
        return {new: R.sign(koszul_parity(perm, [deg(c) & 1 for c in lab]))}

    def diff(lab):
        out = {}
        acc = 0
        for i, c in enumerate(lab):
            for c2, v in C.diff(c).items():
                vec_add_term(R, out, lab[:i] + (c2,) + lab[i + 1:], R.mul(v, R.sign(acc)))
            acc += deg(c)
        return out

    return SymmetricSequence(R, trunc, basis, lambda l: sum(deg(c) for c in l), act, diff, f"T({C.name})")


def place_by_leaves(R: RingSpec, pieces: Sequence[Tuple[int, object]], degree: Callable) -> Tuple[object, tuple]:
    """Sort (leaf, factor) pairs by leaf; return (Koszul sign, factors)."""
    order = sorted(range(len(pieces)), key=lambda i: pieces[i][0])
    par = koszul_parity(order, [degree(pieces[i][1]) & 1 for i in range(len(pieces))])
    return R.sign(par), tuple(pieces[i][1] for i in order)


def embed_T(C: ChainCoalgebra, A: OperadStructure, trunc: Optional[TruncationProfile] = None) -> ModuleStructure:
    """T(C) as (A, A)-bimodule.  Left action: concatenation (the outer word
    only reorders blocks, which the leaf labels already record).  Right
    action: factor i is split by Δ^{(n_i − 1)} and the pieces are placed at
    the leaves of the word w_i."""
    if C.verify().failures():
        raise StructureError("coalgebra fails its axioms", C.verify().failures()[0].witness)
    trunc = trunc or A.seq.trunc
    R = C.ring
    T = tensor_power_sequence(C, trunc)

    def left(p, ms):
        out = ()
        for m in ms:
            out += m
        return {out: R.one()}

    def right(t, ps):
        terms = {((), ()): R.one()}
        off = 0
        for c, w in zip(t, ps):
            word = w[1]
            new = {}
            for pieces, d in C.iterated_delta(c, len(word)).items():
                for (lv, fv), e in terms.items():
                    leaves = tuple(off + v for v in word)
                    vec_add_term(R, new, (lv + leaves, fv + pieces), R.mul(d, e))
            terms = new
            off += len(word)
        out = {}
        for (lv, fv), c in terms.items():
            sg, factors = place_by_leaves(R, list(zip(lv, fv)), C.degree)
            vec_add_term(R, out, factors, R.mul(c, sg))
        return out

    return ModuleStructure(T, A, left, right, f"T({C.name})")


def embed_const(alg: ChainAlgebra, A: OperadStructure, mode: str = "c",
                trunc: Optional[TruncationProfile] = None) -> ModuleStructure:
    """c(A): A at every level ≥ 1 with trivial actions; z(A): A at level 0.
    λ multiplies the inputs in the order of the word (Koszul sign)."""
    trunc = trunc or A.seq.trunc
    R = alg.ring
    if mode == "c":
        basis = lambda n: [(a, n) for a in alg.labels] if n >= 1 else []
    elif mode == "z":
        basis = lambda n: [(a, 0) for a in alg.labels] if n == 0 else []
    else:
        raise ValueError("mode must be 'c' or 'z'")
    seq = SymmetricSequence(R, trunc, basis, lambda l: alg.degree(l[0]),
                            lambda l, p: {l: R.one()},
                            lambda l: {(a, l[1]): c for a, c in alg.diff(l[0]).items()},
                            f"{mode}({alg.name})")

    def left(p, ms):
        word = p[1]
        n = sum(m[1] for m in ms)
        sg = R.sign(koszul_parity(word, [alg.degree(m[0]) & 1 for m in ms]))
        prod = alg.product([ms[i][0] for i in word])
        return {(a, n): R.mul(c, sg) for a, c in prod.items()}

    return ModuleStructure(seq, A, left, None, f"{mode}({alg.name})")


def const_map(alg_src: ChainAlgebra, M: ModuleStructure, N: ModuleStructure, g: Callable, mode="c"):
    """c(g): the level-wise copy of an algebra map g."""
    return SymSeqMorphism(M.carrier, N.carrier, lambda l: {(b, l[1]): c for b, c in g(l[0]).items()}, 0,
                          f"{mode}(g)")


def is_left_module_map(M: ModuleStructure, N: ModuleStructure, f: SymSeqMorphism, max_level: int):
    """Return None or a witness (p, ms) where f∘λ ≠ λ∘(1∘f)."""
    P = M.operad
    for k in range(1, max_level + 1):
        for p in P.seq.basis(k):
            for msizes in itertools.product(range(0, max_level + 1), repeat=k):
                if sum(msizes) > max_level:
                    continue
                for ms in itertools.product(*[M.carrier.basis(s) for s in msizes]):
                    lhs = f.apply(M.left(p, ms))
                    rhs = N.left_vec(p, [f(m) for m in ms])
                    if lhs != rhs:
                        return (p, ms)
    return None


# ---------------------------------------------------------------------------
# composition over an operad

class ComposedOverOperad:
    """M∘_P N: the cokernel of ρ∘1 − 1∘λ : (M∘P)∘N → M∘N.

    Ranks are exact over any ring (SNF over Z).  Over a field the quotient
    complex is materialized with representatives the basis labels that are
    not pivots of the relation matrix."""

    def __init__(self, M: ModuleStructure, P: OperadStructure, N: ModuleStructure,
                 trunc: TruncationProfile):
        if M._right is None or N._left is None:
            raise StructureError("need a right P-module and a left P-module")
        self.M, self.P, self.N = M, P, N
        self.ring = P.ring
        self.trunc = trunc
        self.MN, _ = composition_product(M.carrier, N.carrier, trunc)
        self.MP, _ = composition_product(M.carrier, P.seq, trunc)
        self.MPN, _ = composition_product(self.MP, N.carrier, trunc)
        self._rel_cache: Dict = {}

    def _relation(self, lab) -> Dict:
        """(ρ∘1 − 1∘λ) on a basis element of (M∘P)∘N."""
        R = self.ring
        Mc, Nc, P = self.M.carrier, self.N.carrier, self.P
        _, mp, nblocks = lab
        _, m, pblocks = mp
        out: Dict = {}
        # ρ∘1: m·(p's) then attach n-blocks (sorted in the input order of mp)
        rho = _leaf_extension(Mc, self.M.right)(mp)
        for m2, c in rho.items():
            vec_add_into(R, out, _canon_composite(Mc, Nc, m2, nblocks), c)
        # 1∘λ: group the n-blocks under their p and act
        new_blocks = [(R.one(), ())]
        pdeg = P.seq.degree
        ndeg = Nc.degree
        # Koszul for (m, p_1..p_j, n_0..n_{k-1}) → (m, p_1, n's of p_1, p_2, ...)
        pars = [pdeg(p) & 1 for p, _ in pblocks] + [ndeg(nb[0]) & 1 for nb in nblocks]
        order = []
        for i, (p, L) in enumerate(pblocks):
            order.append(i)
            order.extend(len(pblocks) + l for l in L)
        sg = R.sign(koszul_parity(order, pars))
        for p, L in pblocks:
            sub = [nblocks[l] for l in L]
            ns = tuple(b[0] for b in sub)
            flat = tuple(v for b in sub for v in b[1])
            val = self.N.left(p, ns)
            # standard leaves for the λ output correspond to ``flat`` in order
            nxt = []
            for c0, bl in new_blocks:
                for n2, d in val.items():
                    # relabel standard leaf t → flat[t]
                    for (n3, L3), e in _relabel_block(Nc, n2, list(flat)).items():
                        nxt.append((R.mul(c0, R.mul(d, e)), bl + ((n3, L3),)))
            new_blocks = nxt
        for c, bl in new_blocks:
            vec_add_into(R, out, _canon_composite(Mc, Nc, m, bl), R.neg(R.mul(c, sg)))
        return out

    def level_data(self, n: int):
        """(basis of M∘N by degree, relation vectors by degree)."""
        if n in self._rel_cache:
            return self._rel_cache[n]
        basis: Dict[int, List] = {}
        for lab in self.MN.basis(n):
            basis.setdefault(self.MN.degree(lab), []).append(lab)
        rels: Dict[int, List[Dict]] = {}
        for lab in self.MPN.basis(n):
            v = self._relation(lab)
            if v:
                rels.setdefault(self.MPN.degree(lab), []).append(v)
        self._rel_cache[n] = (basis, rels)
        return basis, rels

    def rank(self, n: int, d: int) -> int:
        basis, rels = self.level_data(n)
        labs = basis.get(d, [])
        idx = {l: i for i, l in enumerate(labs)}
        rows = rels.get(d, [])
        if not rows:
            return len(labs)
        A = SparseMatrix(len(labs), len(rows), {(idx[l], j): c for j, r in enumerate(rows) for l, c in r.items()})
        return len(labs) - rank(A, self.ring)

    def quotient_complex(self, n: int) -> ChainComplex:
        """The level-n quotient complex (fields only)."""
        R = self.ring
        if not R.is_field:
            raise ValueError("quotient complexes are materialized over fields only")
        basis, rels = self.level_data(n)
        reducers: Dict[int, Dict] = {}
        reps: Dict[int, List] = {}
        for d, labs in basis.items():
            order = sorted(labs, key=label_key, reverse=True)
            pivots: Dict = {}
            for r in rels.get(d, []):
                v = dict(r)
                v = _reduce(R, v, pivots, order)
                if not v:
                    continue
                lead = min(v, key=lambda l: order.index(l))
                inv = R.inv(v[lead])
                v = {k: R.mul(c, inv) for k, c in v.items()}
                for p in list(pivots):
                    if lead in pivots[p]:
                        f = pivots[p][lead]
                        vec_add_into(R, pivots[p], v, R.neg(f))
                pivots[lead] = v
            reducers[d] = (pivots, order)
            reps[d] = sorted([l for l in labs if l not in pivots], key=label_key)

        def diff(lab):
            d = self.MN.degree(lab)
            v = self.MN.diff(lab)
            piv, order = reducers.get(d - 1, ({}, []))
            return _reduce(R, dict(v), piv, order)

        return complex_from_function(R, reps, diff, lower_bound=min(reps) if reps else 0)


def _reduce(R, v: Dict, pivots: Dict, order) -> Dict:
    changed = True
    while changed:
        changed = False
        for p, row in pivots.items():
            if p in v and v[p]:
                f = v[p]
                vec_add_into(R, v, row, R.neg(f))
                changed = True
    return {k: c for k, c in v.items() if c}


def augmentation_module(A: OperadStructure, trunc: TruncationProfile, side: str) -> ModuleStructure:
    """J as a right (or left) A-module through the augmentation A → J."""
    R = A.ring
    J = unit_sequences("J", trunc, R)

    def right(j, ps):
        return {("j",): R.one()} if all(len(p[1]) == 1 for p in ps) else {}

    def left(p, ms):
        return {("j",): R.one()} if len(p[1]) == 1 else {}

    if side == "right":
        return ModuleStructure(J, A, None, right, "J")
    return ModuleStructure(J, A, left, None, "J")


def regular_module(A: OperadStructure, side: str) -> ModuleStructure:
    """P as a module over itself."""
    if side == "left":
        return ModuleStructure(A.seq, A, lambda p, ms: A.gamma(p, ms), None, A.name)
    if side == "right":
        return ModuleStructure(A.seq, A, None, lambda m, ps: A.gamma(m, ps), A.name)
    return ModuleStructure(A.seq, A, lambda p, ms: A.gamma(p, ms), lambda m, ps: A.gamma(m, ps), A.name)


# ---------------------------------------------------------------------------
# cosimplicial structure and cup-pairing

class Cosimplicial:
    """Cofaces of an A-bimodule with central v ∈ M(1) (degree 0)."""

    def __init__(self, M: ModuleStructure, v: Dict):
        self.M = M
        self.v = v
        self.ring = M.ring
        R = self.ring
        lhs = M.left_vec(delta_word(2), [v, v])
        rhs = {}
        for l, c in v.items():
            vec_add_into(R, rhs, M.right(l, (delta_word(2),)), c)
        if lhs != rhs:
            raise StructureError("v is not central", witness=(lhs, rhs))

    def coface(self, i: int, n: int, vec: Dict) -> Dict:
        """d^i: M(n) → M(n+1), 0 ≤ i ≤ n+1."""
        M, R = self.M, self.ring
        out: Dict = {}
        if i == 0 or i == n + 1:
            for l, c in vec.items():
                args = [self.v, {l: R.one()}] if i == 0 else [{l: R.one()}, self.v]
                vec_add_into(R, out, M.left_vec(delta_word(2), args), c)
            return out
        ps = tuple([delta_word(1)] * (i - 1) + [delta_word(2)] + [delta_word(1)] * (n - i))
        for l, c in vec.items():
            vec_add_into(R, out, M.right(l, ps), c)
        return out

    def cup(self, x: Dict, y: Dict) -> Dict:
        """φ_{p,q}: the graded multiplication λ(δ^{(2)}; x, y)."""
        return self.M.left_vec(delta_word(2), [x, y])

    def verify(self, max_level: int) -> Report:
        R = self.ring
        X = self.M.carrier
        rep = Report(f"cosimplicial {self.M.name}")
        bad = None
        for n in range(0, max_level - 1):
            for l in X.basis(n):
                e = {l: R.one()}
                for i in range(0, n + 3):
                    for j in range(0, i):
                        a = self.coface(i, n + 1, self.coface(j, n, e))
                        b = self.coface(j, n + 1, self.coface(i - 1, n, e))
                        if a != b:
                            bad = (n, l, i, j)
                            break
                    if bad:
                        break
                if bad:
                    break
            if bad:
                break
        rep.add("d^i d^j = d^j d^{i-1} (i > j)", bad)
        bad1 = bad2 = None
        for p in range(0, max_level):
            for q in range(0, max_level - p):
                for a in X.basis(p):
                    for b in X.basis(q):
                        ea, eb = {a: R.one()}, {b: R.one()}
                        prod = self.cup(ea, eb)
                        for i in range(0, p + q + 2):
                            lhs = self.coface(i, p + q, prod)
                            if i <= p:
                                rhs = self.cup(self.coface(i, p, ea), eb)
                            else:
                                rhs = self.cup(ea, self.coface(i - p, q, eb))
                            if lhs != rhs and bad1 is None:
                                bad1 = (p, q, a, b, i)
                        lhs = self.cup(self.coface(p + 1, p, ea), eb)
                        rhs = self.cup(ea, self.coface(0, q, eb))
                        if lhs != rhs and bad2 is None:
                            bad2 = (p, q, a, b)
        rep.add("cup-pairing condition (1)", bad1)
        rep.add("cup-pairing condition (2)", bad2)
        return rep


def nonrealizable_coalgebra(ring: Optional[RingSpec] = None) -> ChainCoalgebra:
    """M over Z/2 on 1_0, u_2, x_3, y_3, z_3, v_4, w_6 with ∂v = x + y,
    Δ̄v = u⊗u, Δ̄w = x⊗z + z⊗y and every other generator primitive."""
    R = ring or RingSpec.prime_field(2)
    degs = {"1": 0, "u": 2, "x": 3, "y": 3, "z": 3, "v": 4, "w": 6}
    reduced = {"v": {("u", "u"): 1}, "w": {("x", "z"): 1, ("z", "y"): 1}}
    delta = {}
    for l in degs:
        vec = {("1", l): 1} if l == "1" else {("1", l): 1, (l, "1"): 1}
        for k, c in reduced.get(l, {}).items():
            vec_add_term(R, vec, k, c)
        delta[l] = vec
    diff = {"v": {"x": 1, "y": 1}}
    return ChainCoalgebra(R, degs, diff, delta, counit="1", name="M")
