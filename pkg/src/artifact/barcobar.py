"""Bar and cobar constructions and the duality algorithms built on them.

Conventions
-----------
* A cobar word is a tuple of labels ``(c_1, ..., c_k)`` of a non-counital
  chain coalgebra C, standing for ``s^{-1}c_1 ⋯ s^{-1}c_k``.
* ``d_Ω s^{-1}c = −s^{-1}dc + Σ (−1)^{|c'|} s^{-1}c' · s^{-1}c''`` (the sign is
  the Koszul sign of ``s^{-1}⊗s^{-1}`` passing ``c'``), extended as a derivation.
* A bar word ``(a_1, ..., a_k)`` stands for ``sa_1|⋯|sa_k``;
  ``d_B(sa) = −s(da)`` and ``d_B(sa|sb) ⊃ (−1)^{|a|+1} s(ab)``, extended as a
  coderivation of the deconcatenation coproduct.
* An element of T(C)∘_AΦ(X) is a tuple of *pairs* ``(c, tree)`` sorted by the
  smallest leaf of the tree; a pair is read as ``c`` followed by the tree.
* (De)suspension of an n-fold tensor: ``(s^{-1})^{⊗n}(g_1⊗⋯⊗g_n)`` carries
  the sign ``(−1)^{Σ_i (n−i)|g_i|}`` (1-based), and so does ``s^{⊗n}``.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .chain import ChainComplex, complex_from_function, label_key
from .coeff import (Infeasible, RingSpec, SparseMatrix, solve_linear, vec_add_into, vec_add_term)
from .diffract import AWCoRing, Diffraction, LevelComonoid, grouplike_comonoid
from .operad import ChainAlgebra, ChainCoalgebra, Report, StructureError, place_by_leaves
from .symmetric import TruncationProfile, all_perms, compositions, inverse, koszul_parity


# ---------------------------------------------------------------------------
# small coalgebra constructions

def tensor_coalgebra(C: ChainCoalgebra, D: ChainCoalgebra) -> ChainCoalgebra:
    """C⊗D with Δ(a⊗b) = Σ ± (a'⊗b')⊗(a''⊗b''), sign (−1)^{|a''||b'|}."""
    R = C.ring
    degs = {(a, b): C.degree(a) + D.degree(b) for a in C.labels for b in D.labels}
    diff, delta = {}, {}
    for a, b in degs:
        vec = {}
        for a2, c in C.diff(a).items():
            vec_add_term(R, vec, (a2, b), c)
        for b2, c in D.diff(b).items():
            vec_add_term(R, vec, (a, b2), R.mul(c, R.sign(C.degree(a))))
        if vec:
            diff[(a, b)] = vec
        dv = {}
        for (a1, a2), c in C.delta(a).items():
            for (b1, b2), d in D.delta(b).items():
                sg = R.sign(C.degree(a2) * D.degree(b1))
                vec_add_term(R, dv, ((a1, b1), (a2, b2)), R.mul(R.mul(c, d), sg))
        if dv:
            delta[(a, b)] = dv
    counit = (C.counit, D.counit) if C.counit is not None and D.counit is not None else None
    return ChainCoalgebra(R, degs, diff, delta, counit, f"{C.name}⊗{D.name}")


def direct_sum_coalgebra(C: ChainCoalgebra, D: ChainCoalgebra) -> ChainCoalgebra:
    """C ⊕ D with labels (0, c) and (1, d); no cross terms."""
    R = C.ring
    degs, diff, delta = {}, {}, {}
    for tag, E in ((0, C), (1, D)):
        for l in E.labels:
            degs[(tag, l)] = E.degree(l)
            diff[(tag, l)] = {(tag, k): v for k, v in E.diff(l).items()}
            delta[(tag, l)] = {((tag, a), (tag, b)): v for (a, b), v in E.delta(l).items()}
    return ChainCoalgebra(R, degs, diff, delta, None, f"{C.name}⊕{D.name}")


def _suspension_parity(degrees: Sequence[int]) -> int:
    n = len(degrees)
    return sum((n - 1 - i) * d for i, d in enumerate(degrees))


def _require_reduced(C: ChainCoalgebra):
    if C.counit is not None:
        raise StructureError("counital coalgebra: reduce it first (reduce_counital)", C.counit)


# ---------------------------------------------------------------------------
# cobar

class CobarAlgebra:
    """ΩC = ⊕_{k≥1} (s^{-1}C)^{⊗k} with the derivation differential."""

    def __init__(self, C: ChainCoalgebra, max_words: int):
        _require_reduced(C)
        self.C = C
        self.ring = C.ring
        self.max_words = max_words
        self._gen_cache: Dict = {}

    def degree(self, word) -> int:
        return sum(self.C.degree(c) - 1 for c in word)

    def letter_degree(self, c) -> int:
        return self.C.degree(c) - 1

    def generator_diff(self, c) -> Dict:
        """d_Ω(s^{-1}c) as a vector of words of length 1 and 2."""
        if c in self._gen_cache:
            return self._gen_cache[c]
        R = self.ring
        out: Dict = {}
        for c2, v in self.C.diff(c).items():
            vec_add_term(R, out, (c2,), R.neg(v))
        for (a, b), v in self.C.delta(c).items():
            vec_add_term(R, out, (a, b), R.mul(v, R.sign(self.C.degree(a))))
        self._gen_cache[c] = out
        return out

    def diff(self, word) -> Dict:
        R = self.ring
        out: Dict = {}
        acc = 0
        for i, c in enumerate(word):
            sg = R.sign(acc)
            for w2, v in self.generator_diff(c).items():
                vec_add_term(R, out, word[:i] + w2 + word[i + 1:], R.mul(v, sg))
            acc += self.letter_degree(c)
        return out

    def diff_vec(self, vec: Dict) -> Dict:
        out: Dict = {}
        for w, c in vec.items():
            vec_add_into(self.ring, out, self.diff(w), c)
        return out

    def mul_vec(self, u: Dict, v: Dict) -> Dict:
        out: Dict = {}
        for a, c in u.items():
            for b, d in v.items():
                vec_add_term(self.ring, out, a + b, self.ring.mul(c, d))
        return out

    def words(self, max_degree: int, max_words: Optional[int] = None) -> List[tuple]:
        """All words of length 1..max_words with degree ≤ max_degree."""
        k_max = self.max_words if max_words is None else max_words
        out = []
        letters = self.C.labels
        for k in range(1, k_max + 1):
            for w in itertools.product(letters, repeat=k):
                if self.degree(w) <= max_degree:
                    out.append(w)
        return out

    def complex(self, max_degree: int) -> ChainComplex:
        """Words of length ≤ max_words.  Exact as a complex whenever d never
        leaves the retained words (e.g. when Δ = 0, or below the window)."""
        bases: Dict[int, List] = {}
        for w in self.words(max_degree):
            bases.setdefault(self.degree(w), []).append(w)
        keep = {w for ws in bases.values() for w in ws}
        return complex_from_function(self.ring, bases,
                                     lambda w: {k: v for k, v in self.diff(w).items() if k in keep},
                                     lower_bound=min(bases) if bases else 0)

    def algebra(self, max_degree: int) -> ChainAlgebra:
        """The truncated algebra on retained words (products leaving the
        window are dropped)."""
        ws = self.words(max_degree)
        keep = set(ws)
        degs = {w: self.degree(w) for w in ws}
        mul = {}
        for a in ws:
            for b in ws:
                if a + b in keep:
                    mul[(a, b)] = {a + b: self.ring.one()}
        diff = {w: {k: v for k, v in self.diff(w).items() if k in keep} for w in ws}
        return ChainAlgebra(self.ring, degs, diff, mul, f"Ω{self.C.name}")

    def verify(self, max_degree: int) -> Report:
        rep = Report(f"cobar Ω{self.C.name}")
        bad = None
        for w in self.words(max_degree, max(1, self.max_words - 2) if self.max_words > 2 else self.max_words):
            if self.diff_vec(self.diff(w)):
                bad = w
                break
        rep.add("d_Ω∘d_Ω = 0", bad)
        bad = None
        for a in self.words(max_degree, 2):
            for b in self.words(max_degree, 2):
                lhs = self.diff(a + b)
                rhs = self.mul_vec(self.diff(a), {b: 1})
                vec_add_into(self.ring, rhs, self.mul_vec({a: 1}, self.diff(b)), self.ring.sign(self.degree(a)))
                if lhs != rhs:
                    bad = (a, b)
                    break
            if bad:
                break
        rep.add("d_Ω is a derivation", bad)
        return rep


def cobar(C: ChainCoalgebra, max_words: int = 4) -> CobarAlgebra:
    """ΩC for a non-counital coalgebra; axioms of C are checked first."""
    _require_reduced(C)
    fails = C.verify().failures()
    if fails:
        raise StructureError(f"coalgebra fails: {fails[0].name}", fails[0].witness)
    return CobarAlgebra(C, max_words)


# ---------------------------------------------------------------------------
# bar

def bar(A: ChainAlgebra, max_words: int = 3, max_degree: Optional[int] = None) -> ChainCoalgebra:
    """BA truncated to words of length ≤ max_words (a sub-coalgebra and
    subcomplex of the cofree coalgebra, so every identity holds exactly)."""
    fails = A.verify().failures()
    if fails:
        raise StructureError(f"algebra fails: {fails[0].name}", fails[0].witness)
    R = A.ring
    sdeg = {a: A.degree(a) + 1 for a in A.labels}
    degs = {}
    for k in range(1, max_words + 1):
        for w in itertools.product(A.labels, repeat=k):
            d = sum(sdeg[a] for a in w)
            if max_degree is None or d <= max_degree:
                degs[w] = d
    diff, delta = {}, {}
    for w in degs:
        vec: Dict = {}
        acc = 0
        for i, a in enumerate(w):
            sg = R.sign(acc)
            for a2, v in A.diff(a).items():
                vec_add_term(R, vec, w[:i] + (a2,) + w[i + 1:], R.mul(R.neg(v), sg))
            if i + 1 < len(w):
                b = w[i + 1]
                for ab, v in A.mul(a, b).items():
                    coeff = R.mul(v, R.mul(sg, R.sign(A.degree(a) + 1)))
                    vec_add_term(R, vec, w[:i] + (ab,) + w[i + 2:], coeff)
            acc += sdeg[a]
        diff[w] = {k: v for k, v in vec.items() if k in degs}
        delta[w] = {(w[:i], w[i:]): R.one() for i in range(1, len(w))}
    return ChainCoalgebra(R, degs, diff, delta, None, f"B{A.name}")


def bar_verify(B: ChainCoalgebra) -> Report:
    """d_B² = 0 and d_B a coderivation, on the truncated bar coalgebra."""
    return B.verify()


# ---------------------------------------------------------------------------
# orbit representatives of a level comonoid

_ORBIT_CACHE: Dict = {}


def orbit_rep(X: LevelComonoid, x, m: int):
    """(rep, π, coeff) with X.act(x, π) = coeff·rep and rep the least label
    of the orbit of x (monomial actions only)."""
    key = (id(X), x)
    if key in _ORBIT_CACHE:
        return _ORBIT_CACHE[key]
    orbit = {}
    for p in all_perms(m):
        res = X.seq.act(x, p)
        if len(res) != 1:
            raise StructureError("the action is not monomial", (x, p))
        (y, c), = res.items()
        orbit.setdefault(y, (p, c))
    rep = min(orbit, key=label_key)
    out = (rep,) + orbit[rep]
    _ORBIT_CACHE[key] = out
    return out


def _permute_tensor(R: RingSpec, factors: tuple, perm, degree: Callable):
    """The right action on T: new[i] = old[perm[i]], with the Koszul sign."""
    new = tuple(factors[perm[i]] for i in range(len(factors)))
    return new, R.sign(koszul_parity(perm, [degree(f) & 1 for f in factors]))


# ---------------------------------------------------------------------------
# T(C) ∘_A Φ(X)

class TensorDiffraction:
    """T(C) ∘_A Φ(X) as tuples of (c, tree) pairs sorted by smallest leaf."""

    def __init__(self, C: ChainCoalgebra, D: Diffraction):
        self.C = C
        self.D = D
        self.X = D.X
        self.ring = C.ring
        self._basis: Dict = {}

    def pair_degree(self, pair) -> int:
        return self.C.degree(pair[0]) + self.D.node_degree_total(pair[1])

    def degree(self, E) -> int:
        return sum(self.pair_degree(p) for p in E)

    def sort_pairs(self, pairs, coeff=None) -> Tuple[tuple, object]:
        R = self.ring
        order = sorted(range(len(pairs)), key=lambda i: self.D.min_leaf(pairs[i][1]))
        par = koszul_parity(order, [self.pair_degree(p) & 1 for p in pairs])
        c = R.sign(par) if coeff is None else R.mul(coeff, R.sign(par))
        return tuple(pairs[i] for i in order), c

    def canon(self, pairs, coeff=None) -> Dict:
        R = self.ring
        terms = [(R.one() if coeff is None else coeff, ())]
        for c, t in pairs:
            sub = self.D.canon_tree(t)
            terms = [(R.mul(a, b), acc + ((c, t2),)) for a, acc in terms for t2, b in sub.items()]
        out: Dict = {}
        for a, ps in terms:
            E, s = self.sort_pairs(list(ps), a)
            vec_add_term(R, out, E, s)
        return out

    def basis(self, n: int, max_degree: Optional[int] = None) -> List[tuple]:
        key = (n, max_degree)
        if key in self._basis:
            return self._basis[key]
        out = []
        for f in self.D.basis(n):
            mins = [self.D.min_leaf(t) for t in f]
            if mins != sorted(mins):
                continue
            for cs in itertools.product(self.C.labels, repeat=len(f)):
                E = tuple(zip(cs, f))
                if max_degree is None or self.degree(E) <= max_degree:
                    out.append(E)
        out.sort(key=lambda E: (self.degree(E), repr(E)))
        self._basis[key] = out
        return out

    def act(self, E, perm) -> Dict:
        R = self.ring
        terms = [(R.one(), ())]
        for c, t in E:
            sub = self.D.act((t,), perm)
            terms = [(R.mul(a, b), acc + ((c, f[0]),)) for a, acc in terms for f, b in sub.items()]
        out: Dict = {}
        for a, ps in terms:
            E2, s = self.sort_pairs(list(ps), a)
            vec_add_term(R, out, E2, s)
        return out

    def diff(self, E) -> Dict:
        R, C, D = self.ring, self.C, self.D
        out: Dict = {}
        prefix = 0
        for j, (c, t) in enumerate(E):
            before, after = list(E[:j]), list(E[j + 1:])
            for c2, v in C.diff(c).items():
                for E2, w in self.canon(before + [(c2, t)] + after).items():
                    vec_add_term(R, out, E2, R.mul(R.mul(v, w), R.sign(prefix)))
            sg = R.sign(prefix + C.degree(c))
            for f, v in D.diff((t,)).items():
                q = len(f)
                tpars = [D.node_degree_total(s) & 1 for s in f]
                for pieces, w in C.iterated_delta(c, q).items():
                    par = sum(tpars[a] * (C.degree(pieces[b]) & 1) for a in range(q) for b in range(a + 1, q))
                    coeff = R.mul(R.mul(v, w), R.mul(sg, R.sign(par)))
                    E2, s = self.sort_pairs(before + list(zip(pieces, f)) + after, coeff)
                    vec_add_term(R, out, E2, s)
            prefix += self.pair_degree((c, t))
        return out

    def diff_vec(self, vec: Dict) -> Dict:
        out: Dict = {}
        for E, c in vec.items():
            vec_add_into(self.ring, out, self.diff(E), c)
        return out

    def level(self, E) -> int:
        return sum(len(self.D.leaves((t,))) for _, t in E)


def _tensor_diff(C: ChainCoalgebra, tup: tuple) -> Dict:
    R = C.ring
    out: Dict = {}
    acc = 0
    for i, c in enumerate(tup):
        for c2, v in C.diff(c).items():
            vec_add_term(R, out, tup[:i] + (c2,) + tup[i + 1:], R.mul(v, R.sign(acc)))
        acc += C.degree(c)
    return out


def tensor_diff_vec(C: ChainCoalgebra, vec: Dict) -> Dict:
    out: Dict = {}
    for t, c in vec.items():
        vec_add_into(C.ring, out, _tensor_diff(C, t), c)
    return out


# ---------------------------------------------------------------------------
# transposed tensor morphisms

def _tensor_degree(C: ChainCoalgebra, tup) -> int:
    return sum(C.degree(c) for c in tup)


class TransposedTensorMorphism:
    """The right A-module morphism T(C)∘_AΦ(X) → T(C') induced by a family.

    ``family(c, x, sizes)`` gives θ_{n⃗}(c ⊗ s_{m−1}x ⊗ α_{n⃗}) as a vector of
    n-tuples of C'-labels, block after block; it is consulted only at orbit
    representatives x.  Families vanish for n > ``max_arity``."""

    def __init__(self, source: TensorDiffraction, target: ChainCoalgebra, family,
                 max_arity: int, name: str = "θ"):
        self.source = source
        self.target = target
        self.ring = target.ring
        self.max_arity = max_arity
        self.name = name
        self._family = family
        self._values: Dict = {}
        self._collapsed: Dict = {}

    def value(self, c, x, sizes) -> Dict:
        key = (c, x, tuple(sizes))
        if key not in self._values:
            if sum(sizes) > self.max_arity:
                v = {}
            elif isinstance(self._family, dict):
                v = dict(self._family.get(key, {}))
            else:
                v = dict(self._family(c, x, tuple(sizes)))
            want = self.source.C.degree(c) + self.source.X.seq.degree(x) + sum(sizes) - 1
            for t in v:
                if len(t) != sum(sizes) or _tensor_degree(self.target, t) != want:
                    raise StructureError("family value has the wrong arity or degree", (key, t))
            self._values[key] = v
        return self._values[key]

    def keys(self, levels: Iterable[int]) -> List[tuple]:
        """Family keys (c, rep, sizes) over the given numbers of blocks m."""
        X = self.source.X
        out = []
        for m in levels:
            if m > X.seq.trunc.max_level:
                continue
            reps = sorted({orbit_rep(X, x, m)[0] for x in X.seq.basis(m)}, key=label_key)
            for n in range(m, self.max_arity + 1):
                for sizes in compositions(n, m):
                    for x in reps:
                        for c in self.source.C.labels:
                            out.append((c, x, sizes))
        return out

    # -- evaluation --------------------------------------------------------
    def _collapse(self, E):
        entries = []
        for j, (c, t) in enumerate(E):
            for bi, b in enumerate(t[1]):
                for ei, e in enumerate(b):
                    entries.append((min(e), j, bi, ei, e))
        entries.sort()
        slot_of = {(j, bi, ei): s for s, (_, j, bi, ei, _) in enumerate(entries)}
        E0 = []
        for j, (c, t) in enumerate(E):
            x, blocks = t
            nb = tuple(tuple((slot_of[(j, bi, ei)],) for ei in range(len(b))) for bi, b in enumerate(blocks))
            E0.append((c, (x, nb)))
        return tuple(E0), [e[4] for e in entries]

    def _evaluate_collapsed(self, E0) -> Dict:
        if E0 in self._collapsed:
            return self._collapsed[E0]
        R = self.ring
        S = self.source
        X = S.X
        std, nodes = [], []
        r = sum(len(b) for _, t in E0 for b in t[1])
        perm = [None] * r
        off = 0
        for c, (x, blocks) in E0:
            m = len(blocks)
            rep, pi, _ = orbit_rep(X, x, m)
            nb = [blocks[pi[i]] for i in range(m)]
            sizes = tuple(len(b) for b in nb)
            gen = S.D.generator(rep, sizes)
            gen = _shift_leaves(gen, off)
            pos = off
            for b in nb:
                for e in b:
                    perm[e[0]] = pos
                    pos += 1
            off = pos
            std.append((c, gen))
            nodes.append((c, rep, sizes))
        perm = tuple(perm)
        acted = S.act(tuple(std), perm)
        if set(acted) != {E0}:
            raise StructureError("element is not a relabelled standard composite", (E0, acted))
        sgn = acted[E0]
        # θ on the standard composite: every output factor sits at its own
        # leaf, which on block-major leaves is the transposed tensor pattern
        terms = [(R.one(), ())]
        for c, rep, sizes in nodes:
            vals = self.value(c, rep, sizes)
            terms = [(R.mul(a, v), acc + tup) for a, acc in terms for tup, v in vals.items()]
        out: Dict = {}
        for coeff, tup in terms:
            final, s2 = _permute_tensor(R, tup, perm, self.target.degree)
            vec_add_term(R, out, final, R.mul(R.mul(coeff, sgn), s2))
        self._collapsed[E0] = out
        return out

    def evaluate(self, E) -> Dict:
        R = self.ring
        Cp = self.target
        E0, slots = self._collapse(E)
        base = self._evaluate_collapsed(E0)
        if all(len(e) == 1 for e in slots):
            relabel = [e[0] for e in slots]
            out: Dict = {}
            for tup, c in base.items():
                sg, factors = place_by_leaves(R, list(zip(relabel, tup)), Cp.degree)
                vec_add_term(R, out, factors, R.mul(c, sg))
            return out
        out = {}
        for tup, c in base.items():
            terms = [(c, [], [])]
            for s, f in enumerate(tup):
                e = slots[s]
                new = []
                for pieces, d in Cp.iterated_delta(f, len(e)).items():
                    for a, lv, fv in terms:
                        new.append((R.mul(a, d), lv + list(e), fv + list(pieces)))
                terms = new
            for a, lv, fv in terms:
                sg, factors = place_by_leaves(R, list(zip(lv, fv)), Cp.degree)
                vec_add_term(R, out, factors, R.mul(a, sg))
        return out

    def evaluate_vec(self, vec: Dict) -> Dict:
        out: Dict = {}
        for E, c in vec.items():
            vec_add_into(self.ring, out, self.evaluate(E), c)
        return out

    # -- invariants --------------------------------------------------------
    def check_equivariance(self, max_level: int, max_degree: Optional[int] = None):
        """θ(E·s) = θ(E)·s for adjacent transpositions s; returns a witness or None."""
        R = self.ring
        T = self.target
        for n in range(2, max_level + 1):
            for E in self.source.basis(n, max_degree):
                base = self.evaluate(E)
                for i in range(n - 1):
                    s = tuple(range(i)) + (i + 1, i) + tuple(range(i + 2, n))
                    lhs = self.evaluate_vec(self.source.act(E, s))
                    rhs: Dict = {}
                    for tup, c in base.items():
                        t2, sg = _permute_tensor(R, tup, s, T.degree)
                        vec_add_term(R, rhs, t2, R.mul(c, sg))
                    if lhs != rhs:
                        return (E, s)
        return None

    def check_chain(self, max_level: int, max_degree: Optional[int] = None):
        """d θ = θ ∂ on the basis; returns a witness or None."""
        for n in range(1, max_level + 1):
            for E in self.source.basis(n, max_degree):
                lhs = tensor_diff_vec(self.target, self.evaluate(E))
                rhs = self.evaluate_vec(self.source.diff(E))
                if lhs != rhs:
                    return E
        return None

    def equals(self, other: "TransposedTensorMorphism", max_level: int, max_degree: Optional[int] = None):
        for n in range(1, max_level + 1):
            for E in self.source.basis(n, max_degree):
                if self.evaluate(E) != other.evaluate(E):
                    return E
        return None

    def family_equals(self, other: "TransposedTensorMorphism", levels: Iterable[int]):
        for key in self.keys(levels):
            if self.value(*key) != other.value(*key):
                return key
        return None


def _shift_leaves(node, off: int):
    x, blocks = node
    return (x, tuple(tuple(tuple(l + off for l in e) for e in b) for b in blocks))


def transposed_tensor(family, C: ChainCoalgebra, Cp: ChainCoalgebra, D: Diffraction,
                      max_arity: int, check_level: Optional[int] = None) -> TransposedTensorMorphism:
    """Build θ from a family; with ``check_level`` the induced morphism is
    tested for equivariance and a violation raises with its witness."""
    theta = TransposedTensorMorphism(TensorDiffraction(C, D), Cp, family, max_arity)
    if check_level:
        bad = theta.check_equivariance(check_level)
        if bad is not None:
            raise StructureError("family is not equivariant", bad)
    return theta


def zero_morphism(source: TensorDiffraction, Cp: ChainCoalgebra, max_arity: int = 1):
    return TransposedTensorMorphism(source, Cp, {}, max_arity, "0")


def identity_epsilon(source: TensorDiffraction) -> TransposedTensorMorphism:
    """Id_{T(C)} ∘_A ε : T(C)∘_A F → T(C)."""
    u = source.X.unit
    R = source.ring

    def fam(c, x, sizes):
        return {(c,): R.one()} if x == u and sizes == (1,) else {}

    return TransposedTensorMorphism(source, source.C, fam, 1, "Id∘ε")


def sum_morphism(theta1: TransposedTensorMorphism, theta2: TransposedTensorMorphism):
    """The morphism out of T(C'⊕C'')∘_AΦ(X) restricting to θ', θ''."""
    if theta1.target is not theta2.target:
        raise StructureError("summands must share the target")
    S = direct_sum_coalgebra(theta1.source.C, theta2.source.C)
    src = TensorDiffraction(S, theta1.source.D)

    def fam(c, x, sizes):
        tag, l = c
        return (theta1 if tag == 0 else theta2).value(l, x, sizes)

    return TransposedTensorMorphism(src, theta1.target, fam, max(theta1.max_arity, theta2.max_arity),
                                    f"{theta1.name}+{theta2.name}")


def restrict_morphism(theta: TransposedTensorMorphism, tag: int, C: ChainCoalgebra):
    src = TensorDiffraction(C, theta.source.D)
    return TransposedTensorMorphism(src, theta.target, lambda c, x, s: theta.value((tag, c), x, s),
                                    theta.max_arity, f"{theta.name}|{tag}")


def precompose_comonoid(theta: TransposedTensorMorphism, beta: Callable, DY: Diffraction):
    """θ∘(Id∘_AΦ(β)) for a comonoid morphism β: Y → X (``beta(y)`` is a vector)."""
    src = TensorDiffraction(theta.source.C, DY)
    R = theta.ring
    DX = theta.source.D

    def fam(c, y, sizes):
        out: Dict = {}
        for x, v in beta(y).items():
            vec_add_into(R, out, theta.evaluate(((c, DX.generator(x, sizes)),)), v)
        return out

    return TransposedTensorMorphism(src, theta.target, fam, theta.max_arity, f"{theta.name}∘Φβ")


def random_family(source: TensorDiffraction, Cp: ChainCoalgebra, max_arity: int, rng: random.Random,
                  levels: Iterable[int], density: float = 0.5, coeffs=(-1, 1, 2)):
    """A random family on orbit representatives."""
    R = Cp.ring
    by_degree: Dict = {}
    fam = {}
    probe = TransposedTensorMorphism(source, Cp, {}, max_arity)
    for c, x, sizes in probe.keys(levels):
        n = sum(sizes)
        want = source.C.degree(c) + source.X.seq.degree(x) + n - 1
        key = (n, want)
        if key not in by_degree:
            by_degree[key] = [t for t in itertools.product(Cp.labels, repeat=n)
                              if _tensor_degree(Cp, t) == want]
        vec: Dict = {}
        for t in by_degree[key]:
            if rng.random() < density:
                vec_add_term(R, vec, t, R.canon(rng.choice(coeffs)))
        if vec:
            fam[(c, x, sizes)] = vec
    return TransposedTensorMorphism(source, Cp, fam, max_arity, "θ_rand")


# ---------------------------------------------------------------------------
# multiplicative morphisms T(ΩC)∘X → T(ΩC')

def _words_degree(O: CobarAlgebra, words) -> int:
    return sum(O.degree(w) for w in words)


def multiplicative_extend(gen: Callable, split: Callable, product: Callable, ring: RingSpec,
                          letter_degree: Callable, x_degree: Callable) -> Callable:
    """Extend ``gen(letter, x)`` to words: on a word of length k,
    apply Δ^{(k−1)} to x (``split(x, k)`` lists (coeff, (x_1..x_k))),
    shuffle letters past the x_i, apply gen factorwise and multiply with
    ``product(u, v)`` (vectors)."""

    def apply(word, x) -> Dict:
        k = len(word)
        out: Dict = {}
        for coeff, xs in split(x, k):
            par = 0
            for j in range(k):
                for i in range(j):
                    par += x_degree(xs[i]) * letter_degree(word[j])
            acc = None
            for a, xi in zip(word, xs):
                val = gen(a, xi)
                acc = val if acc is None else product(acc, val)
                if not acc:
                    break
            if acc:
                vec_add_into(ring, out, acc, ring.mul(coeff, ring.sign(par)))
        return out

    return apply


class MultiplicativeMorphism:
    """φ: T(ΩC)∘X → T(ΩC'), determined by φ(s^{-1}c ⊗ x) for x at orbit
    representatives; values are vectors of m-tuples of cobar words."""

    def __init__(self, source: CobarAlgebra, X: LevelComonoid, target: CobarAlgebra,
                 gen_rep: Callable, name: str = "φ"):
        self.source = source
        self.X = X
        self.target = target
        self.ring = target.ring
        self.name = name
        self._gen_rep = gen_rep
        self._cache: Dict = {}
        self._apply = multiplicative_extend(self.gen, self._split, self._product, self.ring,
                                            source.letter_degree, X.seq.degree)

    def _split(self, x, k):
        return self.X.iterated_delta(x, k - 1)

    def _product(self, u: Dict, v: Dict) -> Dict:
        """Componentwise product in the level monoid (ΩC')^{⊗m}."""
        R = self.ring
        O = self.target
        out: Dict = {}
        for a, c in u.items():
            for b, d in v.items():
                par = 0
                for i in range(len(a)):
                    for j in range(i):
                        par += O.degree(a[i]) * O.degree(b[j])
                vec_add_term(R, out, tuple(p + q for p, q in zip(a, b)), R.mul(R.mul(c, d), R.sign(par)))
        return out

    def gen(self, c, x) -> Dict:
        key = (c, x)
        if key in self._cache:
            return self._cache[key]
        R = self.ring
        m = _level_of(self.X, x)
        rep, pi, coeff = orbit_rep(self.X, x, m)
        base = self._gen_rep(c, rep)
        out: Dict = {}
        if rep == x:
            out = dict(base)
        else:
            # x = coeff^{-1}·rep·π^{-1}
            back = inverse(pi)
            for words, v in base.items():
                new, sg = _permute_tensor(R, words, back, self.target.degree)
                vec_add_term(R, out, new, R.mul(R.mul(v, sg), R.inv(coeff)))
        self._cache[key] = out
        return out

    def apply(self, word, x) -> Dict:
        return self._apply(word, x)

    def apply_tensor(self, words: Sequence[tuple], xs: Sequence) -> Dict:
        """φ on T(ΩC)(k)⊗X(m_1)⊗⋯⊗X(m_k): shuffle, apply, concatenate."""
        R = self.ring
        par = 0
        for j in range(len(words)):
            for i in range(j + 1, len(words)):
                par += self.source.degree(words[i]) * self.X.seq.degree(xs[j])
        acc: Dict = {(): R.sign(par)}
        for w, x in zip(words, xs):
            val = self.apply(w, x)
            acc = {a + b: R.mul(c, d) for a, c in acc.items() for b, d in val.items()}
            acc = {k: v for k, v in acc.items() if R.canon(v)}
        return acc

    def equals(self, other: "MultiplicativeMorphism", max_level: int, max_words: int, max_degree: int):
        """First (word, x) where the two morphisms differ, or None."""
        for m in range(1, max_level + 1):
            if m > self.X.seq.trunc.max_level:
                break
            for x in self.X.seq.basis(m):
                for w in self.source.words(max_degree, max_words):
                    if self.apply(w, x) != other.apply(w, x):
                        return (w, x)
        return None

    def check_chain(self, max_level: int, max_words: int, max_degree: int):
        """d φ = φ d on words ⊗ x (x ∈ X, which carries its own differential)."""
        R = self.ring
        for m in range(1, max_level + 1):
            for x in self.X.seq.basis(m):
                for w in self.source.words(max_degree, max_words):
                    lhs = _level_tensor_diff(self.target, self.apply(w, x))
                    rhs: Dict = {}
                    for w2, c in self.source.diff(w).items():
                        vec_add_into(R, rhs, self.apply(w2, x), c)
                    sg = R.sign(self.source.degree(w))
                    for x2, c in self.X.seq.diff(x).items():
                        vec_add_into(R, rhs, self.apply(w, x2), R.mul(c, sg))
                    if lhs != rhs:
                        return (w, x)
        return None


def _level_of(X: LevelComonoid, x) -> int:
    for m in range(1, X.seq.trunc.max_level + 1):
        if x in _basis_set(X, m):
            return m
    raise StructureError("label not in any retained level", x)


_BASIS_SETS: Dict = {}


def _basis_set(X: LevelComonoid, m: int):
    key = (id(X), m)
    if key not in _BASIS_SETS:
        _BASIS_SETS[key] = set(X.seq.basis(m))
    return _BASIS_SETS[key]


def _level_tensor_diff(O: CobarAlgebra, vec: Dict) -> Dict:
    R = O.ring
    out: Dict = {}
    for words, c in vec.items():
        acc = 0
        for i, w in enumerate(words):
            for w2, v in O.diff(w).items():
                vec_add_term(R, out, words[:i] + (w2,) + words[i + 1:], R.mul(R.mul(c, v), R.sign(acc)))
            acc += O.degree(w)
    return out


def induce(theta: TransposedTensorMorphism, source: CobarAlgebra, target: CobarAlgebra) -> MultiplicativeMorphism:
    """Ind(θ): s^{-1}c ⊗ x ↦ Σ_{n⃗} ι_{n⃗}(s^{-1})^{⊗n} θ_{n⃗}(c ⊗ s_{m−1}x ⊗ α_{n⃗}),
    with the Koszul sign (−1)^{(n−1)(|c|−1)} of passing the degree-(n−1)
    suspension η_{n⃗} over s^{-1}c."""
    R = theta.ring
    C = theta.source.C
    D = theta.source.D
    X = theta.source.X
    Cp = theta.target

    def gen_rep(c, x):
        m = _level_of(X, x)
        out: Dict = {}
        for n in range(m, theta.max_arity + 1):
            sg0 = R.sign((n - 1) * (C.degree(c) - 1))
            for sizes in compositions(n, m):
                vals = theta.evaluate(((c, D.generator(x, sizes)),))
                for tup, v in vals.items():
                    par = _suspension_parity([Cp.degree(g) for g in tup])
                    words, pos = [], 0
                    for k in sizes:
                        words.append(tup[pos:pos + k])
                        pos += k
                    vec_add_term(R, out, tuple(words), R.mul(v, R.mul(sg0, R.sign(par))))
        return out

    return MultiplicativeMorphism(source, X, target, gen_rep, f"Ind({theta.name})")


def linearize(phi: MultiplicativeMorphism, D: Diffraction, max_arity: int) -> TransposedTensorMorphism:
    """Lin(φ): θ_{n⃗}(c ⊗ s_{m−1}x ⊗ α_{n⃗}) = ± s^{⊗n} π_{n⃗} φ(s^{-1}c ⊗ x)."""
    if not isinstance(phi, MultiplicativeMorphism):
        raise StructureError("only multiplicative morphisms can be linearized", phi)
    R = phi.ring
    C = phi.source.C
    Cp = phi.target.C

    def fam(c, x, sizes):
        n = sum(sizes)
        sg0 = R.sign((n - 1) * (C.degree(c) - 1))
        out: Dict = {}
        for words, v in phi.gen(c, x).items():
            if tuple(len(w) for w in words) != tuple(sizes):
                continue
            tup = tuple(l for w in words for l in w)
            par = _suspension_parity([Cp.degree(g) for g in tup])
            vec_add_term(R, out, tup, R.mul(v, R.mul(sg0, R.sign(par))))
        return out

    return TransposedTensorMorphism(TensorDiffraction(C, D), Cp, fam, max_arity, f"Lin({phi.name})")


def multiplicative_from_function(fn: Callable, source: CobarAlgebra, X: LevelComonoid, target: CobarAlgebra,
                                 max_level: int, max_words: int, max_degree: int) -> MultiplicativeMorphism:
    """Wrap ``fn(word, x)``; raises if it is not the multiplicative
    extension of its values on single letters."""
    phi = MultiplicativeMorphism(source, X, target, lambda c, x: fn((c,), x), "φ")
    for m in range(1, max_level + 1):
        for x in X.seq.basis(m):
            for w in source.words(max_degree, max_words):
                if fn(w, x) != phi.apply(w, x):
                    raise StructureError("morphism is not multiplicative", (w, x))
    return phi


def random_multiplicative(source: CobarAlgebra, X: LevelComonoid, target: CobarAlgebra, rng: random.Random,
                          max_level: int, max_word: int, density: float = 0.4, coeffs=(-1, 1, 2)):
    """Random generator values on orbit representatives, words of length ≤ max_word."""
    R = target.ring
    letters = target.C.labels
    table: Dict = {}
    for m in range(1, max_level + 1):
        reps = sorted({orbit_rep(X, x, m)[0] for x in X.seq.basis(m)}, key=label_key)
        for x in reps:
            for c in source.C.labels:
                want = source.letter_degree(c) + X.seq.degree(x)
                vec: Dict = {}
                for lens in itertools.product(range(1, max_word + 1), repeat=m):
                    for flat in itertools.product(letters, repeat=sum(lens)):
                        words, pos = [], 0
                        for k in lens:
                            words.append(flat[pos:pos + k])
                            pos += k
                        if sum(target.degree(w) for w in words) == want and rng.random() < density:
                            vec_add_term(R, vec, tuple(words), R.canon(rng.choice(coeffs)))
                table[(c, x)] = vec
    return MultiplicativeMorphism(source, X, target, lambda c, x: table.get((c, x), {}), "φ_rand")


def identity_multiplicative(O: CobarAlgebra, X: LevelComonoid) -> MultiplicativeMorphism:
    R = O.ring
    return MultiplicativeMorphism(O, X, O, lambda c, x: {((c,),): R.one()} if x == X.unit else {}, "Id")


def precompose_multiplicative(phi: MultiplicativeMorphism, beta: Callable, Y: LevelComonoid):
    """φ∘(Id∘β) as a multiplicative morphism out of T(ΩC)∘Y."""
    R = phi.ring

    def gen(c, y):
        out: Dict = {}
        for x, v in beta(y).items():
            vec_add_into(R, out, phi.gen(c, x), v)
        return out

    return MultiplicativeMorphism(phi.source, Y, phi.target, gen, f"{phi.name}∘β")


# ---------------------------------------------------------------------------
# Kleisli composition for R = F

class GovernedMorphism:
    """θ: T(C)∘_A F → T(C') viewed as an F-governed morphism C ⇝ C'."""

    def __init__(self, theta: TransposedTensorMorphism, coring: AWCoRing):
        self.theta = theta
        self.coring = coring

    @property
    def source(self):
        return self.theta.source.C

    @property
    def target(self):
        return self.theta.target


def _composite_evaluate(theta2: TransposedTensorMorphism, theta1: TransposedTensorMorphism,
                        F: AWCoRing, E) -> Dict:
    """θ2 ∘ (θ1 ∘_A Id_F) ∘ (Id ∘_A ψ) on one element of T(C)∘_A F."""
    R = theta1.ring
    C, Cp = theta1.source.C, theta1.target
    mid = theta2.source
    per_pair = []
    for c, t in E:
        per_pair.append([(c, top, v) for (top,), v in F.psi((t,)).items()])
    out: Dict = {}
    for combo in itertools.product(*per_pair):
        coeff = R.one()
        for _, _, v in combo:
            coeff = R.mul(coeff, v)
        # items read (c_j, T_j, B_j...) pair by pair; move all bottoms to the end
        items, kinds = [], []
        for j, (c, top, _) in enumerate(combo):
            items.append(C.degree(c) & 1)
            kinds.append(("c", j))
            items.append(F.own_degree(top) & 1)
            kinds.append(("t", j))
            for bi, b in enumerate(top[1]):
                for ei, e in enumerate(b):
                    for ci, ch in enumerate(e):
                        items.append(F.node_degree_total(ch) & 1)
                        kinds.append(("b", (j, bi, ei, ci)))
        order = [q for q, k in enumerate(kinds) if k[0] != "b"] + [q for q, k in enumerate(kinds) if k[0] == "b"]
        coeff = R.mul(coeff, R.sign(koszul_parity(order, items)))
        bottom_seq = [kinds[q][1] for q in order if kinds[q][0] == "b"]
        # collapse the top layer: entry → slot, numbered by smallest leaf below it
        entries = []
        for j, (c, top, _) in enumerate(combo):
            for bi, b in enumerate(top[1]):
                for ei, e in enumerate(b):
                    entries.append((min(F.min_leaf(ch) for ch in e), j, bi, ei))
        entries.sort()
        slot_of = {(j, bi, ei): s for s, (_, j, bi, ei) in enumerate(entries)}
        E_top = []
        for j, (c, top, _) in enumerate(combo):
            x, blocks = top
            nb = tuple(tuple((slot_of[(j, bi, ei)],) for ei in range(len(b))) for bi, b in enumerate(blocks))
            E_top.append((c, (x, nb)))
        E_top = tuple(E_top)
        child_of = {}
        for j, (c, top, _) in enumerate(combo):
            for bi, b in enumerate(top[1]):
                for ei, e in enumerate(b):
                    child_of[slot_of[(j, bi, ei)]] = [((j, bi, ei, ci), ch) for ci, ch in enumerate(e)]
        for tup, v in theta1.evaluate(E_top).items():
            # split factor at slot s over the children of that entry
            terms = [(R.mul(coeff, v), [])]
            for s, f in enumerate(tup):
                kids = child_of[s]
                new = []
                for pieces, d in Cp.iterated_delta(f, len(kids)).items():
                    for a, acc in terms:
                        new.append((R.mul(a, d), acc + [(p, kid) for p, kid in zip(pieces, kids)]))
                terms = new
            for a, assigned in terms:
                # reading: pieces (slot order), then bottoms (bottom_seq); pair them up
                piece_pars = [Cp.degree(p) & 1 for p, _ in assigned]
                pos_of = {key: q for q, key in enumerate(bottom_seq)}
                bottom_pars = [0] * len(bottom_seq)
                for _, (key, ch) in assigned:
                    bottom_pars[pos_of[key]] = F.node_degree_total(ch) & 1
                npieces = len(assigned)
                target_order = []
                for q, (_, (key, _)) in enumerate(assigned):
                    target_order += [q, npieces + pos_of[key]]
                par = koszul_parity(target_order, piece_pars + bottom_pars)
                pairs = [(p, ch) for p, (_, ch) in assigned]
                E2, s2 = mid.sort_pairs(pairs, R.mul(a, R.sign(par)))
                vec_add_into(R, out, theta2.evaluate(E2), s2)
    return out


def kleisli_compose(theta2: TransposedTensorMorphism, theta1: TransposedTensorMorphism,
                    F: AWCoRing) -> TransposedTensorMorphism:
    """θ2·θ1 = θ2 ∘ (θ1 ∘_A Id_F) ∘ (Id ∘_A ψ_F), returned through its family."""
    if theta1.target is not theta2.source.C:
        raise StructureError("morphisms are not composable")
    D = theta1.source.D
    arity = min(theta1.max_arity * theta2.max_arity, D.trunc.max_level)

    def fam(c, x, sizes):
        return _composite_evaluate(theta2, theta1, F, ((c, D.generator(x, sizes)),))

    comp = TransposedTensorMorphism(theta1.source, theta2.target, fam, arity, f"{theta2.name}·{theta1.name}")
    comp.direct = lambda E: _composite_evaluate(theta2, theta1, F, E)
    return comp


def compose_multiplicative(phi2: MultiplicativeMorphism, phi1: MultiplicativeMorphism) -> MultiplicativeMorphism:
    """φ2 ∘ φ1 for X = J (the level diagonal of J is u ↦ u⊗u)."""
    R = phi1.ring
    u = phi1.X.unit

    def gen(c, x):
        out: Dict = {}
        for (w,), v in phi1.gen(c, x).items():
            vec_add_into(R, out, phi2.apply(w, u), v)
        return out

    return MultiplicativeMorphism(phi1.source, phi1.X, phi2.target, gen, f"{phi2.name}∘{phi1.name}")


# ---------------------------------------------------------------------------
# inductive DCSH lift

@dataclass
class Obstruction:
    generator: tuple
    cycle: Dict
    certificate: Optional[List]
    verified: bool

    def __str__(self):
        c, n = self.generator
        return f"no lift at ({c}, f_{n}): boundary cycle with {len(self.cycle)} terms is not exact"


@dataclass
class DcshResult:
    theta: Optional[TransposedTensorMorphism]
    obstruction: Optional[Obstruction]
    values: Dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.obstruction is None


def tensor_contraction(h: Dict, C: ChainCoalgebra) -> Callable:
    """h⊗1⊗⋯⊗1 on C^{⊗n} from a contraction h of C (dh + hd = id)."""
    R = C.ring

    def H(vec):
        out: Dict = {}
        for tup, c in vec.items():
            for a, v in h.get(tup[0], {}).items():
                vec_add_term(R, out, (a,) + tup[1:], R.mul(c, v))
        return out

    return H


def _tensor_basis(C: ChainCoalgebra, n: int, degree: int) -> List[tuple]:
    out = []

    def rec(prefix, remaining, left):
        if left == 0:
            if remaining == 0:
                out.append(tuple(prefix))
            return
        for l in C.labels:
            d = C.degree(l)
            if d <= remaining:
                rec(prefix + [l], remaining - d, left - 1)

    rec([], degree, n)
    return [t for t in out if _tensor_degree(C, t) == degree]


def _solve_boundary(Cp: ChainCoalgebra, n: int, degree: int, rhs: Dict):
    """x in C'^{⊗n}_{degree} with dx = rhs, or Infeasible."""
    R = Cp.ring
    src = _tensor_basis(Cp, n, degree)
    tgt = _tensor_basis(Cp, n, degree - 1)
    tindex = {t: i for i, t in enumerate(tgt)}
    for t in rhs:
        if t not in tindex:
            raise StructureError("cycle leaves the target basis", t)
    triples = []
    for j, t in enumerate(src):
        for t2, v in _tensor_diff(Cp, t).items():
            triples.append((tindex[t2], j, v))
    A = SparseMatrix.from_triples(len(tgt), len(src), triples, R)
    b = [R.zero()] * len(tgt)
    for t, v in rhs.items():
        b[tindex[t]] = v
    sol = solve_linear(A, b, R)
    if isinstance(sol, Infeasible):
        return sol, A, b
    return {src[j]: v for j, v in enumerate(sol) if R.canon(v)}, A, b


def dcsh_extend(tau: Dict, C: ChainCoalgebra, Cp: ChainCoalgebra, max_level: int,
                contraction: Optional[Dict] = None, prescribed: Optional[Dict] = None,
                coring: Optional[AWCoRing] = None) -> DcshResult:
    """Lift a chain map τ: C → C' to θ: T(C)∘_A F → T(C') with θ(c⊗f_1) = τ(c).

    Generators (c, f_n) are handled in order of n, then degree.  The value
    must bound θ(∂(c⊗f_n)), which only involves earlier generators.  With a
    contraction h of C' the value is (h⊗1⋯)(cycle); otherwise, or if that
    fails, the least solution of the linear system.  ``prescribed`` fixes
    values at chosen generators (they are checked, not trusted)."""
    R = C.ring
    F = coring or AWCoRing(TruncationProfile(max_level), R)
    TD = TensorDiffraction(C, F)
    u = F.X.unit
    values: Dict = {}
    for c in C.labels:
        values[(c, u, (1,))] = {(k,): v for k, v in tau.get(c, {}).items() if R.canon(v)}
    theta = TransposedTensorMorphism(TD, Cp, values, max_level, "θ")
    for c in C.labels:
        lhs = tensor_diff_vec(Cp, values[(c, u, (1,))])
        rhs = theta.evaluate_vec(TD.diff(((c, F.f(1)[0]),)))
        if lhs != rhs:
            raise StructureError("τ is not a chain map", c)
    H = tensor_contraction(contraction, Cp) if contraction is not None else None
    prescribed = prescribed or {}
    for n in range(2, max_level + 1):
        for c in C.labels:
            E = ((c, F.f(n)[0]),)
            theta._values.clear()
            theta._collapsed.clear()
            cycle = theta.evaluate_vec(TD.diff(E))
            if tensor_diff_vec(Cp, cycle):
                raise StructureError("boundary is not a cycle: earlier values are inconsistent", (c, n))
            deg = C.degree(c) + n - 1
            if (c, n) in prescribed:
                x = dict(prescribed[(c, n)])
                if tensor_diff_vec(Cp, x) != cycle:
                    raise StructureError("prescribed value does not bound the cycle", (c, n))
            else:
                x = None
                if H is not None:
                    cand = H(cycle)
                    if tensor_diff_vec(Cp, cand) == cycle:
                        x = cand
                if x is None:
                    if not cycle:
                        x = {}
                    else:
                        sol, A, b = _solve_boundary(Cp, n, deg, cycle)
                        if isinstance(sol, Infeasible):
                            obs = Obstruction((c, n), cycle, sol.certificate, sol.verify(A, b, R))
                            return DcshResult(None, obs, values)
                        x = sol
            values[(c, u, (n,))] = x
    theta._values.clear()
    theta._collapsed.clear()
    return DcshResult(theta, None, values)


# ---------------------------------------------------------------------------
# diffracted module maps (P = A)

class CobarHopfAction:
    """A multiplicative right A-action on T(ΩC): a coassociative diagonal on
    ΩC that is an algebra map, given on letters.  ``letter_delta[c]`` is a
    vector of pairs of cobar words.  The action of the identity of A(n) on a
    word is Δ^{(n−1)}; other elements of A(n) then permute the factors."""

    def __init__(self, O: CobarAlgebra, letter_delta: Dict):
        self.O = O
        self.ring = O.ring
        self.letter_delta = {c: dict(v) for c, v in letter_delta.items()}
        self._cache: Dict = {}

    def delta(self, word) -> Dict:
        if word in self._cache:
            return self._cache[word]
        R, O = self.ring, self.O
        acc: Dict = {((), ()): R.one()}
        for c in word:
            new: Dict = {}
            for (a, b), u in acc.items():
                for (p, q), v in self.letter_delta.get(c, {}).items():
                    sg = R.sign(O.degree(b) * O.degree(p))
                    vec_add_term(R, new, (a + p, b + q), R.mul(R.mul(u, v), sg))
            acc = new
        # empty words are not elements of the non-unital cobar algebra
        out = {k: v for k, v in acc.items() if k[0] and k[1]}
        self._cache[word] = out
        return out

    def iterated(self, word, n: int) -> Dict:
        """Δ^{(n−1)} of a word, as n-tuples of words."""
        R = self.ring
        terms: Dict = {(word,): R.one()}
        for _ in range(n - 1):
            new: Dict = {}
            for tup, c in terms.items():
                for (a, b), d in self.delta(tup[-1]).items():
                    vec_add_term(R, new, tup[:-1] + (a, b), R.mul(c, d))
            terms = new
        return terms

    def act_standard(self, words: Sequence[tuple], sizes: Sequence[int]) -> Dict:
        """(W_1⊗⋯⊗W_k)·(id_k; id_{n_1}, …, id_{n_k}): block i becomes Δ^{(n_i−1)}W_i."""
        R = self.ring
        acc: Dict = {(): R.one()}
        for w, n in zip(words, sizes):
            vals = self.iterated(w, n)
            acc = {a + b: R.mul(c, d) for a, c in acc.items() for b, d in vals.items()}
        return {k: v for k, v in acc.items() if R.canon(v)}

    def verify(self, max_degree: int, max_words: Optional[int] = None) -> Report:
        R, O = self.ring, self.O
        rep = Report("cobar diagonal")
        bad_coassoc = bad_chain = None
        for w in O.words(max_degree, max_words):
            left: Dict = {}
            right: Dict = {}
            for (a, b), c in self.delta(w).items():
                for (a1, a2), d in self.delta(a).items():
                    vec_add_term(R, left, (a1, a2, b), R.mul(c, d))
                for (b1, b2), d in self.delta(b).items():
                    vec_add_term(R, right, (a, b1, b2), R.mul(c, d))
            if left != right and bad_coassoc is None:
                bad_coassoc = w
            lhs: Dict = {}
            for w2, c in O.diff(w).items():
                vec_add_into(R, lhs, self.delta(w2), c)
            rhs: Dict = {}
            for (a, b), c in self.delta(w).items():
                for a2, d in O.diff(a).items():
                    vec_add_term(R, rhs, (a2, b), R.mul(c, d))
                for b2, d in O.diff(b).items():
                    vec_add_term(R, rhs, (a, b2), R.mul(R.mul(c, d), R.sign(O.degree(a))))
            if lhs != rhs and bad_chain is None:
                bad_chain = w
        rep.add("diagonal is coassociative", bad_coassoc)
        rep.add("diagonal is a chain map", bad_chain)
        return rep


def composite_comonoid(trunc: TruncationProfile, ring: RingSpec) -> LevelComonoid:
    """A∘A as a level comonoid.  The label ``(cuts, word)`` is the composite
    γ-decomposition of ``word`` into consecutive blocks of the given sizes;
    Σ_n relabels the word as in A and every label is grouplike."""
    labels = {n: {cuts: 0 for k in range(1, n + 1) for cuts in compositions(n, k)}
              for n in range(1, trunc.max_level + 1)}
    Y = grouplike_comonoid(trunc, ring, labels, name="A∘A")
    Y.unit = ((1,), (0,))
    return Y


def composite_to_A(y) -> Dict:
    """The operad composition A∘A → A (forget the cuts): both actions of A on A."""
    return {("w", y[1]): 1}


def _standard_chunks(y):
    cuts, word = y
    if tuple(word) != tuple(range(len(word))):
        raise StructureError("expected an orbit representative with the identity word", y)
    return cuts


def right_action_composite(phi: MultiplicativeMorphism, action: CobarHopfAction, Y: LevelComonoid):
    """ψ'∘(φ∘Id_A): T(ΩC)∘(A∘A) → T(ΩC') on generators."""
    if action.O is not phi.target:
        raise StructureError("the action must live on the target cobar construction")
    R = phi.ring

    def gen(c, y):
        cuts = _standard_chunks(y)
        k = len(cuts)
        out: Dict = {}
        for words, v in phi.gen(c, ("w", tuple(range(k)))).items():
            vec_add_into(R, out, action.act_standard(words, cuts), v)
        return out

    return MultiplicativeMorphism(phi.source, Y, phi.target, gen, f"ψ'∘{phi.name}")


def balanced_action_composite(phi: MultiplicativeMorphism, action: CobarHopfAction, Y: LevelComonoid):
    """φ∘(ψ∘Id_A): T(ΩC)∘(A∘A) → T(ΩC') on generators."""
    if action.O is not phi.source:
        raise StructureError("the action must live on the source cobar construction")
    R = phi.ring

    def gen(c, y):
        cuts = _standard_chunks(y)
        k = len(cuts)
        xs = [("w", tuple(range(n))) for n in cuts]
        out: Dict = {}
        for words, v in action.iterated((c,), k).items():
            vec_add_into(R, out, phi.apply_tensor(words, xs), v)
        return out

    return MultiplicativeMorphism(phi.source, Y, phi.target, gen, f"{phi.name}∘ψ")


@dataclass
class DiffractedVerdict:
    side: str
    holds: bool
    witness: object = None

    def __bool__(self):
        return self.holds


def _side_composite(side: str, phi: MultiplicativeMorphism, action: CobarHopfAction, Y: LevelComonoid):
    if side == "right":
        return right_action_composite(phi, action, Y)
    if side == "balanced":
        return balanced_action_composite(phi, action, Y)
    raise StructureError("side must be 'right' or 'balanced'", side)


def check_diffracted(theta: TransposedTensorMorphism, side: str, action: CobarHopfAction,
                     source_cobar: CobarAlgebra, target_cobar: CobarAlgebra,
                     levels: Iterable[int] = (1, 2, 3)) -> DiffractedVerdict:
    """The defining triangle of a diffracted right (resp. balanced) A-module
    map, for X = A: θ∘(Id∘_AΦ(γ)) against Lin of the action composite of Ind θ,
    compared family by family on T(C)∘_AΦ(A∘A)."""
    if theta.source.X.name != "A":
        raise StructureError("diffracted checks are implemented for X = A", theta.source.X.name)
    R = theta.ring
    trunc = theta.source.D.trunc
    Y = composite_comonoid(trunc, R)
    DY = Diffraction(Y)
    phi = induce(theta, source_cobar, target_cobar)
    down = precompose_comonoid(theta, composite_to_A, DY)
    diag = linearize(_side_composite(side, phi, action, Y), DY, theta.max_arity)
    bad = down.family_equals(diag, levels)
    return DiffractedVerdict(side, bad is None, bad)


def _truncate_words(vec: Dict, max_arity: int) -> Dict:
    return {k: v for k, v in vec.items() if sum(len(w) for w in k) <= max_arity}


def check_module_square(phi: MultiplicativeMorphism, side: str, action: CobarHopfAction,
                        max_level: int, max_words: int, max_degree: int, max_arity: int) -> DiffractedVerdict:
    """Whether Ind θ = φ is a right A-module map (side "right"), or factors
    through T(ΩC)∘_A A (side "balanced"), on words of the retained window.
    Outputs are compared up to total word length ``max_arity``, the range
    in which a truncated θ determines φ."""
    if phi.X.name != "A":
        raise StructureError("module squares are implemented for X = A", phi.X.name)
    R = phi.ring
    Y = composite_comonoid(phi.X.seq.trunc, R)
    around = _side_composite(side, phi, action, Y)
    along = precompose_multiplicative(phi, composite_to_A, Y)
    for m in range(1, max_level + 1):
        for y in Y.seq.basis(m):
            for w in phi.source.words(max_degree, max_words):
                a = _truncate_words(along.apply(w, y), max_arity)
                b = _truncate_words(around.apply(w, y), max_arity)
                if a != b:
                    return DiffractedVerdict(side, False, (w, y))
    return DiffractedVerdict(side, True, None)


def action_module_map(f: Dict, side: str, action: CobarHopfAction, source: CobarAlgebra,
                      target: CobarAlgebra, X: LevelComonoid) -> MultiplicativeMorphism:
    """From an algebra map f: ΩC → ΩC' given on letters, the multiplicative
    morphism c⊗x ↦ ψ'(f(c); x) (side "right") or f^{⊗m}ψ(c; x) ("balanced").
    Both satisfy the corresponding module square."""
    R = target.ring

    def f_word(word) -> Dict:
        acc: Dict = {(): R.one()}
        for c in word:
            acc = {a + b: R.mul(u, v) for a, u in acc.items() for b, v in f.get(c, {}).items()}
        return {k: v for k, v in acc.items() if R.canon(v) and k}

    def gen(c, x):
        m = len(x[1])
        if tuple(x[1]) != tuple(range(m)):
            raise StructureError("expected the identity of A(m)", x)
        out: Dict = {}
        if side == "right":
            for w, v in f_word((c,)).items():
                vec_add_into(R, out, action.iterated(w, m), v)
        else:
            for words, v in action.iterated((c,), m).items():
                acc: Dict = {(): v}
                for w in words:
                    img = f_word(w)
                    acc = {a + (b,): R.mul(u, t) for a, u in acc.items() for b, t in img.items()}
                vec_add_into(R, out, acc, R.one())
        return out

    return MultiplicativeMorphism(source, X, target, gen, f"f[{side}]")


def hopf_test_coalgebra(ring: RingSpec) -> Tuple[CobarAlgebra, CobarHopfAction]:
    """H = R{p_1, q_2} with zero structure, so ΩH is free on s^{-1}p (degree 0)
    and s^{-1}q (degree 1); Δp = p⊗p and Δq = p⊗q + q⊗p make it a bialgebra."""
    H = ChainCoalgebra(ring, {"p": 1, "q": 2}, {}, {}, name="H")
    O = cobar(H, 3)
    one = ring.one()
    action = CobarHopfAction(O, {"p": {(("p",), ("p",)): one},
                                 "q": {(("p",), ("q",)): one, (("q",), ("p",)): one}})
    return O, action


def _random_algebra_map(O: CobarAlgebra, rng: random.Random, max_word: int = 2, coeffs=(-1, 1, 2)) -> Dict:
    R = O.ring
    f = {}
    for c in O.C.labels:
        want = O.letter_degree(c)
        vec: Dict = {(c,): R.one()}
        for w in O.words(want, max_word):
            if O.degree(w) == want and len(w) > 1 and rng.random() < 0.5:
                vec_add_term(R, vec, w, R.canon(rng.choice(coeffs)))
        f[c] = vec
    return f


def diffracted_instances(side: str, rng: random.Random, count: int, trunc: TruncationProfile,
                         ring: RingSpec) -> List[Tuple[str, TransposedTensorMorphism, CobarAlgebra, CobarHopfAction]]:
    """A seeded corpus of θ: T(H)∘_AΦ(A) → T(H): linearized action maps
    (which satisfy the module square), zero, their single-key perturbations
    and fully random families."""
    from .diffract import associative_comonoid
    O, action = hopf_test_coalgebra(ring)
    A = associative_comonoid(trunc, ring)
    DA = Diffraction(A)
    TD = TensorDiffraction(O.C, DA)
    arity = trunc.max_level
    out = [("zero", zero_morphism(TD, O.C, arity), O, action)]
    while len(out) < count:
        kind = len(out) % 3
        if kind == 1:
            phi = action_module_map(_random_algebra_map(O, rng), side, action, O, O, A)
            out.append(("action map", linearize(phi, DA, arity), O, action))
        elif kind == 2:
            phi = action_module_map(_random_algebra_map(O, rng), side, action, O, O, A)
            base = linearize(phi, DA, arity)
            keys = [k for k in base.keys(range(2, trunc.max_level + 1))
                    if any(_tensor_degree(O.C, t) == O.C.degree(k[0]) + sum(k[2]) - 1
                           for t in itertools.product(O.C.labels, repeat=sum(k[2])))]
            key = rng.choice(keys)
            n = sum(key[2])
            cands = [t for t in itertools.product(O.C.labels, repeat=n)
                     if _tensor_degree(O.C, t) == O.C.degree(key[0]) + n - 1]
            bump = {rng.choice(cands): ring.one()}
            fam = {k: base.value(*k) for k in base.keys(range(1, trunc.max_level + 1))}
            new = dict(fam[key])
            for t, v in bump.items():
                vec_add_term(ring, new, t, v)
            fam[key] = new
            out.append(("perturbed action map", TransposedTensorMorphism(TD, O.C, fam, arity), O, action))
        else:
            out.append(("random", random_family(TD, O.C, arity, rng, range(1, trunc.max_level + 1), 0.3), O, action))
    return out


# ---------------------------------------------------------------------------
# bar duality (c-embedding, X = J)

class BarMorphism:
    """A linear map of truncated bar coalgebras, given on words."""

    def __init__(self, source: ChainCoalgebra, target: ChainCoalgebra, fn: Callable, name: str = "F"):
        self.source = source
        self.target = target
        self.ring = source.ring
        self.name = name
        self._fn = fn
        self._cache: Dict = {}

    def apply(self, word) -> Dict:
        if word not in self._cache:
            v = {k: c for k, c in self._fn(word).items() if self.ring.canon(c)}
            for k in v:
                if k not in self.target.degrees:
                    raise StructureError("image leaves the truncation window", (word, k))
                if self.target.degree(k) != self.source.degree(word):
                    raise StructureError("bar morphism must have degree 0", (word, k))
            self._cache[word] = v
        return self._cache[word]

    def apply_vec(self, vec: Dict) -> Dict:
        out: Dict = {}
        for w, c in vec.items():
            vec_add_into(self.ring, out, self.apply(w), c)
        return out

    def check_comultiplicative(self):
        """Δ̄F = (F⊗F)Δ̄ on every retained word; returns a failing word or None."""
        R = self.ring
        for w in self.source.labels:
            lhs: Dict = {}
            for u, c in self.apply(w).items():
                vec_add_into(R, lhs, self.target.delta(u), c)
            rhs: Dict = {}
            for (a, b), c in self.source.delta(w).items():
                for a2, d in self.apply(a).items():
                    for b2, e in self.apply(b).items():
                        vec_add_term(R, rhs, (a2, b2), R.mul(c, R.mul(d, e)))
            if lhs != rhs:
                return w
        return None

    def check_chain(self):
        for w in self.source.labels:
            lhs = self.target.diff_vec(self.apply(w))
            rhs = self.apply_vec(self.source.diff(w))
            if lhs != rhs:
                return w
        return None

    def equals(self, other: "BarMorphism"):
        for w in self.source.labels:
            if self.apply(w) != other.apply(w):
                return w
        return None


def _bar_suspension_sign(A: ChainAlgebra, word) -> int:
    n = len(word)
    return sum((n - 1 - i) * (A.degree(a) + 1) for i, a in enumerate(word))


def bar_induce(family, A: ChainAlgebra, Ap: ChainAlgebra, BA: ChainCoalgebra, BAp: ChainCoalgebra) -> BarMorphism:
    """Ind: a family θ_n: A^{⊗n} → A' of degree n−1 (``family(word)`` a vector
    of A'-labels) gives the comultiplicative F: BA → BA' with
    F(sa_1|⋯|sa_k) = Σ over splittings into consecutive blocks of
    φ(block_1)|⋯|φ(block_j), where φ_n = s θ_n (s^{-1})^{⊗n}."""
    R = A.ring
    get = family.get if isinstance(family, dict) else family

    def phi(block) -> Dict:
        sg = R.sign(_bar_suspension_sign(A, block))
        out: Dict = {}
        for b, v in (get(block) or {}).items():
            vec_add_term(R, out, b, R.mul(v, sg))
        return out

    def fn(word) -> Dict:
        k = len(word)
        out: Dict = {}
        for j in range(1, k + 1):
            for sizes in compositions(k, j):
                acc: Dict = {(): R.one()}
                pos = 0
                for n in sizes:
                    vals = phi(word[pos:pos + n])
                    pos += n
                    acc = {a + (b,): R.mul(c, d) for a, c in acc.items() for b, d in vals.items()}
                    if not acc:
                        break
                vec_add_into(R, out, acc, R.one())
        return out

    return BarMorphism(BA, BAp, fn, "Ind_B")


def bar_linearize(F: BarMorphism, A: ChainAlgebra, max_arity: int) -> Dict:
    """Lin: θ_n = s^{-1} π_1 F s^{⊗n}, read off the length-one part of F."""
    R = F.ring
    fam: Dict = {}
    for w in F.source.labels:
        if len(w) > max_arity:
            continue
        sg = R.sign(_bar_suspension_sign(A, w))
        vec = {b[0]: R.mul(v, sg) for b, v in F.apply(w).items() if len(b) == 1}
        if vec:
            fam[w] = vec
    return fam


def bar_identity_family(A: ChainAlgebra) -> Dict:
    """The family of Id∘ε: θ_1 = id, θ_n = 0 for n ≥ 2."""
    return {(a,): {a: A.ring.one()} for a in A.labels}


def random_bar_family(A: ChainAlgebra, Ap: ChainAlgebra, max_arity: int, rng: random.Random,
                      density: float = 0.5, coeffs=(-1, 1, 2)) -> Dict:
    R = A.ring
    fam: Dict = {}
    for n in range(1, max_arity + 1):
        for w in itertools.product(A.labels, repeat=n):
            want = sum(A.degree(a) for a in w) + n - 1
            vec: Dict = {}
            for b in Ap.labels:
                if Ap.degree(b) == want and rng.random() < density:
                    vec_add_term(R, vec, b, R.canon(rng.choice(coeffs)))
            if vec:
                fam[w] = vec
    return fam


# ---------------------------------------------------------------------------
# the non-realizable coalgebra M over Z/2

def _counterexample_theta(M: ChainCoalgebra):
    """θ: W⊗M → M⊗M on generators e_i⊗a (as a function of (i, a))."""
    R = M.ring
    special = {(1, "w"): {("v", "z"): 1, ("z", "v"): 1},
               (3, "v"): {("v", "x"): 1, ("y", "v"): 1}}

    def theta(i, a) -> Dict:
        out: Dict = {}
        if i == 0:
            vec_add_into(R, out, M.delta(a), R.one())
        if a != M.counit and i == M.degree(a):
            vec_add_term(R, out, (a, a), R.one())
        vec_add_into(R, out, special.get((i, a), {}), R.one())
        return out

    return theta


def check_w_resolution(M: ChainCoalgebra, theta: Callable, max_index: int):
    """θ(τe_i⊗a) := Tθ(e_i⊗a) defines an equivariant map; check ∂θ = θ∂ on
    e_i⊗a and τe_i⊗a with ∂e_i = (1+τ)e_{i−1} (characteristic 2 only)."""
    R = M.ring
    if R.characteristic != 2:
        raise StructureError("the resolution W is used over Z/2 only")
    MM = tensor_coalgebra(M, M)

    def swap(vec):
        out: Dict = {}
        for (a, b), c in vec.items():
            vec_add_term(R, out, (b, a), c)
        return out

    def th(i, t, a):
        v = theta(i, a)
        return swap(v) if t else v

    for i in range(max_index + 1):
        for a in M.labels:
            for t in (0, 1):
                lhs = MM.diff_vec(th(i, t, a))
                rhs: Dict = {}
                if i > 0:
                    vec_add_into(R, rhs, th(i - 1, t, a), R.one())
                    vec_add_into(R, rhs, th(i - 1, 1 - t, a), R.one())
                for a2, c in M.diff(a).items():
                    vec_add_into(R, rhs, th(i, t, a2), c)
                if lhs != rhs:
                    return (i, "τ" if t else "1", a)
    return None


COUNTEREXAMPLE_F2_VALUE = {(("1", "v"), ("z", "1")): 1, (("1", "z"), ("v", "1")): 1}
COUNTEREXAMPLE_F3_CYCLE = {(("1", "z"), ("u", "1"), ("u", "1")): 1,
                           (("1", "u"), ("1", "u"), ("z", "1")): 1}


def counterexample_suite(ring: Optional[RingSpec] = None) -> Report:
    """The four checks on M: its axioms, the Σ_2-equivariant θ on W⊗M, the
    differential partial lift at (w, f_2) and the infeasible system at (w, f_3)."""
    from .operad import nonrealizable_coalgebra
    from .chain import homology
    M = nonrealizable_coalgebra(ring)
    R = M.ring
    rep = Report("non-realizable coalgebra M")
    fails = M.verify().failures()
    rep.add("(a) M is a coassociative counital chain coalgebra", fails[0].name if fails else None)
    bases: Dict = {}
    for l in M.labels:
        bases.setdefault(M.degree(l), []).append(l)
    H = homology(complex_from_function(R, bases, M.diff, lower_bound=0), range(7))
    ranks = H.ranks(range(7))
    rep.add("(a) H(M) ranks (1,0,1,2,0,0,1)", None if ranks == (1, 0, 1, 2, 0, 0, 1) else ranks)
    theta = _counterexample_theta(M)
    rep.add("(b) θ: W⊗M → M⊗M is an equivariant chain map with θ(e_0⊗−) = ψ",
            check_w_resolution(M, theta, 2 * max(M.degrees.values()) + 1))
    MM = tensor_coalgebra(M, M)
    tau = {c: dict(M.delta(c)) for c in M.labels}
    try:
        res2 = dcsh_extend(tau, M, MM, 2, prescribed={("w", 2): COUNTEREXAMPLE_F2_VALUE})
        bad = None if res2.ok and res2.theta.check_chain(2) is None else "not differential"
    except StructureError as exc:
        bad = str(exc)
    rep.add("(c) Ψ(w⊗f_2) = (1⊗v)⊗(z⊗1) + (1⊗z)⊗(v⊗1) is differential", bad)
    sol, A, b = _solve_boundary(MM, 3, 8, COUNTEREXAMPLE_F3_CYCLE)
    if not isinstance(sol, Infeasible):
        bad = ("solvable", sol)
    elif not sol.verify(A, b, R):
        bad = "certificate does not verify"
    else:
        bad = None
    rep.add("(d) ∂ξ = (1⊗z)⊗(u⊗1)⊗(u⊗1) + (1⊗u)⊗(1⊗u)⊗(z⊗1) is infeasible", bad)
    res3 = dcsh_extend(tau, M, MM, 3, prescribed={("w", 2): COUNTEREXAMPLE_F2_VALUE})
    obs = res3.obstruction
    ok = obs is not None and obs.generator == ("w", 3) and obs.cycle == COUNTEREXAMPLE_F3_CYCLE and obs.verified
    rep.add("(d) the lift of ψ reports its obstruction at (w, f_3)", None if ok else obs)
    return rep
