"""Symmetric sequences, their three monoidal products and coinvariants.

Permutations are tuples ``p`` with ``p[i]`` the image of ``i`` (0-indexed);
the product ``pq`` is the composite ``p ∘ q``.  A symmetric sequence is
described by a *model*: per level a list of basis labels, a degree
function, a right action ``act(label, perm) -> {label: coeff}`` and a
differential ``diff(label) -> {label: coeff}``.  Chain complexes and the
matrices of adjacent transpositions are materialized on demand.

Composite objects use a leaf-labelled normal form.  An element of
``(X∘Y)(n)`` is ``("o", x, ((y_1, L_1), ..., (y_m, L_m)))`` where ``L_j``
is the increasing tuple of leaves carried by the inputs of ``y_j`` and the
blocks are sorted by their smallest leaf.  The right action of ``π``
relabels leaf ``l`` as ``π^{-1}(l)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .chain import ChainComplex, ChainMap, complex_from_function, label_key
from .coeff import RingSpec, SparseMatrix, vec_add_into, vec_add_term, vec_scale


class TruncationError(ValueError):
    pass


class EquivarianceError(ValueError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


# ---------------------------------------------------------------------------
# permutations and Koszul signs

def identity_perm(n: int) -> Tuple[int, ...]:
    return tuple(range(n))


def compose(p: Sequence[int], q: Sequence[int]) -> Tuple[int, ...]:
    """(p ∘ q)(i) = p[q[i]]."""
    return tuple(p[i] for i in q)


def inverse(p: Sequence[int]) -> Tuple[int, ...]:
    out = [0] * len(p)
    for i, v in enumerate(p):
        out[v] = i
    return tuple(out)


def perm_parity(p: Sequence[int]) -> int:
    """Number of inversions mod 2."""
    seen = [False] * len(p)
    parity = 0
    for i in range(len(p)):
        if not seen[i]:
            j, length = i, 0
            while not seen[j]:
                seen[j] = True
                j = p[j]
                length += 1
            parity ^= (length - 1) & 1
    return parity


def adjacent(n: int, i: int) -> Tuple[int, ...]:
    """The transposition s_i exchanging i-1 and i (1 <= i < n)."""
    p = list(range(n))
    p[i - 1], p[i] = p[i], p[i - 1]
    return tuple(p)


@lru_cache(maxsize=None)
def all_perms(n: int) -> Tuple[Tuple[int, ...], ...]:
    return tuple(itertools.permutations(range(n)))


def koszul_parity(order: Sequence[int], parities: Sequence[int]) -> int:
    """Parity of the Koszul sign for rearranging items ``0..k-1`` (with the
    given degree parities) into the sequence ``order``."""
    par = 0
    # count pairs that get inverted, weighted by the product of parities
    for a in range(len(order)):
        pa = parities[order[a]]
        if not pa:
            continue
        for b in range(a + 1, len(order)):
            if order[b] < order[a] and parities[order[b]]:
                par ^= 1
    return par


def sort_parity(keys: Sequence, parities: Sequence[int]):
    """Sort items by key; return (order, koszul parity of the reordering)."""
    order = sorted(range(len(keys)), key=lambda i: keys[i])
    return order, koszul_parity(order, parities)


def block_perm(pi: Sequence[int], sizes: Sequence[int]) -> Tuple[int, ...]:
    """Block permutation π⟨n⃗⟩: position offset'_i + t maps to offset_{π(i)} + t."""
    offsets = [0]
    for s in sizes:
        offsets.append(offsets[-1] + s)
    out = []
    for i in range(len(pi)):
        j = pi[i]
        out.extend(offsets[j] + t for t in range(sizes[j]))
    return tuple(out)


def block_sum(perms: Sequence[Sequence[int]]) -> Tuple[int, ...]:
    out = []
    off = 0
    for p in perms:
        out.extend(off + v for v in p)
        off += len(p)
    return tuple(out)


def compositions(total: int, parts: int) -> Iterable[Tuple[int, ...]]:
    """Ordered tuples of ``parts`` positive integers summing to ``total``."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def weak_compositions(total: int, parts: int) -> Iterable[Tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in weak_compositions(total - first, parts - 1):
            yield (first,) + rest


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TruncationProfile:
    max_level: int
    max_degree: int = 12

    def __post_init__(self):
        if self.max_level < 0:
            raise ValueError("max_level must be nonnegative")

    def check_level(self, n: int):
        if n > self.max_level:
            raise TruncationError(f"level {n} outside the validity window [0, {self.max_level}]")


@dataclass
class SignedAction:
    """Images of s_1..s_{n-1} as degree-0 automorphisms of one level."""

    level: int
    complex: ChainComplex
    generators: List[Dict[int, SparseMatrix]]

    def matrix(self, i: int, d: int) -> SparseMatrix:
        M = self.generators[i - 1].get(d)
        if M is None:
            k = self.complex.dim(d)
            return SparseMatrix.zero(k, k)
        return M

    def verify(self) -> Optional[str]:
        """Return a description of the first failing relation, or None."""
        C = self.complex
        R = C.ring
        n = self.level
        for d in C.degrees():
            I = SparseMatrix.identity(C.dim(d), R)
            for i in range(1, n):
                S = self.matrix(i, d)
                if not S.matmul(S, R).same_as(I):
                    return f"s_{i}^2 != 1 in degree {d}"
                # commutes with the differential
                lhs = C.diff(d).matmul(S, R)
                rhs = self.matrix(i, d - 1).matmul(C.diff(d), R)
                if not lhs.same_as(rhs):
                    return f"s_{i} does not commute with d in degree {d}"
                for j in range(i + 1, n):
                    T = self.matrix(j, d)
                    if j == i + 1:
                        a = S.matmul(T, R).matmul(S, R)
                        b = T.matmul(S, R).matmul(T, R)
                    else:
                        a = S.matmul(T, R)
                        b = T.matmul(S, R)
                    if not a.same_as(b):
                        return f"Coxeter relation between s_{i}, s_{j} fails in degree {d}"
        return None


class SymmetricSequence:
    """A truncated family of chain complexes X(n) with right Σ_n actions."""

    def __init__(self, ring: RingSpec, trunc: TruncationProfile, basis: Callable[[int], List],
                 degree: Callable, act: Callable, diff: Optional[Callable] = None, name: str = "X"):
        self.ring = ring
        self.trunc = trunc
        self._basis_fn = basis
        self._degree = degree
        self._act = act
        self._diff = diff or (lambda lab: {})
        self.name = name
        self._basis_cache: Dict[int, List] = {}
        self._level_cache: Dict[int, ChainComplex] = {}

    # model access -------------------------------------------------------
    def basis(self, n: int) -> List:
        self.trunc.check_level(n)
        if n not in self._basis_cache:
            self._basis_cache[n] = sorted(self._basis_fn(n), key=lambda l: (self._degree(l), label_key(l)))
        return self._basis_cache[n]

    def basis_in_degree(self, n: int, d: int) -> List:
        return [l for l in self.basis(n) if self._degree(l) == d]

    def degree(self, label) -> int:
        return self._degree(label)

    def act(self, label, perm) -> Dict:
        return self._act(label, tuple(perm))

    def act_vec(self, vec: Dict, perm) -> Dict:
        out: Dict = {}
        for lab, c in vec.items():
            vec_add_into(self.ring, out, self.act(lab, perm), c)
        return out

    def diff(self, label) -> Dict:
        return self._diff(label)

    def diff_vec(self, vec: Dict) -> Dict:
        out: Dict = {}
        for lab, c in vec.items():
            vec_add_into(self.ring, out, self.diff(lab), c)
        return out

    def rank(self, n: int, d: Optional[int] = None) -> int:
        if d is None:
            return len(self.basis(n))
        return len(self.basis_in_degree(n, d))

    # materialization ----------------------------------------------------
    def level(self, n: int) -> ChainComplex:
        if n not in self._level_cache:
            bases: Dict[int, List] = {}
            for lab in self.basis(n):
                bases.setdefault(self._degree(lab), []).append(lab)
            self._level_cache[n] = complex_from_function(self.ring, bases, self._diff,
                                                         lower_bound=min(bases) if bases else 0)
        return self._level_cache[n]

    def action(self, n: int) -> SignedAction:
        C = self.level(n)
        gens = []
        for i in range(1, n):
            s = adjacent(n, i)
            mats = {}
            for d in C.degrees():
                ent = {}
                for j, lab in enumerate(C.basis(d)):
                    for t, v in self.act(lab, s).items():
                        ent[(C.index(d, t), j)] = v
                mats[d] = SparseMatrix(C.dim(d), C.dim(d), ent)
            gens.append(mats)
        return SignedAction(n, C, gens)

    def verify(self, levels: Optional[Iterable[int]] = None) -> Optional[str]:
        for n in (levels if levels is not None else range(self.trunc.max_level + 1)):
            C = self.level(n)
            bad = C.check_square_zero()
            if bad:
                return f"level {n}: d∘d != 0 in degree {bad[0]}"
            err = self.action(n).verify()
            if err:
                return f"level {n}: {err}"
        return None

    def is_monomial(self, n: int) -> bool:
        return all(len(self.act(l, adjacent(n, i))) == 1 for l in self.basis(n) for i in range(1, n))

    def __repr__(self):
        return f"SymmetricSequence({self.name}, ring={self.ring.name}, max_level={self.trunc.max_level})"


class SymSeqMorphism:
    """Level-wise equivariant map given by ``fn(label) -> {label: coeff}``."""

    def __init__(self, source: SymmetricSequence, target: SymmetricSequence, fn: Callable,
                 degree: int = 0, name: str = "f"):
        self.source = source
        self.target = target
        self.fn = fn
        self.degree = degree
        self.name = name
        self._cache: Dict = {}

    def __call__(self, label) -> Dict:
        if label not in self._cache:
            self._cache[label] = self.fn(label)
        return self._cache[label]

    def apply(self, vec: Dict) -> Dict:
        out: Dict = {}
        for lab, c in vec.items():
            vec_add_into(self.source.ring, out, self(lab), c)
        return out

    def level_map(self, n: int) -> ChainMap:
        S, T = self.source.level(n), self.target.level(n)
        mats = {}
        for d in S.degrees():
            ent = {}
            for j, lab in enumerate(S.basis(d)):
                for t, v in self(lab).items():
                    ent[(T.index(d + self.degree, t), j)] = v
            mats[d] = SparseMatrix(T.dim(d + self.degree), S.dim(d), ent)
        return ChainMap(S, T, self.degree, mats)

    def check(self, levels: Iterable[int]):
        """Return None or (kind, level, witness) for the first failure."""
        R = self.source.ring
        sgn = R.sign(self.degree)
        for n in levels:
            for lab in self.source.basis(n):
                img = self(lab)
                # chain map: d f = (-1)^k f d
                lhs = self.target.diff_vec(img)
                rhs = vec_scale(R, self.apply(self.source.diff(lab)), sgn)
                if lhs != rhs:
                    return ("chain", n, lab)
                for i in range(1, n):
                    s = adjacent(n, i)
                    if self.target.act_vec(img, s) != self.apply(self.source.act(lab, s)):
                        return ("equivariance", n, (lab, s))
        return None

    def compose(self, other: "SymSeqMorphism") -> "SymSeqMorphism":
        return SymSeqMorphism(other.source, self.target, lambda l: self.apply(other(l)),
                              self.degree + other.degree, f"{self.name}∘{other.name}")

    def equals_on(self, other: "SymSeqMorphism", levels: Iterable[int]):
        for n in levels:
            for lab in self.source.basis(n):
                if self(lab) != other(lab):
                    return lab
        return None


# ---------------------------------------------------------------------------
# explicit sequences

def sequence_from_levels(ring: RingSpec, trunc: TruncationProfile,
                         levels: Dict[int, Dict], name: str = "X") -> SymmetricSequence:
    """Build a sequence from explicit signed-permutation data.

    ``levels[n]`` has keys ``basis`` ({label: degree}), ``diff`` ({label:
    {label: coeff}}) and ``gens`` (list over i = 1..n-1 of {label: (sign,
    label)}) giving s_i as a signed permutation of the basis.
    """
    degs = {}
    for n, data in levels.items():
        for lab, d in data["basis"].items():
            degs[lab] = d
    level_of = {lab: n for n, data in levels.items() for lab in data["basis"]}

    def act(lab, perm):
        n = level_of[lab]
        # write perm as a word in adjacent transpositions (bubble sort)
        word = _adjacent_word(perm)
        coeff, cur = ring.one(), lab
        gens = levels[n].get("gens", [])
        for i in word:
            s, cur = gens[i - 1][cur]
            coeff = ring.mul(coeff, ring.canon(s))
        return {cur: coeff} if coeff else {}

    def diff(lab):
        return dict(levels[level_of[lab]].get("diff", {}).get(lab, {}))

    return SymmetricSequence(ring, trunc, lambda n: list(levels.get(n, {}).get("basis", {})),
                             lambda l: degs[l], act, diff, name)


def _adjacent_word(perm: Sequence[int]) -> List[int]:
    """Indices i with perm = s_{i_1} s_{i_2} ... (product of adjacent transpositions)."""
    p = list(perm)
    word = []
    n = len(p)
    # bubble sort p into the identity using right multiplications by s_i
    changed = True
    while changed:
        changed = False
        for i in range(1, n):
            if p[i - 1] > p[i]:
                p[i - 1], p[i] = p[i], p[i - 1]
                word.append(i)
                changed = True
    # p ∘ s_{w1} ∘ ... ∘ s_{wk} = id  =>  p = s_{wk} ... s_{w1}
    return word[::-1]


def unit_sequences(kind: str, trunc: TruncationProfile, ring: RingSpec) -> SymmetricSequence:
    """The units: C (R at every level), U (R at level 0), J (R at level 1)."""
    one = ring.one()
    if kind == "C":
        return SymmetricSequence(ring, trunc, lambda n: [("c", n)], lambda l: 0,
                                 lambda l, p: {l: one}, name="C")
    if kind == "U":
        return SymmetricSequence(ring, trunc, lambda n: [("u",)] if n == 0 else [], lambda l: 0,
                                 lambda l, p: {l: one}, name="U")
    if kind == "J":
        return SymmetricSequence(ring, trunc, lambda n: [("j",)] if n == 1 else [], lambda l: 0,
                                 lambda l, p: {l: one}, name="J")
    raise ValueError(f"unknown unit kind {kind!r}")


def _same(X: SymmetricSequence, Y: SymmetricSequence):
    if X.ring != Y.ring:
        raise ValueError("ring mismatch")
    return X.ring


def level_tensor(X: SymmetricSequence, Y: SymmetricSequence) -> SymmetricSequence:
    """(X⊗Y)(n) = X(n)⊗Y(n) with the diagonal action; labels ("t", x, y)."""
    R = _same(X, Y)
    if X.trunc.max_level != Y.trunc.max_level:
        raise TruncationError("level tensor needs equal truncations")

    def basis(n):
        return [("t", x, y) for x in X.basis(n) for y in Y.basis(n)]

    def act(lab, perm):
        _, x, y = lab
        out = {}
        for x2, a in X.act(x, perm).items():
            for y2, b in Y.act(y, perm).items():
                vec_add_term(R, out, ("t", x2, y2), a * b)
        return out

    def diff(lab):
        _, x, y = lab
        out = {}
        for x2, a in X.diff(x).items():
            vec_add_term(R, out, ("t", x2, y), a)
        sg = R.sign(X.degree(x))
        for y2, b in Y.diff(y).items():
            vec_add_term(R, out, ("t", x, y2), sg * b)
        return out

    return SymmetricSequence(R, X.trunc, basis, lambda l: X.degree(l[1]) + Y.degree(l[2]),
                             act, diff, f"({X.name}⊗{Y.name})")


def _relabel_block(Y: SymmetricSequence, y, leaves: Sequence[int]):
    """Normalize a block whose input t carries leaf ``leaves[t]``.

    Returns {(y', increasing leaves): coeff} using (y, L) = (y·τ, L∘τ)."""
    tau = tuple(sorted(range(len(leaves)), key=lambda t: leaves[t]))
    L = tuple(leaves[t] for t in tau)
    if tau == tuple(range(len(leaves))):
        return {(y, L): Y.ring.one()}
    return {(y2, L): c for y2, c in Y.act(y, tau).items()}


def graded_tensor(X: SymmetricSequence, Y: SymmetricSequence) -> SymmetricSequence:
    """(X⊙Y)(m) = ⊕ X(i)⊗Y(j)⊗_{Σ_i×Σ_j} R[Σ_m]; labels ("g", (x, Lx), (y, Ly))
    with Lx, Ly the leaf sets of an (i, j)-shuffle."""
    R = _same(X, Y)

    def basis(m):
        out = []
        for i in range(m + 1):
            j = m - i
            if i > X.trunc.max_level or j > Y.trunc.max_level:
                continue
            xs, ys = X.basis(i), Y.basis(j)
            if not xs or not ys:
                continue
            for Lx in itertools.combinations(range(m), i):
                Ly = tuple(l for l in range(m) if l not in Lx)
                out.extend(("g", (x, Lx), (y, Ly)) for x in xs for y in ys)
        return out

    def act(lab, perm):
        _, (x, Lx), (y, Ly) = lab
        inv = inverse(perm)
        out = {}
        for (x2, Lx2), a in _relabel_block(X, x, [inv[l] for l in Lx]).items():
            for (y2, Ly2), b in _relabel_block(Y, y, [inv[l] for l in Ly]).items():
                vec_add_term(R, out, ("g", (x2, Lx2), (y2, Ly2)), a * b)
        return out

    def diff(lab):
        _, (x, Lx), (y, Ly) = lab
        out = {}
        for x2, a in X.diff(x).items():
            vec_add_term(R, out, ("g", (x2, Lx), (y, Ly)), a)
        sg = R.sign(X.degree(x))
        for y2, b in Y.diff(y).items():
            vec_add_term(R, out, ("g", (x, Lx), (y2, Ly)), sg * b)
        return out

    trunc = TruncationProfile(X.trunc.max_level + Y.trunc.max_level, X.trunc.max_degree)
    return SymmetricSequence(R, trunc, basis, lambda l: X.degree(l[1][0]) + Y.degree(l[2][0]),
                             act, diff, f"({X.name}⊙{Y.name})")


# ---------------------------------------------------------------------------
# coinvariants

@dataclass
class OrbitPresentation:
    """Quotient of a free module with signed-permutation group action.

    ``representatives`` are the least elements of the orbits not killed by
    the action; ``projection[b] = (coeff, rep)`` sends an ambient basis
    element to ±rep (or is absent when b maps to zero); ``relations`` lists
    representatives r with 2r = 0 (a self-negative orbit, over Z only).
    """

    ring: RingSpec
    ambient: List
    representatives: List
    projection: Dict
    relations: List

    def project(self, vec: Dict) -> Dict:
        out: Dict = {}
        for b, c in vec.items():
            img = self.projection.get(b)
            if img is not None:
                vec_add_term(self.ring, out, img[1], c * img[0])
        return out

    def section(self, rep):
        return {rep: self.ring.one()}


def coinvariants(ambient: Sequence, generators: Sequence[Callable], ring: RingSpec,
                 key: Callable = label_key) -> OrbitPresentation:
    """Coinvariants of a signed-permutation action given by generator
    functions ``g(b) -> (sign, b')``.  Orbits are closed by search with sign
    tracking; the least element (by ``key``) represents each orbit."""
    seen: Dict = {}
    reps, relations = [], []
    projection: Dict = {}
    for b0 in sorted(ambient, key=key):
        if b0 in seen:
            continue
        # signs relative to b0
        sign = {b0: 1}
        stack = [b0]
        self_negative = False
        while stack:
            b = stack.pop()
            for g in generators:
                s, b2 = g(b)
                s2 = sign[b] * s
                if b2 in sign:
                    if sign[b2] != s2:
                        self_negative = True
                else:
                    sign[b2] = s2
                    stack.append(b2)
        for b in sign:
            seen[b] = True
        rep = b0
        if self_negative:
            if ring.kind == "Integers":
                reps.append(rep)
                relations.append(rep)
            elif ring.characteristic == 2:
                reps.append(rep)
            else:
                continue  # b = -b forces b = 0 when 2 is invertible
        else:
            reps.append(rep)
        if self_negative and ring.kind != "Integers" and ring.characteristic != 2:
            continue
        for b, s in sign.items():
            projection[b] = (ring.canon(s), rep)
    return OrbitPresentation(ring, list(ambient), reps, projection, relations)


# ---------------------------------------------------------------------------
# composition product

def _canon_composite(X: SymmetricSequence, Y: SymmetricSequence, x, blocks) -> Dict:
    """Normal form of x ⊗ (blocks) where blocks are (y, increasing leaves).

    Uses x ⊗ (B_1..B_m) = ε · (x·π) ⊗ (B_{π(1)}, ...), ε the Koszul sign
    of the block reordering.  Blocks without leaves sort after the others
    by label, which is well defined when Y(0) carries no repeated labels of
    odd degree (otherwise the stabilizer would act); this is checked."""
    R = X.ring
    m = len(blocks)
    keys = [(b[1][0] if b[1] else 10 ** 9, label_key(b[0])) for b in blocks]
    order = sorted(range(m), key=lambda i: keys[i])
    if len(set(keys)) != m:
        # repeated empty blocks: fall back to orbit search over the stabilizer
        return _canon_composite_orbit(X, Y, x, blocks)
    pars = [Y.degree(b[0]) & 1 for b in blocks]
    par = koszul_parity(order, pars)
    pi = tuple(order)
    new_blocks = tuple(blocks[i] for i in pi)
    out = {}
    xs = X.act(x, pi) if pi != tuple(range(m)) else {x: R.one()}
    for x2, c in xs.items():
        vec_add_term(R, out, ("o", x2, new_blocks), c * R.sign(par))
    return out


def _canon_composite_orbit(X, Y, x, blocks) -> Dict:
    """Normal form when several blocks share a key (identical leafless blocks).

    After sorting, only permutations inside each tie group remain; the
    representative is the least label over that stabilizer orbit."""
    R = X.ring
    m = len(blocks)
    keys = [(b[1][0] if b[1] else 10 ** 9, label_key(b[0])) for b in blocks]
    base = sorted(range(m), key=lambda i: keys[i])
    groups, start = [], 0
    for i in range(1, m + 1):
        if i == m or keys[base[i]] != keys[base[start]]:
            groups.append(list(range(start, i)))
            start = i
    pars = [Y.degree(b[0]) & 1 for b in blocks]
    new_blocks = tuple(blocks[i] for i in base)
    found: Dict = {}
    for choice in itertools.product(*[itertools.permutations(g) for g in groups]):
        sigma = [t for part in choice for t in part]
        pi = tuple(base[t] for t in sigma)
        sgn = R.sign(koszul_parity(pi, pars))
        for x2, c in X.act(x, pi).items():
            lab = ("o", x2, new_blocks)
            val = R.mul(c, sgn)
            if lab in found and found[lab] != val:
                return {}  # self-negative: zero when 2 is invertible
            found[lab] = val
    if not found:
        return {}
    best = min(found, key=lambda lab: label_key(lab[1]))
    return {best: found[best]}


def composition_product(X: SymmetricSequence, Y: SymmetricSequence,
                        trunc: Optional[TruncationProfile] = None):
    """(X∘Y)(n) = ⊕_m X(m) ⊗_{Σ_m} Y^{⊙m}(n) in leaf-labelled normal form.

    Returns ``(sequence, witness)`` where ``witness(label)`` gives the
    decomposition (m, x, n⃗, ys, perm) of a basis element: it is the image
    of the standard element x⊗ys under the permutation ``perm``.
    """
    R = _same(X, Y)
    trunc = trunc or TruncationProfile(min(X.trunc.max_level, Y.trunc.max_level), X.trunc.max_degree)
    y_has_zero = bool(Y.basis(0)) if Y.trunc.max_level >= 0 else False
    if y_has_zero and X.trunc.max_level < 10 ** 6:
        max_m = X.trunc.max_level
    else:
        max_m = None

    def check(n):
        if n > trunc.max_level or n > Y.trunc.max_level or (not y_has_zero and n > X.trunc.max_level):
            raise TruncationError(f"(X∘Y)({n}) outside the validity window {trunc.max_level}")

    def basis(n):
        check(n)
        out = set()
        mmax = max_m if max_m is not None else n
        for m in range(0, mmax + 1):
            if m > X.trunc.max_level:
                break
            xs = X.basis(m)
            if not xs:
                continue
            comps = weak_compositions(n, m) if y_has_zero else compositions(n, m)
            for nv in comps:
                ylists = [Y.basis(k) for k in nv]
                if any(not yl for yl in ylists):
                    continue
                for leafsets in _ordered_set_partitions(n, nv):
                    for ys in itertools.product(*ylists):
                        blocks = tuple(zip(ys, leafsets))
                        for x in xs:
                            out.update(_canon_composite(X, Y, x, blocks).keys())
        return list(out)

    def act(lab, perm):
        _, x, blocks = lab
        inv = inverse(perm)
        terms = [(R.one(), ())]
        for (y, L) in blocks:
            new_terms = []
            for (y2, L2), c in _relabel_block(Y, y, [inv[l] for l in L]).items():
                for c0, bl in terms:
                    new_terms.append((c0 * c, bl + ((y2, L2),)))
            terms = new_terms
        out = {}
        for c, bl in terms:
            vec_add_into(R, out, _canon_composite(X, Y, x, bl), c)
        return out

    def diff(lab):
        _, x, blocks = lab
        out = {}
        for x2, c in X.diff(x).items():
            vec_add_into(R, out, _canon_composite(X, Y, x2, blocks), c)
        acc = X.degree(x)
        for j, (y, L) in enumerate(blocks):
            for y2, c in Y.diff(y).items():
                nb = blocks[:j] + ((y2, L),) + blocks[j + 1:]
                vec_add_into(R, out, _canon_composite(X, Y, x, nb), c * R.sign(acc))
            acc += Y.degree(y)
        return out

    def degree(lab):
        return X.degree(lab[1]) + sum(Y.degree(y) for y, _ in lab[2])

    seq = SymmetricSequence(R, trunc, basis, degree, act, diff, f"({X.name}∘{Y.name})")

    def witness(lab):
        _, x, blocks = lab
        nv = tuple(len(L) for _, L in blocks)
        ys = tuple(y for y, _ in blocks)
        # standard element has block j on leaves offset_j..; the label is its
        # image under perm with perm^{-1}(offset_j + t) = L_j[t]
        flat = [l for _, L in blocks for l in L]
        perm = inverse(tuple(flat)) if flat else ()
        return (len(blocks), x, nv, ys, perm)

    return seq, witness


def _ordered_set_partitions(n: int, sizes: Sequence[int]):
    """Tuples of disjoint increasing leaf sets of the given sizes covering range(n)."""
    if not sizes:
        if n == 0:
            yield ()
        return

    def rec(remaining, idx):
        if idx == len(sizes):
            yield ()
            return
        for comb in itertools.combinations(remaining, sizes[idx]):
            rest = tuple(r for r in remaining if r not in comb)
            for tail in rec(rest, idx + 1):
                yield (comb,) + tail

    yield from rec(tuple(range(n)), 0)


def standard_composite(X, Y, x, ys) -> Dict:
    """The class of the standard element x ⊗ (y_1, ..., y_m) (leaves in block order)."""
    blocks = []
    off = 0
    for y in ys:
        k = _level_of(Y, y)
        blocks.append((y, tuple(range(off, off + k))))
        off += k
    return _canon_composite(X, Y, x, tuple(blocks))


def _level_of(S: SymmetricSequence, lab) -> int:
    for n in range(S.trunc.max_level + 1):
        if lab in set(S.basis(n)):
            return n
    raise KeyError(f"{lab!r} is not a basis label of {S.name}")


def extend_family(X: SymmetricSequence, Y: SymmetricSequence, Z: SymmetricSequence,
                  family: Callable, composite: Optional[SymmetricSequence] = None,
                  check_levels: Optional[Iterable[int]] = None, degree: int = 0) -> SymSeqMorphism:
    """Extend ``family(x, ys) -> {z: coeff}`` (values in Z(n), inputs in block
    order) to the unique morphism X∘Y → Z.

    The two equivariance conditions are checked on the requested levels;
    a violation raises :class:`EquivarianceError` carrying (n⃗, σ)."""
    _same(X, Z)
    if composite is None:
        composite, _ = composition_product(X, Y)
    level_cache: Dict = {}

    def level(yl):
        if yl not in level_cache:
            level_cache[yl] = _level_of(Y, yl)
        return level_cache[yl]

    def fn(lab):
        _, x, blocks = lab
        ys = tuple(y for y, _ in blocks)
        flat = tuple(l for _, L in blocks for l in L)
        val = family(x, ys)
        if not flat or flat == tuple(range(len(flat))):
            return dict(val)
        return Z.act_vec(val, inverse(flat))

    mor = SymSeqMorphism(composite, Z, fn, degree, "extended")
    if check_levels is not None:
        _check_family(X, Y, Z, family, check_levels, level)
    return mor


def _check_family(X, Y, Z, family, levels, level):
    R = X.ring
    for n in levels:
        for m in range(0, n + 1):
            if m > X.trunc.max_level:
                break
            for nv in compositions(n, m):
                ylists = [Y.basis(k) for k in nv]
                for ys in itertools.product(*ylists):
                    for x in X.basis(m):
                        base = family(x, ys)
                        # Σ_m: family(x·π, ys) = family(x, π·ys)·π⟨⟩
                        for i in range(1, m):
                            pi = adjacent(m, i)
                            lhs = {}
                            for x2, c in X.act(x, pi).items():
                                vec_add_into(R, lhs, family(x2, ys), c)
                            ys2 = tuple(ys[pi[t]] for t in range(m))
                            pars = [Y.degree(y) & 1 for y in ys]
                            sg = R.sign(koszul_parity(pi, pars))
                            sizes = nv
                            bp = block_perm(pi, sizes)
                            rhs = vec_scale(R, Z.act_vec(family(x, ys2), inverse(bp)), sg)
                            if lhs != rhs:
                                raise EquivarianceError("Σ_m equivariance fails", witness=(nv, pi))
                        # Σ_{n_1}×...: family(x, ys·τ) = family(x, ys)·(τ_1⊕...)
                        for j, k in enumerate(nv):
                            for i in range(1, k):
                                tau = adjacent(k, i)
                                lhs = {}
                                for y2, c in Y.act(ys[j], tau).items():
                                    vec_add_into(R, lhs, family(x, ys[:j] + (y2,) + ys[j + 1:]), c)
                                taus = [identity_perm(t) for t in nv]
                                taus[j] = tau
                                rhs = Z.act_vec(base, block_sum(taus))
                                if lhs != rhs:
                                    raise EquivarianceError("block equivariance fails", witness=(nv, block_sum(taus)))


def intertwiner(X, Xp, Y, Yp):
    """ι: (X⊗X')∘(Y⊗Y') → (X∘Y)⊗(X'∘Y') by regrouping with Koszul signs."""
    R = X.ring
    XXp = level_tensor(X, Xp)
    YYp = level_tensor(Y, Yp)
    src, _ = composition_product(XXp, YYp)
    left, _ = composition_product(X, Y)
    right, _ = composition_product(Xp, Yp)
    tgt = level_tensor(left, right)

    def fn(lab):
        _, (_, x, xp), blocks = lab
        ys = [(b[0][1], b[1]) for b in blocks]
        yps = [(b[0][2], b[1]) for b in blocks]
        # source order x, x', y1, y1', y2, y2', ...; target x, y1.., x', y1', ...
        items = [X.degree(x), Xp.degree(xp)]
        for (y, _), (yp, _) in zip(ys, yps):
            items += [Y.degree(y), Yp.degree(yp)]
        m = len(blocks)
        order = [0] + [2 + 2 * j for j in range(m)] + [1] + [3 + 2 * j for j in range(m)]
        sg = R.sign(koszul_parity(order, [d & 1 for d in items]))
        a = _canon_composite(X, Y, x, tuple(ys))
        b = _canon_composite(Xp, Yp, xp, tuple(yps))
        out = {}
        for la, ca in a.items():
            for lb, cb in b.items():
                vec_add_term(R, out, ("t", la, lb), ca * cb * sg)
        return out

    return SymSeqMorphism(src, tgt, fn, 0, "intertwiner")
