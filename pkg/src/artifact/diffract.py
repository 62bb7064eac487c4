"""Diffraction of level comonoids: Φ(X) = A∘((S⊗X)∘A⊥)∘A, its differential,
its co-ring coproduct, the Milgram map and the Alexander-Whitney co-ring F.

Elements are stored as leaf-labelled forests.

* A *node* ``(x, blocks)`` stands for ``s_{m-1}x ⊗ α_{n⃗}`` with the inner
  A-corollas attached: ``x`` is a basis label of X(m), ``blocks`` is a tuple
  of m blocks, block t is a tuple of n_t *entries*, and an entry is a tuple
  of children.  At the bottom layer the children are leaves (ints), read as
  a planar corolla; at higher layers they are nodes of the next layer.
* A *forest* is a tuple of nodes: the outer planar corolla of A.
* Canonical form: the blocks of every node are sorted by smallest leaf.

Signs use a single convention.  A node's own degree is ``|x| + n - 1``
(n entries) and its atoms are read as ``s, α_1..α_m, x``.  All nodes of a
forest are read layer by layer (layer one first; inside a layer, by parent
then entry then position).  Every sign is the Koszul sign relative to that
reading order.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .chain import complex_from_function
from .coeff import RingSpec, vec_add_into, vec_add_term, vec_scale
from .symmetric import (SymmetricSequence, TruncationProfile,
                        adjacent, all_perms, compositions, inverse, koszul_parity, perm_parity,
                        unit_sequences, level_tensor)


class NotCoassociativeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# level comonoids

class LevelComonoid:
    """A symmetric sequence with an equivariant coassociative level diagonal.

    ``delta(x)`` returns ``{(x', x''): coeff}`` with both labels in the level
    of ``x``.  ``unit`` optionally names the label of X(1) that is the image
    of the generator of J (a comonoid map J → X)."""

    def __init__(self, seq: SymmetricSequence, delta: Callable, unit=None, name: Optional[str] = None):
        self.seq = seq
        self.ring = seq.ring
        self._delta = delta
        self.unit = unit
        self.name = name or seq.name
        self._cache: Dict = {}

    def delta(self, x) -> Dict:
        if x not in self._cache:
            self._cache[x] = self._delta(x)
        return self._cache[x]

    def iterated_delta(self, x, k: int) -> List[Tuple[object, tuple]]:
        """Δ^{(k)}x as a list of (coeff, (x_0, ..., x_k))."""
        terms = [(self.ring.one(), (x,))]
        for _ in range(k):
            new = []
            for c, xs in terms:
                for (a, b), d in self.delta(xs[-1]).items():
                    new.append((self.ring.mul(c, d), xs[:-1] + (a, b)))
            terms = new
        return terms

    def verify(self, levels: Iterable[int]) -> Optional[str]:
        R = self.ring
        X = self.seq
        for n in levels:
            for x in X.basis(n):
                # coassociativity
                left, right = {}, {}
                for (a, b), c in self.delta(x).items():
                    for (a1, a2), d in self.delta(a).items():
                        vec_add_term(R, left, (a1, a2, b), c * d)
                    for (b1, b2), d in self.delta(b).items():
                        vec_add_term(R, right, (a, b1, b2), c * d)
                if left != right:
                    return f"Δ not coassociative at {x!r}"
                # chain map: Δd = (d⊗1 + 1⊗d)Δ
                lhs = {}
                for y, c in X.diff(x).items():
                    vec_add_into(R, lhs, self.delta(y), c)
                rhs = {}
                for (a, b), c in self.delta(x).items():
                    for a2, d in X.diff(a).items():
                        vec_add_term(R, rhs, (a2, b), c * d)
                    sg = R.sign(X.degree(a))
                    for b2, d in X.diff(b).items():
                        vec_add_term(R, rhs, (a, b2), c * d * sg)
                if lhs != rhs:
                    return f"Δ is not a chain map at {x!r}"
                for i in range(1, n):
                    s = adjacent(n, i)
                    lhs = {}
                    for y, c in X.act(x, s).items():
                        vec_add_into(R, lhs, self.delta(y), c)
                    rhs = {}
                    for (a, b), c in self.delta(x).items():
                        for a2, d in X.act(a, s).items():
                            for b2, e in X.act(b, s).items():
                                vec_add_term(R, rhs, (a2, b2), c * d * e)
                    if lhs != rhs:
                        return f"Δ is not equivariant at {x!r}, s_{i}"
        return None


def j_comonoid(trunc: TruncationProfile, ring: RingSpec) -> LevelComonoid:
    J = unit_sequences("J", trunc, ring)
    return LevelComonoid(J, lambda x: {(x, x): ring.one()}, unit=("j",), name="J")


def constant_comonoid(trunc: TruncationProfile, ring: RingSpec) -> LevelComonoid:
    C = unit_sequences("C", trunc, ring)
    return LevelComonoid(C, lambda x: {(x, x): ring.one()}, unit=("c", 1), name="C")


def associative_comonoid(trunc: TruncationProfile, ring: RingSpec) -> LevelComonoid:
    """A seen as a level comonoid: every permutation is grouplike."""
    seq = SymmetricSequence(ring, trunc, lambda n: [("w", p) for p in all_perms(n)] if n >= 1 else [],
                            lambda l: 0, lambda l, p: {("w", tuple(inverse(p)[v] for v in l[1])): ring.one()},
                            name="A")
    return LevelComonoid(seq, lambda x: {(x, x): ring.one()}, unit=("w", (0,)), name="A")


def tensor_comonoid(X: LevelComonoid, Y: LevelComonoid) -> LevelComonoid:
    """X⊗Y with Δ(x⊗y) = Σ ± (x'⊗y')⊗(x''⊗y'')."""
    R = X.ring
    seq = level_tensor(X.seq, Y.seq)

    def delta(lab):
        _, x, y = lab
        out = {}
        for (x1, x2), a in X.delta(x).items():
            for (y1, y2), b in Y.delta(y).items():
                sg = R.sign(X.seq.degree(x2) * Y.seq.degree(y1))
                vec_add_term(R, out, (("t", x1, y1), ("t", x2, y2)), a * b * sg)
        return out

    unit = ("t", X.unit, Y.unit) if X.unit is not None and Y.unit is not None else None
    return LevelComonoid(seq, delta, unit, f"{X.name}⊗{Y.name}")


def grouplike_comonoid(trunc: TruncationProfile, ring: RingSpec, labels: Dict[int, Dict],
                       name: str = "G") -> LevelComonoid:
    """Level comonoid on Σ_n-sets: ``labels[n]`` maps a label to its degree;
    Σ_n acts by relabelling ``(tag, perm)`` labels as in A (free orbits) and
    every basis element is grouplike.  Degrees must be even for Δ(b)=b⊗b to
    commute with the Koszul-twisted action; odd labels get zero diagonal."""
    degs = {}
    for n, d in labels.items():
        for tag, deg in d.items():
            for p in all_perms(n):
                degs[(tag, p)] = deg

    def basis(n):
        return [(tag, p) for tag in labels.get(n, {}) for p in all_perms(n)]

    def act(lab, perm):
        tag, p = lab
        return {(tag, tuple(inverse(perm)[v] for v in p)): ring.one()}

    seq = SymmetricSequence(ring, trunc, basis, lambda l: degs[l], act, name=name)
    return LevelComonoid(seq, lambda x: {(x, x): ring.one()} if degs[x] % 2 == 0 else {}, name=name)


# ---------------------------------------------------------------------------
# parity helpers

def _xor_tuples(a: tuple, b: tuple) -> tuple:
    if len(a) < len(b):
        a, b = b, a
    return tuple(a[i] ^ b[i] if i < len(b) else a[i] for i in range(len(a)))


def _layer_koszul(order: Sequence[int], parity_vectors: Sequence[tuple]) -> int:
    depth = max((len(p) for p in parity_vectors), default=0)
    par = 0
    for L in range(depth):
        pars = [p[L] if L < len(p) else 0 for p in parity_vectors]
        if any(pars):
            par ^= koszul_parity(order, pars)
    return par


def _concat_parity(parts: Sequence[tuple]) -> int:
    """Sign parity for reading forests e_1, e_2, ... (each read layer-major)
    instead as one forest read layer-major."""
    par = 0
    for i in range(len(parts)):
        for k in range(i + 1, len(parts)):
            for L, a in enumerate(parts[i]):
                if not a:
                    continue
                for Lp in range(min(L, len(parts[k]))):
                    par ^= a & parts[k][Lp]
    return par


# ---------------------------------------------------------------------------

class Diffraction:
    """Φ(X) for a level comonoid X: basis, differential, coproduct."""

    def __init__(self, X: LevelComonoid, trunc: Optional[TruncationProfile] = None):
        self.X = X
        self.ring = X.ring
        self.trunc = trunc or X.seq.trunc
        self._xdeg = X.seq.degree
        self._basis_cache: Dict[int, List] = {}
        self._diff_cache: Dict = {}
        self._psi_cache: Dict = {}
        self.sequence = SymmetricSequence(self.ring, self.trunc, self.basis, self.degree,
                                          self.act, self.diff, name=f"Φ({X.name})")
        # per-instance caches
        self.own_degree = lru_cache(maxsize=None)(self._own_degree)
        self.tree_parity = lru_cache(maxsize=None)(self._tree_parity)
        self.min_leaf = lru_cache(maxsize=None)(self._min_leaf)

    # -- basic data ---------------------------------------------------------
    def _own_degree(self, node) -> int:
        x, blocks = node
        return self._xdeg(x) + sum(len(b) for b in blocks) - 1

    def entry_parity(self, entry) -> tuple:
        """Parities of the nodes below an entry, per relative layer."""
        out = ()
        for ch in entry:
            if not isinstance(ch, int):
                out = _xor_tuples(out, self.tree_parity(ch))
        return out

    def _tree_parity(self, node) -> tuple:
        below = ()
        for b in node[1]:
            for e in b:
                below = _xor_tuples(below, self.entry_parity(e))
        return (self.own_degree(node) & 1,) + below

    def forest_parity(self, forest) -> tuple:
        out = ()
        for nd in forest:
            out = _xor_tuples(out, self.tree_parity(nd))
        return out

    def _min_leaf(self, obj) -> int:
        if isinstance(obj, int):
            return obj
        x, blocks = obj
        return min(self._entry_min(e) for b in blocks for e in b)

    def _entry_min(self, entry) -> int:
        return min(self.min_leaf(ch) for ch in entry)

    def node_degree_total(self, node) -> int:
        d = self.own_degree(node)
        for b in node[1]:
            for e in b:
                for ch in e:
                    if not isinstance(ch, int):
                        d += self.node_degree_total(ch)
        return d

    def degree(self, forest) -> int:
        return sum(self.node_degree_total(nd) for nd in forest)

    def leaves(self, forest) -> List[int]:
        out = []

        def rec(ch):
            if isinstance(ch, int):
                out.append(ch)
            else:
                for b in ch[1]:
                    for e in b:
                        for c in e:
                            rec(c)

        for nd in forest:
            rec(nd)
        return out

    # -- canonical form -----------------------------------------------------
    def canon_node(self, x, blocks) -> Dict:
        """Sort blocks by smallest leaf: (x, B) = sgn(π)·ε·(x·π, B∘π)."""
        m = len(blocks)
        mins = [min(self._entry_min(e) for e in b) for b in blocks]
        order = sorted(range(m), key=lambda i: mins[i])
        if all(order[i] == i for i in range(m)):
            return {(x, blocks): self.ring.one()}
        pi = tuple(order)
        par = perm_parity(pi)
        par ^= koszul_parity(pi, [(len(b) - 1) & 1 for b in blocks])
        bpars = []
        for b in blocks:
            v = ()
            for e in b:
                v = _xor_tuples(v, self.entry_parity(e))
            bpars.append(v)
        par ^= _layer_koszul(pi, bpars)
        new_blocks = tuple(blocks[i] for i in pi)
        sg = self.ring.sign(par)
        return {(x2, new_blocks): self.ring.mul(c, sg) for x2, c in self.X.seq.act(x, pi).items()}

    def canon_tree(self, node) -> Dict:
        """Canonicalize a node and everything below it (bottom up)."""
        x, blocks = node
        # canonicalize children entry by entry; children are disjoint trees
        new_blocks_terms = [(self.ring.one(), ())]
        for b in blocks:
            block_terms = [(self.ring.one(), ())]
            for e in b:
                entry_terms = [(self.ring.one(), ())]
                for ch in e:
                    if isinstance(ch, int):
                        entry_terms = [(c, t + (ch,)) for c, t in entry_terms]
                    else:
                        sub = self.canon_tree(ch)
                        entry_terms = [(self.ring.mul(c, d), t + (nd,)) for c, t in entry_terms
                                       for nd, d in sub.items()]
                block_terms = [(self.ring.mul(c, d), t + (et,)) for c, t in block_terms for d, et in entry_terms]
            new_blocks_terms = [(self.ring.mul(c, d), t + (bt,)) for c, t in new_blocks_terms for d, bt in block_terms]
        out: Dict = {}
        for c, bl in new_blocks_terms:
            for nd, d in self.canon_node(x, bl).items():
                vec_add_term(self.ring, out, nd, self.ring.mul(c, d))
        return out

    def canon_forest(self, forest) -> Dict:
        terms = {(): self.ring.one()}
        for nd in forest:
            sub = self.canon_tree(nd)
            new = {}
            for f, c in terms.items():
                for n2, d in sub.items():
                    vec_add_term(self.ring, new, f + (n2,), self.ring.mul(c, d))
            terms = new
        return terms

    # -- basis of Φ(X)(n) -----------------------------------------------------
    def basis(self, n: int) -> List:
        self.trunc.check_level(n)
        if n in self._basis_cache:
            return self._basis_cache[n]
        Xs = self.X.seq
        levels_with_basis = [m for m in range(1, n + 1) if m <= Xs.trunc.max_level and Xs.basis(m)]
        allow_new_block = any(m >= 2 for m in levels_with_basis)
        seps = (0, 1, 2, 3) if allow_new_block else (0, 1, 3)
        out = set()
        if n == 0:
            self._basis_cache[0] = []
            return []
        for word in itertools.permutations(range(n)):
            for sep in itertools.product(seps, repeat=n - 1):
                shapes = self._parse_shape(word, sep)
                if shapes is None:
                    continue
                choices = []
                ok = True
                for blocks in shapes:
                    xs = Xs.basis(len(blocks)) if len(blocks) <= Xs.trunc.max_level else []
                    if not xs:
                        ok = False
                        break
                    choices.append([(x, blocks) for x in xs])
                if not ok:
                    continue
                for nodes in itertools.product(*choices):
                    out.add(tuple(nodes))
        res = sorted(out, key=lambda f: (self.degree(f), repr(f)))
        self._basis_cache[n] = res
        return res

    @staticmethod
    def _parse_shape(word, sep):
        nodes, blocks, block, entry = [], [], [], [word[0]]
        for leaf, s in zip(word[1:], sep):
            if s == 0:
                entry.append(leaf)
                continue
            block.append(tuple(entry))
            entry = [leaf]
            if s >= 2:
                blocks.append(tuple(block))
                block = []
            if s == 3:
                nodes.append(tuple(blocks))
                blocks = []
        block.append(tuple(entry))
        blocks.append(tuple(block))
        nodes.append(tuple(blocks))
        for blocks in nodes:
            mins = [min(min(e) for e in b) for b in blocks]
            if any(mins[i] > mins[i + 1] for i in range(len(mins) - 1)):
                return None
        return nodes

    def generator(self, x, sizes: Sequence[int]):
        """The node s_{m-1}x ⊗ α_{n⃗} with leaves 0..n-1 in order."""
        blocks, off = [], 0
        for k in sizes:
            blocks.append(tuple((off + t,) for t in range(k)))
            off += k
        return (x, tuple(blocks))

    # -- right Σ_n action ---------------------------------------------------
    def act(self, forest, perm) -> Dict:
        inv = inverse(perm)

        def relabel(ch):
            if isinstance(ch, int):
                return inv[ch]
            x, blocks = ch
            return (x, tuple(tuple(tuple(relabel(c) for c in e) for e in b) for b in blocks))

        return self.canon_forest(tuple(relabel(nd) for nd in forest))

    # -- differential ---------------------------------------------------------
    def _layers(self, forest):
        layers = []
        cur = [((i,), nd) for i, nd in enumerate(forest)]
        while cur:
            layers.append(cur)
            nxt = []
            for path, nd in cur:
                for bi, b in enumerate(nd[1]):
                    for ei, e in enumerate(b):
                        for ci, ch in enumerate(e):
                            if not isinstance(ch, int):
                                nxt.append((path + (bi, ei, ci), ch))
            cur = nxt
        return layers

    @staticmethod
    def _replace(forest, path, new_nodes):
        """Replace the node at ``path`` by the sequence ``new_nodes``."""
        if len(path) == 1:
            i = path[0]
            return forest[:i] + tuple(new_nodes) + forest[i + 1:]

        def rec(node, sub):
            x, blocks = node
            bi, ei, ci = sub[0], sub[1], sub[2]
            e = blocks[bi][ei]
            if len(sub) == 3:
                e2 = e[:ci] + tuple(new_nodes) + e[ci + 1:]
            else:
                e2 = e[:ci] + (rec(e[ci], sub[3:]),) + e[ci + 1:]
            b2 = blocks[bi][:ei] + (e2,) + blocks[bi][ei + 1:]
            return (x, blocks[:bi] + (b2,) + blocks[bi + 1:])

        i = path[0]
        return forest[:i] + (rec(forest[i], path[1:]),) + forest[i + 1:]

    def node_boundary(self, node) -> List[Tuple[object, tuple]]:
        """Local terms of ∂ on one node: list of (coeff, replacement nodes)."""
        key = node
        if key in self._diff_cache:
            return self._diff_cache[key]
        R = self.ring
        x, blocks = node
        n = sum(len(b) for b in blocks)
        out: List = []
        # internal differential of X
        for x2, c in self.X.seq.diff(x).items():
            out.append((R.mul(c, R.sign(n - 1)), ((x2, blocks),)))
        # faces: merge neighbouring entries inside a block
        q = 0
        for bi, b in enumerate(blocks):
            for ei in range(len(b)):
                q += 1
                if ei + 1 < len(b):
                    merged = b[:ei] + (b[ei] + b[ei + 1],) + b[ei + 2:]
                    nb = blocks[:bi] + (merged,) + blocks[bi + 1:]
                    out.append((R.sign(n + q + bi + 1), ((x, nb),)))
        # cobar term: interior splittings of every block
        if all(len(b) >= 2 for b in blocks):
            delta = self.X.delta(x)
            if delta:
                flat = [(bi, ei) for bi, b in enumerate(blocks) for ei in range(len(b))]
                epars = [self.entry_parity(blocks[bi][ei]) for bi, ei in flat]
                for cuts in itertools.product(*[range(1, len(b)) for b in blocks]):
                    i_tot = sum(cuts)
                    js = [len(b) - c for b, c in zip(blocks, cuts)]
                    j_tot = sum(js)
                    Q = 0
                    for t in range(len(blocks)):
                        for s in range(t):
                            Q += cuts[t] * js[s]
                    new_order = [k for k, (bi, ei) in enumerate(flat) if ei < cuts[bi]] + \
                                [k for k, (bi, ei) in enumerate(flat) if ei >= cuts[bi]]
                    desc = _layer_koszul(new_order, epars)
                    left_blocks = tuple(b[:c] for b, c in zip(blocks, cuts))
                    right_blocks = tuple(b[c:] for b, c in zip(blocks, cuts))
                    for (x1, x2), c in delta.items():
                        par = 1 + i_tot + i_tot * j_tot + Q + self._xdeg(x1) * (1 + j_tot) + desc
                        coeff = R.mul(c, R.sign(par))
                        for n1, c1 in self.canon_node(x1, left_blocks).items():
                            for n2, c2 in self.canon_node(x2, right_blocks).items():
                                out.append((R.mul(coeff, R.mul(c1, c2)), (n1, n2)))
        self._diff_cache[key] = out
        return out

    def diff(self, forest) -> Dict:
        R = self.ring
        out: Dict = {}
        prefix = 0
        for layer in self._layers(forest):
            for path, nd in layer:
                terms = self.node_boundary(nd)
                if terms:
                    sg = R.sign(prefix)
                    for c, repl in terms:
                        vec_add_term(R, out, self._replace(forest, path, repl), R.mul(c, sg))
                prefix ^= self.own_degree(nd) & 1
        return out

    def diff_vec(self, vec: Dict) -> Dict:
        out: Dict = {}
        for f, c in vec.items():
            vec_add_into(self.ring, out, self.diff(f), c)
        return out

    # -- coproduct ----------------------------------------------------------
    def psi_node(self, node) -> Dict:
        """ψ of one node (its entries are opaque); returns single-root
        two-layer forests.  Entries' subtrees are carried along with the
        Koszul sign of their new reading order."""
        if node in self._psi_cache:
            return self._psi_cache[node]
        R = self.ring
        x, blocks = node
        r = len(blocks)
        sizes = [len(b) for b in blocks]
        m = sum(sizes)
        flat_index = {}
        k = 0
        for bi, b in enumerate(blocks):
            for ei in range(len(b)):
                flat_index[(bi, ei)] = k
                k += 1
        epars = [self.entry_parity(blocks[bi][ei]) for bi, b in enumerate(blocks) for ei in range(len(b))]
        carries = any(epars)
        out: Dict = {}
        for ell in range(r, min(sizes) + 1 if sizes else 1):
            diag = self.X.iterated_delta(x, ell)
            if not diag:
                continue
            for splits in itertools.product(*[list(compositions(s, ell)) for s in sizes]):
                # splits[i][j] = m_i^{j}
                mj = [sum(splits[i][j] for i in range(r)) for j in range(ell)]
                P = 0
                for j in range(ell):
                    for jp in range(j + 1, ell):
                        for i in range(r):
                            for ip in range(i):
                                P += splits[i][j] * splits[ip][jp]
                base = m * (ell + 1) + P
                for j in range(ell):
                    for jp in range(j + 1, ell):
                        base += (mj[j] - 1) * mj[jp]
                # second layer nodes
                pieces = []
                starts = [[0] * r]
                for j in range(ell):
                    prev = starts[-1]
                    starts.append([prev[i] + splits[i][j] for i in range(r)])
                order = []
                for j in range(ell):
                    nb = []
                    for i in range(r):
                        seg = blocks[i][starts[j][i]:starts[j + 1][i]]
                        nb.append(seg)
                        order.extend(flat_index[(i, e)] for e in range(starts[j][i], starts[j + 1][i]))
                    pieces.append(tuple(nb))
                carry_par = _layer_koszul(order, [(0,) + p for p in epars]) if carries else 0
                for lv in compositions(ell, r):
                    for c, xs in diag:
                        par = base + carry_par + (ell + m) * self._xdeg(xs[0])
                        for j in range(1, ell + 1):
                            par += (ell - j + sum(mj[j:])) * self._xdeg(xs[j])
                        coeff = R.mul(c, R.sign(par))
                        # canonicalize second-layer nodes
                        lower_terms = [(coeff, ())]
                        for j in range(ell):
                            sub = self.canon_node(xs[j + 1], pieces[j])
                            lower_terms = [(R.mul(a, b), t + (nd,)) for a, t in lower_terms for nd, b in sub.items()]
                        for a, lows in lower_terms:
                            top_blocks, pos = [], 0
                            for size in lv:
                                top_blocks.append(tuple((lows[pos + t],) for t in range(size)))
                                pos += size
                            for top, b in self.canon_node(xs[0], tuple(top_blocks)).items():
                                vec_add_term(R, out, (top,), R.mul(a, b))
        self._psi_cache[node] = out
        return out

    def _concat_terms(self, per_node: List[Dict]) -> Dict:
        R = self.ring
        terms = [(R.one(), (), [])]
        for d in per_node:
            new = []
            for c, f, pars in terms:
                for f2, c2 in d.items():
                    new.append((R.mul(c, c2), f + f2, pars + [self.forest_parity(f2)]))
            terms = new
        out: Dict = {}
        for c, f, pars in terms:
            vec_add_term(R, out, f, R.mul(c, R.sign(_concat_parity(pars))))
        return out

    def psi(self, forest) -> Dict:
        """ψ: Φ(X) → Φ(X)∘_AΦ(X) on a one-layer forest (leaf entries), or the
        top-layer coproduct ψ∘_A Id on a deeper forest."""
        terms = self._concat_terms([self.psi_node(nd) for nd in forest])
        # the forest read layer-major versus tree by tree
        split = self.ring.sign(_concat_parity([self.tree_parity(nd) for nd in forest]))
        out: Dict = {}
        for f, c in terms.items():
            vec_add_into(self.ring, out, self.canon_forest(f), self.ring.mul(c, split))
        return out

    def psi_vec(self, vec: Dict) -> Dict:
        out: Dict = {}
        for f, c in vec.items():
            vec_add_into(self.ring, out, self.psi(f), c)
        return out

    def psi_lower(self, forest) -> Dict:
        """Id∘_Aψ on a two-layer forest: the coproduct of each entry's forest."""
        R = self.ring
        spots = []
        for ti, top in enumerate(forest):
            for bi, b in enumerate(top[1]):
                for ei, e in enumerate(b):
                    spots.append((ti, bi, ei, e))
        per = [self.psi(e) for (_, _, _, e) in spots]
        out: Dict = {}
        for combo in itertools.product(*[list(p.items()) for p in per]):
            coeff = R.one()
            pars = []
            for f2, c in combo:
                coeff = R.mul(coeff, c)
                pars.append(self.forest_parity(f2))
            coeff = R.mul(coeff, R.sign(_concat_parity(pars)))
            k = 0
            rebuilt = []
            for ti, top in enumerate(forest):
                x, blocks = top
                nbs = []
                for b in blocks:
                    nes = []
                    for _ in b:
                        nes.append(combo[k][0])
                        k += 1
                    nbs.append(tuple(nes))
                rebuilt.append((x, tuple(nbs)))
            vec_add_term(R, out, tuple(rebuilt), coeff)
        return out

    def psi_lower_vec(self, vec):
        out: Dict = {}
        for f, c in vec.items():
            vec_add_into(self.ring, out, self.psi_lower(f), c)
        return out


# ---------------------------------------------------------------------------
# the Alexander-Whitney co-ring F = Φ(J)

class AWCoRing(Diffraction):
    """F = Φ(J) with counit ε and the level diagonal Δ_F."""

    U = ("j",)

    def __init__(self, trunc: TruncationProfile, ring: RingSpec):
        super().__init__(j_comonoid(trunc, ring), trunc)

    def f(self, m: int):
        """The generator f_m = s^{m-1}u_0 (degree m-1) on leaves 0..m-1."""
        return (self.generator(self.U, (m,)),)

    # counit ------------------------------------------------------------------
    def counit(self, forest) -> Optional[Tuple[int, ...]]:
        """ε: the concatenated corolla word when every node is f_1, else None."""
        word = []
        for x, blocks in forest:
            if len(blocks) != 1 or len(blocks[0]) != 1:
                return None
            word.extend(blocks[0][0])
        return tuple(word)

    def counit_top(self, forest) -> Optional[tuple]:
        """(ε∘_A Id) on a two-layer forest: drop f_1 roots."""
        out = []
        for x, blocks in forest:
            if len(blocks) != 1 or len(blocks[0]) != 1:
                return None
            out.extend(blocks[0][0])
        return tuple(out)

    def counit_bottom(self, forest) -> Optional[tuple]:
        """(Id∘_A ε) on a two-layer forest: collapse f_1 children to words."""
        tops = []
        for x, blocks in forest:
            nbs = []
            for b in blocks:
                nes = []
                for e in b:
                    word = self.counit(e)
                    if word is None:
                        return None
                    nes.append(word)
                nbs.append(tuple(nes))
            tops.append((x, tuple(nbs)))
        return tuple(tops)


    # level diagonal ---------------------------------------------------------
    def diagonal(self, forest) -> Dict:
        """Δ_F by its closed formula: Δ_F(f_m) = Σ_k Σ_{ı⃗∈I_{k,m}} ±
        (f_k⊗δ^{(ı⃗)}) ⊗ (δ^{(k)}⊗f_{i_1}⊗...⊗f_{i_k}), extended over both
        A-actions (diagonally on the right, by concatenation on the left)."""
        R = self.ring
        terms = [(R.one(), (), (), [])]
        for x, blocks in forest:
            entries = blocks[0]
            m = len(entries)
            pieces = []
            for k in range(1, m + 1):
                for runs in compositions(m, k):
                    groups, pos = [], 0
                    for r in runs:
                        groups.append(entries[pos:pos + r])
                        pos += r
                    left = ((x, (tuple(sum(g, ()) for g in groups),)),)
                    right = tuple((x, (g,)) for g in groups)
                    par = _milgram_intrinsic(k, runs)
                    # the α-splitting reordered into (α_k, α_{i_1}, ..., α_{i_k})
                    pieces.append((R.sign(par), left, right, k - 1, m - k))
            new = []
            for c0, L, Rt, pars in terms:
                for c, l, r, dl, dr in pieces:
                    new.append((R.mul(c0, c), L + l, Rt + r, pars + [dl & 1, dr & 1]))
            terms = new
        out: Dict = {}
        for c, L, Rt, pars in terms:
            k = len(pars) // 2
            order = [2 * i for i in range(k)] + [2 * i + 1 for i in range(k)]
            sg = R.sign(koszul_parity(order, pars))
            for l2, a in self.canon_forest(L).items():
                for r2, b in self.canon_forest(Rt).items():
                    vec_add_term(R, out, (l2, r2), R.mul(c, R.mul(sg, R.mul(a, b))))
        return out

    def tensor_diff(self, vec: Dict) -> Dict:
        """Differential on F⊗F⊗...: Leibniz over the tuple factors."""
        R = self.ring
        out: Dict = {}
        for tup, c in vec.items():
            acc = 0
            for i, f in enumerate(tup):
                sg = R.sign(acc)
                for g, d in self.diff(f).items():
                    vec_add_term(R, out, tup[:i] + (g,) + tup[i + 1:], R.mul(c, R.mul(d, sg)))
                acc += self.degree(f)
        return out

    def diagonal_on(self, vec: Dict, position: int) -> Dict:
        """Apply Δ_F to one factor of a tensor (degree zero, no sign)."""
        R = self.ring
        out: Dict = {}
        for tup, c in vec.items():
            for (a, b), d in self.diagonal(tup[position]).items():
                vec_add_term(R, out, tup[:position] + (a, b) + tup[position + 1:], R.mul(c, d))
        return out


def _shift_tree(node, shift: Sequence[int]):
    """Relabel leaves l → shift[l] below a node (no canonicalization)."""
    x, blocks = node
    return (x, tuple(tuple(tuple(shift[c] if isinstance(c, int) else _shift_tree(c, shift) for c in e)
                           for e in b) for b in blocks))


def _substitute_leaves(node, words: Sequence[tuple], offsets: Sequence[int]):
    """Replace leaf l of each bottom corolla by the corolla offsets[l] + words[l]."""
    x, blocks = node
    new_blocks = []
    for b in blocks:
        new_b = []
        for e in b:
            if all(isinstance(c, int) for c in e):
                new_b.append(tuple(offsets[l] + v for l in e for v in words[l]))
            else:
                new_b.append(tuple(_substitute_leaves(c, words, offsets) for c in e))
        new_b = tuple(new_b)
        new_blocks.append(new_b)
    return (x, tuple(new_blocks))


def bimodule_actions(D: Diffraction):
    """Standard-form A-actions on Φ(X): λ(p; F_1..F_k) grafts the forests
    into the outer corolla p; ρ(F; w_1..w_n) grafts w_l at leaf l of the
    inner corollas."""
    R = D.ring

    def left(p, forests):
        word = p[1]
        sizes = [len(D.leaves(f)) for f in forests]
        offs = [0]
        for s in sizes:
            offs.append(offs[-1] + s)
        shifted = [tuple(_shift_tree(nd, [offs[i] + l for l in range(sizes[i])]) for nd in f)
                   for i, f in enumerate(forests)]
        par = _layer_koszul(word, [D.forest_parity(f) for f in forests])
        out_forest = tuple(nd for i in word for nd in shifted[i])
        return vec_scale(R, D.canon_forest(out_forest), R.sign(par))

    def right(forest, ps):
        words = [p[1] for p in ps]
        offs = [0]
        for w in words:
            offs.append(offs[-1] + len(w))
        return D.canon_forest(tuple(_substitute_leaves(nd, words, offs) for nd in forest))

    return left, right


def diffraction_bimodule(D: Diffraction, A):
    """Φ(X) as a ModuleStructure over the associative operad ``A``."""
    from .operad import ModuleStructure
    left, right = bimodule_actions(D)
    return ModuleStructure(D.sequence, A, left, right, D.sequence.name)


def tor_complex(F: Diffraction, kind: str, n: int):
    """The level-n complex of J∘_A F (kind "JA") or J∘_A F∘_A J (kind "JJ").

    Tensoring with J on the left kills forests with more than one tree; on
    the right it kills inner corollas with more than one leaf.  The complex
    is the projection of F(n) onto the surviving basis."""
    if kind not in ("JA", "JJ"):
        raise ValueError("kind must be 'JA' or 'JJ'")

    def keep(forest):
        if len(forest) != 1:
            return False
        if kind == "JJ":
            return all(len(e) == 1 for b in forest[0][1] for e in b)
        return True

    bases: Dict[int, List] = {}
    for f in F.basis(n):
        if keep(f):
            bases.setdefault(F.degree(f), []).append(f)

    def diff(f):
        return {g: c for g, c in F.diff(f).items() if keep(g)}

    return complex_from_function(F.ring, bases, diff, lower_bound=0)


def diffracted_map(source: Diffraction, target: Diffraction, fn: Callable) -> Callable:
    """Φ(φ) for a comonoid morphism φ given on labels by ``fn(x) -> {y: c}``.
    Every node of a forest is relabelled (φ has degree 0, so no signs)."""
    R = source.ring

    def node_images(node) -> Dict:
        x, blocks = node
        # images of the children, entry by entry
        slots = [(bi, ei, ci) for bi, b in enumerate(blocks) for ei, e in enumerate(b)
                 for ci, ch in enumerate(e) if not isinstance(ch, int)]
        terms = {(y, blocks): c for y, c in fn(x).items()}
        for bi, ei, ci in slots:
            child = blocks[bi][ei][ci]
            new = {}
            for nd, c in terms.items():
                y, bl = nd
                for ch2, d in node_images(child).items():
                    e = bl[bi][ei]
                    e2 = e[:ci] + (ch2,) + e[ci + 1:]
                    b2 = bl[bi][:ei] + (e2,) + bl[bi][ei + 1:]
                    vec_add_term(R, new, (y, bl[:bi] + (b2,) + bl[bi + 1:]), R.mul(c, d))
            terms = new
        return terms

    def apply(forest) -> Dict:
        terms = {(): R.one()}
        for nd in forest:
            imgs = node_images(nd)
            new = {}
            for f, c in terms.items():
                for nd2, d in imgs.items():
                    vec_add_term(R, new, f + (nd2,), R.mul(c, d))
            terms = new
        out: Dict = {}
        for f, c in terms.items():
            vec_add_into(R, out, target.canon_forest(f), c)
        return out

    return apply


def describe(forest, xname=None) -> str:
    """Human-readable rendering: f_m for J-nodes, s x⊗α_(n⃗) otherwise."""
    def node(nd):
        x, blocks = nd
        sizes = tuple(len(b) for b in blocks)
        inner = ";".join("|".join(_entry(e) for e in b) for b in blocks)
        if x == ("j",):
            head = f"f_{sizes[0]}"
        else:
            head = f"s{xname(x) if xname else x}⊗α{sizes}"
        return f"{head}[{inner}]"

    def _entry(e):
        return ",".join(str(c) if isinstance(c, int) else node(c) for c in e)

    return " · ".join(node(nd) for nd in forest)


# ---------------------------------------------------------------------------
# the generalized Milgram map

def _milgram_intrinsic(n: int, runs: Sequence[int]) -> int:
    """Parity of the structural sign of the α-splitting α_m ↦ α_n ⊗ α_{r⃗}.

    Fixed by the chain-map requirement: Σ_i (r_i − 1)·Σ_{j>i} r_j + (n − 1)·m."""
    m = sum(runs)
    par = (n - 1) * m
    for i, r in enumerate(runs):
        par += (r - 1) * sum(runs[i + 1:])
    return par & 1


class MilgramMap:
    """q: Φ(X⊗Y) → Φ(X)⊗Φ(Y) (level tensor).

    The defining formula is only type-consistent on generators of level one
    (x ∈ X(1), y ∈ Y(1)); generators of higher level raise
    NotImplementedError.  On level one it reads

        q(s(x⊗y)⊗α_m) = Σ_{n, r⃗} ± (s x⊗α_n⊗δ^{(r⃗)}) ⊗ (δ^{(n)}⊗ s y_0 ⊗ ... ⊗ s y_{n-1} ⊗ α_{r⃗})

    and it is extended over both A-actions."""

    def __init__(self, X: LevelComonoid, Y: LevelComonoid, trunc: Optional[TruncationProfile] = None,
                 intrinsic: Callable = _milgram_intrinsic):
        self.X, self.Y = X, Y
        self.XY = tensor_comonoid(X, Y)
        self.source = Diffraction(self.XY, trunc)
        self.left = Diffraction(X, trunc)
        self.right = Diffraction(Y, trunc)
        self.ring = X.ring
        self._intrinsic = intrinsic
        self._cache: Dict = {}

    def node(self, node) -> Dict:
        if node in self._cache:
            return self._cache[node]
        R = self.ring
        lab, blocks = node
        if len(blocks) != 1:
            raise NotImplementedError("the Milgram formula is defined here for level-one generators only")
        _, x, y = lab
        entries = blocks[0]
        m = len(entries)
        dx = self.X.seq.degree(x)
        out: Dict = {}
        for n in range(1, m + 1):
            ys = self.Y.iterated_delta(y, n - 1)
            for runs in compositions(m, n):
                groups, pos = [], 0
                for r in runs:
                    groups.append(entries[pos:pos + r])
                    pos += r
                left = ((x, (tuple(sum(g, ()) for g in groups),)),)
                base = self._intrinsic(n, runs)
                for c, yl in ys:
                    right = tuple((yl[i], (groups[i],)) for i in range(n))
                    # (α_n, α_r1..α_rn, x, y_0..y_{n-1}) → (α_n, x, α_r1, y_0, ...)
                    pars = [(n - 1) & 1] + [(r - 1) & 1 for r in runs] + [dx & 1] + \
                           [self.Y.seq.degree(v) & 1 for v in yl]
                    order = [0, n + 1]
                    for i in range(n):
                        order += [1 + i, n + 2 + i]
                    par = base + koszul_parity(order, pars)
                    # source reading (α_m, x, y) versus (α ... , x, y) carries no extra sign
                    vec_add_term(R, out, (left, right), R.mul(c, R.sign(par)))
        self._cache[node] = out
        return out

    def apply(self, forest) -> Dict:
        R = self.ring
        terms = [(R.one(), (), (), [])]
        for nd in forest:
            new = []
            for (l, r), c in self.node(nd).items():
                for c0, L, Rt, pars in terms:
                    new.append((R.mul(c0, c), L + l, Rt + r,
                                pars + [self.left.degree(l) & 1, self.right.degree(r) & 1]))
            terms = new
        out: Dict = {}
        for c, L, Rt, pars in terms:
            k = len(pars) // 2
            order = [2 * i for i in range(k)] + [2 * i + 1 for i in range(k)]
            sg = R.sign(koszul_parity(order, pars))
            for l2, a in self.left.canon_forest(L).items():
                for r2, b in self.right.canon_forest(Rt).items():
                    vec_add_term(R, out, (l2, r2), R.mul(c, R.mul(sg, R.mul(a, b))))
        return out

    def apply_vec(self, vec: Dict) -> Dict:
        out: Dict = {}
        for f, c in vec.items():
            vec_add_into(self.ring, out, self.apply(f), c)
        return out

    def target_diff(self, vec: Dict) -> Dict:
        """∂ on Φ(X)⊗Φ(Y): ∂a⊗b + (−1)^{|a|} a⊗∂b."""
        R = self.ring
        out: Dict = {}
        for (a, b), c in vec.items():
            for a2, d in self.left.diff(a).items():
                vec_add_term(R, out, (a2, b), R.mul(c, d))
            sg = R.sign(self.left.degree(a))
            for b2, d in self.right.diff(b).items():
                vec_add_term(R, out, (a, b2), R.mul(c, R.mul(d, sg)))
        return out

    def level_one_basis(self, n: int) -> List:
        return [f for f in self.source.basis(n) if all(len(nd[1]) == 1 for nd in f)]

    def check_chain(self, n: int):
        for f in self.level_one_basis(n):
            if self.target_diff(self.apply(f)) != self.apply_vec(self.source.diff(f)):
                return f
        return None


# ---------------------------------------------------------------------------
# the graded comonoid V_X = (S⊗X)∘A⊥

class VXDiagonal:
    """The degree −1 diagonal ~Δ on V_X: interior splittings of every block
    of s_{m−1}x⊗α_{n⃗} together with Δx.  Elements are single nodes whose
    entries are leaves; a term of ~Δ is a pair of nodes (a graded tensor)."""

    def __init__(self, D: Diffraction):
        self.D = D
        self.ring = D.ring

    def degree(self, node) -> int:
        return self.D.own_degree(node)

    def delta(self, node) -> Dict:
        R = self.ring
        out: Dict = {}
        for c, repl in self.D.node_boundary(node):
            if len(repl) == 2:
                # node_boundary carries the extra sign of the cobar term there
                vec_add_term(R, out, tuple(repl), R.neg(c))
        return out

    def delta_vec(self, vec: Dict) -> Dict:
        out: Dict = {}
        for nd, c in vec.items():
            vec_add_into(self.ring, out, self.delta(nd), c)
        return out

    def check_coassociative(self, levels: Iterable[int]):
        """(~Δ⊗1)~Δ + (1⊗~Δ)~Δ = 0, the relation of a degree −1 diagonal
        (the Koszul sign of ~Δ passing the left factor is included)."""
        R = self.ring
        for n in levels:
            for m in range(1, n + 1):
                for sizes in compositions(n, m):
                    for x in self.D.X.seq.basis(m):
                        node = self.D.generator(x, sizes)
                        total: Dict = {}
                        for (a, b), c in self.delta(node).items():
                            for (a1, a2), d in self.delta(a).items():
                                vec_add_term(R, total, (a1, a2, b), R.mul(c, d))
                            sg = R.sign(self.degree(a))
                            for (b1, b2), d in self.delta(b).items():
                                vec_add_term(R, total, (a, b1, b2), R.mul(R.mul(c, d), sg))
                        if total:
                            return node
        return None


def graded_comonoid_on_VX(D: Diffraction) -> VXDiagonal:
    return VXDiagonal(D)


# ---------------------------------------------------------------------------
# face maps on A⊥∘A

class SimplicialFaces:
    """A⊥∘A with basis (n⃗, word): α_m⊗(δ^{(n_1)}⊗⋯⊗δ^{(n_m)}) followed by the
    permutation ``word`` of A(n); degree m−1.  The face d_i merges blocks i
    and i+1 for 0 < i < m; the outer faces d_0 and d_m are zero."""

    def __init__(self, trunc: TruncationProfile, ring: RingSpec):
        self.trunc = trunc
        self.ring = ring

    def basis(self, n: int, m: Optional[int] = None) -> List:
        ms = [m] if m is not None else range(1, n + 1)
        return [(sizes, p) for k in ms for sizes in compositions(n, k) for p in all_perms(n)]

    def face(self, i: int, elem) -> Dict:
        sizes, p = elem
        m = len(sizes)
        if i <= 0 or i >= m:
            return {}
        merged = sizes[:i - 1] + (sizes[i - 1] + sizes[i],) + sizes[i + 1:]
        return {(merged, p): self.ring.one()}

    def face_vec(self, i: int, vec: Dict) -> Dict:
        out: Dict = {}
        for e, c in vec.items():
            vec_add_into(self.ring, out, self.face(i, e), c)
        return out

    def diff(self, elem) -> Dict:
        R = self.ring
        out: Dict = {}
        for i in range(1, len(elem[0])):
            vec_add_into(R, out, self.face(i, elem), R.sign(i))
        return out

    def complex(self, n: int):
        bases: Dict = {}
        for e in self.basis(n):
            bases.setdefault(len(e[0]) - 1, []).append(e)
        return complex_from_function(self.ring, bases, self.diff, lower_bound=0)

    def check_identities(self, levels: Iterable[int]):
        """d_i d_j = d_j d_{i+1} for j ≤ i, on every basis element."""
        for n in levels:
            for e in self.basis(n):
                m = len(e[0])
                for i in range(0, m):
                    for j in range(0, i + 1):
                        lhs = self.face_vec(i, self.face(j, e))
                        rhs = self.face_vec(j, self.face(i + 1, e))
                        if lhs != rhs:
                            return (e, i, j)
        return None


def simplicial_faces(trunc: TruncationProfile, ring: RingSpec) -> SimplicialFaces:
    return SimplicialFaces(trunc, ring)
