"""Connective chain complexes of finitely generated free modules.

A complex stores, per degree, an ordered list of structured basis labels
(nested tuples of ints and strings) and the matrix of the differential
from degree d to degree d - 1, acting on column vectors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from .coeff import (RingSpec, SparseMatrix, rank, smith_normal_form, vec_add_into)


class InvalidComplexError(ValueError):
    pass


class RingMismatchError(ValueError):
    pass


# ---------------------------------------------------------------------------
# labels

def label_key(label):
    """Total order key on structured labels: ints < strings < tuples."""
    if isinstance(label, bool):
        return (0, int(label))
    if isinstance(label, int):
        return (0, label)
    if isinstance(label, str):
        return (1, label)
    if isinstance(label, tuple):
        return (2, len(label), tuple(label_key(x) for x in label))
    if label is None:
        return (-1,)
    raise TypeError(f"unsupported label {label!r}")


def encode_label(label):
    if isinstance(label, tuple):
        return [encode_label(x) for x in label]
    if label is None or isinstance(label, (int, str)):
        return label
    raise TypeError(f"unsupported label {label!r}")


def decode_label(obj):
    if isinstance(obj, list):
        return tuple(decode_label(x) for x in obj)
    return obj


# ---------------------------------------------------------------------------

@dataclass
class ChainComplex:
    ring: RingSpec
    lower_bound: int
    bases: Dict[int, List] = field(default_factory=dict)
    differentials: Dict[int, SparseMatrix] = field(default_factory=dict)

    def __post_init__(self):
        self.bases = {d: list(b) for d, b in self.bases.items() if b}
        for d in self.bases:
            if d < self.lower_bound:
                raise InvalidComplexError(f"degree {d} below lower bound {self.lower_bound}")
        self._index = {d: {lab: i for i, lab in enumerate(b)} for d, b in self.bases.items()}
        for d, b in self.bases.items():
            if len(self._index[d]) != len(b):
                raise InvalidComplexError(f"duplicate labels in degree {d}")
        diffs = {}
        for d, M in self.differentials.items():
            if M.entries:
                diffs[d] = M
        self.differentials = diffs
        for d, M in self.differentials.items():
            if (M.rows, M.cols) != (self.dim(d - 1), self.dim(d)):
                raise InvalidComplexError(
                    f"differential in degree {d} has shape {M.rows}x{M.cols}, "
                    f"expected {self.dim(d - 1)}x{self.dim(d)}")

    # access -------------------------------------------------------------
    def degrees(self) -> List[int]:
        return sorted(self.bases)

    def dim(self, d: int) -> int:
        return len(self.bases.get(d, ()))

    def basis(self, d: int) -> List:
        return self.bases.get(d, [])

    def index(self, d: int, label) -> int:
        return self._index[d][label]

    def diff(self, d: int) -> SparseMatrix:
        M = self.differentials.get(d)
        if M is None:
            return SparseMatrix.zero(self.dim(d - 1), self.dim(d))
        return M

    def total_rank(self) -> int:
        return sum(len(b) for b in self.bases.values())

    def apply_diff(self, d: int, vec: Dict) -> Dict:
        """Differential of a label-keyed vector in degree d."""
        M = self.diff(d)
        cols = M.col_dicts()
        out: Dict[int, object] = {}
        for lab, v in vec.items():
            vec_add_into(self.ring, out, cols[self.index(d, lab)], v)
        tb = self.basis(d - 1)
        return {tb[i]: v for i, v in out.items()}

    # invariants ---------------------------------------------------------
    def check_square_zero(self) -> Optional[Tuple[int, int]]:
        """Return (degree, column) of a failure of d∘d = 0, or None."""
        for d in self.degrees():
            if d - 1 not in self.bases or d - 2 not in self.bases:
                continue
            P = self.diff(d - 1).matmul(self.diff(d), self.ring)
            if P.entries:
                (_, c) = min(P.entries)
                return d, c
        return None

    def verify(self) -> "ChainComplex":
        bad = self.check_square_zero()
        if bad is not None:
            raise InvalidComplexError(f"d∘d != 0 at degree {bad[0]}, basis element {self.basis(bad[0])[bad[1]]!r}")
        return self

    # serialization ------------------------------------------------------
    def to_json(self) -> str:
        obj = {
            "ring": self.ring.name,
            "lower_bound": self.lower_bound,
            "degrees": [
                {
                    "degree": d,
                    "basis": [encode_label(l) for l in self.bases[d]],
                    "differential": [[r, c, self.ring.serialize_scalar(v)]
                                     for r, c, v in self.diff(d).triples()],
                }
                for d in self.degrees()
            ],
        }
        return json.dumps(obj, sort_keys=True, separators=(",", ":"))

    @staticmethod
    def from_json(text: str) -> "ChainComplex":
        obj = json.loads(text)
        ring = RingSpec.parse(obj["ring"])
        bases = {e["degree"]: [decode_label(l) for l in e["basis"]] for e in obj["degrees"]}
        diffs = {}
        for e in obj["degrees"]:
            d = e["degree"]
            diffs[d] = SparseMatrix.from_triples(
                len(bases.get(d - 1, [])), len(bases[d]),
                [(r, c, ring.parse_scalar(v)) for r, c, v in e["differential"]], ring)
        return ChainComplex(ring, obj["lower_bound"], bases, diffs)


def complex_from_function(ring: RingSpec, bases: Dict[int, List], diff, lower_bound: Optional[int] = None,
                          verify: bool = True) -> ChainComplex:
    """Build a complex from per-degree labels and ``diff(label) -> {label: coeff}``."""
    bases = {d: list(b) for d, b in bases.items() if b}
    lb = min(bases) if lower_bound is None and bases else (lower_bound or 0)
    index = {d: {lab: i for i, lab in enumerate(b)} for d, b in bases.items()}
    diffs = {}
    for d, b in bases.items():
        ent: Dict[Tuple[int, int], object] = {}
        tgt = index.get(d - 1, {})
        for j, lab in enumerate(b):
            for t, v in diff(lab).items():
                v = ring.canon(v)
                if not v:
                    continue
                if t not in tgt:
                    raise InvalidComplexError(f"differential of {lab!r} leaves the basis: {t!r}")
                ent[(tgt[t], j)] = v
        diffs[d] = SparseMatrix(len(bases.get(d - 1, [])), len(b), ent)
    C = ChainComplex(ring, lb, bases, diffs)
    return C.verify() if verify else C


# ---------------------------------------------------------------------------
# maps

@dataclass
class ChainMap:
    source: ChainComplex
    target: ChainComplex
    degree: int
    matrices: Dict[int, SparseMatrix] = field(default_factory=dict)

    def matrix(self, d: int) -> SparseMatrix:
        M = self.matrices.get(d)
        if M is None:
            return SparseMatrix.zero(self.target.dim(d + self.degree), self.source.dim(d))
        return M

    def apply(self, d: int, vec: Dict) -> Dict:
        M = self.matrix(d)
        cols = M.col_dicts()
        out: Dict[int, object] = {}
        for lab, v in vec.items():
            vec_add_into(self.source.ring, out, cols[self.source.index(d, lab)], v)
        tb = self.target.basis(d + self.degree)
        return {tb[i]: v for i, v in out.items()}

    def check(self) -> Optional[int]:
        """Degree where ∂f = (-1)^k f∂ fails, or None."""
        R = self.source.ring
        k = self.degree
        degs = set(self.source.degrees()) | {d - k for d in self.target.degrees()}
        for d in sorted(degs):
            lhs = self.target.diff(d + k).matmul(self.matrix(d), R)
            rhs = self.matrix(d - 1).matmul(self.source.diff(d), R)
            if not lhs.add(rhs, R, -R.sign(k)).is_zero():
                return d
        return None

    def compose(self, other: "ChainMap") -> "ChainMap":
        """self ∘ other."""
        R = self.source.ring
        mats = {}
        for d in other.source.degrees():
            mats[d] = self.matrix(d + other.degree).matmul(other.matrix(d), R)
        return ChainMap(other.source, self.target, self.degree + other.degree, mats)

    def equals(self, other: "ChainMap") -> bool:
        degs = set(self.matrices) | set(other.matrices)
        return self.degree == other.degree and all(
            self.matrix(d).same_as(other.matrix(d)) for d in degs)


def map_from_function(source: ChainComplex, target: ChainComplex, degree: int, fn) -> ChainMap:
    R = source.ring
    mats = {}
    for d in source.degrees():
        ent = {}
        td = d + degree
        for j, lab in enumerate(source.basis(d)):
            for t, v in fn(lab).items():
                v = R.canon(v)
                if v:
                    ent[(target.index(td, t), j)] = v
        mats[d] = SparseMatrix(target.dim(td), source.dim(d), ent)
    return ChainMap(source, target, degree, mats)


def identity_map(C: ChainComplex) -> ChainMap:
    return ChainMap(C, C, 0, {d: SparseMatrix.identity(C.dim(d), C.ring) for d in C.degrees()})


# ---------------------------------------------------------------------------
# constructions

def _same_ring(C: ChainComplex, D: ChainComplex) -> RingSpec:
    if C.ring != D.ring:
        raise RingMismatchError(f"{C.ring} vs {D.ring}")
    return C.ring


def zero_complex(ring: RingSpec) -> ChainComplex:
    return ChainComplex(ring, 0)


def tensor_complexes(C: ChainComplex, D: ChainComplex) -> ChainComplex:
    """C ⊗ D with d(c⊗e) = dc⊗e + (-1)^{|c|} c⊗de; labels are pairs."""
    R = _same_ring(C, D)
    bases: Dict[int, List] = {}
    for a in C.degrees():
        for b in D.degrees():
            bases.setdefault(a + b, []).extend((x, y) for x in C.basis(a) for y in D.basis(b))
    cdeg = {x: a for a in C.degrees() for x in C.basis(a)}
    ddeg = {y: b for b in D.degrees() for y in D.basis(b)}

    def diff(lab):
        x, y = lab
        a, b = cdeg[x], ddeg[y]
        out = {}
        for x2, v in C.apply_diff(a, {x: R.one()}).items():
            out[(x2, y)] = v
        sgn = R.sign(a)
        for y2, v in D.apply_diff(b, {y: R.one()}).items():
            out[(x, y2)] = R.mul(sgn, v)
        return out

    return complex_from_function(R, bases, diff, lower_bound=C.lower_bound + D.lower_bound, verify=False)


def shift_label(label, k: int):
    if k == 0:
        return label
    if isinstance(label, tuple) and len(label) == 3 and label[0] == "shift":
        total = label[1] + k
        return label[2] if total == 0 else ("shift", total, label[2])
    return ("shift", k, label)


def shift(C: ChainComplex, k: int) -> ChainComplex:
    """(s^k C)_n = C_{n-k} with ∂ s^k = (-1)^k s^k ∂."""
    if k == 0:
        return C
    R = C.ring
    bases = {d + k: [shift_label(l, k) for l in C.basis(d)] for d in C.degrees()}
    sgn = R.sign(k)
    diffs = {d + k: C.diff(d).scale(sgn, R) for d in C.degrees()}
    return ChainComplex(R, C.lower_bound + k, bases, diffs)


def direct_sum(C: ChainComplex, D: ChainComplex):
    """C ⊕ D with labels (0, c), (1, e); returns (sum, (inc0, inc1), (pr0, pr1))."""
    R = _same_ring(C, D)
    degs = sorted(set(C.degrees()) | set(D.degrees()))
    bases = {d: [(0, x) for x in C.basis(d)] + [(1, y) for y in D.basis(d)] for d in degs}
    diffs = {}
    for d in degs:
        M, N = C.diff(d), D.diff(d)
        off_r, off_c = C.dim(d - 1), C.dim(d)
        ent = dict(M.entries)
        for (r, c), v in N.entries.items():
            ent[(r + off_r, c + off_c)] = v
        diffs[d] = SparseMatrix(C.dim(d - 1) + D.dim(d - 1), C.dim(d) + D.dim(d), ent)
    S = ChainComplex(R, min(C.lower_bound, D.lower_bound), bases, diffs)
    one = R.one()
    inc0 = map_from_function(C, S, 0, lambda x: {(0, x): one})
    inc1 = map_from_function(D, S, 0, lambda y: {(1, y): one})
    pr0 = map_from_function(S, C, 0, lambda l: {l[1]: one} if l[0] == 0 else {})
    pr1 = map_from_function(S, D, 0, lambda l: {l[1]: one} if l[0] == 1 else {})
    return S, (inc0, inc1), (pr0, pr1)


# ---------------------------------------------------------------------------
# homology

@dataclass
class HomologyResult:
    """Per degree: (free rank, torsion invariant factors > 1)."""

    ring: RingSpec
    groups: Dict[int, Tuple[int, Tuple[int, ...]]]

    def rank(self, d: int) -> int:
        return self.groups.get(d, (0, ()))[0]

    def torsion(self, d: int) -> Tuple[int, ...]:
        return self.groups.get(d, (0, ()))[1]

    def ranks(self, degrees: Iterable[int]) -> Tuple[int, ...]:
        return tuple(self.rank(d) for d in degrees)

    def is_zero(self, d: int) -> bool:
        return self.rank(d) == 0 and not self.torsion(d)

    def invariant_factors(self, d: int) -> Tuple[int, ...]:
        """Over Z: torsion factors followed by zeros for the free part."""
        fr, tors = self.groups.get(d, (0, ()))
        return tors + (0,) * fr


def homology(C: ChainComplex, degree_range: Optional[Iterable[int]] = None) -> HomologyResult:
    bad = C.check_square_zero()
    if bad is not None:
        raise InvalidComplexError(f"d∘d != 0 at degree {bad[0]}")
    R = C.ring
    degs = sorted(degree_range) if degree_range is not None else C.degrees()
    groups = {}
    cache_rank: Dict[int, int] = {}
    cache_tors: Dict[int, Tuple[int, ...]] = {}

    def boundary_data(d):
        if d in cache_rank:
            return cache_rank[d], cache_tors.get(d, ())
        M = C.diff(d)
        if not M.entries:
            cache_rank[d] = 0
            return 0, ()
        if R.kind == "Integers":
            factors, _, _ = smith_normal_form(M, R, transforms=False)
            nz = [f for f in factors if f]
            cache_rank[d] = len(nz)
            cache_tors[d] = tuple(f for f in nz if f > 1)
        else:
            cache_rank[d] = rank(M, R)
        return cache_rank[d], cache_tors.get(d, ())

    for d in degs:
        r_out, _ = boundary_data(d)
        r_in, tors = boundary_data(d + 1)
        groups[d] = (C.dim(d) - r_out - r_in, tors if R.kind == "Integers" else ())
    return HomologyResult(R, groups)
