"""Verification suites, serialized coalgebras and the ``artifact`` command."""

from __future__ import annotations

import argparse
import json
import math
import random
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence

from .barcobar import (
    MultiplicativeMorphism, TensorDiffraction, bar, bar_identity_family, bar_induce, bar_linearize,
    check_diffracted, check_module_square, cobar, compose_multiplicative, counterexample_suite,
    COUNTEREXAMPLE_F2_VALUE, COUNTEREXAMPLE_F3_CYCLE, dcsh_extend,
    diffracted_instances, identity_epsilon, identity_multiplicative, induce,
    kleisli_compose, linearize, precompose_comonoid, precompose_multiplicative,
    random_bar_family, random_family, random_multiplicative, tensor_coalgebra,
)
from .chain import decode_label, encode_label, homology, label_key
from .coeff import RingSpec, vec_add_into, vec_add_term
from .diffract import (
    AWCoRing, Diffraction, MilgramMap, associative_comonoid, diffracted_map,
    tor_complex,
)
from .operad import (
    ChainAlgebra, ChainCoalgebra, Cosimplicial, StructureError, embed_T,
    nonrealizable_coalgebra, reduce_counital, associative_operad,
)
from .symmetric import TruncationProfile, adjacent

SCHEMA_VERSION = 1

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class UsageError(ValueError):
    """A suite was asked to run outside its preconditions."""


# ---------------------------------------------------------------------------
# configuration and reports

def default_truncation(ring: RingSpec, max_level: Optional[int] = None,
                       max_degree: Optional[int] = None) -> TruncationProfile:
    """Level 5 over prime fields, level 4 over Z and Q (Smith form cost); degree 12."""
    if max_level is None:
        max_level = 5 if ring.kind == "PrimeField" else 4
    return TruncationProfile(max_level, 12 if max_degree is None else max_degree)


@dataclass(frozen=True)
class SuiteConfig:
    suite: str
    ring: RingSpec
    trunc: TruncationProfile
    seed: int = 0
    fmt: str = "text"

    @property
    def max_level(self) -> int:
        return self.trunc.max_level


@dataclass
class CheckRecord:
    name: str
    anchor: str
    passed: bool
    witness: object = None
    data: object = None
    seconds: float = 0.0


@dataclass
class SuiteReport:
    suite: str
    config: SuiteConfig
    records: List[CheckRecord] = field(default_factory=list)
    summary: Dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def failures(self) -> List[CheckRecord]:
        return [r for r in self.sorted_records() if not r.passed]

    def sorted_records(self) -> List[CheckRecord]:
        return sorted(self.records, key=lambda r: (r.name, r.anchor))

    def record(self, name: str, anchor: str, fn: Callable):
        """Run ``fn() -> (witness, data)``; a witness of None means pass."""
        t0 = time.perf_counter()
        try:
            witness, data = fn()
        except StructureError as exc:
            witness, data = {"error": str(exc), "witness": exc.witness}, None
        rec = CheckRecord(name, anchor, witness is None, witness, data, time.perf_counter() - t0)
        self.records.append(rec)
        return rec

    def to_dict(self, timings: bool = False) -> Dict:
        checks = []
        for r in self.sorted_records():
            entry = {"name": r.name, "anchor": r.anchor, "status": "pass" if r.passed else "fail"}
            if not r.passed:
                entry["witness"] = to_jsonable(r.witness)
            if r.data is not None:
                entry["data"] = to_jsonable(r.data)
            if timings:
                entry["seconds"] = round(r.seconds, 3)
            checks.append(entry)
        return {
            "schema_version": SCHEMA_VERSION,
            "suite": self.suite,
            "ring": self.config.ring.name,
            "max_level": self.config.trunc.max_level,
            "max_degree": self.config.trunc.max_degree,
            "seed": self.config.seed,
            "status": "pass" if self.passed else "fail",
            "summary": to_jsonable(self.summary),
            "checks": checks,
        }

    def render(self, fmt: str = "text", timings: bool = False) -> str:
        if fmt == "json":
            return json.dumps(self.to_dict(timings), sort_keys=True, indent=2) + "\n"
        c = self.config
        lines = [f"{self.suite} ring={c.ring.name} max_level={c.trunc.max_level} "
                 f"max_degree={c.trunc.max_degree} seed={c.seed}: {'PASS' if self.passed else 'FAIL'}"]
        for r in self.sorted_records():
            line = f"  [{'ok' if r.passed else 'FAIL'}] {r.name} <{r.anchor}>"
            if r.data is not None:
                line += f" {json.dumps(to_jsonable(r.data), sort_keys=True)}"
            if not r.passed:
                line += f" witness={json.dumps(to_jsonable(r.witness), sort_keys=True)}"
            if timings:
                line += f" ({r.seconds:.2f}s)"
            lines.append(line)
        for k in sorted(self.summary):
            lines.append(f"  {k}: {json.dumps(to_jsonable(self.summary[k]), sort_keys=True)}")
        return "\n".join(lines) + "\n"


def to_jsonable(obj):
    """Deterministic JSON image: dict keys become sorted strings, tuples lists."""
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else str(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (tuple, list)):
        return [to_jsonable(x) for x in obj]
    if isinstance(obj, (set, frozenset)):
        return [to_jsonable(x) for x in sorted(obj, key=label_key)]
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: _sort_key(kv[0]))
        return {(k if isinstance(k, str) else json.dumps(to_jsonable(k))): to_jsonable(v)
                for k, v in items}
    return repr(obj)


def _sort_key(k):
    try:
        return (0, label_key(k))
    except TypeError:
        return (1, repr(k))


def _first(items):
    for x in items:
        return x
    return None


# ---------------------------------------------------------------------------
# serialized coalgebras and families

def coalgebra_to_json(C: ChainCoalgebra) -> str:
    R = C.ring
    obj = {
        "kind": "chain_coalgebra",
        "ring": R.name,
        "name": C.name,
        "counit": encode_label(C.counit),
        "generators": [{"label": encode_label(l), "degree": C.degree(l)} for l in C.labels],
        "differential": [[encode_label(l), encode_label(t), R.serialize_scalar(v)]
                         for l in C.labels for t, v in sorted(C.diff(l).items(), key=lambda kv: label_key(kv[0]))
                         if R.canon(v)],
        "diagonal": [[encode_label(l), encode_label(a), encode_label(b), R.serialize_scalar(v)]
                     for l in C.labels for (a, b), v in sorted(C.delta(l).items(), key=lambda kv: label_key(kv[0]))
                     if R.canon(v)],
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def coalgebra_from_json(obj, ring: Optional[RingSpec] = None) -> ChainCoalgebra:
    """Read a coalgebra from a JSON string or an already decoded object."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    if obj.get("kind") != "chain_coalgebra":
        raise ValueError("not a serialized chain coalgebra")
    R = ring or RingSpec.parse(obj["ring"])
    degrees = {decode_label(g["label"]): int(g["degree"]) for g in obj["generators"]}
    diff: Dict = {}
    for src, tgt, v in obj.get("differential", []):
        vec_add_term(R, diff.setdefault(decode_label(src), {}), decode_label(tgt), R.parse_scalar(str(v)))
    delta: Dict = {}
    for src, a, b, v in obj.get("diagonal", []):
        vec_add_term(R, delta.setdefault(decode_label(src), {}), (decode_label(a), decode_label(b)),
                     R.parse_scalar(str(v)))
    for table in (diff, delta):
        for k in table:
            if k not in degrees:
                raise ValueError(f"unknown label {k!r}")
    return ChainCoalgebra(R, degrees, diff, delta, counit=decode_label(obj.get("counit")),
                          name=obj.get("name", "C"))


def _read_vector_entries(entries, R: RingSpec) -> Dict:
    out: Dict = {}
    for label, v in entries:
        vec_add_term(R, out, decode_label(label), R.parse_scalar(str(v)))
    return out


def family_to_json(values: Dict, R: RingSpec) -> List:
    """A generating family {(c, x, sizes): {tuple: coeff}} as labeled entry lists."""
    rows = []
    for (c, x, sizes) in sorted(values, key=lambda k: (sum(k[2]), label_key(k[2]), label_key(k[0]))):
        vec = values[(c, x, sizes)]
        rows.append({
            "arity": len(sizes),
            "sizes": list(sizes),
            "source": encode_label(c),
            "label": encode_label(x),
            "value": [[encode_label(t), R.serialize_scalar(v)]
                      for t, v in sorted(vec.items(), key=lambda kv: label_key(kv[0])) if R.canon(v)],
        })
    return rows


# ---------------------------------------------------------------------------
# shared example objects

def primitive_coalgebra(R: RingSpec) -> ChainCoalgebra:
    """R{g_0, x_1} with g grouplike, x primitive and zero differential."""
    return ChainCoalgebra(R, {"g": 0, "x": 1}, {},
                          {"g": {("g", "g"): 1}, "x": {("g", "x"): 1, ("x", "g"): 1}}, counit="g", name="G")


def _duality_pair(R: RingSpec):
    C = ChainCoalgebra(R, {"a": 2, "b": 3, "c": 4}, {}, {"c": {("a", "a"): 1}}, name="C")
    Cp = ChainCoalgebra(R, {"p": 2, "q": 3, "r": 4}, {"r": {"q": 1}}, {"r": {("p", "p"): 1}}, name="C'")
    return C, Cp


def _bar_algebra(R: RingSpec) -> ChainAlgebra:
    return ChainAlgebra(R, {"a": 1, "b": 2}, {}, {("a", "a"): {"b": 1}})


# ---------------------------------------------------------------------------
# coring suite

def _d2_witness(F: AWCoRing, n: int):
    R = F.ring
    B = F.basis(n)
    table = {f: F.diff(f) for f in B}
    for f in B:
        acc: Dict = {}
        for g, c in table[f].items():
            vec_add_into(R, acc, table[g] if g in table else F.diff(g), c)
        if acc:
            return {"element": f, "d2": acc}
    return None


def _counit_witness(F: AWCoRing, n: int, side: str):
    R = F.ring
    apply = F.counit_top if side == "top" else F.counit_bottom
    for f in F.basis(n):
        acc: Dict = {}
        for g, c in F.psi(f).items():
            r = apply(g)
            if r is not None:
                vec_add_into(R, acc, F.canon_forest(r), c)
        if acc != {f: R.one()}:
            return {"element": f, "value": acc}
    return None


def _psi_witnesses(F: AWCoRing, n: int):
    chain = coassoc = None
    for f in F.basis(n):
        p = F.psi(f)
        if chain is None and F.diff_vec(p) != F.psi_vec(F.diff(f)):
            chain = {"element": f}
        if coassoc is None and F.psi_vec(p) != F.psi_lower_vec(p):
            coassoc = {"element": f}
        if chain and coassoc:
            break
    return chain, coassoc


def _equivariance_witness(F: AWCoRing, n: int):
    R = F.ring
    for f in F.basis(n):
        for i in range(1, n):
            s = adjacent(n, i)
            lhs: Dict = {}
            for g, c in F.act(f, s).items():
                vec_add_into(R, lhs, F.diff(g), c)
            rhs: Dict = {}
            for g, c in F.diff(f).items():
                vec_add_into(R, rhs, F.act(g, s), c)
            if lhs != rhs:
                return {"element": f, "transposition": i}
    return None


def _diagonal_witnesses(F: AWCoRing, q: MilgramMap, to_jj: Callable, n: int):
    R = F.ring
    formula = chain = coassoc = None
    for f in F.basis(n):
        d = F.diagonal(f)
        if formula is None and q.apply_vec(to_jj(f)) != d:
            formula = {"element": f}
        if chain is None:
            rhs: Dict = {}
            for g, c in F.diff(f).items():
                vec_add_into(R, rhs, F.diagonal(g), c)
            if F.tensor_diff(d) != rhs:
                chain = {"element": f}
        if coassoc is None and F.diagonal_on(d, 0) != F.diagonal_on(d, 1):
            coassoc = {"element": f}
    return formula, chain, coassoc


def suite_coring(config: SuiteConfig, coring: Optional[AWCoRing] = None) -> SuiteReport:
    """∂² = 0, equivariance of ∂, ψ chain map/coassociative/counital and the
    level diagonal Δ_F on F(n) for n up to the configured level.  Δ_F and the
    interchange map q are checked up to level min(L, 4)."""
    F = coring or AWCoRing(config.trunc, config.ring)
    rep = SuiteReport("verify-coring", config)
    L = config.max_level
    for n in range(1, L + 1):
        rep.record(f"F({n}) differential squares to zero", "coring-differential-squares-to-zero",
                   lambda n=n: (_d2_witness(F, n), {"basis": len(F.basis(n))}))
        rep.record(f"F({n}) differential is equivariant", "coring-differential-equivariant",
                   lambda n=n: (_equivariance_witness(F, n), None))
        chain, coassoc = _psi_witnesses(F, n)
        rep.record(f"F({n}) psi is a chain map", "coring-psi-chain-map", lambda c=chain: (c, None))
        rep.record(f"F({n}) psi is coassociative", "coring-psi-coassociative", lambda c=coassoc: (c, None))
        for side in ("top", "bottom"):
            rep.record(f"F({n}) psi is counital ({side})", f"coring-psi-counit-{side}",
                       lambda n=n, side=side: (_counit_witness(F, n, side), None))
    LD = min(L, 4)
    if LD >= 1:
        T = TruncationProfile(LD, config.trunc.max_degree)
        FD = F if F.trunc.max_level == LD else AWCoRing(T, config.ring)
        if coring is not None:
            FD = F
        J = FD.X
        q = MilgramMap(J, J, T)
        to_jj = diffracted_map(FD, q.source, lambda x: {("t", ("j",), ("j",)): config.ring.one()})
        for n in range(1, LD + 1):
            rep.record(f"F({n}) interchange map q is a chain map", "coring-interchange-chain-map",
                       lambda n=n: (q.check_chain(n), None))
            formula, chain, coassoc = _diagonal_witnesses(FD, q, to_jj, n)
            rep.record(f"F({n}) diagonal equals q after the diffracted diagonal of J",
                       "coring-diagonal-closed-formula", lambda w=formula: (w, None))
            rep.record(f"F({n}) diagonal is a chain map", "coring-diagonal-chain-map", lambda w=chain: (w, None))
            rep.record(f"F({n}) diagonal is coassociative", "coring-diagonal-coassociative",
                       lambda w=coassoc: (w, None))
    return rep


# ---------------------------------------------------------------------------
# homology and Tor

def _groups(H, lo: int, hi: int) -> Dict:
    return {d: {"rank": H.rank(d), "torsion": list(H.torsion(d))} for d in range(lo, hi + 1)
            if H.rank(d) or H.torsion(d)}


def suite_homology_F(config: SuiteConfig, coring: Optional[AWCoRing] = None) -> SuiteReport:
    """H_0(F(n)) free of rank n! and H_k(F(n)) = 0 for k > 0."""
    F = coring or AWCoRing(config.trunc, config.ring)
    rep = SuiteReport("homology-f", config)
    h0 = []
    for n in range(1, config.max_level + 1):
        def run(n=n):
            H = homology(F.sequence.level(n))
            groups = _groups(H, 0, n)
            h0.append(H.rank(0))
            expected = {0: {"rank": math.factorial(n), "torsion": []}}
            return (None if groups == expected else {"expected": expected, "computed": groups}), groups
        rep.record(f"H(F({n})) is free of rank {n}! in degree 0", "quasi-isomorphism-F-to-A", run)
    rep.summary["h0_ranks"] = h0
    return rep


def suite_tor(config: SuiteConfig, coring: Optional[AWCoRing] = None) -> SuiteReport:
    """Tor^A(J, A) ≅ J, and Tor^A(J, J)(n) of R-rank n! concentrated in degree
    n − 1: the size of one free Σ_n-orbit, the generator line of the bar dual of A."""
    F = coring or AWCoRing(config.trunc, config.ring)
    rep = SuiteReport("tor", config)
    for n in range(1, config.max_level + 1):
        def ja(n=n):
            groups = _groups(homology(tor_complex(F, "JA", n)), 0, n)
            expected = {0: {"rank": 1, "torsion": []}} if n == 1 else {}
            return (None if groups == expected else {"expected": expected, "computed": groups}), groups

        def jj(n=n):
            groups = _groups(homology(tor_complex(F, "JJ", n)), 0, n)
            expected = {n - 1: {"rank": math.factorial(n), "torsion": []}}
            return (None if groups == expected else {"expected": expected, "computed": groups}), groups
        rep.record(f"Tor(J,A)({n}) agrees with J({n})", "tor-J-A-is-J", ja)
        rep.record(f"Tor(J,J)({n}) has rank {n}! in degree {n - 1}", "tor-J-J-is-A-bar", jj)
    return rep


# ---------------------------------------------------------------------------
# counterexample

_COUNTER_ANCHORS = {
    "(a)": "nonrealizable-coalgebra-axioms",
    "(b)": "nonrealizable-equivariant-diagonal",
    "(c)": "nonrealizable-partial-lift",
    "(d)": "nonrealizable-obstruction",
}


def suite_counterexample(config: SuiteConfig) -> SuiteReport:
    if not (config.ring.kind == "PrimeField" and config.ring.p == 2):
        raise UsageError("the counterexample suite requires --ring z2")
    rep = SuiteReport("counterexample", config)
    for chk in counterexample_suite(config.ring).checks:
        anchor = _COUNTER_ANCHORS[chk.name.split()[0]]
        rep.record(chk.name, anchor, lambda chk=chk: (None if chk.passed else chk.witness, None))
    rep.summary["obstruction_cycle"] = sorted(COUNTEREXAMPLE_F3_CYCLE, key=label_key)
    return rep


# ---------------------------------------------------------------------------
# duality

def suite_duality(config: SuiteConfig, count: int = 50) -> SuiteReport:
    """Ind/Lin roundtrips for cobar and bar duality, identity and change of
    comonoid compatibility, Kleisli composition and the diffracted verdicts."""
    R = config.ring
    rng = random.Random(config.seed)
    rep = SuiteReport("duality-roundtrip", config)
    arity = max(1, min(config.max_level, 3))
    T = TruncationProfile(arity, config.trunc.max_degree)
    C, Cp = _duality_pair(R)
    O, Op = cobar(C, 3), cobar(Cp, 3)
    F = AWCoRing(T, R)
    DA = Diffraction(associative_comonoid(T, R), T)
    levels = list(range(1, arity + 1))
    per = count

    for D in (F, DA):
        TD = TensorDiffraction(C, D)
        name = D.X.name

        def lin_ind(TD=TD, D=D):
            for trial in range(per):
                th = random_family(TD, Cp, arity, rng, levels)
                back = linearize(induce(th, O, Op), D, arity)
                bad = th.family_equals(back, levels)
                if bad is not None:
                    return {"trial": trial, "mismatch": bad}, None
            return None, {"morphisms": per}

        def ind_lin(D=D):
            for trial in range(per):
                psi = random_multiplicative(O, D.X, Op, rng, arity, 2)
                bad = psi.equals(induce(linearize(psi, D, 2 * arity), O, Op), arity, 2, 6)
                if bad is not None:
                    return {"trial": trial, "mismatch": bad}, None
            return None, {"morphisms": per}
        rep.record(f"cobar duality over {name}: Lin after Ind is the identity", "cobar-duality-lin-ind", lin_ind)
        rep.record(f"cobar duality over {name}: Ind after Lin is the identity", "cobar-duality-ind-lin", ind_lin)

    TDF, TDA = TensorDiffraction(C, F), TensorDiffraction(C, DA)
    eps = identity_epsilon(TDF)
    rep.record("Ind of the counit family is the identity", "cobar-duality-identity",
               lambda: (induce(eps, O, O).equals(identity_multiplicative(O, F.X), 1, 3, 8), None))
    rep.record("Lin of the identity is the counit family", "cobar-duality-identity",
               lambda: (linearize(identity_multiplicative(O, F.X), F, arity).equals(eps, arity, 8), None))

    def naturality():
        beta_ja = lambda y: {("w", (0,)): R.one()}
        beta_aj = lambda y: {("j",): R.one()} if len(y[1]) == 1 else {}
        for trial in range(3):
            th = random_family(TDA, Cp, arity, rng, levels)
            bad = induce(precompose_comonoid(th, beta_ja, F), O, Op).equals(
                precompose_multiplicative(induce(th, O, Op), beta_ja, F.X), arity, 3, 8)
            if bad is not None:
                return {"beta": "J->A", "trial": trial, "mismatch": bad}, None
            th = random_family(TDF, Cp, arity, rng, [1])
            bad = induce(precompose_comonoid(th, beta_aj, DA), O, Op).equals(
                precompose_multiplicative(induce(th, O, Op), beta_aj, DA.X), arity, 3, 8)
            if bad is not None:
                return {"beta": "A->J", "trial": trial, "mismatch": bad}, None
        return None, None
    rep.record("Ind commutes with change of comonoid", "cobar-duality-naturality", naturality)

    A = _bar_algebra(R)
    BA = bar(A, 4)

    def bar_roundtrip():
        for trial in range(count):
            fam = random_bar_family(A, A, 4, rng)
            Fm = bar_induce(fam, A, A, BA, BA)
            bad = Fm.check_comultiplicative()
            if bad is not None:
                return {"trial": trial, "not comultiplicative": bad}, None
            back = bar_linearize(Fm, A, 4)
            if back != {k: v for k, v in fam.items() if v}:
                return {"trial": trial, "family": fam, "recovered": back}, None
            bad = bar_induce(back, A, A, BA, BA).equals(Fm)
            if bad is not None:
                return {"trial": trial, "mismatch": bad}, None
        return None, {"morphisms": count}
    rep.record("bar duality: Lin and Ind are inverse", "bar-duality-roundtrip", bar_roundtrip)
    rep.record("bar duality: Ind of the identity family is the identity", "bar-duality-identity",
               lambda: (_first(w for w in BA.labels
                               if bar_induce(bar_identity_family(A), A, A, BA, BA).apply(w) != {w: R.one()}), None))

    _kleisli_checks(rep, R, F)
    _diffracted_checks(rep, R, rng, count // 2 if count >= 40 else 20)
    return rep


def _kleisli_checks(rep: SuiteReport, R: RingSpec, F: AWCoRing):
    T3 = TruncationProfile(3)
    F3 = F if F.trunc.max_level == 3 else AWCoRing(T3, R)
    C = ChainCoalgebra(R, {"a": 2, "b": 2, "c": 4}, {}, {"c": {("a", "b"): 1}}, name="K")
    O = cobar(C, 4)
    one = R.one()
    g1 = {"a": {(("a",),): one}, "b": {(("b",),): one}, "c": {(("c",),): one, (("a", "a", "b"),): one}}
    g2 = {"a": {(("a",),): -one}, "b": {(("b",),): one}, "c": {(("c",),): -one, (("b", "a", "b"),): one}}
    p1 = MultiplicativeMorphism(O, F3.X, O, lambda c, x: g1[c])
    p2 = MultiplicativeMorphism(O, F3.X, O, lambda c, x: g2[c])
    t1, t2 = linearize(p1, F3, 3), linearize(p2, F3, 3)
    eps = identity_epsilon(t1.source)
    k21 = kleisli_compose(t2, t1, F3)
    rep.record("Ind of a Kleisli composite is the composite of Ind", "kleisli-induction",
               lambda: (induce(k21, O, O).equals(compose_multiplicative(p2, p1), 1, 3, 6), None))
    rep.record("the counit family is a left and right Kleisli identity", "kleisli-identity",
               lambda: (kleisli_compose(eps, t1, F3).family_equals(t1, [1, 2, 3])
                        or kleisli_compose(t1, eps, F3).family_equals(t1, [1, 2, 3]), None))
    rep.record("Kleisli composition is associative", "kleisli-associative",
               lambda: (kleisli_compose(t1, k21, F3).family_equals(kleisli_compose(kleisli_compose(t1, t2, F3), t1, F3),
                                                                   [1, 2]), None))
    rep.record("a Kleisli composite of chain families is a chain family", "kleisli-chain",
               lambda: (k21.check_chain(3, 8), None))


def _diffracted_checks(rep: SuiteReport, R: RingSpec, rng: random.Random, count: int):
    T3 = TruncationProfile(3)
    for side in ("right", "balanced"):
        def run(side=side):
            tally: Dict = {}
            for name, th, O, act in diffracted_instances(side, rng, count, T3, R):
                a = check_diffracted(th, side, act, O, O).holds
                b = check_module_square(induce(th, O, O), side, act, 3, 2, 2, 3).holds
                key = f"{name}: {'holds' if a else 'fails'}"
                tally[key] = tally.get(key, 0) + 1
                if a != b:
                    return {"instance": name, "diagram": a, "module square": b}, None
            return None, {"instances": count, "verdicts": tally}
        rep.record(f"{side} diffracted diagrams agree with the module square", "diffracted-module-maps", run)


# ---------------------------------------------------------------------------
# dcsh lifts

def _contractible_example(R: RingSpec):
    K = ChainCoalgebra(R, {"a": 2, "b": 2, "c": 4, "e": 5}, {}, {"c": {("a", "b"): 1}}, name="K")
    E = ChainCoalgebra(R, {"e0": 0, "e1": 1}, {"e1": {"e0": 1}},
                       {"e0": {("e0", "e0"): 1}, "e1": {("e1", "e0"): 1}}, name="E")
    KE = tensor_coalgebra(K, E)
    h = {(k, e): {(k, "e1"): R.sign(K.degree(k))} for (k, e) in KE.labels if e == "e0"}
    one = R.one()
    tau = {"a": {("a", "e0"): one, ("b", "e0"): one}, "b": {("b", "e0"): one}, "c": {("c", "e0"): one}, "e": {}}
    return K, KE, tau, h


def _lift_records(rep: SuiteReport, prefix: str, tau, C, Cp, level: int, contraction=None,
                  prescribed=None, expect_ok: bool = True, output: Optional[Dict] = None):
    res_box = {}

    def lift():
        res = dcsh_extend(tau, C, Cp, level, contraction=contraction, prescribed=prescribed)
        res_box["res"] = res
        if res.ok != expect_ok:
            return {"lift": "exists" if res.ok else str(res.obstruction)}, None
        if res.ok:
            return None, {"levels": level}
        obs = res.obstruction
        return (None if obs.verified else "certificate does not verify"), {
            "generator": list(obs.generator), "cycle": obs.cycle}
    rec = rep.record(f"{prefix}: lift {'exists' if expect_ok else 'is obstructed'}", "dcsh-lift", lift)
    res = res_box.get("res")
    if res is not None and res.ok and rec.passed:
        rep.record(f"{prefix}: lift is a chain family", "dcsh-lift-chain",
                   lambda: (res.theta.check_chain(level, max(C.degrees.values()) + level + 2), None))
        if output is not None:
            output["family"] = family_to_json(res.values, C.ring)
    if res is not None and not res.ok and output is not None:
        output["obstruction"] = {"generator": to_jsonable(res.obstruction.generator),
                                 "cycle": to_jsonable(res.obstruction.cycle)}
    return res


def suite_dcsh(config: SuiteConfig, problem: Optional[Dict] = None) -> SuiteReport:
    """Extend a chain map τ: C → C' to a dcsh family level by level.

    Without ``problem`` two built-in instances run: a target with a
    contraction, where the lift exists and Ind of it is a chain map, and
    (over Z/2) the diagonal of the non-realizable coalgebra M, which is
    obstructed at (w, f_3)."""
    R = config.ring
    rep = SuiteReport("dcsh-extend", config)
    level = max(2, min(config.max_level, 4))
    if problem is not None:
        C, Cp = problem["source"], problem["target"]
        out = problem.setdefault("output", {})
        _lift_records(rep, f"{C.name} -> {Cp.name}", problem["tau"], C, Cp, level,
                      contraction=problem.get("contraction"), expect_ok=problem.get("expect_lift", True),
                      output=out)
        return rep
    K, KE, tau, h = _contractible_example(R)
    res = _lift_records(rep, "K -> K(x)E with a contraction", tau, K, KE, level, contraction=h)
    if res is not None and res.ok:
        O, Op = cobar(K, 3), cobar(KE, 3)
        rep.record("K -> K(x)E with a contraction: Ind of the lift is a chain map", "dcsh-lift-induced",
                   lambda: (induce(res.theta, O, Op).check_chain(1, 3, 6), None))
    if R.kind == "PrimeField" and R.p == 2:
        M = nonrealizable_coalgebra(R)
        MM = tensor_coalgebra(M, M)
        tauM = {c: dict(M.delta(c)) for c in M.labels}
        res = _lift_records(rep, "M -> M(x)M along the diagonal", tauM, M, MM, 3,
                            prescribed={("w", 2): COUNTEREXAMPLE_F2_VALUE}, expect_ok=False)
        rep.record("M -> M(x)M along the diagonal: obstruction sits at (w, f_3)", "dcsh-lift-obstruction",
                   lambda: (None if res is not None and not res.ok and res.obstruction.generator == ("w", 3)
                            and res.obstruction.cycle == COUNTEREXAMPLE_F3_CYCLE else "unexpected", None))
    return rep


def load_dcsh_problem(obj: Dict, ring: RingSpec) -> Dict:
    """{"source": coalgebra, "target": coalgebra, "tau": [[c, [[t, coeff], ...]], ...],
    "contraction": [[t, [[t', coeff], ...]], ...] (optional), "expect_lift": bool}."""
    C = coalgebra_from_json(obj["source"], ring)
    Cp = coalgebra_from_json(obj["target"], ring)
    tau = {decode_label(c): _read_vector_entries(v, ring) for c, v in obj["tau"]}
    for c, vec in tau.items():
        if c not in C.degrees:
            raise ValueError(f"tau names unknown generator {c!r}")
        for t in vec:
            if t not in Cp.degrees:
                raise ValueError(f"tau({c}) leaves the target: {t!r}")
    problem = {"source": C, "target": Cp, "tau": tau, "expect_lift": obj.get("expect_lift", True)}
    if obj.get("contraction") is not None:
        problem["contraction"] = {decode_label(t): _read_vector_entries(v, ring) for t, v in obj["contraction"]}
    return problem


# ---------------------------------------------------------------------------
# cosimplicial

def suite_cosimplicial(config: SuiteConfig, coalgebra: Optional[ChainCoalgebra] = None) -> SuiteReport:
    """Cosimplicial identities and the cup pairing on T(C) with v the grouplike unit.

    The default coalgebra is M over Z/2 (with T(M̄), v = 0, alongside) and the
    primitive coalgebra G elsewhere."""
    R = config.ring
    rep = SuiteReport("cosimplicial", config)
    L = min(config.max_level, 4)
    A = associative_operad(TruncationProfile(L), R)
    cases = []
    if coalgebra is not None:
        if coalgebra.counit is None:
            raise UsageError("the cosimplicial suite needs a coalgebra with a counit label")
        cases.append((coalgebra.name, embed_T(coalgebra, A), {(coalgebra.counit,): R.one()}))
    elif R.kind == "PrimeField" and R.p == 2:
        M = nonrealizable_coalgebra(R)
        cases.append(("M", embed_T(M, A), {("1",): R.one()}))
        cases.append(("M reduced", embed_T(reduce_counital(M), A), {}))
    else:
        G = primitive_coalgebra(R)
        cases.append(("G", embed_T(G, A), {("g",): R.one()}))
    for name, T, v in cases:
        box = {}

        def build(T=T, v=v):
            box["cs"] = Cosimplicial(T, v)
            return None, None
        rec = rep.record(f"T({name}): v is central", "cosimplicial-central-unit", build)
        if not rec.passed:
            continue
        checks = box["cs"].verify(L).checks
        labels = ["cosimplicial identities", "cup pairing is compatible with inner cofaces",
                  "cup pairing joins the outer cofaces"]
        anchors = ["cosimplicial-identities", "cup-pairing-cofaces", "cup-pairing-outer"]
        for chk, label, anchor in zip(checks, labels, anchors):
            rep.record(f"T({name}): {label}", anchor, lambda chk=chk: (chk.witness, None))
    return rep


# ---------------------------------------------------------------------------
# command line

SUITES = {
    "verify-coring": suite_coring,
    "homology-f": suite_homology_F,
    "tor": suite_tor,
    "counterexample": suite_counterexample,
    "duality-roundtrip": suite_duality,
    "dcsh-extend": suite_dcsh,
    "cosimplicial": suite_cosimplicial,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _ring_arg(text: str) -> RingSpec:
    try:
        return RingSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="artifact", description="Exact verification suites for operadic diffraction.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SUITES:
        p = sub.add_parser(name)
        p.add_argument("--ring", type=_ring_arg, default=None, help="z, z2, zp:<p> or q (default z2)")
        p.add_argument("--max-level", type=int, default=None)
        p.add_argument("--max-degree", type=int, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--input", default=None, help="serialized coalgebra or lifting problem (JSON)")
        p.add_argument("--output", default=None, help="write the report (and any computed family) here")
        p.add_argument("--timings", action="store_true", help="include wall-clock timings")
    return parser


def run(argv: Optional[Sequence[str]] = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    ring = args.ring or RingSpec.prime_field(2)
    if args.max_level is not None and args.max_level < 1:
        parser.error("--max-level must be at least 1")
    config = SuiteConfig(args.command, ring, default_truncation(ring, args.max_level, args.max_degree),
                         args.seed, args.format)
    extra = {}
    try:
        if args.input is not None:
            if args.command not in ("dcsh-extend", "cosimplicial"):
                raise UsageError(f"{args.command} takes no --input")
            with open(args.input) as fh:
                obj = json.load(fh)
            if args.command == "dcsh-extend":
                extra["problem"] = load_dcsh_problem(obj, ring)
            else:
                extra["coalgebra"] = coalgebra_from_json(obj, ring)
        rep = SUITES[args.command](config, **extra)
    except (UsageError, ValueError, OSError) as exc:
        sys.stderr.write(f"artifact {args.command}: {exc}\n")
        return EXIT_USAGE
    text = rep.render(args.format, args.timings)
    if args.output is not None:
        if args.format == "json" and "problem" in extra and extra["problem"].get("output"):
            body = json.loads(text)
            body["result"] = extra["problem"]["output"]
            text = json.dumps(body, sort_keys=True, indent=2) + "\n"
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def main() -> None:
    raise SystemExit(run())
