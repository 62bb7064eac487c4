"""Exact scalars and sparse linear algebra over Z, Z/p and Q.

Scalars are plain Python ``int`` (for Z and Z/p, reduced into ``range(p)``)
or ``fractions.Fraction`` (for Q).  Sparse vectors are dicts mapping keys
to nonzero canonical scalars.

>>> R = RingSpec.parse("z2")
>>> rank(SparseMatrix.from_dense([[1, 1], [1, 1]], R), R)
1
>>> smith_normal_form(SparseMatrix.from_dense([[2, 4], [4, 8]], Z))[0]
(2, 0)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Dict, Iterable, List, Optional, Sequence, Tuple


class UnsupportedRingError(ValueError):
    pass


class DimensionError(ValueError):
    pass


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    i = 2
    while i * i <= p:
        if p % i == 0:
            return False
        i += 1
    return True


@dataclass(frozen=True)
class RingSpec:
    """One of ``Integers``, ``PrimeField(p)`` or ``Rationals``."""

    kind: str
    p: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("Integers", "PrimeField", "Rationals"):
            raise ValueError(f"unknown ring kind {self.kind!r}")
        if self.kind == "PrimeField":
            if self.p is None or not _is_prime(self.p):
                raise ValueError(f"PrimeField needs a prime, got {self.p!r}")
        elif self.p is not None:
            raise ValueError("only PrimeField carries a characteristic")

    # construction -----------------------------------------------------
    @staticmethod
    def integers() -> "RingSpec":
        return RingSpec("Integers")

    @staticmethod
    def rationals() -> "RingSpec":
        return RingSpec("Rationals")

    @staticmethod
    def prime_field(p: int) -> "RingSpec":
        return RingSpec("PrimeField", p)

    @staticmethod
    def parse(text: str) -> "RingSpec":
        t = text.strip().lower()
        if t == "z":
            return Z
        if t == "q":
            return Q
        if t == "z2":
            return RingSpec.prime_field(2)
        if t.startswith("zp:"):
            return RingSpec.prime_field(int(t[3:]))
        raise ValueError(f"cannot parse ring {text!r}")

    @property
    def name(self) -> str:
        if self.kind == "Integers":
            return "z"
        if self.kind == "Rationals":
            return "q"
        return "z2" if self.p == 2 else f"zp:{self.p}"

    def __repr__(self):
        return f"RingSpec({self.name})"

    # arithmetic -------------------------------------------------------
    @property
    def is_field(self) -> bool:
        return self.kind != "Integers"

    @property
    def characteristic(self) -> int:
        return self.p if self.kind == "PrimeField" else 0

    def canon(self, x):
        if self.kind == "Integers":
            if isinstance(x, Fraction):
                if x.denominator != 1:
                    raise ValueError(f"{x} is not an integer")
                return int(x.numerator)
            return int(x)
        if self.kind == "PrimeField":
            if isinstance(x, Fraction):
                return (x.numerator * pow(x.denominator, -1, self.p)) % self.p
            return int(x) % self.p
        return Fraction(x)

    def zero(self):
        return Fraction(0) if self.kind == "Rationals" else 0

    def one(self):
        return Fraction(1) if self.kind == "Rationals" else 1

    def add(self, a, b):
        s = a + b
        return s % self.p if self.p else s

    def sub(self, a, b):
        s = a - b
        return s % self.p if self.p else s

    def mul(self, a, b):
        s = a * b
        return s % self.p if self.p else s

    def neg(self, a):
        return (-a) % self.p if self.p else -a

    def inv(self, a):
        if not a:
            raise ZeroDivisionError("inverse of zero")
        if self.kind == "PrimeField":
            return pow(a, -1, self.p)
        if self.kind == "Rationals":
            return 1 / Fraction(a)
        if a in (1, -1):
            return a
        raise UnsupportedRingError(f"{a} is not a unit in Z")

    def sign(self, e: int):
        """The scalar (-1)^e."""
        if e % 2 == 0:
            return self.one()
        return self.canon(-1)

    def is_unit(self, a) -> bool:
        if not a:
            return False
        return self.is_field or a in (1, -1)

    # serialization ----------------------------------------------------
    def serialize_scalar(self, x) -> str:
        x = self.canon(x)
        if self.kind == "Rationals":
            return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
        return str(x)

    def parse_scalar(self, text: str):
        if self.kind == "Rationals":
            return Fraction(text)
        return self.canon(int(text))


Z = RingSpec.integers()
Q = RingSpec.rationals()
Z2 = RingSpec.prime_field(2)


# ---------------------------------------------------------------------------
# sparse vectors

def vec_add_into(ring: RingSpec, acc: Dict, vec: Dict, coeff=1) -> Dict:
    """acc += coeff * vec, in place; returns acc."""
    if not coeff:
        return acc
    p = ring.p
    for k, v in vec.items():
        w = acc.get(k, 0) + coeff * v
        if p:
            w %= p
        if w:
            acc[k] = w
        else:
            acc.pop(k, None)
    return acc


def vec_add_term(ring: RingSpec, acc: Dict, key, coeff) -> None:
    w = acc.get(key, 0) + coeff
    if ring.p:
        w %= ring.p
    if w:
        acc[key] = w
    else:
        acc.pop(key, None)


def vec_canon(ring: RingSpec, vec: Dict) -> Dict:
    out = {}
    for k, v in vec.items():
        c = ring.canon(v)
        if c:
            out[k] = c
    return out


def vec_scale(ring: RingSpec, vec: Dict, coeff) -> Dict:
    if not coeff:
        return {}
    out = {}
    for k, v in vec.items():
        w = v * coeff
        if ring.p:
            w %= ring.p
        if w:
            out[k] = w
    return out


# ---------------------------------------------------------------------------
# matrices

@dataclass
class SparseMatrix:
    """A rows x cols matrix stored as ``{(row, col): nonzero scalar}``."""

    rows: int
    cols: int
    entries: Dict[Tuple[int, int], object] = field(default_factory=dict)

    @staticmethod
    def from_triples(rows: int, cols: int, triples: Iterable, ring: RingSpec) -> "SparseMatrix":
        ent: Dict[Tuple[int, int], object] = {}
        for r, c, v in triples:
            if not (0 <= r < rows and 0 <= c < cols):
                raise DimensionError(f"entry ({r},{c}) outside {rows}x{cols}")
            if (r, c) in ent:
                raise ValueError(f"duplicate entry at ({r},{c})")
            v = ring.canon(v)
            if v:
                ent[(r, c)] = v
        return SparseMatrix(rows, cols, ent)

    @staticmethod
    def from_dense(rows: Sequence[Sequence], ring: RingSpec) -> "SparseMatrix":
        nr = len(rows)
        nc = len(rows[0]) if nr else 0
        return SparseMatrix.from_triples(
            nr, nc, [(i, j, v) for i, row in enumerate(rows) for j, v in enumerate(row)], ring)

    @staticmethod
    def from_columns(rows: int, columns: Sequence[Dict[int, object]]) -> "SparseMatrix":
        ent = {}
        for j, col in enumerate(columns):
            for i, v in col.items():
                if v:
                    ent[(i, j)] = v
        return SparseMatrix(rows, len(columns), ent)

    @staticmethod
    def zero(rows: int, cols: int) -> "SparseMatrix":
        return SparseMatrix(rows, cols, {})

    @staticmethod
    def identity(n: int, ring: RingSpec) -> "SparseMatrix":
        return SparseMatrix(n, n, {(i, i): ring.one() for i in range(n)})

    def triples(self) -> List[Tuple[int, int, object]]:
        return sorted((r, c, v) for (r, c), v in self.entries.items())

    def to_dense(self, ring: RingSpec) -> List[List]:
        out = [[ring.zero() for _ in range(self.cols)] for _ in range(self.rows)]
        for (r, c), v in self.entries.items():
            out[r][c] = v
        return out

    def is_zero(self) -> bool:
        return not self.entries

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix(self.cols, self.rows, {(c, r): v for (r, c), v in self.entries.items()})

    def row_dicts(self) -> List[Dict[int, object]]:
        rows: List[Dict[int, object]] = [dict() for _ in range(self.rows)]
        for (r, c), v in self.entries.items():
            rows[r][c] = v
        return rows

    def col_dicts(self) -> List[Dict[int, object]]:
        cols: List[Dict[int, object]] = [dict() for _ in range(self.cols)]
        for (r, c), v in self.entries.items():
            cols[c][r] = v
        return cols

    def matmul(self, other: "SparseMatrix", ring: RingSpec) -> "SparseMatrix":
        if self.cols != other.rows:
            raise DimensionError(f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
        orows = other.row_dicts()
        acc: Dict[Tuple[int, int], object] = {}
        for (r, k), v in self.entries.items():
            for c, w in orows[k].items():
                vec_add_term(ring, acc, (r, c), v * w)
        return SparseMatrix(self.rows, other.cols, acc)

    def add(self, other: "SparseMatrix", ring: RingSpec, coeff=1) -> "SparseMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise DimensionError("shape mismatch in addition")
        acc = dict(self.entries)
        vec_add_into(ring, acc, other.entries, coeff)
        return SparseMatrix(self.rows, self.cols, acc)

    def scale(self, coeff, ring: RingSpec) -> "SparseMatrix":
        return SparseMatrix(self.rows, self.cols, vec_scale(ring, self.entries, coeff))

    def apply(self, vec: Dict[int, object], ring: RingSpec) -> Dict[int, object]:
        """Matrix times a sparse column vector ``{col: value}``."""
        cols = self.col_dicts()
        out: Dict[int, object] = {}
        for j, v in vec.items():
            vec_add_into(ring, out, cols[j], v)
        return out

    def same_as(self, other: "SparseMatrix") -> bool:
        return (self.rows, self.cols) == (other.rows, other.cols) and self.entries == other.entries

    def det(self, ring: RingSpec):
        """Exact determinant of a square matrix (fraction arithmetic)."""
        if self.rows != self.cols:
            raise DimensionError("determinant of a non-square matrix")
        n = self.rows
        a = [[Fraction(x) for x in row] for row in self.to_dense(ring)]
        d = Fraction(1)
        for i in range(n):
            piv = next((r for r in range(i, n) if a[r][i] != 0), None)
            if piv is None:
                return ring.canon(0)
            if piv != i:
                a[i], a[piv] = a[piv], a[i]
                d = -d
            d *= a[i][i]
            for r in range(i + 1, n):
                if a[r][i]:
                    f = a[r][i] / a[i][i]
                    a[r] = [x - f * y for x, y in zip(a[r], a[i])]
        return ring.canon(d)


# ---------------------------------------------------------------------------
# elimination over a field

def _field_echelon(rows: List[Dict[int, object]], ring: RingSpec, track: bool = False):
    """Gaussian elimination on row dicts.

    Returns ``(pivots, reduced, combos)`` where ``pivots`` maps pivot column
    to the index of the row in ``reduced``; when ``track`` is set,
    ``combos[i]`` expresses reduced row i as a combination of input rows.
    Zero rows are reported in ``null`` as combinations (left null vectors).
    """
    pivot_rows: Dict[int, Dict[int, object]] = {}
    pivot_combo: Dict[int, Dict[int, object]] = {}
    null_combos: List[Dict[int, object]] = []
    for idx, row in enumerate(rows):
        r = dict(row)
        combo = {idx: ring.one()} if track else None
        while r:
            col = min(r)
            if col in pivot_rows:
                f = r[col]
                vec_add_into(ring, r, pivot_rows[col], ring.neg(f))
                if track:
                    vec_add_into(ring, combo, pivot_combo[col], ring.neg(f))
            else:
                inv = ring.inv(r[col])
                r = vec_scale(ring, r, inv)
                pivot_rows[col] = r
                if track:
                    pivot_combo[col] = vec_scale(ring, combo, inv)
                break
        else:
            if track:
                null_combos.append(combo)
    return pivot_rows, pivot_combo, null_combos


def _rank_field(A: SparseMatrix, ring: RingSpec) -> int:
    # eliminate along the shorter side, choosing sparse pivots first
    rows = A.row_dicts() if A.rows <= A.cols else A.col_dicts()
    rows = [r for r in rows if r]
    rows.sort(key=len)
    piv, _, _ = _field_echelon(rows, ring)
    return len(piv)


def rank(A: SparseMatrix, ring: RingSpec) -> int:
    """Rank over a field; over Z this is the rank over Q."""
    if not A.entries:
        return 0
    if ring.kind == "Integers":
        return _rank_field(SparseMatrix(A.rows, A.cols, {k: Fraction(v) for k, v in A.entries.items()}), Q)
    return _rank_field(A, ring)


# ---------------------------------------------------------------------------
# Smith normal form

def smith_normal_form(A: SparseMatrix, ring: RingSpec = Z, transforms: bool = True):
    """Smith normal form over Z.

    Returns ``(factors, U, V)`` with ``U * A * V = D`` where ``D`` is the
    rectangular diagonal matrix carrying ``factors`` (length ``min(rows,
    cols)``, nonnegative, each dividing the next, zeros last).  Pivots are
    chosen with minimal absolute value, fewest entries breaking ties.  With
    ``transforms=False`` the transforms are returned as ``None``.
    """
    if ring.kind != "Integers":
        raise UnsupportedRingError("Smith normal form is only implemented over Z")
    m, n = A.rows, A.cols
    rows: List[Dict[int, int]] = [dict() for _ in range(m)]
    cols: List[Dict[int, int]] = [dict() for _ in range(n)]
    for (r, c), v in A.entries.items():
        rows[r][c] = v
        cols[c][r] = v
    # U stored by rows, V stored by columns (column ops on V = row ops on V^T)
    U = [{i: 1} for i in range(m)] if transforms else None
    Vt = [{j: 1} for j in range(n)] if transforms else None

    def set_entry(r, c, v):
        if v:
            rows[r][c] = v
            cols[c][r] = v
        else:
            rows[r].pop(c, None)
            cols[c].pop(r, None)

    def row_axpy(dst, src, f):
        # row[dst] += f * row[src]
        for c, v in list(rows[src].items()):
            set_entry(dst, c, rows[dst].get(c, 0) + f * v)
        if transforms:
            vec_add_into(Z, U[dst], U[src], f)

    def col_axpy(dst, src, f):
        for r, v in list(cols[src].items()):
            set_entry(r, dst, rows[r].get(dst, 0) + f * v)
        if transforms:
            vec_add_into(Z, Vt[dst], Vt[src], f)

    def swap_rows(a, b):
        if a == b:
            return
        ra, rb = rows[a], rows[b]
        for c in ra:
            del cols[c][a]
        for c in rb:
            del cols[c][b]
        rows[a], rows[b] = rb, ra
        for c, v in rows[a].items():
            cols[c][a] = v
        for c, v in rows[b].items():
            cols[c][b] = v
        if transforms:
            U[a], U[b] = U[b], U[a]

    def swap_cols(a, b):
        if a == b:
            return
        ca, cb = cols[a], cols[b]
        for r in ca:
            del rows[r][a]
        for r in cb:
            del rows[r][b]
        cols[a], cols[b] = cb, ca
        for r, v in cols[a].items():
            rows[r][a] = v
        for r, v in cols[b].items():
            rows[r][b] = v
        if transforms:
            Vt[a], Vt[b] = Vt[b], Vt[a]

    def negate_row(r):
        for c, v in list(rows[r].items()):
            set_entry(r, c, -v)
        if transforms:
            U[r] = {k: -v for k, v in U[r].items()}

    diag: List[int] = []
    t = 0
    while t < min(m, n):
        # choose pivot of minimal |value| in the remaining block
        best = None
        for r in range(t, m):
            for c, v in rows[r].items():
                if c < t:
                    continue
                key = (abs(v), len(rows[r]) + len(cols[c]))
                if best is None or key < best[0]:
                    best = (key, r, c)
                    if key[0] == 1 and key[1] <= 2:
                        break
            if best is not None and best[0] == (1, 2):
                break
        if best is None:
            break
        _, pr, pc = best
        swap_rows(t, pr)
        swap_cols(t, pc)
        while True:
            piv = rows[t][t]
            done = True
            # clear column t
            for r in [r for r in cols[t] if r != t]:
                v = rows[r][t]
                q = v // piv
                row_axpy(r, t, -q)
                if rows[r].get(t):
                    done = False
            # clear row t
            for c in [c for c in rows[t] if c != t]:
                v = rows[t][c]
                q = v // piv
                col_axpy(c, t, -q)
                if rows[t].get(c):
                    done = False
            if done:
                break
            # a smaller remainder exists in row/column t: move it to the pivot
            cand = None
            for r in cols[t]:
                if r != t and (cand is None or abs(rows[r][t]) < cand[0]):
                    cand = (abs(rows[r][t]), "r", r)
            for c in rows[t]:
                if c != t and (cand is None or abs(rows[t][c]) < cand[0]):
                    cand = (abs(rows[t][c]), "c", c)
            if cand[1] == "r":
                swap_rows(t, cand[2])
            else:
                swap_cols(t, cand[2])
        if rows[t][t] < 0:
            negate_row(t)
        diag.append(rows[t][t])
        t += 1

    # enforce the divisibility chain on the diagonal
    k = len(diag)
    changed = True
    while changed:
        changed = False
        for i in range(k):
            for j in range(i + 1, k):
                a, b = diag[i], diag[j]
                if a == 0 or b % a == 0:
                    continue
                # replace (a, b) by (g, lcm) via unimodular operations
                g = gcd(a, b)
                x, y = _bezout(a, b)  # x*a + y*b = g
                if transforms:
                    # rows: [x y; -b/g a/g], cols: [1 -y*b/g; 1 x*a/g]
                    Ui, Uj = U[i], U[j]
                    newi = {}
                    vec_add_into(Z, newi, Ui, x)
                    vec_add_into(Z, newi, Uj, y)
                    newj = {}
                    vec_add_into(Z, newj, Ui, -(b // g))
                    vec_add_into(Z, newj, Uj, a // g)
                    U[i], U[j] = newi, newj
                    Vi, Vj = Vt[i], Vt[j]
                    nvi = {}
                    vec_add_into(Z, nvi, Vi, 1)
                    vec_add_into(Z, nvi, Vj, 1)
                    nvj = {}
                    vec_add_into(Z, nvj, Vi, -y * (b // g))
                    vec_add_into(Z, nvj, Vj, x * (a // g))
                    Vt[i], Vt[j] = nvi, nvj
                diag[i], diag[j] = g, a // g * b
                changed = True
    factors = tuple(diag) + (0,) * (min(m, n) - k)
    if not transforms:
        return factors, None, None
    Um = SparseMatrix(m, m, {(i, c): v for i, row in enumerate(U) for c, v in row.items()})
    Vm = SparseMatrix(n, n, {(r, j): v for j, col in enumerate(Vt) for r, v in col.items()})
    return factors, Um, Vm


def _bezout(a: int, b: int) -> Tuple[int, int]:
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        x0, y0 = -x0, -y0
    return x0, y0


def diagonal_matrix(factors: Sequence[int], rows: int, cols: int) -> SparseMatrix:
    return SparseMatrix(rows, cols, {(i, i): d for i, d in enumerate(factors) if d})


# ---------------------------------------------------------------------------
# linear systems

@dataclass
class Infeasible:
    """No solution exists.

    ``certificate`` is a left vector y with y*A = 0 and y*b != 0 when one
    exists over the ring (always over a field).  Over Z a system may be
    rationally solvable but not integrally; then ``certificate`` is None and
    ``reason`` names the failing divisibility.
    """

    certificate: Optional[List]
    reason: str = ""

    def verify(self, A: SparseMatrix, b: Sequence, ring: RingSpec) -> bool:
        if self.certificate is None:
            return False
        y = self.certificate
        yA = [ring.zero()] * A.cols
        for (r, c), v in A.entries.items():
            yA[c] = ring.add(yA[c], ring.mul(y[r], v))
        yb = ring.zero()
        for r in range(A.rows):
            yb = ring.add(yb, ring.mul(y[r], ring.canon(b[r])))
        return all(not x for x in yA) and bool(yb)


def solve_linear(A: SparseMatrix, b: Sequence, ring: RingSpec):
    """Solve A x = b.  Returns a list ``x`` or an :class:`Infeasible`.

    Over a field the returned solution sets every free variable to zero, so
    it is the least solution in the fixed basis order.
    """
    if len(b) != A.rows:
        raise DimensionError(f"right-hand side has length {len(b)}, expected {A.rows}")
    b = [ring.canon(v) for v in b]
    if ring.is_field:
        return _solve_field(A, b, ring)
    return _solve_integers(A, b)


def _solve_field(A: SparseMatrix, b: List, ring: RingSpec):
    # eliminate rows of [A | b]; track combinations to produce a certificate
    rows = A.row_dicts()
    aug = []
    for i, r in enumerate(rows):
        rr = dict(r)
        if b[i]:
            rr[A.cols] = b[i]
        aug.append(rr)
    piv, combos, _ = _field_echelon(aug, ring, track=True)
    if A.cols in piv:
        return Infeasible(certificate=_dense_vec(combos[A.cols], A.rows, ring),
                          reason="right-hand side outside the column space")
    # back substitution: pivot rows are normalized and upper triangular in col order
    x = [ring.zero()] * A.cols
    for col in sorted(piv, reverse=True):
        row = piv[col]
        val = row.get(A.cols, 0)
        for c, v in row.items():
            if c != col and c != A.cols:
                val = ring.sub(val, ring.mul(v, x[c]))
        x[col] = ring.canon(val)
    return x


def _dense_vec(d: Dict[int, object], n: int, ring: RingSpec) -> List:
    out = [ring.zero()] * n
    for k, v in d.items():
        out[k] = v
    return out


def _solve_integers(A: SparseMatrix, b: List[int]):
    factors, U, V = smith_normal_form(A, Z, transforms=True)
    Ub = [0] * A.rows
    for (r, c), v in U.entries.items():
        Ub[r] += v * b[c]
    y = [0] * A.cols
    for i in range(A.rows):
        d = factors[i] if i < len(factors) else 0
        if d == 0:
            if Ub[i] != 0:
                cert = [U.entries.get((i, c), 0) for c in range(A.rows)]
                return Infeasible(certificate=cert, reason="right-hand side outside the rational column space")
        else:
            if Ub[i] % d:
                return Infeasible(certificate=None,
                                  reason=f"divisibility fails: {Ub[i]} not divisible by invariant factor {d}")
            y[i] = Ub[i] // d
    x = [0] * A.cols
    for (r, c), v in V.entries.items():
        x[r] += v * y[c]
    return x


def nullspace_field(A: SparseMatrix, ring: RingSpec) -> List[Dict[int, object]]:
    """Basis of {x : A x = 0} over a field, as sparse vectors."""
    piv, _, _ = _field_echelon(A.row_dicts(), ring)
    # reduce to RREF
    pcols = sorted(piv)
    for col in reversed(pcols):
        for other in pcols:
            if other < col and piv[other].get(col):
                vec_add_into(ring, piv[other], piv[col], ring.neg(piv[other][col]))
    free = [c for c in range(A.cols) if c not in piv]
    basis = []
    for f in free:
        v = {f: ring.one()}
        for col in pcols:
            coeff = piv[col].get(f)
            if coeff:
                v[col] = ring.neg(coeff)
        basis.append(v)
    return basis
