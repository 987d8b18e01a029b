"""Pseudodifferential operators over the differential polynomial algebra.

A `PsiDO` is a finite collection of coefficients indexed by integer order,
plus a truncation tag: `floor=None` means every absent order is known to be
zero (an exact operator, e.g. a differential operator or a finite Laurent
form); `floor=k` means orders below k are unknown (a truncated expansion).
Operations propagate the weakest honest tag, so an "exact" result really is
exact.

The module also provides matrices of such operators, Neumann inversion,
the Dieudonne determinant over the fraction field (via Ore-Euclidean row
reduction), structured rational expressions kept unexpanded, a canonical
form for operators of the shape local + sum a d^-1 b with an exact equality
test, and the two kernel-triviality certificates used to justify
Lenard-Magri recursions for the Dirac-modified structures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .diffalg import DiffPoly, Mon, QZ

DEFAULT_FLOOR = -8


class UnsupportedError(ValueError):
    """Input is outside the supported fragment (truncated tails where exact
    ones are required, non-constant leading symbols, and so on)."""


def _gbinom(k: int, j: int) -> int:
    # generalized binomial C(k, j) for integer k (possibly negative), j >= 0
    num = 1
    for t in range(j):
        num *= k - t
    return num // math.factorial(j)


def _as_poly(x) -> DiffPoly:
    if isinstance(x, DiffPoly):
        return x
    return DiffPoly.const(x)


# --------------------------------------------------------------------------
# scalar operators
# --------------------------------------------------------------------------


class PsiDO:
    """Scalar pseudodifferential operator with truncation tracking."""

    __slots__ = ("c", "floor")

    def __init__(self, c: dict[int, DiffPoly] | None = None, floor: int | None = None):
        cc = {}
        for k, v in (c or {}).items():
            if v and (floor is None or k >= floor):
                cc[k] = v
        self.c = cc
        self.floor = floor

    # ---- constructors

    @staticmethod
    def zero(floor: int | None = None) -> "PsiDO":
        return PsiDO({}, floor)

    @staticmethod
    def of(f) -> "PsiDO":
        f = _as_poly(f)
        return PsiDO({0: f} if f else {})

    @staticmethod
    def d(order: int = 1) -> "PsiDO":
        return PsiDO({order: DiffPoly.one()})

    @staticmethod
    def from_dict(c: dict[int, DiffPoly], floor: int | None = None) -> "PsiDO":
        return PsiDO({k: _as_poly(v) for k, v in c.items()}, floor)

    # ---- views

    @property
    def exact(self) -> bool:
        return self.floor is None

    def order(self) -> int | None:
        return max(self.c) if self.c else None

    def min_order(self) -> int | None:
        return min(self.c) if self.c else None

    def coeff(self, k: int) -> DiffPoly:
        if self.floor is not None and k < self.floor:
            raise ValueError(f"order {k} is below the truncation floor {self.floor}")
        return self.c.get(k, DiffPoly.zero())

    def items(self):
        return self.c.items()

    def is_negligible(self) -> bool:
        """No known-nonzero coefficient (exactly zero when the tag is exact)."""
        return not self.c

    def is_zero(self) -> bool:
        return self.floor is None and not self.c

    def truncate(self, floor: int) -> "PsiDO":
        f = floor if self.floor is None else max(floor, self.floor)
        return PsiDO({k: v for k, v in self.c.items() if k >= f}, f)

    # ---- arithmetic

    def __add__(self, other) -> "PsiDO":
        if not isinstance(other, PsiDO):
            return NotImplemented
        if self.floor is None:
            f = other.floor
        elif other.floor is None:
            f = self.floor
        else:
            f = max(self.floor, other.floor)
        c = dict(self.c)
        for k, v in other.c.items():
            s = c.get(k, DiffPoly.zero()) + v
            if s:
                c[k] = s
            elif k in c:
                del c[k]
        return PsiDO(c, f)

    def __neg__(self) -> "PsiDO":
        return PsiDO({k: -v for k, v in self.c.items()}, self.floor)

    def __sub__(self, other) -> "PsiDO":
        return self + (-other)

    def __mul__(self, other) -> "PsiDO":
        if not isinstance(other, PsiDO):
            return NotImplemented
        return compose(self, other)

    def scale(self, s) -> "PsiDO":
        s = s if isinstance(s, QZ) else QZ.of(s)
        if not s:
            return PsiDO.zero(self.floor)
        return PsiDO({k: v.scale(s) for k, v in self.c.items()}, self.floor)

    def lmul_poly(self, f: DiffPoly) -> "PsiDO":
        # left multiplication by a function commutes with nothing but is
        # order-preserving, so the floor is unchanged
        if not f:
            return PsiDO.zero(self.floor)
        return PsiDO({k: f * v for k, v in self.c.items()}, self.floor)

    def adjoint(self, floor: int | None = None) -> "PsiDO":
        cand = []
        if self.floor is not None:
            cand.append(self.floor)
        if any(k < 0 and not v.is_constant() for k, v in self.c.items()):
            cand.append(floor if floor is not None else DEFAULT_FLOOR)
        rf = max(cand) if cand else None
        out: dict[int, DiffPoly] = {}
        for k, v in self.c.items():
            sign = 1 if k % 2 == 0 else -1
            dk = v
            j = 0
            while True:
                o = k - j
                if rf is not None and o < rf:
                    break
                if dk.is_zero():
                    break
                term = dk.scale(Fraction(sign * _gbinom(k, j)))
                if term:
                    s = out.get(o, DiffPoly.zero()) + term
                    if s:
                        out[o] = s
                    elif o in out:
                        del out[o]
                if k >= 0 and j == k:
                    break
                dk = dk.d()
                j += 1
        return PsiDO(out, rf)

    def apply(self, f: DiffPoly) -> DiffPoly:
        """Apply to a differential polynomial; requires an exact differential
        operator (all orders nonnegative)."""
        if self.floor is not None or (self.c and min(self.c) < 0):
            raise ValueError("only exact differential operators can be applied")
        out = DiffPoly.zero()
        if not self.c:
            return out
        top = max(self.c)
        dk = f
        for n in range(top + 1):
            v = self.c.get(n)
            if v is not None:
                out = out + v * dk
            if n < top:
                dk = dk.d()
        return out

    # ---- comparisons

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PsiDO) and self.c == other.c and self.floor == other.floor
        )

    def __hash__(self):
        return hash((frozenset(self.c.items()), self.floor))

    def agrees_with(self, other: "PsiDO") -> bool:
        """Equality on the common reliable range of orders."""
        if self.floor is None and other.floor is None:
            return self.c == other.c
        lo = max(f for f in (self.floor, other.floor) if f is not None)
        keys = {k for k in self.c if k >= lo} | {k for k in other.c if k >= lo}
        return all(
            self.c.get(k, DiffPoly.zero()) == other.c.get(k, DiffPoly.zero())
            for k in keys
        )

    def __repr__(self):
        if not self.c:
            body = "0"
        else:
            body = " + ".join(
                f"({v!r})d^{k}" if k else f"({v!r})" for k, v in sorted(self.c.items(), reverse=True)
            )
        tail = "" if self.floor is None else f" + O(d^{self.floor - 1})"
        return body + tail


def compose(A: PsiDO, B: PsiDO, floor: int | None = None) -> PsiDO:
    """Composition A o B with the rule d^n o f = sum_j C(n,j) f^(j) d^(n-j).

    Exact when both inputs are exact and every negative-order coefficient of
    A meets only constant coefficients of B; otherwise truncated at the
    tightest floor justified by the inputs (or at `floor` if requested)."""
    cand = []
    topA = max(A.c) if A.c else None
    topB = max(B.c) if B.c else None
    if A.floor is not None and topB is not None:
        cand.append(A.floor + topB)
    if B.floor is not None and topA is not None:
        cand.append(B.floor + topA)
    if A.floor is not None and B.floor is not None:
        cand.append(A.floor + B.floor - 1)
    if any(k < 0 for k in A.c) and any(not v.is_constant() for v in B.c.values()):
        nonterm = any(
            ka < 0 and not vb.is_constant()
            for ka in A.c
            for vb in B.c.values()
        )
        if nonterm:
            cand.append(floor if floor is not None else DEFAULT_FLOOR)
    rf = max(cand) if cand else None
    out: dict[int, DiffPoly] = {}

    def put(o: int, term: DiffPoly):
        if not term:
            return
        s = out.get(o, DiffPoly.zero()) + term
        if s:
            out[o] = s
        elif o in out:
            del out[o]

    for kb, vb in B.c.items():
        dk = vb
        j = 0
        while True:
            o_min_reached = True
            for ka, va in A.c.items():
                o = ka + kb - j
                if rf is not None and o < rf:
                    continue
                if ka >= 0 and j > ka:
                    continue
                o_min_reached = False
                put(o, va * dk.scale(Fraction(_gbinom(ka, j))))
            if o_min_reached or dk.is_zero():
                break
            nxt_needed = any(
                (ka < 0 or j + 1 <= ka)
                and (rf is None or ka + kb - j - 1 >= rf)
                for ka in A.c
            )
            if not nxt_needed:
                break
            dk = dk.d()
            j += 1
    res = PsiDO(out, rf)
    if floor is not None:
        res = res.truncate(floor)
    return res


# --------------------------------------------------------------------------
# matrices
# --------------------------------------------------------------------------


class MatPsiDO:
    """Rectangular matrix of PsiDO."""

    __slots__ = ("rows", "cols", "m")

    def __init__(self, entries: Sequence[Sequence[PsiDO]]):
        self.rows = len(entries)
        self.cols = len(entries[0]) if self.rows else 0
        for row in entries:
            if len(row) != self.cols:
                raise ValueError("ragged matrix")
        self.m = tuple(tuple(row) for row in entries)

    @staticmethod
    def of(entries) -> "MatPsiDO":
        return MatPsiDO(
            [
                [e if isinstance(e, PsiDO) else PsiDO.of(e) for e in row]
                for row in entries
            ]
        )

    @staticmethod
    def zero(rows: int, cols: int) -> "MatPsiDO":
        return MatPsiDO([[PsiDO.zero() for _ in range(cols)] for _ in range(rows)])

    @staticmethod
    def identity(n: int) -> "MatPsiDO":
        return MatPsiDO(
            [[PsiDO.of(1 if i == j else 0) for j in range(n)] for i in range(n)]
        )

    @staticmethod
    def from_dop_table(table) -> "MatPsiDO":
        # bridge from diffalg.frechet output
        return MatPsiDO(
            [[PsiDO.from_dict(e) for e in row] for row in table]
        )

    def entry(self, i: int, j: int) -> PsiDO:
        return self.m[i][j]

    def __add__(self, other: "MatPsiDO") -> "MatPsiDO":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")
        return MatPsiDO(
            [
                [self.m[i][j] + other.m[i][j] for j in range(self.cols)]
                for i in range(self.rows)
            ]
        )

    def __sub__(self, other: "MatPsiDO") -> "MatPsiDO":
        return self + other.scale(Fraction(-1))

    def scale(self, s) -> "MatPsiDO":
        return MatPsiDO([[e.scale(s) for e in row] for row in self.m])

    def __matmul__(self, other: "MatPsiDO") -> "MatPsiDO":
        return self.compose(other)

    def compose(self, other: "MatPsiDO", floor: int | None = None) -> "MatPsiDO":
        if self.cols != other.rows:
            raise ValueError("shape mismatch in composition")
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = PsiDO.zero()
                for k in range(self.cols):
                    acc = acc + compose(self.m[i][k], other.m[k][j], floor=floor)
                row.append(acc)
            out.append(row)
        return MatPsiDO(out)

    def adjoint(self, floor: int | None = None) -> "MatPsiDO":
        return MatPsiDO(
            [
                [self.m[j][i].adjoint(floor=floor) for j in range(self.rows)]
                for i in range(self.cols)
            ]
        )

    def apply_cov(self, vec: Sequence[DiffPoly]) -> tuple[DiffPoly, ...]:
        if len(vec) != self.cols:
            raise ValueError("length mismatch")
        return tuple(
            sum(
                (self.m[i][j].apply(vec[j]) for j in range(self.cols)),
                DiffPoly.zero(),
            )
            for i in range(self.rows)
        )

    def truncate(self, floor: int) -> "MatPsiDO":
        return MatPsiDO([[e.truncate(floor) for e in row] for row in self.m])

    def order(self) -> int | None:
        orders = [e.order() for row in self.m for e in row if e.order() is not None]
        return max(orders) if orders else None

    def is_exact(self) -> bool:
        return all(e.floor is None for row in self.m for e in row)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MatPsiDO)
            and (self.rows, self.cols) == (other.rows, other.cols)
            and self.m == other.m
        )

    def __hash__(self):
        return hash(self.m)

    def agrees_with(self, other: "MatPsiDO") -> bool:
        return (
            (self.rows, self.cols) == (other.rows, other.cols)
            and all(
                self.m[i][j].agrees_with(other.m[i][j])
                for i in range(self.rows)
                for j in range(self.cols)
            )
        )

    def __repr__(self):
        return f"MatPsiDO({self.rows}x{self.cols})"


def adjoint(x, floor: int | None = None):
    """Formal adjoint of a scalar or matrix operator."""
    return x.adjoint(floor=floor)


# --------------------------------------------------------------------------
# fraction field helpers (for the Dieudonne determinant and rank checks)
# --------------------------------------------------------------------------


class KFrac:
    """Element of the fraction field of the differential algebra, as an
    unreduced pair num/den (no multivariate gcd; content is normalized)."""

    __slots__ = ("num", "den")

    def __init__(self, num: DiffPoly, den: DiffPoly | None = None):
        den = den if den is not None else DiffPoly.one()
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        if num.is_zero():
            den = DiffPoly.one()
        else:
            num, den = _strip_content(num, den)
        self.num = num
        self.den = den

    @staticmethod
    def of(x) -> "KFrac":
        if isinstance(x, KFrac):
            return x
        return KFrac(_as_poly(x))

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __add__(self, o: "KFrac") -> "KFrac":
        return KFrac(self.num * o.den + o.num * self.den, self.den * o.den)

    def __sub__(self, o: "KFrac") -> "KFrac":
        return KFrac(self.num * o.den - o.num * self.den, self.den * o.den)

    def __neg__(self) -> "KFrac":
        return KFrac(-self.num, self.den)

    def __mul__(self, o: "KFrac") -> "KFrac":
        return KFrac(self.num * o.num, self.den * o.den)

    def __truediv__(self, o: "KFrac") -> "KFrac":
        if o.is_zero():
            raise ZeroDivisionError("division by zero in the fraction field")
        return KFrac(self.num * o.den, self.den * o.num)

    def d(self) -> "KFrac":
        return KFrac(
            self.num.d() * self.den - self.num * self.den.d(), self.den * self.den
        )

    def __eq__(self, o) -> bool:
        if not isinstance(o, KFrac):
            o = KFrac.of(o)
        return self.num * o.den == o.num * self.den

    def __hash__(self):
        raise TypeError("unhashable")

    def __repr__(self):
        if self.den == DiffPoly.one():
            return repr(self.num)
        return f"({self.num!r})/({self.den!r})"


def _strip_content(num: DiffPoly, den: DiffPoly) -> tuple[DiffPoly, DiffPoly]:
    # divide both by the gcd of all rational coefficients appearing
    fracs = [
        c
        for p in (num, den)
        for _, q in p.terms()
        for c in q.c
        if c
    ]
    if not fracs:
        return num, den
    g = Fraction(0)
    lcm_den = 1
    for f in fracs:
        lcm_den = lcm_den * f.denominator // math.gcd(lcm_den, f.denominator)
    gn = 0
    for f in fracs:
        gn = math.gcd(gn, abs(f.numerator * (lcm_den // f.denominator)))
    g = Fraction(gn, lcm_den)
    if g in (0, 1):
        return num, den
    inv = 1 / g
    return num.scale(inv), den.scale(inv)


def _krank(rows: list[list[DiffPoly]], ncols: int) -> int:
    """Rank over the fraction field (exact Gaussian elimination)."""
    work = [[KFrac(e) for e in row] for row in rows]
    rank = 0
    row_at = 0
    for col in range(ncols):
        piv = None
        for r in range(row_at, len(work)):
            if not work[r][col].is_zero():
                piv = r
                break
        if piv is None:
            continue
        work[row_at], work[piv] = work[piv], work[row_at]
        pivot = work[row_at][col]
        for r in range(len(work)):
            if r == row_at or work[r][col].is_zero():
                continue
            factor = work[r][col] / pivot
            work[r] = [
                work[r][j] - factor * work[row_at][j] for j in range(ncols)
            ]
        row_at += 1
        rank += 1
    return rank


def _qrank(rows: list[list[Fraction]], ncols: int) -> int:
    work = [list(r) for r in rows]
    rank = 0
    row_at = 0
    for col in range(ncols):
        piv = None
        for r in range(row_at, len(work)):
            if work[r][col]:
                piv = r
                break
        if piv is None:
            continue
        work[row_at], work[piv] = work[piv], work[row_at]
        pivot = work[row_at][col]
        for r in range(len(work)):
            if r == row_at or not work[r][col]:
                continue
            f = work[r][col] / pivot
            work[r] = [work[r][j] - f * work[row_at][j] for j in range(ncols)]
        row_at += 1
        rank += 1
    return rank


def _qinv(G: list[list[Fraction]]) -> list[list[Fraction]] | None:
    n = len(G)
    work = [list(G[i]) + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if work[r][col]), None)
        if piv is None:
            return None
        work[col], work[piv] = work[piv], work[col]
        pv = work[col][col]
        work[col] = [x / pv for x in work[col]]
        for r in range(n):
            if r != col and work[r][col]:
                f = work[r][col]
                work[r] = [x - f * y for x, y in zip(work[r], work[col])]
    return [row[n:] for row in work]


# --------------------------------------------------------------------------
# Neumann inversion
# --------------------------------------------------------------------------


def neumann_invert(C: MatPsiDO, floor: int) -> MatPsiDO:
    """Inverse of a square differential-operator matrix whose leading
    coefficient matrix is constant and invertible: C = G d^t + lower.

    Exact when C = G d^t on the nose; otherwise a geometric series truncated
    at `floor`, verified by composing back to the identity."""
    n = C.rows
    if n != C.cols:
        raise ValueError("inversion needs a square matrix")
    if not C.is_exact():
        raise UnsupportedError("cannot invert a truncated operator")
    t = C.order()
    if t is None:
        raise UnsupportedError("leading symbol not invertible (zero matrix)")
    if any(e.c and min(e.c) < 0 for row in C.m for e in row):
        raise UnsupportedError("inversion supports differential operators only")
    G: list[list[Fraction]] = []
    for i in range(n):
        grow = []
        for j in range(n):
            c = C.m[i][j].c.get(t, DiffPoly.zero())
            if not c.is_constant():
                raise UnsupportedError("leading symbol not invertible (non-constant)")
            q = c.const_part()
            if q.degree() > 0:
                raise UnsupportedError("leading symbol not invertible (z-dependent)")
            grow.append(q.coeff(0))
        G.append(grow)
    Ginv = _qinv(G)
    if Ginv is None:
        raise UnsupportedError("leading symbol not invertible (singular)")
    top_inv = MatPsiDO.of(
        [[PsiDO.d(-t).scale(Ginv[i][j]) for j in range(n)] for i in range(n)]
    )
    R = C - MatPsiDO.of(
        [[PsiDO.d(t).scale(G[i][j]) for j in range(n)] for i in range(n)]
    )
    if all(e.is_zero() for row in R.m for e in row):
        return top_inv
    T = (top_inv.compose(R, floor=floor)).scale(Fraction(-1))
    total = top_inv
    acc = top_inv
    while True:
        acc = T.compose(acc, floor=floor)
        o = acc.order()
        if o is None or o < floor:
            break
        total = total + acc
    check = C.compose(total, floor=floor + max(t, 0))
    for i in range(n):
        for j in range(n):
            e = check.entry(i, j) - (PsiDO.of(1) if i == j else PsiDO.zero())
            if not e.is_negligible():
                raise RuntimeError("Neumann inversion failed to verify")
    return total


# --------------------------------------------------------------------------
# Dieudonne determinant
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DieudonneDet:
    num: DiffPoly
    den: DiffPoly
    degree: int
    degenerate: bool

    def det1_equals(self, f) -> bool:
        f = _as_poly(f)
        return self.num == f * self.den


def _ore_single(c: KFrac, k: int, entry: dict[int, KFrac]) -> dict[int, KFrac]:
    # (c d^k) o entry for k >= 0
    out: dict[int, KFrac] = {}
    for m, p in entry.items():
        dp = p
        for j in range(k + 1):
            coef = _gbinom(k, j)
            if coef:
                term = c * dp
                if coef != 1:
                    term = term * KFrac.of(Fraction(coef))
                o = k + m - j
                s = out.get(o)
                s = term if s is None else s + term
                if s.is_zero():
                    out.pop(o, None)
                else:
                    out[o] = s
            if j < k:
                dp = dp.d()
    return out


def dieudonne_det(A: MatPsiDO) -> DieudonneDet:
    """Dieudonne determinant (det1, deg) by Ore-Euclidean row reduction.

    Supported for matrices with known-zero tails (exact operators); raises
    UnsupportedError on truncated entries.  Degenerate matrices are reported
    with the degenerate flag and det1 = 0."""
    n = A.rows
    if n != A.cols:
        raise ValueError("determinant needs a square matrix")
    if not A.is_exact():
        raise UnsupportedError("Dieudonne determinant needs known-zero tails")
    work: list[dict[int, dict]] = []
    rows: list[list[dict[int, KFrac]]] = []
    deg_shift = 0
    for i in range(n):
        row = [
            {k: KFrac(v) for k, v in A.m[i][j].c.items()} for j in range(n)
        ]
        mins = [min(e) for e in row if e]
        m = min(mins) if mins else 0
        if m < 0:
            row = [_ore_single(KFrac.of(1), -m, e) for e in row]
            deg_shift += m
        rows.append(row)

    det1 = KFrac.of(1)
    for col in range(n):
        active = [r for r in range(col, n) if rows[r][col]]
        if not active:
            return DieudonneDet(DiffPoly.zero(), DiffPoly.one(), 0, True)
        while len(active) > 1:
            by_ord = sorted(active, key=lambda r: max(rows[r][col]))
            r_lo, r_hi = by_ord[0], by_ord[-1]
            if r_lo == r_hi:
                r_hi = by_ord[-2] if by_ord[-2] != r_lo else by_ord[-1]
            d_lo = max(rows[r_lo][col])
            d_hi = max(rows[r_hi][col])
            c = rows[r_hi][col][d_hi] / rows[r_lo][col][d_lo]
            k = d_hi - d_lo
            new_row = []
            for j in range(n):
                sub = _ore_single(c, k, rows[r_lo][j])
                e = dict(rows[r_hi][j])
                for o, v in sub.items():
                    s = e.get(o)
                    s = -v if s is None else s - v
                    if s.is_zero():
                        e.pop(o, None)
                    else:
                        e[o] = s
                new_row.append(e)
            rows[r_hi] = new_row
            active = [r for r in active if rows[r][col]]
            if not active:
                return DieudonneDet(DiffPoly.zero(), DiffPoly.one(), 0, True)
        piv = active[0]
        if piv != col:
            rows[piv], rows[col] = rows[col], rows[piv]
            det1 = -det1
    deg = deg_shift
    for i in range(n):
        e = rows[i][i]
        d = max(e)
        deg += d
        det1 = det1 * e[d]
    return DieudonneDet(det1.num, det1.den, deg, False)


# --------------------------------------------------------------------------
# structured rational expressions
# --------------------------------------------------------------------------


class RationalExpr:
    """Sum of alternating products of matrices and inverses of matrices,
    kept unexpanded.  Factors are ('op', M) or ('inv', M) with M square for
    inverses."""

    __slots__ = ("summands",)

    def __init__(self, summands):
        self.summands = tuple(tuple(chain) for chain in summands)
        shape = None
        for chain in self.summands:
            if not chain:
                raise ValueError("empty factor chain")
            cur = None
            for tag, M in chain:
                if tag == "inv" and M.rows != M.cols:
                    raise ValueError("inverse of a non-square matrix")
                if cur is not None and cur != M.rows:
                    raise ValueError("factor dimensions do not compose")
                cur = M.cols
            s = (chain[0][1].rows, chain[-1][1].cols)
            if shape is not None and s != shape:
                raise ValueError("summand shapes differ")
            shape = s

    @staticmethod
    def product(factors) -> "RationalExpr":
        chain = []
        for f in factors:
            if isinstance(f, MatPsiDO):
                chain.append(("op", f))
            else:
                tag, M = f
                if tag not in ("op", "inv"):
                    raise ValueError(f"unknown factor tag {tag!r}")
                chain.append((tag, M))
        return RationalExpr([chain])

    @staticmethod
    def of(M: MatPsiDO) -> "RationalExpr":
        return RationalExpr.product([M])

    @property
    def rows(self) -> int:
        return self.summands[0][0][1].rows

    @property
    def cols(self) -> int:
        return self.summands[0][-1][1].cols

    def __add__(self, other: "RationalExpr") -> "RationalExpr":
        return RationalExpr(list(self.summands) + list(other.summands))

    def adjoint(self) -> "RationalExpr":
        out = []
        for chain in self.summands:
            out.append(
                tuple((tag, M.adjoint()) for tag, M in reversed(chain))
            )
        return RationalExpr(out)

    def expand(self, floor: int) -> MatPsiDO:
        """Expanded truncated Laurent form, every entry floored at `floor`."""
        pad = 2 + sum(
            max(M.order() or 0, 0) for chain in self.summands for _, M in chain
        )
        for _ in range(4):
            wfloor = floor - pad
            total = None
            ok = True
            for chain in self.summands:
                cur = None
                for tag, M in chain:
                    piece = M if tag == "op" else neumann_invert(M, wfloor)
                    cur = piece if cur is None else cur.compose(piece, floor=wfloor)
                total = cur if total is None else total + cur
            for row in total.m:
                for e in row:
                    if e.floor is not None and e.floor > floor:
                        ok = False
            if ok:
                return total.truncate(floor)
            pad *= 2
        raise RuntimeError("rational expansion could not reach the requested floor")


def sdeg_bound(H: RationalExpr) -> int:
    """Upper bound for the singular degree: the sum of the Dieudonne degrees
    of all inverted factors."""
    total = 0
    for chain in H.summands:
        for tag, M in chain:
            if tag == "inv":
                det = dieudonne_det(M)
                if det.degenerate:
                    raise ValueError("degenerate denominator in rational expression")
                total += det.degree
    return total


# --------------------------------------------------------------------------
# canonical nonlocal forms: local + sum a d^-1 o b
# --------------------------------------------------------------------------


def _pair_tensor(pairs) -> dict[tuple[Mon, Mon], QZ]:
    t: dict[tuple[Mon, Mon], QZ] = {}
    for a, b in pairs:
        for ma, ca in a.terms():
            for mb, cb in b.terms():
                key = (ma, mb)
                s = t.get(key, QZ.zero()) + ca * cb
                if s:
                    t[key] = s
                elif key in t:
                    del t[key]
    return t


class NonlocalOp:
    """Operator of the canonical shape local + sum_i a_i d^-1 o b_i.

    Equality is exact: local parts compared directly, nonlocal parts
    compared as tensors sum a_i (x) b_i expanded in the monomial basis
    (faithful because the map to operators is injective when coefficients
    are differential polynomials)."""

    __slots__ = ("local", "pairs")

    def __init__(self, local: PsiDO, pairs=()):
        if local.floor is not None or (local.c and min(local.c) < 0):
            raise ValueError("local part must be an exact differential operator")
        self.local = local
        self.pairs = tuple(
            (_as_poly(a), _as_poly(b)) for a, b in pairs if _as_poly(a) and _as_poly(b)
        )

    @staticmethod
    def local_zero() -> "NonlocalOp":
        return NonlocalOp(PsiDO.zero())

    @staticmethod
    def of_local(x) -> "NonlocalOp":
        return NonlocalOp(x if isinstance(x, PsiDO) else PsiDO.of(x))

    def with_pairs(self, ps) -> "NonlocalOp":
        return NonlocalOp(self.local, self.pairs + tuple(ps))

    def tensor(self) -> dict[tuple[Mon, Mon], QZ]:
        return _pair_tensor(self.pairs)

    def is_local(self) -> bool:
        return not self.tensor()

    def __add__(self, other: "NonlocalOp") -> "NonlocalOp":
        return NonlocalOp(self.local + other.local, self.pairs + other.pairs)

    def __neg__(self) -> "NonlocalOp":
        return NonlocalOp(-self.local, tuple((-a, b) for a, b in self.pairs))

    def __sub__(self, other: "NonlocalOp") -> "NonlocalOp":
        return self + (-other)

    def adjoint(self) -> "NonlocalOp":
        return NonlocalOp(
            self.local.adjoint(), tuple((-b, a) for a, b in self.pairs)
        )

    def expand(self, floor: int) -> PsiDO:
        out = self.local.truncate(floor) if self.pairs else self.local
        for a, b in self.pairs:
            out = out + compose(
                compose(PsiDO.of(a), PsiDO.d(-1), floor=floor),
                PsiDO.of(b),
                floor=floor,
            )
        return out

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, NonlocalOp)
            and self.local == other.local
            and self.tensor() == other.tensor()
        )

    def __hash__(self):
        raise TypeError("unhashable")

    def __repr__(self):
        ps = " + ".join(f"({a!r})d^-1({b!r})" for a, b in self.pairs)
        return f"NonlocalOp({self.local!r}" + (f" + {ps})" if ps else ")")


class NonlocalMat:
    """Matrix of NonlocalOp entries with exact equality."""

    __slots__ = ("rows", "cols", "m")

    def __init__(self, entries: Sequence[Sequence[NonlocalOp]]):
        self.rows = len(entries)
        self.cols = len(entries[0]) if self.rows else 0
        self.m = tuple(tuple(row) for row in entries)

    @staticmethod
    def of(entries) -> "NonlocalMat":
        return NonlocalMat(entries)

    @staticmethod
    def from_structured(
        local: MatPsiDO,
        N: Sequence[Sequence[DiffPoly]],
        Ginv: Sequence[Sequence[Fraction]],
        M: Sequence[Sequence[DiffPoly]],
    ) -> "NonlocalMat":
        """local + N (G d)^-1 M with N of shape r x m, Ginv m x m, M m x c."""
        r, c = local.rows, local.cols
        m = len(Ginv)
        out = []
        for h in range(r):
            row = []
            for k in range(c):
                pairs = []
                for j in range(m):
                    a = N[h][j]
                    if not a:
                        continue
                    b = DiffPoly.zero()
                    for jp in range(m):
                        b = b + M[jp][k].scale(Ginv[j][jp])
                    if b:
                        pairs.append((a, b))
                row.append(NonlocalOp(local.entry(h, k), pairs))
            out.append(row)
        return NonlocalMat(out)

    def entry(self, i: int, j: int) -> NonlocalOp:
        return self.m[i][j]

    def local_mat(self) -> MatPsiDO:
        return MatPsiDO([[e.local for e in row] for row in self.m])

    def adjoint(self) -> "NonlocalMat":
        return NonlocalMat(
            [
                [self.m[j][i].adjoint() for j in range(self.rows)]
                for i in range(self.cols)
            ]
        )

    def __add__(self, other: "NonlocalMat") -> "NonlocalMat":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")
        return NonlocalMat(
            [
                [self.m[i][j] + other.m[i][j] for j in range(self.cols)]
                for i in range(self.rows)
            ]
        )

    def expand(self, floor: int) -> MatPsiDO:
        return MatPsiDO([[e.expand(floor) for e in row] for row in self.m])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, NonlocalMat)
            and (self.rows, self.cols) == (other.rows, other.cols)
            and all(
                self.m[i][j] == other.m[i][j]
                for i in range(self.rows)
                for j in range(self.cols)
            )
        )

    def __hash__(self):
        raise TypeError("unhashable")


# --------------------------------------------------------------------------
# kernel-triviality certificates
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelCertificate:
    status: str  # "SUCCESS" | "INCONCLUSIVE"
    reason: str | None  # "a" | "b" | None
    detail: str


def _row_is_algebraic(row: Sequence[PsiDO]) -> bool:
    return all((e.order() or 0) <= 0 if e.c else True for e in row) and all(
        not e.c or max(e.c) <= 0 for e in row
    )


def kernel_trivial_certificate(B: MatPsiDO, C: MatPsiDO) -> KernelCertificate:
    """Certify that the only solution of B F = 0 over the linear closure of
    the fraction field is F = 0, by one of two arguments:

    (a) algebraic-row spanning: B consists of the block C plus purely
        order-zero rows whose coefficient matrix has full column rank over
        the fraction field;
    (b) first-order-block reduction: C = G d + N with a constant invertible
        G and N of order zero, which confines solutions to the linear
        closure built from the variables appearing in C; the order-zero rows
        of B, linear in the remaining variables with rational coefficients,
        then pin F to zero when their stacked coefficient matrix has full
        column rank over Q.

    Never returns a false SUCCESS; anything else is INCONCLUSIVE.
    """
    ell = C.rows
    if C.cols != ell:
        raise ValueError("C must be square")
    if B.cols != ell:
        raise ValueError("B and C must have the same number of columns")
    if B.rows < ell:
        raise ValueError("B must contain at least as many rows as C")
    if not B.is_exact() or not C.is_exact():
        raise UnsupportedError("certificates need exact differential operators")

    top_is_C = all(
        B.entry(i, j) == C.entry(i, j) for i in range(ell) for j in range(ell)
    )
    rest = list(range(ell, B.rows)) if top_is_C else list(range(B.rows))
    algebraic = [r for r in rest if _row_is_algebraic(B.m[r])]

    # (a): every row beyond C is algebraic, and those rows have full rank
    # over the fraction field
    if algebraic and len(algebraic) == len(rest):
        mat = [
            [B.entry(r, j).c.get(0, DiffPoly.zero()) for j in range(ell)]
            for r in algebraic
        ]
        if _krank(mat, ell) == ell:
            return KernelCertificate(
                "SUCCESS", "a", "order-zero rows span over the fraction field"
            )

    # (b): C = G d + N, constant invertible G; solutions live over the
    # closure of the variables of C; linear order-zero rows in the other
    # variables must have full rank over Q
    if top_is_C:
        ok = all((e.order() or 0) <= 1 for row in C.m for e in row if e.c)
        G = []
        if ok:
            for i in range(ell):
                grow = []
                for j in range(ell):
                    c1 = C.entry(i, j).c.get(1, DiffPoly.zero())
                    if not c1.is_constant() or c1.const_part().degree() > 0:
                        ok = False
                        break
                    grow.append(c1.const_part().coeff(0))
                if not ok:
                    break
                G.append(grow)
        if ok and _qinv(G) is not None:
            closed_gens: set[int] = set()
            for i in range(ell):
                for j in range(ell):
                    closed_gens |= C.entry(i, j).c.get(0, DiffPoly.zero()).gens_present()
            coeff_rows: list[list[Fraction]] = []
            for r in algebraic:
                per_var: dict[tuple[int, int], list[Fraction]] = {}
                usable = True
                for j in range(ell):
                    e = B.entry(r, j).c.get(0, DiffPoly.zero())
                    for mon, q in e.terms():
                        if len(mon) != 1 or mon[0][1] != 1 or q.degree() > 0:
                            usable = False
                            break
                        var = mon[0][0]
                        if var[0] in closed_gens:
                            usable = False
                            break
                        per_var.setdefault(var, [Fraction(0)] * ell)[j] = q.coeff(0)
                    if not usable:
                        break
                if usable:
                    coeff_rows.extend(per_var.values())
            if coeff_rows and _qrank(coeff_rows, ell) == ell:
                return KernelCertificate(
                    "SUCCESS",
                    "b",
                    "first-order block plus linear rows of full rational rank",
                )

    return KernelCertificate("INCONCLUSIVE", None, "no implemented argument applies")
