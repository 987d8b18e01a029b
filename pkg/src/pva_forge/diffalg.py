"""Differential polynomial algebra over Q[z], with exact variational calculus.

The ring is V = F[u_i^(n) : i in gens, n >= 0] where F = Q[z] for a single
central parameter z.  Elements are `DiffPoly`; scalars are `QZ` (polynomials
in z with Fraction coefficients).  The total derivative d acts by
d(u_i^(n)) = u_i^(n+1) and d(z) = 0.

Covectors and vector fields over the algebra are plain tuples of DiffPoly,
indexed by generator.  A first-order linearization (Frechet derivative) is a
nested tuple `table[row][gen] = {order: coefficient}` representing the matrix
differential operator sum_n coeff * d^n.

Nothing here is approximate: all arithmetic is over Fraction.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Iterable, Iterator


class NotTotalDerivativeError(ValueError):
    """Raised when an element is not in the image of the total derivative
    (or a covector is not a variational gradient)."""


# --------------------------------------------------------------------------
# scalars: Q[z]
# --------------------------------------------------------------------------


def _trim(c: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
    k = len(c)
    while k and not c[k - 1]:
        k -= 1
    return c[:k]


class QZ:
    """Element of Q[z]: coefficient tuple, index = power of z, trailing zeros
    stripped so representation is canonical."""

    __slots__ = ("c",)

    def __init__(self, c: Iterable[Fraction] = ()):
        self.c = _trim(tuple(Fraction(x) for x in c))

    @staticmethod
    def of(x) -> "QZ":
        if isinstance(x, QZ):
            return x
        return QZ((Fraction(x),))

    @staticmethod
    def zero() -> "QZ":
        return _QZ_ZERO

    @staticmethod
    def one() -> "QZ":
        return _QZ_ONE

    @staticmethod
    def z() -> "QZ":
        return _QZ_Z

    def is_zero(self) -> bool:
        return not self.c

    def __bool__(self) -> bool:
        return bool(self.c)

    def degree(self) -> int:
        return len(self.c) - 1  # -1 for the zero polynomial

    def coeff(self, k: int) -> Fraction:
        return self.c[k] if 0 <= k < len(self.c) else Fraction(0)

    def eval(self, zval: Fraction) -> Fraction:
        acc = Fraction(0)
        for a in reversed(self.c):
            acc = acc * zval + a
        return acc

    def __add__(self, other) -> "QZ":
        other = QZ.of(other)
        a, b = self.c, other.c
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for k, v in enumerate(b):
            out[k] += v
        return QZ(out)

    __radd__ = __add__

    def __neg__(self) -> "QZ":
        return QZ(tuple(-v for v in self.c))

    def __sub__(self, other) -> "QZ":
        return self + (-QZ.of(other))

    def __rsub__(self, other) -> "QZ":
        return QZ.of(other) + (-self)

    def __mul__(self, other) -> "QZ":
        other = QZ.of(other)
        if not self.c or not other.c:
            return _QZ_ZERO
        out = [Fraction(0)] * (len(self.c) + len(other.c) - 1)
        for i, a in enumerate(self.c):
            if a:
                for j, b in enumerate(other.c):
                    out[i + j] += a * b
        return QZ(out)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = QZ.of(other)
        return isinstance(other, QZ) and self.c == other.c

    def __hash__(self):
        return hash(self.c)

    def __repr__(self):
        if not self.c:
            return "0"
        parts = []
        for k, v in enumerate(self.c):
            if not v:
                continue
            if k == 0:
                parts.append(str(v))
            elif k == 1:
                parts.append(f"{v}*z" if v != 1 else "z")
            else:
                parts.append(f"{v}*z^{k}" if v != 1 else f"z^{k}")
        return " + ".join(parts)


_QZ_ZERO = QZ.__new__(QZ)
_QZ_ZERO.c = ()
_QZ_ONE = QZ.__new__(QZ)
_QZ_ONE.c = (Fraction(1),)
_QZ_Z = QZ.__new__(QZ)
_QZ_Z.c = (Fraction(0), Fraction(1))


# --------------------------------------------------------------------------
# differential polynomials
# --------------------------------------------------------------------------

# A monomial is a sorted tuple of ((gen, order), exponent) with exponent >= 1.
Mon = tuple[tuple[tuple[int, int], int], ...]
_EMPTY: Mon = ()


def _mon_mul(a: Mon, b: Mon) -> Mon:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def _mon_degree(m: Mon) -> int:
    return sum(e for _, e in m)


class DiffPoly:
    """Differential polynomial: dict from canonical monomial to nonzero QZ.

    Treat instances as immutable; all operations return new objects.
    """

    __slots__ = ("t",)

    def __init__(self, t: dict[Mon, QZ] | None = None):
        self.t = t or {}

    # ---- constructors

    @staticmethod
    def zero() -> "DiffPoly":
        return DiffPoly()

    @staticmethod
    def one() -> "DiffPoly":
        return DiffPoly({_EMPTY: _QZ_ONE})

    @staticmethod
    def const(c) -> "DiffPoly":
        c = QZ.of(c)
        return DiffPoly({_EMPTY: c} if c else {})

    @staticmethod
    def z() -> "DiffPoly":
        return DiffPoly({_EMPTY: _QZ_Z})

    @staticmethod
    def gen(i: int, order: int = 0) -> "DiffPoly":
        if i < 0 or order < 0:
            raise ValueError("generator index and order must be nonnegative")
        return DiffPoly({(((i, order), 1),): _QZ_ONE})

    @staticmethod
    def from_terms(pairs: Iterable[tuple[Mon, QZ]]) -> "DiffPoly":
        t: dict[Mon, QZ] = {}
        for m, c in pairs:
            c = QZ.of(c)
            if not c:
                continue
            acc = t.get(m)
            c = acc + c if acc is not None else c
            if c:
                t[m] = c
            elif acc is not None:
                del t[m]
        return DiffPoly(t)

    # ---- predicates and views

    def is_zero(self) -> bool:
        return not self.t

    def __bool__(self) -> bool:
        return bool(self.t)

    def is_constant(self) -> bool:
        return not self.t or (len(self.t) == 1 and _EMPTY in self.t)

    def const_part(self) -> QZ:
        return self.t.get(_EMPTY, _QZ_ZERO)

    def terms(self) -> Iterator[tuple[Mon, QZ]]:
        return iter(self.t.items())

    def nterms(self) -> int:
        return len(self.t)

    def gens_present(self) -> set[int]:
        return {v[0] for m in self.t for v, _ in m}

    def max_order(self, i: int | None = None) -> int:
        """Highest derivative order present (of generator i, or overall).
        Returns -1 when no matching variable occurs."""
        best = -1
        for m in self.t:
            for (g, o), _ in m:
                if (i is None or g == i) and o > best:
                    best = o
        return best

    def degree(self) -> int:
        return max((_mon_degree(m) for m in self.t), default=0)

    # ---- arithmetic

    def __add__(self, other) -> "DiffPoly":
        other = _coerce(other)
        if not self.t:
            return other
        if not other.t:
            return self
        t = dict(self.t)
        for m, c in other.t.items():
            acc = t.get(m)
            s = acc + c if acc is not None else c
            if s:
                t[m] = s
            elif acc is not None:
                del t[m]
        return DiffPoly(t)

    __radd__ = __add__

    def __neg__(self) -> "DiffPoly":
        return DiffPoly({m: -c for m, c in self.t.items()})

    def __sub__(self, other) -> "DiffPoly":
        return self + (-_coerce(other))

    def __rsub__(self, other) -> "DiffPoly":
        return _coerce(other) + (-self)

    def __mul__(self, other) -> "DiffPoly":
        other = _coerce(other)
        if not self.t or not other.t:
            return DiffPoly()
        a, b = self.t, other.t
        if len(a) > len(b):
            a, b = b, a
        t: dict[Mon, QZ] = {}
        for ma, ca in a.items():
            for mb, cb in b.items():
                m = _mon_mul(ma, mb)
                c = ca * cb
                acc = t.get(m)
                s = acc + c if acc is not None else c
                if s:
                    t[m] = s
                elif acc is not None:
                    del t[m]
        return DiffPoly(t)

    __rmul__ = __mul__

    def scale(self, c) -> "DiffPoly":
        c = QZ.of(c)
        if not c:
            return DiffPoly()
        return DiffPoly({m: v * c for m, v in self.t.items()})

    def __pow__(self, n: int) -> "DiffPoly":
        if n < 0:
            raise ValueError("negative power of a differential polynomial")
        out = DiffPoly.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base if n > 1 else base
            n >>= 1
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, QZ)):
            other = DiffPoly.const(other)
        return isinstance(other, DiffPoly) and self.t == other.t

    def __hash__(self):
        return hash(frozenset(self.t.items()))

    # ---- calculus

    def partial(self, i: int, n: int) -> "DiffPoly":
        """Partial derivative with respect to the variable u_i^(n)."""
        v = (i, n)
        t: dict[Mon, QZ] = {}
        for m, c in self.t.items():
            for k, (var, e) in enumerate(m):
                if var == v:
                    rest = m[:k] + ((var, e - 1),) + m[k + 1 :] if e > 1 else m[:k] + m[k + 1 :]
                    c2 = c * e
                    acc = t.get(rest)
                    s = acc + c2 if acc is not None else c2
                    if s:
                        t[rest] = s
                    elif acc is not None:
                        del t[rest]
                    break
        return DiffPoly(t)

    def d(self) -> "DiffPoly":
        """Total derivative."""
        t: dict[Mon, QZ] = {}
        for m, c in self.t.items():
            for k, ((g, o), e) in enumerate(m):
                if e > 1:
                    rest = m[:k] + (((g, o), e - 1),) + m[k + 1 :]
                else:
                    rest = m[:k] + m[k + 1 :]
                m2 = _mon_mul(rest, (((g, o + 1), 1),))
                c2 = c * e
                acc = t.get(m2)
                s = acc + c2 if acc is not None else c2
                if s:
                    t[m2] = s
                elif acc is not None:
                    del t[m2]
        return DiffPoly(t)

    def dn(self, n: int) -> "DiffPoly":
        out = self
        for _ in range(n):
            out = out.d()
        return out

    # ---- substitutions

    def subs_gens_zero(self, idxs: set[int]) -> "DiffPoly":
        """Set every derivative of the listed generators to zero."""
        if not idxs:
            return self
        return DiffPoly(
            {m: c for m, c in self.t.items() if not any(v[0] in idxs for v, _ in m)}
        )

    def remap_gens(self, mapping: dict[int, int]) -> "DiffPoly":
        """Rename generator indices; every generator present must be mapped."""
        t: dict[Mon, QZ] = {}
        for m, c in self.t.items():
            m2 = tuple(sorted(((mapping[g], o), e) for (g, o), e in m))
            acc = t.get(m2)
            s = acc + c if acc is not None else c
            if s:
                t[m2] = s
            elif acc is not None:
                del t[m2]
        return DiffPoly(t)

    def eval_num(self, point: Callable[[int, int], Fraction], zval: Fraction) -> Fraction:
        """Evaluate at numeric values point(i, n) for u_i^(n) and z = zval."""
        total = Fraction(0)
        for m, c in self.t.items():
            prod = c.eval(zval)
            for (g, o), e in m:
                prod *= point(g, o) ** e
            total += prod
        return total

    def __repr__(self):
        return poly_str(self)


def _coerce(x) -> DiffPoly:
    if isinstance(x, DiffPoly):
        return x
    if isinstance(x, (int, Fraction, QZ)):
        return DiffPoly.const(x)
    return NotImplemented  # type: ignore[return-value]


def poly_str(f: DiffPoly, names: Callable[[int], str] | None = None) -> str:
    """Readable rendering, mostly for debugging and the text CLI format."""
    if f.is_zero():
        return "0"
    name = names or (lambda i: f"u{i}")

    def var_str(g: int, o: int) -> str:
        if o == 0:
            return name(g)
        if o <= 3:
            return name(g) + "'" * o
        return f"{name(g)}^({o})"

    def mon_str(m: Mon) -> str:
        return "*".join(
            var_str(g, o) + (f"^{e}" if e > 1 else "") for (g, o), e in m
        )

    parts = []
    for m in sorted(f.t, key=lambda m: (_mon_degree(m), m)):
        c = f.t[m]
        cs = repr(c)
        if " + " in cs or cs.startswith("-") and m:
            cs = f"({cs})"
        if not m:
            parts.append(cs)
        elif cs == "1":
            parts.append(mon_str(m))
        elif cs == "-1":
            parts.append("-" + mon_str(m))
        else:
            parts.append(f"{cs}*{mon_str(m)}")
    out = " + ".join(parts)
    return out.replace("+ -", "- ")


# --------------------------------------------------------------------------
# linearizations: table[row][gen] = {order: DiffPoly}
# --------------------------------------------------------------------------

DOp = dict  # {int: DiffPoly}, orders >= 0
DOpTable = tuple  # tuple[tuple[DOp, ...], ...]


def frechet(vec: tuple[DiffPoly, ...], ngens: int | None = None) -> DOpTable:
    """Frechet derivative of a vector of differential polynomials.

    Returns table[a][i] = {n: d vec_a / d u_i^(n)}, the matrix differential
    operator D with D_{a i} = sum_n (partial vec_a / partial u_i^(n)) d^n.
    """
    if ngens is None:
        ngens = max(
            len(vec), 1 + max((g for f in vec for g in f.gens_present()), default=-1)
        )
    rows = []
    for f in vec:
        row = []
        for i in range(ngens):
            entry: dict[int, DiffPoly] = {}
            for n in range(f.max_order(i) + 1):
                p = f.partial(i, n)
                if p:
                    entry[n] = p
            row.append(entry)
        rows.append(tuple(row))
    return tuple(rows)


def dop_adjoint_entry(entry: DOp) -> DOp:
    # (sum_n c_n d^n)* = sum_n (-d)^n c_n, expanded by Leibniz
    out: dict[int, DiffPoly] = {}
    for n, c in entry.items():
        dk = c
        for k in range(n + 1):
            term = dk.scale(Fraction((-1) ** n * math.comb(n, k)))
            if term:
                acc = out.get(n - k)
                s = acc + term if acc is not None else term
                if s:
                    out[n - k] = s
                elif acc is not None:
                    del out[n - k]
            dk = dk.d()
    return out


def frechet_adjoint(table: DOpTable) -> DOpTable:
    """Formal adjoint of a matrix differential operator table (transpose and
    replace each entry by its adjoint)."""
    nrows = len(table)
    ncols = len(table[0]) if nrows else 0
    return tuple(
        tuple(dop_adjoint_entry(table[j][i]) for j in range(nrows))
        for i in range(ncols)
    )


def dop_apply(entry: DOp, f: DiffPoly) -> DiffPoly:
    out = DiffPoly.zero()
    if not entry:
        return out
    top = max(entry)
    dk = f
    for n in range(top + 1):
        c = entry.get(n)
        if c is not None:
            out = out + c * dk
        if n < top:
            dk = dk.d()
    return out


def dop_table_apply(table: DOpTable, vec: tuple[DiffPoly, ...]) -> tuple[DiffPoly, ...]:
    return tuple(
        sum((dop_apply(row[i], vec[i]) for i in range(len(vec))), DiffPoly.zero())
        for row in table
    )


def is_exact(xi: tuple[DiffPoly, ...]) -> tuple[bool, DOpTable]:
    """Whether the covector xi is a variational gradient.

    True iff the Frechet derivative of xi is self-adjoint.  Returns the
    verdict and the defect table D - D* (all entries empty when exact).
    """
    n = len(xi)
    table = frechet(xi, n)
    adj = frechet_adjoint(table)
    defect = []
    for a in range(n):
        row = []
        for i in range(n):
            e: dict[int, DiffPoly] = dict(table[a][i])
            for k, c in adj[a][i].items():
                s = e.get(k, DiffPoly.zero()) - c
                if s:
                    e[k] = s
                elif k in e:
                    del e[k]
            row.append(e)
        defect.append(tuple(row))
    ok = all(not e for row in defect for e in row)
    return ok, tuple(defect)


# --------------------------------------------------------------------------
# variational calculus
# --------------------------------------------------------------------------


def variational_derivative(f: DiffPoly, ngens: int | None = None) -> tuple[DiffPoly, ...]:
    """delta f / delta u_i = sum_n (-d)^n (partial f / partial u_i^(n))."""
    if ngens is None:
        ngens = 1 + max(f.gens_present(), default=-1)
        ngens = max(ngens, 1)
    out = []
    for i in range(ngens):
        acc = DiffPoly.zero()
        for n in range(f.max_order(i) + 1):
            p = f.partial(i, n)
            if p:
                acc = acc + p.dn(n).scale(Fraction((-1) ** n))
        out.append(acc)
    return tuple(out)


def variational_integrate(xi: tuple[DiffPoly, ...]) -> DiffPoly:
    """Invert the variational derivative on an exact covector.

    Uses the homotopy formula h = sum_i sum_monomials c/(deg+1) * u_i * mon,
    valid because coefficients are polynomial.  Raises
    NotTotalDerivativeError when xi is not a gradient.
    """
    if any(comp.const_part() for comp in xi):
        raise NotTotalDerivativeError("covector has a constant term")
    ok, _ = is_exact(xi)
    if not ok:
        raise NotTotalDerivativeError("covector is not a variational gradient")
    h = DiffPoly.zero()
    for i, comp in enumerate(xi):
        ui = DiffPoly.gen(i)
        for m, c in comp.terms():
            piece = DiffPoly({m: c * Fraction(1, _mon_degree(m) + 1)})
            h = h + ui * piece
    check = variational_derivative(h, len(xi))
    if any((a - b) for a, b in zip(check, xi)):
        raise RuntimeError("homotopy integration failed its own check")
    return h


def antiderivative(f: DiffPoly) -> DiffPoly:
    """Return g with d(g) = f, or raise NotTotalDerivativeError.

    Membership test: f is a total derivative iff its variational derivative
    vanishes for every generator and it has no constant term.  The
    antiderivative is then built by descent on the top derivative order,
    integrating the (linear) top slice with a Poincare homotopy in the
    order N-1 variables.
    """
    if f.is_zero():
        return DiffPoly.zero()
    if f.const_part():
        raise NotTotalDerivativeError("nonzero constant term")
    for comp in variational_derivative(f):
        if comp:
            raise NotTotalDerivativeError("variational derivative does not vanish")
    g = DiffPoly.zero()
    work = f
    while work:
        N = work.max_order()
        if N <= 0:
            raise RuntimeError("descent reached order zero with nonzero remainder")
        G = DiffPoly.zero()
        for j in sorted(work.gens_present()):
            Aj = work.partial(j, N)
            if not Aj:
                continue
            yj = DiffPoly.gen(j, N - 1)
            for m, c in Aj.terms():
                ydeg = sum(e for (gi, od), e in m if od == N - 1)
                G = G + yj * DiffPoly({m: c * Fraction(1, ydeg + 1)})
        nxt = work - G.d()
        if nxt.max_order() >= N:
            raise RuntimeError("descent failed to lower the order")
        work = nxt
        g = g + G
    if g.d() != f:
        raise RuntimeError("antiderivative failed its own check")
    return g


def density_equal(f: DiffPoly, g: DiffPoly) -> bool:
    """Equality of local densities, i.e. modulo total derivatives."""
    diff = f - g
    if diff.is_zero():
        return True
    if diff.const_part():
        return False
    return all(not c for c in variational_derivative(diff))


class Density:
    """A differential polynomial considered modulo total derivatives."""

    __slots__ = ("poly",)

    def __init__(self, poly: DiffPoly):
        self.poly = poly

    def __eq__(self, other) -> bool:
        if isinstance(other, DiffPoly):
            other = Density(other)
        return isinstance(other, Density) and density_equal(self.poly, other.poly)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self):
        return f"Density({self.poly!r})"


# --------------------------------------------------------------------------
# evolutionary vector fields
# --------------------------------------------------------------------------


def evolutionary_apply(P: tuple[DiffPoly, ...], f: DiffPoly) -> DiffPoly:
    """Apply the evolutionary field with characteristic P to f:
    X_P(f) = sum_{i,n} d^n(P_i) * partial f / partial u_i^(n)."""
    out = DiffPoly.zero()
    for i, Pi in enumerate(P):
        top = f.max_order(i)
        dk = Pi
        for n in range(top + 1):
            p = f.partial(i, n)
            if p:
                out = out + dk * p
            if n < top:
                dk = dk.d()
    return out


def vf_commutator(
    P: tuple[DiffPoly, ...], Q: tuple[DiffPoly, ...]
) -> tuple[DiffPoly, ...]:
    """Commutator of evolutionary vector fields, as a characteristic:
    [P,Q]_j = X_P(Q_j) - X_Q(P_j)."""
    return tuple(
        evolutionary_apply(P, qj) - evolutionary_apply(Q, pj)
        for pj, qj in zip(P, Q, strict=True)
    )
