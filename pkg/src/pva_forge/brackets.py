"""Lambda brackets of local and nonlocal Poisson structures.

The bracket of two differential polynomials is evaluated from an operator
matrix H by the chain rule in both arguments:

    {f_la g}_H = sum_{i,j,m,n}  (dg/du_j^{(n)}) (la+d)^n  H_ji(la+d)
                                (-la-d)^m (df/du_i^{(m)})

read right to left; ``(la+d)^k`` acts on everything to its right, with the
formal parameter la commuting with coefficients.  The same dictionary sends
an operator matrix to the bracket table and back:

    H_ji(d)  <->  {u_i la u_j}  with la replaced by d, coefficients left.

Series in la are graded by integer powers.  A series may be *exact*
(``floor is None``: the stored coefficients are all there is) or truncated
at a floor: coefficients below the floor are unknown, coefficients at or
above it are exact.  Every operation propagates floors conservatively, so
a coefficient can be read off a result if and only if it is reliable.
Axiom checks on nonlocal structures take a window parameter N and certify
all coefficients of la^p mu^q with p, q >= -N, expanding internally as
deep as needed; on local structures they are exact statements.

The one-parameter families used by the bi-Hamiltonian machinery are stored
as single operator matrices over coefficients polynomial in the central
parameter z; ``split_pencil`` extracts the constituent pair (H0, H1) with
the fixed orientation ``full = H1 - z*H0`` and ``assemble_pencil`` inverts
it.  This orientation is what makes the recursion ladder
``H0 dh_{n+1} = H1 dh_n`` run in the documented direction for the bundled
structures.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .diffalg import DiffPoly, QZ, frechet, _coerce as _as_poly
from .psido import (
    MatPsiDO,
    NonlocalMat,
    NonlocalOp,
    PsiDO,
    RationalExpr,
    UnsupportedError,
    _gbinom,
)

__all__ = [
    "DEFAULT_TRUNC",
    "LambdaSeries",
    "TwoVarDensity",
    "CheckReport",
    "master_bracket",
    "operator_of_bracket",
    "triple_bracket",
    "skew_defect",
    "jacobi_defect",
    "check_skewsymmetry",
    "check_jacobi",
    "check_compatibility",
    "split_pencil",
    "assemble_pencil",
    "z_coefficient",
    "z_degree",
]

# default certification window for truncated checks: coefficients of
# la^p mu^q with p, q >= -DEFAULT_TRUNC
DEFAULT_TRUNC = 6

# default internal expansion depth when no window was requested
_DEFAULT_WORK_FLOOR = -(DEFAULT_TRUNC + 2)


def _merge_floor(a: int | None, b: int | None) -> int | None:
    """Reliability floor of a sum: the shallower of the two."""
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


class LambdaSeries:
    """Series sum_p c_p la^p with differential-polynomial coefficients.

    ``floor is None`` means exact; otherwise coefficients below ``floor``
    are unknown and reading them raises."""

    __slots__ = ("c", "floor")

    def __init__(self, c: dict[int, DiffPoly] | None = None, floor: int | None = None):
        cc: dict[int, DiffPoly] = {}
        for k, v in (c or {}).items():
            v = _as_poly(v)
            if v and (floor is None or k >= floor):
                cc[k] = v
        self.c = cc
        self.floor = floor

    # ---- constructors

    @staticmethod
    def zero(floor: int | None = None) -> "LambdaSeries":
        return LambdaSeries({}, floor)

    @staticmethod
    def of_poly(f) -> "LambdaSeries":
        f = _as_poly(f)
        return LambdaSeries({0: f} if f else {})

    @staticmethod
    def monomial(k: int, coeff=1) -> "LambdaSeries":
        return LambdaSeries({k: _as_poly(coeff)})

    # ---- views

    @property
    def exact(self) -> bool:
        return self.floor is None

    def coeff(self, k: int) -> DiffPoly:
        if self.floor is not None and k < self.floor:
            raise ValueError(f"power {k} is below the truncation floor {self.floor}")
        return self.c.get(k, DiffPoly.zero())

    def items(self):
        return self.c.items()

    def top_degree(self) -> int | None:
        return max(self.c) if self.c else None

    def is_negligible(self) -> bool:
        """No known-nonzero coefficient (exactly zero when exact)."""
        return not self.c

    def is_zero(self) -> bool:
        return self.floor is None and not self.c

    def truncate(self, floor: int) -> "LambdaSeries":
        f = floor if self.floor is None else max(floor, self.floor)
        return LambdaSeries({k: v for k, v in self.c.items() if k >= f}, f)

    def window_clear(self, n: int):
        """Certify that every coefficient of la^p with p >= -n vanishes.

        Returns (ok, offender); offender is (power, coefficient) for the
        shallowest nonzero entry, or ("unreliable", floor) when the series
        is not reliable on the whole window."""
        if self.floor is not None and self.floor > -n:
            return False, ("unreliable", self.floor)
        bad = [(k, v) for k, v in self.c.items() if k >= -n]
        if bad:
            k, v = min(bad)
            return False, (k, v)
        return True, None

    # ---- arithmetic

    def __add__(self, other: "LambdaSeries") -> "LambdaSeries":
        if not isinstance(other, LambdaSeries):
            return NotImplemented
        f = _merge_floor(self.floor, other.floor)
        c = dict(self.c)
        for k, v in other.c.items():
            s = c.get(k, DiffPoly.zero()) + v
            if s:
                c[k] = s
            elif k in c:
                del c[k]
        return LambdaSeries(c, f)

    def __neg__(self) -> "LambdaSeries":
        return LambdaSeries({k: -v for k, v in self.c.items()}, self.floor)

    def __sub__(self, other: "LambdaSeries") -> "LambdaSeries":
        return self + (-other)

    def scale(self, s) -> "LambdaSeries":
        s = s if isinstance(s, QZ) else QZ.of(s)
        if not s:
            return LambdaSeries.zero(self.floor)
        return LambdaSeries({k: v.scale(s) for k, v in self.c.items()}, self.floor)

    def mul_poly(self, f: DiffPoly) -> "LambdaSeries":
        f = _as_poly(f)
        if not f:
            return LambdaSeries.zero(self.floor)
        return LambdaSeries({k: f * v for k, v in self.c.items()}, self.floor)

    def shift_apply(self, k: int, floor: int | None = None) -> "LambdaSeries":
        """(la + d)^k applied to the series, la commuting with coefficients.

        For k < 0 the binomial expansion terminates only on constant
        coefficients; otherwise an expansion floor is required (argument,
        else the series' own floor)."""
        out: dict[int, DiffPoly] = {}
        # contributions of the unknown tail sit at powers < floor + k
        rf = None if self.floor is None else self.floor + k
        eff = floor if floor is not None else self.floor
        for p, c0 in self.c.items():
            dk = c0
            j = 0
            while True:
                o = p + k - j
                if k < 0 and not dk.is_constant() and eff is None:
                    raise UnsupportedError(
                        "nonterminating (la+d)^k expansion needs a floor"
                    )
                if eff is not None and o < eff and k < 0:
                    rf = _merge_floor(rf, eff)
                    break
                if dk.is_zero():
                    break
                term = dk.scale(Fraction(_gbinom(k, j)))
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
        return LambdaSeries(out, rf)

    def subst_neg(self, floor: int | None = None) -> "LambdaSeries":
        """The series with la replaced by -la-d, powers acting on the
        coefficients from the left (the skew-symmetry substitution)."""
        out = LambdaSeries.zero(self.floor)
        eff = floor if floor is not None else self.floor
        for p, c0 in self.c.items():
            sign = 1 if p % 2 == 0 else -1
            out = out + LambdaSeries({0: c0}).shift_apply(p, eff).scale(sign)
        return out

    # ---- comparisons

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LambdaSeries)
            and self.c == other.c
            and self.floor == other.floor
        )

    def __hash__(self):
        raise TypeError("unhashable")

    def agrees_with(self, other: "LambdaSeries") -> bool:
        """Equality of all coefficients on the common reliable range."""
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
                f"({v!r})la^{k}" if k else f"({v!r})"
                for k, v in sorted(self.c.items(), reverse=True)
            )
        tail = "" if self.floor is None else f" + O(la^{self.floor - 1})"
        return body + tail


class TwoVarDensity:
    """Finite data of a two-parameter series sum c_{p,q} la^p mu^q with
    independent reliability floors in the two variables."""

    __slots__ = ("c", "lam_floor", "mu_floor")

    def __init__(
        self,
        c: dict[tuple[int, int], DiffPoly] | None = None,
        lam_floor: int | None = None,
        mu_floor: int | None = None,
    ):
        cc: dict[tuple[int, int], DiffPoly] = {}
        for (p, q), v in (c or {}).items():
            v = _as_poly(v)
            if not v:
                continue
            if lam_floor is not None and p < lam_floor:
                continue
            if mu_floor is not None and q < mu_floor:
                continue
            cc[(p, q)] = v
        self.c = cc
        self.lam_floor = lam_floor
        self.mu_floor = mu_floor

    @property
    def exact(self) -> bool:
        return self.lam_floor is None and self.mu_floor is None

    def coeff(self, p: int, q: int) -> DiffPoly:
        if self.lam_floor is not None and p < self.lam_floor:
            raise ValueError(f"la-power {p} below floor {self.lam_floor}")
        if self.mu_floor is not None and q < self.mu_floor:
            raise ValueError(f"mu-power {q} below floor {self.mu_floor}")
        return self.c.get((p, q), DiffPoly.zero())

    def is_negligible(self) -> bool:
        return not self.c

    def is_zero(self) -> bool:
        return self.exact and not self.c

    def swap_vars(self) -> "TwoVarDensity":
        return TwoVarDensity(
            {(q, p): v for (p, q), v in self.c.items()},
            lam_floor=self.mu_floor,
            mu_floor=self.lam_floor,
        )

    def window_clear(self, n: int):
        """Certify that all coefficients with p, q >= -n vanish."""
        if self.lam_floor is not None and self.lam_floor > -n:
            return False, ("unreliable-la", self.lam_floor)
        if self.mu_floor is not None and self.mu_floor > -n:
            return False, ("unreliable-mu", self.mu_floor)
        bad = [(k, v) for k, v in self.c.items() if k[0] >= -n and k[1] >= -n]
        if bad:
            k, v = min(bad)
            return False, (k, v)
        return True, None

    def __add__(self, other: "TwoVarDensity") -> "TwoVarDensity":
        if not isinstance(other, TwoVarDensity):
            return NotImplemented
        lf = _merge_floor(self.lam_floor, other.lam_floor)
        mf = _merge_floor(self.mu_floor, other.mu_floor)
        c = dict(self.c)
        for k, v in other.c.items():
            s = c.get(k, DiffPoly.zero()) + v
            if s:
                c[k] = s
            elif k in c:
                del c[k]
        return TwoVarDensity(c, lf, mf)

    def __neg__(self) -> "TwoVarDensity":
        return TwoVarDensity(
            {k: -v for k, v in self.c.items()}, self.lam_floor, self.mu_floor
        )

    def __sub__(self, other: "TwoVarDensity") -> "TwoVarDensity":
        return self + (-other)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TwoVarDensity)
            and self.c == other.c
            and self.lam_floor == other.lam_floor
            and self.mu_floor == other.mu_floor
        )

    def __hash__(self):
        raise TypeError("unhashable")

    def __repr__(self):
        if not self.c:
            body = "0"
        else:
            body = " + ".join(
                f"({v!r})la^{p}mu^{q}"
                for (p, q), v in sorted(self.c.items(), reverse=True)
            )
        tails = []
        if self.lam_floor is not None:
            tails.append(f"O(la^{self.lam_floor - 1})")
        if self.mu_floor is not None:
            tails.append(f"O(mu^{self.mu_floor - 1})")
        return body + ("" if not tails else " + " + " + ".join(tails))


# --------------------------------------------------------------------------
# evaluation of the bracket from an operator matrix
# --------------------------------------------------------------------------


def _coerce_operator(H, floor: int | None):
    """Bring any supported structure to a MatPsiDO, expanding nonlocal tails
    down to the working floor."""
    if isinstance(H, MatPsiDO):
        return H
    eff = floor if floor is not None else _DEFAULT_WORK_FLOOR
    if isinstance(H, (NonlocalMat, RationalExpr)):
        return H.expand(eff)
    raise TypeError(f"unsupported operator type {type(H).__name__}")


def _apply_entry(e: PsiDO, S: LambdaSeries, eff: int | None) -> LambdaSeries:
    """H_entry(la+d) applied to a la-series: sum_k c_k (la+d)^k S."""
    out = LambdaSeries.zero()
    for k, ck in e.items():
        out = out + S.shift_apply(k, eff).mul_poly(ck)
    if e.floor is not None:
        # the entry's unknown tail multiplies S: powers < e.floor + top(S)
        t = S.top_degree()
        if t is not None:
            out = out + LambdaSeries.zero(e.floor + max(t, 0))
    return out


def master_bracket(H, f, g, floor: int | None = None) -> LambdaSeries:
    """{f_la g} for the structure H (MatPsiDO, NonlocalMat or RationalExpr).

    Exact (floor None on the result) whenever H is an exact matrix of
    differential operators; otherwise the result carries the emergent
    reliability floor of the expansions involved.  ``floor`` is the depth
    the caller wants on the result; for structured nonlocal input the
    internal expansion runs deeper by the top derivative orders of the two
    arguments, which is exactly the window the chain rule consumes."""
    if hasattr(H, "rows") and hasattr(H, "cols") and H.rows != H.cols:
        raise ValueError("structure matrix must be square")
    n = H.rows if hasattr(H, "rows") else len(H.m)
    f = _as_poly(f)
    g = _as_poly(g)
    Ff = frechet((f,), n)[0]
    Fg = frechet((g,), n)[0]
    m_top = max((m for i in range(n) for m in Ff[i]), default=0)
    n_top = max((m for j in range(n) for m in Fg[j]), default=0)
    eff = floor if floor is not None else _DEFAULT_WORK_FLOOR
    eff = eff - m_top - n_top
    Hm = _coerce_operator(H, eff)
    S: list[LambdaSeries] = []
    for i in range(n):
        s = LambdaSeries.zero()
        for m, c in Ff[i].items():
            # (-la-d)^m c = (-1)^m (la+d)^m c, always a finite expansion
            s = s + LambdaSeries({0: c}).shift_apply(m).scale(1 if m % 2 == 0 else -1)
        S.append(s)
    out = LambdaSeries.zero()
    for j in range(n):
        if not Fg[j]:
            continue
        Tj = LambdaSeries.zero()
        for i in range(n):
            if S[i].is_negligible():
                continue
            e = Hm.entry(j, i)
            if e.is_negligible() and e.exact:
                continue
            Tj = Tj + _apply_entry(e, S[i], eff)
        if Tj.is_negligible() and Tj.exact:
            continue
        for m, c in Fg[j].items():
            out = out + Tj.shift_apply(m).mul_poly(c)
    return out


def operator_of_bracket(table: dict, ngens: int) -> MatPsiDO:
    """Rebuild the operator matrix from a complete table of generator
    brackets: entry (j, i) is {u_i la u_j} with la replaced by d and
    coefficients kept to the left of the powers.

    The table must contain every pair (i, j) in range, each an exact
    series with nonnegative powers (a local structure)."""
    entries = [[PsiDO.zero() for _ in range(ngens)] for _ in range(ngens)]
    for i in range(ngens):
        for j in range(ngens):
            if (i, j) not in table:
                raise ValueError(f"bracket table is missing the pair {(i, j)}")
            s = table[(i, j)]
            if not isinstance(s, LambdaSeries):
                raise ValueError("table entries must be LambdaSeries")
            if not s.exact:
                raise ValueError(
                    f"table entry {(i, j)} is truncated; operators need exact series"
                )
            if s.c and min(s.c) < 0:
                raise ValueError(
                    f"table entry {(i, j)} has negative powers; not a local structure"
                )
            entries[j][i] = PsiDO.from_dict(dict(s.c))
    return MatPsiDO.of(entries)


# --------------------------------------------------------------------------
# axiom checks
# --------------------------------------------------------------------------


@dataclass
class CheckReport:
    ok: bool
    counterexample: tuple | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _is_exact_local(H) -> bool:
    return (
        isinstance(H, MatPsiDO)
        and H.is_exact()
        and all(
            (e.min_order() is None or e.min_order() >= 0)
            for row in H.m
            for e in row
        )
    )


def _gen(i: int) -> DiffPoly:
    return DiffPoly.gen(i, 0)


def skew_defect(H, i: int, j: int, trunc: int | None = None) -> LambdaSeries:
    """{u_j la u_i} + ({u_i la u_j} with la -> -la-d); zero iff the pair
    satisfies the skew-symmetry axiom."""
    if _is_exact_local(H) and trunc is None:
        a = master_bracket(H, _gen(j), _gen(i))
        b = master_bracket(H, _gen(i), _gen(j))
        return a + b.subst_neg()
    n = DEFAULT_TRUNC if trunc is None else trunc
    m = n + 2
    for _ in range(6):
        a = master_bracket(H, _gen(j), _gen(i), floor=-m)
        b = master_bracket(H, _gen(i), _gen(j), floor=-m)
        d = a + b.subst_neg()
        if d.floor is None or d.floor <= -n:
            return d
        m += max((d.floor + n) + 2, 2)
    raise RuntimeError("skew check could not reach the requested window")


def triple_bracket(H, f, g, h, floor: int | None = None) -> TwoVarDensity:
    """{f_la {g_mu h}} as a two-parameter series."""
    inner = master_bracket(H, g, h, floor=floor)
    out = TwoVarDensity({}, None, inner.floor)
    for q, cq in inner.items():
        outer = master_bracket(H, f, cq, floor=floor)
        out = out + TwoVarDensity(
            {(p, q): cp for p, cp in outer.items()}, outer.floor, inner.floor
        )
    return out


def _third_term_exact(H, f, g, h) -> TwoVarDensity:
    """{{f_la g}_{la+mu} h} for an exact local structure: both brackets
    terminate, and nu = la + mu carries only nonnegative powers, expanded
    binomially."""
    first = master_bracket(H, f, g)
    out: dict[tuple[int, int], DiffPoly] = {}
    for p, cp in first.items():
        inner = master_bracket(H, cp, h)
        for r, dr in inner.items():
            if r < 0:
                raise UnsupportedError(
                    "negative powers of la+mu need a structured evaluation"
                )
            for j2 in range(0, r + 1):
                key = (p + j2, r - j2)
                term = dr.scale(Fraction(_gbinom(r, j2)))
                if not term:
                    continue
                s = out.get(key, DiffPoly.zero()) + term
                if s:
                    out[key] = s
                elif key in out:
                    del out[key]
    return TwoVarDensity(out, None, None)


def _entry_parts(H, r: int, c: int) -> tuple[PsiDO, tuple]:
    """Entry (r, c) of a structured operator matrix as (local exact
    differential-operator part, inverse pairs).  Structures given only by
    truncated expansions carry no resummable tail and are rejected."""
    if isinstance(H, NonlocalMat):
        e = H.entry(r, c)
        return e.local, e.pairs
    if isinstance(H, MatPsiDO):
        e = H.entry(r, c)
        if e.floor is not None or (e.c and min(e.c) < 0):
            raise UnsupportedError(
                "triple-bracket evaluation needs exact local entries or an "
                "explicit local-plus-pairs structure, not a truncated symbol"
            )
        return e, ()
    raise UnsupportedError(
        "triple-bracket evaluation needs a structured operator matrix "
        "(local matrix, or local plus inverse pairs)"
    )


def _bump(table: dict, key, poly: DiffPoly) -> None:
    s = table.get(key)
    s = poly if s is None else s + poly
    if s:
        table[key] = s
    elif key in table:
        del table[key]


def _adjoint_frechet_into(
    table: dict, F: DiffPoly, c: DiffPoly, ngens: int, p: int, q: int, sign: int
) -> None:
    """Accumulate sign * sum_m (-nu-d)^m [ (dF/du_l^{(m)}) * c ] into
    table[l] at keys (p, q, nu-power).  This is the adjoint of the Frechet
    derivative of F, evaluated on c, with nu kept symbolic."""
    Fr = frechet((F,), ngens)[0]
    for l in range(ngens):
        row = Fr[l]
        if not row:
            continue
        tl = table[l]
        for m, df in row.items():
            y = df * c
            if not y:
                continue
            for t in range(m + 1):
                coef = Fraction(sign * (-1) ** m * _gbinom(m, t))
                _bump(tl, (p, q, m - t), y.dn(t).scale(coef))


def _third_term_structured(H, i: int, j: int, k: int, window: int) -> TwoVarDensity:
    """{{u_i la u_j}_{la+mu} u_k} for a structured operator matrix, exact on
    the window of powers >= -window in each variable.

    The first bracket is kept as a symbol rather than expanded: for a local
    coefficient it contributes its adjoint Frechet action directly, and for
    an inverse pair a d^{-1} o b the chain rule splits into a tail in la
    (from differentiating a, against the expansion of the pair) and a tail
    resummed in mu alone (from differentiating b: the geometric sum
    sum_t la^{-1-t} (la+mu+d)^t collapses to -(mu+d)^{-1}).  Expanding
    term-by-term instead would mix the variables: arbitrarily deep
    coefficients of the first bracket then feed fixed powers of (la, mu),
    and no finite depth certifies any window.  Keeping each inverse factor
    attached to its own variable makes every output coefficient a finite
    sum and the truncation floors independent of the expansion depth."""
    n = H.rows if hasattr(H, "rows") else len(H.m)
    wloc, wpairs = _entry_parts(H, j, i)
    outer_parts = [_entry_parts(H, k, l) for l in range(n)]

    def _mord(poly: DiffPoly) -> int:
        return max(poly.max_order(), 0)

    # nu-degree reachable before embedding: Frechet orders of the inner
    # entry's data, raised by the outer local orders
    s_inner = 0
    for e in wloc.c.values():
        s_inner = max(s_inner, _mord(e))
    for a, b in wpairs:
        s_inner = max(s_inner, _mord(a), _mord(b))
    loc_top = 0
    exact = not wpairs
    for hloc, hpairs in outer_parts:
        if hloc.c:
            loc_top = max(loc_top, max(hloc.c))
        if hpairs:
            exact = False
    s_top = s_inner + loc_top
    # the canonical embedding of the outer (la+mu)-tails raises la-powers by
    # up to window+1, so the la-tail must run deeper than the mu-tail
    Mlam = 2 * window + s_top + 1
    Mmu = window + s_top + 1
    Mnu = window + 1

    # A[l] = sum_m (-nu-d)^m [ d(entry(j,i))/du_l^{(m)} ] as
    # {(la-power, mu-power, nu-power): coefficient}
    A: list[dict] = [dict() for _ in range(n)]
    for r, e in wloc.c.items():
        _adjoint_frechet_into(A, e, DiffPoly.one(), n, r, 0, 1)
    for a, b in wpairs:
        ct = b
        for tdepth in range(Mlam):
            _adjoint_frechet_into(
                A, a, ct.scale(Fraction((-1) ** tdepth)), n, -1 - tdepth, 0, 1
            )
            ct = ct.d()
        ct = a
        for tdepth in range(Mmu):
            _adjoint_frechet_into(
                A, b, ct.scale(Fraction((-1) ** tdepth)), n, 0, -1 - tdepth, -1
            )
            ct = ct.d()

    # outer composition: sum_l entry(k,l)(nu+d) applied to A[l]
    tri: dict = {}
    for l in range(n):
        hloc, hpairs = outer_parts[l]
        if not A[l]:
            continue
        for (p, q, s), c in A[l].items():
            for r, e in hloc.c.items():
                ct = c
                for t in range(r + 1):
                    _bump(tri, (p, q, s + r - t), (e * ct).scale(Fraction(_gbinom(r, t))))
                    ct = ct.d()
            for a2, b2 in hpairs:
                y = b2 * c
                for t in range(0, s + Mnu):
                    _bump(tri, (p, q, s - 1 - t), (a2 * y).scale(Fraction((-1) ** t)))
                    y = y.d()

    return _embed_nu(tri, window, exact)


def _embed_nu(tri: dict, window: int, exact: bool) -> TwoVarDensity:
    """Embed {(la-power, mu-power, nu-power): coeff} with nu = la + mu into a
    two-variable series: nonnegative powers of nu binomially, negative powers
    as the canonical tail with nonnegative powers of la, cut below the
    certified window."""
    out: dict[tuple[int, int], DiffPoly] = {}
    mu_cut = -(window + 1)
    for (p, q, s), c in tri.items():
        if s >= 0:
            for t in range(s + 1):
                _bump(out, (p + t, q + s - t), c.scale(Fraction(_gbinom(s, t))))
        else:
            for t in range(0, q + s - mu_cut + 1):
                _bump(out, (p + t, q + s - t), c.scale(Fraction(_gbinom(s, t))))
    if exact:
        return TwoVarDensity(out, None, None)
    return TwoVarDensity(out, -(window + 1), -(window + 1))


def _entry_series(H, r: int, c: int, floor: int) -> LambdaSeries:
    """Symbol of entry (r, c) as a series in its variable, exact when local
    and floored otherwise."""
    loc, pairs = _entry_parts(H, r, c)
    if not pairs:
        return LambdaSeries(dict(loc.c), None)
    e = NonlocalOp(loc, pairs).expand(floor)
    return LambdaSeries(dict(e.c), e.floor)


def _second_term_structured(H, i: int, j: int, k: int, window: int) -> TwoVarDensity:
    """{u_j mu {u_i la u_k}} for a structured operator matrix, canonically
    embedded, exact on the window of powers >= -window in each variable.

    The inner bracket is the symbol w = entry (k, i) in la.  The outer
    bracket differentiates w through the chain rule: differentiating a local
    coefficient or the left member of an inverse pair leaves honest powers
    of la; differentiating the right member b of a d^{-1} o b factor yields
    the geometric sum  sum_t (-1)^t la^{-1-t} (mu+d)^t [...]  which resums
    to (la+mu+d)^{-1} applied to a computable series in mu.  Expanding that
    sum term by term instead would feed every depth into fixed output keys;
    the resummed form keeps each variable's tail separate."""
    n = H.rows if hasattr(H, "rows") else len(H.m)
    wloc, wpairs = _entry_parts(H, k, i)

    def _mord(poly: DiffPoly) -> int:
        return max(poly.max_order(), 0)

    n_top = 0
    for e in wloc.c.values():
        n_top = max(n_top, _mord(e))
    for a, b in wpairs:
        n_top = max(n_top, _mord(a), _mord(b))
    outer_loc_top = 0
    exact = not wpairs
    col_series: list[LambdaSeries] = []
    Mmu = window + 1 + n_top
    for l in range(n):
        loc, pairs = _entry_parts(H, l, j)
        if pairs:
            exact = False
        if loc.c:
            outer_loc_top = max(outer_loc_top, max(loc.c))
        col_series.append(_entry_series(H, l, j, -Mmu))
    Mlam = window + 1
    Mnu = window + 1 + max(outer_loc_top + n_top, 0)

    tri: dict = {}
    for l in range(n):
        Sl = col_series[l]
        if Sl.is_negligible():
            continue
        shifted: dict[int, LambdaSeries] = {}

        def _sh(n2: int) -> LambdaSeries:
            if n2 not in shifted:
                shifted[n2] = Sl.shift_apply(n2)
            return shifted[n2]

        for r, e in wloc.c.items():
            Fr = frechet((e,), n)[0][l]
            for n2, df in Fr.items():
                for q, cq in _sh(n2).c.items():
                    _bump(tri, (r, q, 0), df * cq)
        for a, b in wpairs:
            Fra = frechet((a,), n)[0][l]
            for n2, df in Fra.items():
                T = _sh(n2)
                ct = b
                for td in range(Mlam):
                    lead = df * ct.scale(Fraction((-1) ** td))
                    if lead:
                        for q, cq in T.c.items():
                            _bump(tri, (-1 - td, q, 0), lead * cq)
                    ct = ct.d()
            Frb = frechet((b,), n)[0][l]
            Z: dict[int, DiffPoly] = {}
            for n2, df in Frb.items():
                for q, cq in _sh(n2).c.items():
                    _bump(Z, q, df * cq)
            for q, cq in Z.items():
                y = cq
                for t2 in range(Mnu):
                    _bump(tri, (0, q, -1 - t2), (a * y).scale(Fraction((-1) ** t2)))
                    y = y.d()
    return _embed_nu(tri, window, exact)


def jacobi_defect(H, i: int, j: int, k: int, trunc: int | None = None) -> TwoVarDensity:
    """{u_i la {u_j mu u_k}} - {u_j mu {u_i la u_k}} - {{u_i la u_j}_{la+mu} u_k},
    as a two-parameter series; zero iff the Jacobi identity holds on the
    triple."""
    f, g, h = _gen(i), _gen(j), _gen(k)
    if _is_exact_local(H) and trunc is None:
        T1 = triple_bracket(H, f, g, h)
        T2 = triple_bracket(H, g, f, h).swap_vars()
        T3 = _third_term_exact(H, f, g, h)
        return T1 - T2 - T3
    n = DEFAULT_TRUNC if trunc is None else trunc
    m = n + 1
    for _ in range(4):
        T1 = triple_bracket(H, f, g, h, floor=-m)
        T2 = _second_term_structured(H, i, j, k, m)
        T3 = _third_term_structured(H, i, j, k, m)
        d = T1 - T2 - T3
        lf = d.lam_floor
        mf = d.mu_floor
        if (lf is None or lf <= -n) and (mf is None or mf <= -n):
            return d
        worst = max(x for x in (lf, mf) if x is not None)
        m += max((worst + n) + 2, 2)
    raise RuntimeError("Jacobi check could not reach the requested window")


def check_skewsymmetry(H, gens=None, trunc: int | None = None) -> CheckReport:
    """Skew-symmetry of the bracket on all generator pairs.  Exact for
    local structures; certified on the window p >= -trunc otherwise."""
    Hm0 = H
    n = H.cols if hasattr(H, "cols") else len(H.m)
    idx = list(gens) if gens is not None else list(range(n))
    exact = _is_exact_local(H) and trunc is None
    for a in range(len(idx)):
        for b in range(a, len(idx)):
            i, j = idx[a], idx[b]
            d = skew_defect(Hm0, i, j, trunc=trunc)
            if exact:
                ok = d.is_zero()
                off = None if ok else (d.top_degree(), d.c[d.top_degree()])
            else:
                ok, off = d.window_clear(DEFAULT_TRUNC if trunc is None else trunc)
            if not ok:
                return CheckReport(
                    False, (i, j, d), f"skew-symmetry fails on pair {(i, j)}: {off}"
                )
    return CheckReport(True, None, "skew-symmetry holds on all generator pairs")


def check_jacobi(H, gens=None, trunc: int | None = None) -> CheckReport:
    """Jacobi identity on all generator triples.  Exact for local
    structures; certified on the window p, q >= -trunc otherwise."""
    n = H.cols if hasattr(H, "cols") else len(H.m)
    idx = list(gens) if gens is not None else list(range(n))
    exact = _is_exact_local(H) and trunc is None
    for i in idx:
        for j in idx:
            for k in idx:
                d = jacobi_defect(H, i, j, k, trunc=trunc)
                if exact:
                    ok = d.is_zero()
                    off = None if ok else next(iter(sorted(d.c.items())))
                else:
                    ok, off = d.window_clear(
                        DEFAULT_TRUNC if trunc is None else trunc
                    )
                if not ok:
                    return CheckReport(
                        False,
                        (i, j, k, d),
                        f"Jacobi fails on triple {(i, j, k)}: {off}",
                    )
    return CheckReport(True, None, "Jacobi identity holds on all generator triples")


def _to_nonlocal(H) -> NonlocalMat:
    if isinstance(H, NonlocalMat):
        return H
    if isinstance(H, MatPsiDO):
        return NonlocalMat.of(
            [[NonlocalOp.of_local(e) for e in row] for row in H.m]
        )
    raise TypeError(f"cannot lift {type(H).__name__} to a nonlocal matrix")


def structure_sum(H0, H1):
    """H0 + H1 with mixed local/nonlocal representations."""
    if isinstance(H0, MatPsiDO) and isinstance(H1, MatPsiDO):
        return H0 + H1
    return _to_nonlocal(H0) + _to_nonlocal(H1)


def check_compatibility(H0, H1, gens=None, trunc: int | None = None) -> CheckReport:
    """Jacobi identity for the sum H0 + H1.  When both summands are
    brackets themselves, this is exactly compatibility of the pair."""
    rep = check_jacobi(structure_sum(H0, H1), gens=gens, trunc=trunc)
    if rep.ok:
        return CheckReport(True, None, "the pair is compatible (sum is a bracket)")
    return CheckReport(False, rep.counterexample, "sum fails Jacobi: " + rep.detail)


# --------------------------------------------------------------------------
# the z-pencil
# --------------------------------------------------------------------------


def z_degree(f: DiffPoly) -> int:
    """Highest power of the central parameter z in the coefficients."""
    d = 0
    for _, c in f.terms():
        d = max(d, c.degree())
    return d


def z_coefficient(f: DiffPoly, k: int) -> DiffPoly:
    """Coefficient of z^k: a differential polynomial free of z."""
    return DiffPoly.from_terms(
        (mon, QZ.of(c.coeff(k))) for mon, c in f.terms()
    )


def split_pencil(M: MatPsiDO) -> tuple[MatPsiDO, MatPsiDO]:
    """Split a one-parameter family, linear in z, into the pair (H0, H1)
    under the fixed orientation ``M = H1 - z*H0``."""
    if not isinstance(M, MatPsiDO):
        raise TypeError("split_pencil expects an exact operator matrix")
    h0 = [[PsiDO.zero() for _ in range(M.cols)] for _ in range(M.rows)]
    h1 = [[PsiDO.zero() for _ in range(M.cols)] for _ in range(M.rows)]
    for i in range(M.rows):
        for j in range(M.cols):
            e = M.entry(i, j)
            if not e.exact:
                raise ValueError("pencil entries must be exact")
            c0: dict[int, DiffPoly] = {}
            c1: dict[int, DiffPoly] = {}
            for k, v in e.items():
                if z_degree(v) > 1:
                    raise ValueError(
                        f"entry ({i}, {j}) is quadratic in z; not a pencil"
                    )
                a = z_coefficient(v, 0)
                b = z_coefficient(v, 1)
                if a:
                    c0[k] = a
                if b:
                    c1[k] = -b
            h1[i][j] = PsiDO.from_dict(c0)
            h0[i][j] = PsiDO.from_dict(c1)
    return MatPsiDO.of(h0), MatPsiDO.of(h1)


def assemble_pencil(H0: MatPsiDO, H1: MatPsiDO) -> MatPsiDO:
    """The one-parameter family H1 - z*H0 (inverse of split_pencil)."""
    return H1 + H0.scale(-QZ.z())
