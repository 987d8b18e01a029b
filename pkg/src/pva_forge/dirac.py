"""Constraint modification and reduction of Hamiltonian operators.

Given a skewadjoint matrix of differential operators ``H`` acting on an
algebra of differential polynomials, and a vector ``theta`` of constraint
densities, form

    B = H o D*,    C = D o H o D*,    HD = H + B o C^{-1} o B*,

where ``D`` is the linearization (Frechet operator) of ``theta``.  The
modified operator ``HD`` keeps every Hamiltonian property of ``H`` while
making the constraints central: brackets of anything against a constraint
vanish.  Centrality is structural, not accidental -- the row identity

    D o HD = D o H + (D o B) o C^{-1} o B* = D o H + B* = 0

holds exactly because ``B* = (H o D*)* = -D o H`` for skewadjoint ``H``,
and the column identity follows the same way from ``C* = -C``.  When the
constraints are themselves generators this justifies deleting their rows
and columns after setting them to zero, which produces a structure on the
remaining generators whose nonlocal part has the canonical shape
``a d^{-1} o b``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diffalg import DiffPoly, frechet
from .psido import (
    MatPsiDO,
    NonlocalMat,
    NonlocalOp,
    PsiDO,
    RationalExpr,
    UnsupportedError,
    neumann_invert,
)
from .brackets import (
    DEFAULT_TRUNC,
    CheckReport,
    LambdaSeries,
    _apply_entry,
    master_bracket,
)
from .liedata import inverse_matrix

__all__ = [
    "DiracData",
    "check_centrality",
    "constraint_matrices",
    "dirac_bracket",
    "dirac_modify",
    "frechet_operator",
    "quotient_reduce",
]


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------


def frechet_operator(vec, ngens: int) -> MatPsiDO:
    """Linearization of a vector of densities as a matrix operator: the
    entry in row a, column i is  sum_n (d vec_a / d u_i^(n)) d^n."""
    return MatPsiDO.from_dop_table(frechet(tuple(vec), ngens))


def _as_theta(theta) -> tuple[DiffPoly, ...]:
    if isinstance(theta, DiffPoly):
        raise ValueError("pass the constraints as a sequence of densities")
    out = tuple(
        t if isinstance(t, DiffPoly) else DiffPoly.const(t) for t in theta
    )
    if not out:
        raise ValueError("need at least one constraint")
    return out


def _require_local_square(H) -> None:
    if not isinstance(H, MatPsiDO):
        raise ValueError("the structure must be a matrix of differential operators")
    if H.rows != H.cols:
        raise ValueError("the structure matrix must be square")
    if not H.is_exact():
        raise ValueError("the structure matrix must be exact, not truncated")
    for row in H.m:
        for e in row:
            mo = e.min_order()
            if mo is not None and mo < 0:
                raise ValueError(
                    "the structure matrix must be purely differential"
                )


def _is_zero_mat(M: MatPsiDO) -> bool:
    return M.is_exact() and all(not e.c for row in M.m for e in row)


def _series_operator(s: LambdaSeries) -> PsiDO:
    if not s.exact:
        raise RuntimeError("bracket of polynomial arguments should be exact")
    return PsiDO.from_dict(dict(s.c))


def _gen_index(t: DiffPoly, ngens: int) -> int | None:
    for k in range(ngens):
        if not (t - DiffPoly.gen(k)):
            return k
    return None


# --------------------------------------------------------------------------
# constraint matrices
# --------------------------------------------------------------------------


def constraint_matrices(H: MatPsiDO, theta) -> tuple[MatPsiDO, MatPsiDO]:
    """Coupling and pairing matrices of a constraint vector.

    ``B = H o D*`` (one column per constraint) and ``C = D o H o D*``; the
    symbol of ``C[a][b]`` is the bracket of constraint ``b`` against
    constraint ``a``, and the symbol of ``B[r][a]`` is the bracket of
    constraint ``a`` against generator ``r``.  Both routes are evaluated
    and must agree exactly; ``C`` is verified skewadjoint.
    """
    th = _as_theta(theta)
    _require_local_square(H)
    n, m = H.rows, len(th)
    Dm = frechet_operator(th, n)
    B = H.compose(Dm.adjoint())
    C = Dm.compose(B)
    for a in range(m):
        for r in range(n):
            s = master_bracket(H, th[a], DiffPoly.gen(r))
            if not B.entry(r, a).agrees_with(_series_operator(s)):
                raise RuntimeError(
                    "internal inconsistency: composition and bracket routes "
                    f"disagree on coupling entry ({r}, {a})"
                )
        for b in range(m):
            s = master_bracket(H, th[b], th[a])
            if not C.entry(a, b).agrees_with(_series_operator(s)):
                raise RuntimeError(
                    "internal inconsistency: composition and bracket routes "
                    f"disagree on pairing entry ({a}, {b})"
                )
    if not C.adjoint().agrees_with(C.scale(-1)):
        raise ValueError(
            "constraint pairing is not skewadjoint; the input structure "
            "must be skewadjoint"
        )
    return B, C


# --------------------------------------------------------------------------
# modification
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DiracData:
    """A structure together with its constraint modification.

    ``HD`` is kept in structured form (a sum of composition chains with an
    unexpanded inverse); it is only ever expanded for verification, never
    for the structural arguments.
    """

    theta: tuple[DiffPoly, ...]
    H: MatPsiDO
    D: MatPsiDO
    B: MatPsiDO
    C: MatPsiDO
    HD: RationalExpr

    @property
    def ngens(self) -> int:
        return self.H.rows


def dirac_modify(H: MatPsiDO, theta) -> DiracData:
    """Modify a skewadjoint structure so the constraints become central.

    When the coupling ``B`` vanishes the constraints are already central
    and the structure is returned unchanged (no inversion of ``C`` is
    attempted).  Otherwise the pairing must have a constant invertible
    leading coefficient matrix."""
    th = _as_theta(theta)
    _require_local_square(H)
    Dm = frechet_operator(th, H.rows)
    B, C = constraint_matrices(H, th)
    if _is_zero_mat(B):
        HD = RationalExpr.of(H)
    else:
        # fail early if the pairing cannot be inverted in our class
        neumann_invert(C, -2 - max(C.order() or 0, 0))
        HD = RationalExpr.of(H) + RationalExpr.product(
            [B, ("inv", C), B.adjoint()]
        )
    return DiracData(theta=th, H=H, D=Dm, B=B, C=C, HD=HD)


def dirac_bracket(data: DiracData, f, g, floor: int | None = None) -> LambdaSeries:
    """Corrected bracket of two densities:

        {f la g}  -  sum_{a,b} ({theta_b la g} with la -> la+d, acting on)
                               Cinv[b][a](la+d) {f la theta_a}.

    Exact whenever the pairing inverts exactly without negative orders
    (constant ``C``); otherwise carries the emergent reliability floor,
    deepened until the requested window is certified."""
    base = master_bracket(data.H, f, g)
    if _is_zero_mat(data.B):
        return base
    m = len(data.theta)
    S = [master_bracket(data.H, f, t) for t in data.theta]
    W = [_series_operator(master_bracket(data.H, t, g)) for t in data.theta]
    target = floor if floor is not None else -(DEFAULT_TRUNC + 2)
    extra = 2
    for _ in range(6):
        eff = target - extra
        Cinv = neumann_invert(data.C, eff)
        corr = LambdaSeries.zero()
        for b in range(m):
            for a in range(m):
                e = Cinv.entry(b, a)
                if not e.c and e.floor is None:
                    continue
                y = _apply_entry(e, S[a], eff)
                corr = corr + _apply_entry(W[b], y, eff)
        out = base - corr
        if out.floor is None or out.floor <= target:
            return out
        extra += (out.floor - target) + 1
    raise RuntimeError("corrected bracket did not reach the requested depth")


# --------------------------------------------------------------------------
# centrality
# --------------------------------------------------------------------------


def check_centrality(
    data: DiracData, trunc: int | None = None, structural: bool = True
) -> CheckReport:
    """Certify that every constraint is central for the modified structure.

    The structural route proves it exactly:  the constraint rows of the
    modified operator are ``D o H + B*`` (the pairing cancels against its
    inverse), which vanishes identically for skewadjoint input, and the
    constraint columns vanish the same way through ``C* = -C``.  If the
    structural identities do not hold (e.g. on doctored data) the brackets
    of every generator against every constraint are expanded and checked
    to the requested depth."""
    n = DEFAULT_TRUNC if trunc is None else trunc
    if structural:
        rows = data.D.compose(data.H) + data.B.adjoint()
        cols_ok = data.D.compose(data.B).agrees_with(data.C)
        skew_ok = data.C.adjoint().agrees_with(data.C.scale(-1))
        if _is_zero_mat(rows) and cols_ok and skew_ok:
            return CheckReport(
                True,
                detail="structural: D o H + B* = 0 and C = D o B skewadjoint",
            )
    for a, t in enumerate(data.theta):
        for i in range(data.ngens):
            u = DiffPoly.gen(i)
            for f, h, side in ((u, t, "row"), (t, u, "column")):
                s = dirac_bracket(data, f, h, floor=-(n + 1))
                ok, off = s.window_clear(n)
                if not ok:
                    return CheckReport(
                        False,
                        counterexample=(side, i, a),
                        detail=(
                            f"bracket of generator {i} with constraint {a} "
                            f"({side} side) does not vanish: {off}"
                        ),
                    )
    return CheckReport(True, detail=f"expansion to depth {n}")


# --------------------------------------------------------------------------
# quotient
# --------------------------------------------------------------------------


def quotient_reduce(data: DiracData) -> NonlocalMat:
    """Structure induced on the remaining generators after the constraints
    (which must themselves be generators) are set to zero.

    Centrality makes the constrained rows and columns vanish, so they are
    deleted; the surviving generators are renumbered consecutively.  The
    correction term is re-assembled over the quotient: it vanishes when the
    reduced coupling does, stays local when the reduced pairing is a
    constant matrix, and takes the canonical ``a d^{-1} o b`` shape when
    the reduced pairing is ``G d`` with constant invertible ``G``."""
    n, m = data.ngens, len(data.theta)
    cons: list[int] = []
    for t in data.theta:
        k = _gen_index(t, n)
        if k is None:
            raise ValueError("constraints must be generators to pass to the quotient")
        cons.append(k)
    if len(set(cons)) != m:
        raise ValueError("repeated constraint generator")
    kset = set(cons)
    rest = [i for i in range(n) if i not in kset]
    remap = {old: new for new, old in enumerate(rest)}

    def sub(pol: DiffPoly) -> DiffPoly:
        return pol.subs_gens_zero(kset).remap_gens(remap)

    def sub_op(e: PsiDO) -> PsiDO:
        out = {}
        for k, c in e.items():
            q = sub(c)
            if q:
                out[k] = q
        return PsiDO.from_dict(out)

    local = MatPsiDO.of(
        [[sub_op(data.H.entry(r, c)) for c in rest] for r in rest]
    ) if rest else MatPsiDO.zero(0, 0)

    Bbar: list[list[DiffPoly]] = []
    for r in rest:
        row = []
        for a in range(m):
            e = sub_op(data.B.entry(r, a))
            if e.order() is not None and e.order() > 0:
                raise UnsupportedError(
                    "reduced coupling is not a multiplication operator"
                )
            row.append(e.coeff(0))
        Bbar.append(row)

    if all(not b for row in Bbar for b in row):
        return NonlocalMat.of(
            [[NonlocalOp(local.entry(i, j)) for j in range(len(rest))]
             for i in range(len(rest))]
        )

    Cbar = [[sub_op(data.C.entry(a, b)) for b in range(m)] for a in range(m)]
    t = None
    for row in Cbar:
        for e in row:
            for k, c in e.items():
                if c:
                    t = k if t is None else max(t, k)
    if t is None:
        raise UnsupportedError("reduced pairing vanishes; cannot invert")
    for row in Cbar:
        for e in row:
            for k, c in e.items():
                if c and k != t:
                    raise UnsupportedError(
                        "reduced pairing mixes orders; need G or G d"
                    )
    if t not in (0, 1):
        raise UnsupportedError("reduced pairing is not of the form G or G d")
    G = []
    for a in range(m):
        grow = []
        for b in range(m):
            c = Cbar[a][b].coeff(t)
            if not c.is_constant():
                raise UnsupportedError("reduced pairing has non-constant entries")
            qz = c.const_part()
            if qz.degree() > 0:
                raise UnsupportedError("reduced pairing depends on the pencil parameter")
            grow.append(qz.coeff(0))
        G.append(tuple(grow))
    try:
        Ginv = inverse_matrix(tuple(G))
    except ValueError:
        raise UnsupportedError("reduced pairing is singular") from None

    if t == 1:
        Mt = [[Bbar[i][a] for i in range(len(rest))] for a in range(m)]
        return NonlocalMat.from_structured(local, Bbar, Ginv, Mt)

    # constant pairing: the correction is a matrix of multiplications
    entries = []
    for i in range(len(rest)):
        row = []
        for j in range(len(rest)):
            corr = DiffPoly.zero()
            for a in range(m):
                for b in range(m):
                    corr = corr + (Bbar[i][a] * Bbar[j][b]).scale(Ginv[a][b])
            row.append(NonlocalOp(local.entry(i, j) + PsiDO.of(corr)))
        entries.append(row)
    return NonlocalMat.of(entries)
