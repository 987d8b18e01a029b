"""Lenard recursion driver for bi-Hamiltonian ladders.

A ladder interleaves densities and flows of two compatible structures,

    H1 . dh_n = P_n,        H0 . dh_(n+1) = P_n,

so each step solves the first structure for the next covector, rebuilds
the density by the variational homotopy, and pushes the covector through
the second structure to obtain the next flow.  The second structure may
be nonlocal: association is then certified, never guessed.  For each
antisymmetrized tail a d^(-1) b the driver collects, per flow component,
the combined integrand of all tails pointing along the same direction a;
the association exists iff every such integrand is a total derivative,
and the integral (with integration constant zero) re-enters the flow as
a multiplier of a.  On a modified structure carrying its constraint data
the certificate is sharper: when the adjoint coupling annihilates the
covector, the nonlocal correction vanishes identically and the flow is
the plain local application.

The driver records every accepted rung (density, covector, flow,
certificate) and offers the three classical integrability checks on the
stored ladder: pairwise involution of the densities, commutativity of
the flows, and linear independence over constants decided by exact
linear algebra.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .brackets import CheckReport
from .diffalg import (
    DiffPoly,
    NotTotalDerivativeError,
    antiderivative,
    density_equal,
    evolutionary_apply,
    is_exact,
    variational_derivative,
    variational_integrate,
    vf_commutator,
)
from .dirac import DiracData
from .liedata import inverse_matrix
from .psido import MatPsiDO, NonlocalMat, PsiDO, UnsupportedError

__all__ = [
    "AssociationCertificate",
    "AssociationError",
    "HierarchyState",
    "LenardObstruction",
    "Rung",
    "associate",
    "commutativity_check",
    "h0_solve",
    "independence_check",
    "involution_check",
    "lenard_step",
    "run_hierarchy",
    "state_from_fixture",
    "verify_ladder",
]


class AssociationError(Exception):
    """A covector could not be certifiably associated to a flow."""


class LenardObstruction(Exception):
    """The recursion cannot be continued (solver or exactness failure)."""


@dataclass(frozen=True)
class AssociationCertificate:
    """How a flow was certified: ``local`` (plain differential operator),
    ``zero-integrand`` (all nonlocal tails cancel), ``antiderivative``
    (tails integrate to differential polynomials), ``constraint-annihilated``
    (the adjoint coupling kills the covector), ``seed`` (given datum), or
    ``fixture`` (verified ladder pair)."""

    method: str
    detail: str = ""


@dataclass(frozen=True)
class Rung:
    density: Optional[DiffPoly]
    covector: Optional[tuple]
    flow: tuple
    certificate: AssociationCertificate


@dataclass(frozen=True)
class HierarchyState:
    H0: MatPsiDO
    H1: Union[MatPsiDO, NonlocalMat, DiracData]
    rungs: tuple

    def densities(self) -> tuple:
        return tuple(r.density for r in self.rungs)

    def covectors(self) -> tuple:
        return tuple(r.covector for r in self.rungs)

    def flows(self) -> tuple:
        return tuple(r.flow for r in self.rungs)

    def certificates(self) -> tuple:
        return tuple(r.certificate for r in self.rungs)


# --------------------------------------------------------------------------
# association
# --------------------------------------------------------------------------


def _poly_key(p: DiffPoly):
    """Canonical hashable form of a differential polynomial."""
    items = []
    for mon, coeff in p.terms():
        items.append(
            (mon, tuple(coeff.coeff(k) for k in range(coeff.degree() + 1)))
        )
    return tuple(sorted(items))


def _direction(a: DiffPoly):
    """Split ``a`` into a canonical direction and a rational scalar, so
    tails whose first factors are proportional share one kernel term."""
    lead = max(mon for mon, _ in a.terms())
    coeff = None
    for mon, qz in a.terms():
        if mon == lead:
            coeff = qz
            break
    if coeff is None or coeff.degree() != 0:
        return _poly_key(a), Fraction(1), a
    scalar = coeff.coeff(0)
    canon = a.scale(1 / scalar)
    return _poly_key(canon), scalar, canon


def _require_vector(xi, length: int) -> tuple:
    xi = tuple(xi)
    if len(xi) != length:
        raise ValueError(
            f"covector has {len(xi)} components, expected {length}"
        )
    return xi


def _associate_local(H: MatPsiDO, xi: tuple):
    for i in range(H.rows):
        for j in range(H.cols):
            entry = H.entry(i, j)
            lo = entry.min_order()
            if entry.floor is not None or (lo is not None and lo < 0):
                raise UnsupportedError(
                    "local structure must be a differential operator"
                )
    return H.apply_cov(xi), AssociationCertificate("local", "P = H xi")


def _associate_nonlocal(H: NonlocalMat, xi: tuple):
    out = list(H.local_mat().apply_cov(xi))
    integrated = False
    for r in range(H.rows):
        groups: dict = {}
        for col in range(H.cols):
            for a, b in H.entry(r, col).pairs:
                key, scalar, canon = _direction(a)
                contribution = (b * xi[col]).scale(scalar)
                acc = groups.get(key)
                if acc is None:
                    groups[key] = [canon, contribution]
                else:
                    acc[1] = acc[1] + contribution
        for canon, integrand in groups.values():
            if not integrand:
                continue
            try:
                tail = antiderivative(integrand)
            except NotTotalDerivativeError as exc:
                raise AssociationError(
                    f"association not certified: component {r}: {exc}"
                ) from exc
            integrated = True
            out[r] = out[r] + canon * tail
    method = "antiderivative" if integrated else "zero-integrand"
    detail = (
        "nonlocal tails integrated exactly"
        if integrated
        else "all nonlocal tails cancel"
    )
    return tuple(out), AssociationCertificate(method, detail)


def _associate_constrained(data: DiracData, xi: tuple):
    residual = data.B.adjoint().apply_cov(xi)
    if any(residual):
        raise AssociationError(
            "association not certified: the covector does not annihilate "
            "the constraint coupling"
        )
    P = data.H.apply_cov(xi)
    for k, t in enumerate(data.theta):
        if evolutionary_apply(P, t):
            raise AssociationError(
                f"association not certified: the flow moves constraint {k}"
            )
    return P, AssociationCertificate(
        "constraint-annihilated", "B* xi = 0, so the nonlocal term vanishes"
    )


def associate(H, xi):
    """Flow associated to the covector ``xi`` by the structure ``H``,
    together with a certificate of how the nonlocal part was handled.

    ``H`` may be a local matrix operator, a nonlocal matrix, or the
    constraint data of a modified structure.  Raises
    :class:`AssociationError` when no differential-polynomial flow can
    be certified.
    """
    if isinstance(H, DiracData):
        return _associate_constrained(H, _require_vector(xi, H.ngens))
    if isinstance(H, MatPsiDO):
        return _associate_local(H, _require_vector(xi, H.cols))
    if isinstance(H, NonlocalMat):
        return _associate_nonlocal(H, _require_vector(xi, H.cols))
    raise TypeError(f"cannot associate along {type(H).__name__}")


# --------------------------------------------------------------------------
# solving the first structure
# --------------------------------------------------------------------------


def _entry_scalars(e: PsiDO):
    """Decompose an entry of a block-solvable structure as a0 + a1 d with
    rational constants a0, a1."""
    if e.floor is not None:
        raise UnsupportedError("first structure must be a differential operator")
    a0 = Fraction(0)
    a1 = Fraction(0)
    for order, coeff in e.items():
        if order not in (0, 1):
            raise UnsupportedError(
                "first structure entries must have order at most one"
            )
        if not coeff.is_constant():
            raise UnsupportedError(
                "first structure entries must have constant coefficients"
            )
        qz = coeff.const_part()
        if qz.degree() > 0:
            raise UnsupportedError(
                "first structure entries must not depend on the pencil "
                "parameter"
            )
        if order == 0:
            a0 = qz.coeff(0)
        else:
            a1 = qz.coeff(0)
    return a0, a1


def h0_solve(H0: MatPsiDO, P) -> tuple:
    """Solve ``H0 . xi = P`` exactly for a block-solvable first structure.

    Every row must act either by an invertible constant matrix or by
    constant multiples of the derivative; derivative rows are integrated
    with integration constant zero.  The solution is verified by
    substitution.  Raises :class:`UnsupportedError` for shapes outside
    this class and :class:`LenardObstruction` when a derivative row's
    right-hand side is not a total derivative.
    """
    if not isinstance(H0, MatPsiDO):
        raise TypeError("first structure must be a local matrix operator")
    if H0.rows != H0.cols:
        raise UnsupportedError("first structure must be square")
    n = H0.rows
    P = _require_vector(P, n)
    mult = [[Fraction(0)] * n for _ in range(n)]
    der = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            mult[i][j], der[i][j] = _entry_scalars(H0.entry(i, j))
    matrix = []
    rhs = []
    for i in range(n):
        has_mult = any(mult[i])
        has_der = any(der[i])
        if has_mult and has_der:
            raise UnsupportedError(
                f"row {i} mixes multiplication and derivative action"
            )
        if not has_mult and not has_der:
            raise UnsupportedError(f"row {i} of the first structure vanishes")
        if has_mult:
            matrix.append(tuple(mult[i]))
            rhs.append(P[i])
        else:
            matrix.append(tuple(der[i]))
            try:
                rhs.append(antiderivative(P[i]))
            except NotTotalDerivativeError as exc:
                raise LenardObstruction(
                    f"component {i} of the flow is not a total derivative"
                ) from exc
    try:
        inv = inverse_matrix(tuple(matrix))
    except ValueError as exc:
        raise UnsupportedError(
            "first structure has a singular block matrix"
        ) from exc
    xi = tuple(
        sum(
            (rhs[k].scale(inv[j][k]) for k in range(n) if inv[j][k]),
            DiffPoly.zero(),
        )
        for j in range(n)
    )
    if H0.apply_cov(xi) != P:
        raise LenardObstruction(
            "solving the first structure failed verification by substitution"
        )
    return xi


# --------------------------------------------------------------------------
# the recursion
# --------------------------------------------------------------------------


def _advance(H0: MatPsiDO, H1, flow: tuple) -> Rung:
    xi = h0_solve(H0, flow)
    ok, _ = is_exact(xi)
    if not ok:
        raise LenardObstruction(
            "the solved covector is not a variational gradient"
        )
    h = variational_integrate(xi)
    P, cert = associate(H1, xi)
    return Rung(h, xi, P, cert)


def lenard_step(H0: MatPsiDO, H1, h_prev: DiffPoly):
    """One rung of the recursion: push ``h_prev`` through the second
    structure, solve the first structure for the next covector, and
    integrate it to the next density.  Returns ``(h_next, P)`` where
    ``P`` is the flow shared by both densities."""
    xi_prev = variational_derivative(h_prev, H0.rows)
    P, _ = associate(H1, xi_prev)
    xi = h0_solve(H0, P)
    ok, _ = is_exact(xi)
    if not ok:
        raise LenardObstruction(
            "the solved covector is not a variational gradient"
        )
    return variational_integrate(xi), P


def run_hierarchy(pack, depth: int) -> HierarchyState:
    """Run the recursion for ``depth`` steps beyond the seed rung.

    The pack provides ``H0``, ``H1`` and either a ``seed_density`` (whose
    covector the first structure must annihilate) or, when the natural
    seed density dies in a quotient, a ``seed_flow``.  Failures carry the
    index of the step at which the scheme stopped.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    H0 = pack.H0
    H1 = pack.H1
    seed_density = getattr(pack, "seed_density", None)
    if seed_density is not None:
        xi0 = variational_derivative(seed_density, H0.rows)
        if any(H0.apply_cov(xi0)):
            raise LenardObstruction(
                "step 0: the seed density is not annihilated by the first "
                "structure"
            )
        try:
            P0, cert = associate(H1, xi0)
        except (AssociationError, UnsupportedError) as exc:
            raise LenardObstruction(f"step 0: {exc}") from exc
        rungs = [Rung(seed_density, xi0, P0, cert)]
    else:
        seed_flow = getattr(pack, "seed_flow", None)
        if seed_flow is None:
            raise ValueError(
                "pack must provide a seed density or a seed flow"
            )
        rungs = [
            Rung(
                None,
                None,
                tuple(seed_flow),
                AssociationCertificate("seed", "given seed flow"),
            )
        ]
    for n in range(1, depth + 1):
        try:
            rungs.append(_advance(H0, H1, rungs[-1].flow))
        except (
            AssociationError,
            LenardObstruction,
            UnsupportedError,
            NotTotalDerivativeError,
        ) as exc:
            raise LenardObstruction(f"step {n}: {exc}") from exc
    return HierarchyState(H0, H1, tuple(rungs))


# --------------------------------------------------------------------------
# fixture-pair ladders
# --------------------------------------------------------------------------


def verify_ladder(H0: MatPsiDO, H1, densities, flows) -> CheckReport:
    """Check that given densities and flows satisfy both recursion
    relations: each flow is associated to its density by the second
    structure and equals the first structure applied to the next
    covector; the first covector must be annihilated by the first
    structure."""
    densities = tuple(densities)
    flows = tuple(tuple(Q) for Q in flows)
    if len(flows) not in (len(densities) - 1, len(densities)):
        raise ValueError(
            "need one flow per density, possibly omitting the last"
        )
    covectors = [variational_derivative(h, H0.rows) for h in densities]
    if any(H0.apply_cov(covectors[0])):
        return CheckReport(
            False,
            ("seed", 0),
            "the first density is not annihilated by the first structure",
        )
    for n, Q in enumerate(flows):
        try:
            P, _ = associate(H1, covectors[n])
        except AssociationError as exc:
            return CheckReport(False, ("associate", n), str(exc))
        if P != Q:
            return CheckReport(
                False,
                ("second-structure", n),
                f"flow {n} is not associated to density {n}",
            )
        if n + 1 < len(covectors) and H0.apply_cov(covectors[n + 1]) != Q:
            return CheckReport(
                False,
                ("first-structure", n + 1),
                f"flow {n} does not descend from density {n + 1}",
            )
    return CheckReport(
        True, detail=f"verified {len(flows)} ladder relations"
    )


def state_from_fixture(H0: MatPsiDO, H1, densities, flows) -> HierarchyState:
    """Package verified (density, flow) pairs as a hierarchy state, for
    structures whose first operator cannot be solved (e.g. it has zero
    rows on the surviving generators)."""
    densities = tuple(densities)
    flows = tuple(tuple(Q) for Q in flows)
    report = verify_ladder(H0, H1, densities, flows)
    if not report:
        raise LenardObstruction(
            f"fixture ladder failed at {report.counterexample}: "
            f"{report.detail}"
        )
    rungs = tuple(
        Rung(
            densities[n],
            variational_derivative(densities[n], H0.rows),
            flows[n],
            AssociationCertificate("fixture", "verified ladder pair"),
        )
        for n in range(len(flows))
    )
    return HierarchyState(H0, H1, rungs)


# --------------------------------------------------------------------------
# integrability checks
# --------------------------------------------------------------------------


def involution_check(state: HierarchyState, other=None) -> CheckReport:
    """All stored densities Poisson-commute: the pairing of every flow
    with every covector (of ``other``, default the same state) must be a
    total derivative."""
    second = state if other is None else other
    count = 0
    for pair in ((state, second), (second, state)):
        src, dst = pair
        for m, Q in enumerate(src.flows()):
            for n, xi in enumerate(dst.covectors()):
                if xi is None:
                    continue
                pairing = sum(
                    (Qi * xii for Qi, xii in zip(Q, xi, strict=True)),
                    DiffPoly.zero(),
                )
                if not density_equal(pairing, DiffPoly.zero()):
                    return CheckReport(
                        False,
                        (m, n),
                        f"pairing of flow {m} with covector {n} is not a "
                        "total derivative",
                    )
                count += 1
        if other is None:
            break
    return CheckReport(True, detail=f"{count} pairings vanish as densities")


def commutativity_check(state: HierarchyState) -> CheckReport:
    """All stored flows commute as evolutionary vector fields."""
    flows = state.flows()
    count = 0
    for m in range(len(flows)):
        for n in range(m + 1, len(flows)):
            if any(vf_commutator(flows[m], flows[n])):
                return CheckReport(
                    False, (m, n), f"flows {m} and {n} do not commute"
                )
            count += 1
    return CheckReport(True, detail=f"{count} commutators vanish")


def _fingerprint(vec: tuple) -> dict:
    row: dict = {}
    for i, p in enumerate(vec):
        for mon, qz in p.terms():
            for k in range(qz.degree() + 1):
                val = qz.coeff(k)
                if val:
                    row[(i, mon, k)] = val
    return row


def _first_dependent(rows) -> Optional[int]:
    pivots = []
    for idx, row in enumerate(rows):
        r = dict(row)
        for key, prow in pivots:
            factor = r.get(key)
            if factor:
                for k2, v in prow.items():
                    nv = r.get(k2, Fraction(0)) - factor * v
                    if nv:
                        r[k2] = nv
                    else:
                        r.pop(k2, None)
        if not r:
            return idx
        key = min(r)
        inv = 1 / r[key]
        pivots.append((key, {k2: v * inv for k2, v in r.items()}))
    return None


def independence_check(state: HierarchyState) -> CheckReport:
    """The stored flows, and likewise the stored covectors, are linearly
    independent over constants (exact elimination on their coefficient
    vectors)."""
    families = (
        ("flow", state.flows()),
        ("covector", tuple(c for c in state.covectors() if c is not None)),
    )
    for label, vectors in families:
        dep = _first_dependent([_fingerprint(v) for v in vectors])
        if dep is not None:
            return CheckReport(
                False,
                (label, dep),
                f"{label} {dep} depends linearly on earlier ones",
            )
    total = len(families[0][1]) + len(families[1][1])
    return CheckReport(
        True, detail=f"{total} vectors independent over constants"
    )
