"""Oracle tests for the Lenard recursion driver.

Frozen values: every density, covector and flow below was computed by
hand before the implementation existed, by walking the recursion

    H1 . dh_n = P_n = H0 . dh_{n+1}

explicitly.  Two ladders are used throughout:

* the scalar pair H0 = [[d]], H1 = [[d^3 + 2u d + u']] (the classical
  KdV pair), whose rungs are

      h0 = u,          xi0 = (1,),            P0 = (u',)
      h1 = u^2/2,      xi1 = (u,),            P1 = (u''' + 3uu',)
      h2 ~ uu''/2 + u^3/2,  xi2 = (u'' + 3u^2/2,),
      P2 = (u''''' + 10u'u'' + 5uu''' + 15/2 u^2u',)

  where each xi is found by one antiderivative and each P by applying
  H1, e.g.  H1(u'' + 3u^2/2) = u''''' + 3/2(u^2)''' + 2u(u''' + 3uu')
  + u'(u'' + 3u^2/2) and (u^2)''' = 6u'u'' + 2uu'''.

* the frozen nonlocal two-generator pair of the reduction tests (the
  NLS pair), whose rungs are derived inside the tests below.
"""

import dataclasses
from fractions import Fraction
from types import SimpleNamespace

import pytest

from pva_forge.diffalg import (
    DiffPoly,
    density_equal,
    evolutionary_apply,
    variational_derivative,
)
from pva_forge.psido import (
    MatPsiDO,
    NonlocalMat,
    NonlocalOp,
    PsiDO,
    UnsupportedError,
)
from pva_forge.dirac import dirac_modify
from pva_forge.magri import (
    AssociationError,
    HierarchyState,
    LenardObstruction,
    Rung,
    associate,
    commutativity_check,
    h0_solve,
    independence_check,
    involution_check,
    lenard_step,
    run_hierarchy,
    state_from_fixture,
    verify_ladder,
)


def g(i=0, n=0):
    return DiffPoly.gen(i, n)


def c(v):
    return DiffPoly.const(Fraction(v))


D = PsiDO.d
one = DiffPoly.one()


def _kdv_pair():
    # H0 = d, H1 = d^3 + 2u d + u' on a single generator u.
    u, up = g(0), g(0, 1)
    H0 = MatPsiDO.of([[D()]])
    H1 = MatPsiDO.of([[PsiDO.from_dict({3: one, 1: u.scale(2), 0: up})]])
    return H0, H1


def _nls_pair():
    """Frozen nonlocal pair on generators (p, q) -> (0, 1), identical to
    the fixture of the reduction tests."""
    p, q = g(0), g(1)
    H0 = MatPsiDO.of([
        [PsiDO.zero(), PsiDO.of(c(2))],
        [PsiDO.of(c(-2)), PsiDO.zero()],
    ])
    H1 = NonlocalMat.of([
        [NonlocalOp.local_zero().with_pairs([(p.scale(2), p)]),
         NonlocalOp(D(), [(p.scale(-2), q)])],
        [NonlocalOp(D(), [(q.scale(-2), p)]),
         NonlocalOp.local_zero().with_pairs([(q.scale(2), q)])],
    ])
    return H0, H1


def _nls_pack():
    H0, H1 = _nls_pair()
    # Downstairs the seed density lies in the constrained span, so the
    # ladder is seeded by its flow alone: dp/dt0 = 2p, dq/dt0 = -2q.
    return SimpleNamespace(
        H0=H0, H1=H1, seed_density=None,
        seed_flow=(g(0).scale(2), g(1).scale(-2)),
    )


def _affine_sl2():
    """Generators (x, p, q); the z^0 part H1 of the affine pencil and the
    coefficient H0 of -z, both taken from the bracket-test fixture."""
    x, p, q = g(0), g(1), g(2)
    H1 = MatPsiDO.of([
        [D().scale(2), PsiDO.of(p.scale(-2)), PsiDO.of(q.scale(2))],
        [PsiDO.of(p.scale(2)), PsiDO.zero(), PsiDO.from_dict({0: -x, 1: one})],
        [PsiDO.of(q.scale(-2)), PsiDO.from_dict({0: x, 1: one}),
         PsiDO.zero()],
    ])
    H0 = MatPsiDO.of([
        [PsiDO.zero(), PsiDO.zero(), PsiDO.zero()],
        [PsiDO.zero(), PsiDO.zero(), PsiDO.of(c(2))],
        [PsiDO.zero(), PsiDO.of(c(-2)), PsiDO.zero()],
    ])
    return H0, H1


# ------------------------------------------------------------- associate


def test_associate_local_matrix():
    # H1(u) = u''' + 2u u' + u' u = u''' + 3uu'.
    _, H1 = _kdv_pair()
    P, cert = associate(H1, (g(0),))
    assert P == (g(0, 3) + (g(0) * g(0, 1)).scale(3),)
    assert cert.method == "local"


def test_associate_rejects_wrong_length():
    _, H1 = _kdv_pair()
    with pytest.raises(ValueError):
        associate(H1, (g(0), g(0)))


def test_associate_nonlocal_zero_integrand():
    # xi1 = (q, p).  Local part gives (p', q').  Row 0 carries the pairs
    # (2p, p) and (-2p, q): both point along p, and the combined
    # integrand is 2(p q) - 2(q p) = 0, so no antiderivative is needed.
    # Row 1 is the mirror image.
    _, H1 = _nls_pair()
    p, q = g(0), g(1)
    P, cert = associate(H1, (q, p))
    assert P == (g(0, 1), g(1, 1))
    assert cert.method == "zero-integrand"


def test_associate_nonlocal_antiderivative():
    # xi2 = (-q'/2, p'/2).  Row 0 integrand:
    #   2 p (-q'/2) - 2 q (p'/2) = -(pq)'   with antiderivative -pq,
    # contributing p.(-pq) = -p^2 q on top of the local part d(p'/2);
    # row 1 integrand is (pq)' with antiderivative pq, contributing
    # q.(pq) = p q^2 on top of d(-q'/2).  Hence
    #   P2 = (p''/2 - p^2 q, -q''/2 + p q^2),
    # the coupled Schrodinger flow.
    _, H1 = _nls_pair()
    p, q = g(0), g(1)
    xi2 = (g(1, 1).scale(Fraction(-1, 2)), g(0, 1).scale(Fraction(1, 2)))
    P, cert = associate(H1, xi2)
    assert P == (
        g(0, 2).scale(Fraction(1, 2)) - (p * p * q),
        g(1, 2).scale(Fraction(-1, 2)) + (p * q * q),
    )
    assert cert.method == "antiderivative"


def test_associate_nonlocal_obstruction():
    # xi = (p, 0): row 0 integrand 2p.p = 2p^2 is not a total
    # derivative (its variational derivative is 4p), so association
    # must be refused, not guessed.
    _, H1 = _nls_pair()
    with pytest.raises(AssociationError, match="not certified"):
        associate(H1, (g(0), DiffPoly.zero()))


def test_associate_structured_constraint_shortcut():
    # Constraining the Cartan coordinate x of the affine sl2 structure
    # gives B = H1 column 0, so B* = (-2d, 2p, -2q) as a row.  For
    # xi = (0, q, p): B*xi = 2pq - 2qp = 0, hence P = H1 xi with F = 0:
    #   P = (0, p' - xp, q' + xq).
    _, H1 = _affine_sl2()
    x, p, q = g(0), g(1), g(2)
    data = dirac_modify(H1, (x,))
    P, cert = associate(data, (DiffPoly.zero(), q, p))
    assert P == (DiffPoly.zero(), g(1, 1) - x * p, g(2, 1) + x * q)
    assert cert.method == "constraint-annihilated"
    # the flow leaves the constraint invariant
    assert not evolutionary_apply(P, x)


def test_associate_structured_constraint_obstruction():
    # xi = (0, q, 0) has B*xi = 2pq != 0.
    _, H1 = _affine_sl2()
    data = dirac_modify(H1, (g(0),))
    with pytest.raises(AssociationError, match="not certified"):
        associate(data, (DiffPoly.zero(), g(2), DiffPoly.zero()))


# -------------------------------------------------------------- h0_solve


def test_h0_solve_constant_block():
    # [[0, 2], [-2, 0]] xi = (2p, -2q)  =>  xi = (q, p).
    H0, _ = _nls_pair()
    xi = h0_solve(H0, (g(0).scale(2), g(1).scale(-2)))
    assert xi == (g(1), g(0))


def test_h0_solve_derivative_block():
    # 3 xi' = 6uu'  =>  xi = u^2 (integration constant fixed to zero).
    H0 = MatPsiDO.of([[D().scale(3)]])
    xi = h0_solve(H0, ((g(0) * g(0, 1)).scale(6),))
    assert xi == (g(0) * g(0),)


def test_h0_solve_mixed_blocks():
    # Rows 0,1 form a constant block, row 2 a derivative block:
    #   (2 xi_1, -2 xi_0, 3 xi_2') = (2 u0', -2 u1^2, 6 u2 u2')
    # solves to xi = (u1^2, u0', u2^2).
    H0 = MatPsiDO.of([
        [PsiDO.zero(), PsiDO.of(c(2)), PsiDO.zero()],
        [PsiDO.of(c(-2)), PsiDO.zero(), PsiDO.zero()],
        [PsiDO.zero(), PsiDO.zero(), D().scale(3)],
    ])
    P = (g(0, 1).scale(2), (g(1) * g(1)).scale(-2), (g(2) * g(2, 1)).scale(6))
    assert h0_solve(H0, P) == (g(1) * g(1), g(0, 1), g(2) * g(2))


def test_h0_solve_rejects_unsupported_shapes():
    u = g(0)
    with pytest.raises(UnsupportedError):  # mixed multiplication + d row
        h0_solve(MatPsiDO.of([[PsiDO.from_dict({0: one, 1: one})]]), (u,))
    with pytest.raises(UnsupportedError):  # zero row
        h0_solve(MatPsiDO.of([[PsiDO.zero()]]), (u,))
    with pytest.raises(UnsupportedError):  # non-constant coefficient
        h0_solve(MatPsiDO.of([[PsiDO.of(u)]]), (u,))
    with pytest.raises(UnsupportedError):  # singular constant block
        h0_solve(
            MatPsiDO.of([
                [PsiDO.of(c(2)), PsiDO.of(c(2))],
                [PsiDO.of(c(-2)), PsiDO.of(c(-2))],
            ]),
            (u, u),
        )


def test_h0_solve_obstruction_not_total_derivative():
    # xi' = u^2 has no differential-polynomial solution.
    H0, _ = _kdv_pair()
    with pytest.raises(LenardObstruction):
        h0_solve(H0, (g(0) * g(0),))


# ----------------------------------------------------------- lenard_step


def test_lenard_step_scalar_first_rung():
    # From h0 = u: P = H1(1) = u', then xi' = u' gives xi = u and
    # h1 = u^2/2.
    H0, H1 = _kdv_pair()
    h1, P = lenard_step(H0, H1, g(0))
    assert P == (g(0, 1),)
    assert density_equal(h1, (g(0) * g(0)).scale(Fraction(1, 2)))


def test_lenard_step_scalar_second_rung():
    # From h1 = u^2/2: P = u''' + 3uu', xi = u'' + 3u^2/2, and the
    # homotopy representative of h2 is u u''/2 + u^3/2.
    H0, H1 = _kdv_pair()
    u = g(0)
    h2, P = lenard_step(H0, H1, (u * u).scale(Fraction(1, 2)))
    assert P == (g(0, 3) + (u * g(0, 1)).scale(3),)
    expected = (u * g(0, 2)).scale(Fraction(1, 2)) + (u * u * u).scale(
        Fraction(1, 2)
    )
    assert density_equal(h2, expected)
    # equivalently -u'^2/2 + u^3/2 modulo total derivatives
    assert density_equal(
        h2,
        (u * u * u).scale(Fraction(1, 2))
        - (g(0, 1) * g(0, 1)).scale(Fraction(1, 2)),
    )


def test_lenard_step_reports_nonexact_covector():
    # H1 xi = (u0 u0'', 0) solves through the constant block to
    # xi_next = (0, u0 u0''), whose linearization is not self-adjoint,
    # so the scheme must stop.
    H0 = MatPsiDO.of([
        [PsiDO.zero(), PsiDO.of(one)],
        [PsiDO.of(-one), PsiDO.zero()],
    ])
    H1 = MatPsiDO.of([
        [PsiDO.from_dict({2: g(0)}), PsiDO.zero()],
        [PsiDO.zero(), PsiDO.zero()],
    ])
    with pytest.raises(LenardObstruction, match="gradient"):
        lenard_step(H0, H1, (g(0) * g(0)).scale(Fraction(1, 2)))


# --------------------------------------------------------- run_hierarchy


def test_run_hierarchy_scalar_depth2():
    H0, H1 = _kdv_pair()
    pack = SimpleNamespace(H0=H0, H1=H1, seed_density=g(0), seed_flow=None)
    state = run_hierarchy(pack, 2)
    assert len(state.rungs) == 3
    u, up = g(0), g(0, 1)
    assert state.flows() == (
        (up,),
        (g(0, 3) + (u * up).scale(3),),
        (
            g(0, 5)
            + (up * g(0, 2)).scale(10)
            + (u * g(0, 3)).scale(5)
            + (u * u * up).scale(Fraction(15, 2)),
        ),
    )
    assert density_equal(state.rungs[1].density, (u * u).scale(Fraction(1, 2)))
    assert density_equal(
        state.rungs[2].density,
        (u * g(0, 2)).scale(Fraction(1, 2)) + (u * u * u).scale(Fraction(1, 2)),
    )
    # recursion invariants: the covector of each rung is the variational
    # derivative of its density and pushes down to the previous flow
    for n, rung in enumerate(state.rungs):
        assert rung.covector == variational_derivative(rung.density, 1)
        if n:
            assert H0.apply_cov(rung.covector) == state.rungs[n - 1].flow
    assert [cert.method for cert in state.certificates()] == ["local"] * 3


def test_run_hierarchy_rejects_non_casimir_seed():
    H0, H1 = _kdv_pair()
    pack = SimpleNamespace(
        H0=H0, H1=H1,
        seed_density=(g(0) * g(0)).scale(Fraction(1, 2)), seed_flow=None,
    )
    with pytest.raises(LenardObstruction, match="step 0"):
        run_hierarchy(pack, 1)


def test_run_hierarchy_nls_depth2():
    # Seeded by the flow (2p, -2q).  Solving [[0,2],[-2,0]] xi = (2p,-2q)
    # gives xi1 = (q, p), h1 = pq (homotopy: p.(q/2) + q.(p/2)), and
    # the associated flow (p', q').  The next solve gives
    # xi2 = (-q'/2, p'/2), h2 = (q p' - p q')/4, and the coupled
    # Schrodinger flow (p''/2 - p^2 q, -q''/2 + p q^2).
    state = run_hierarchy(_nls_pack(), 2)
    p, q = g(0), g(1)
    assert state.rungs[0].density is None
    assert state.rungs[0].covector is None
    assert state.flows() == (
        (p.scale(2), q.scale(-2)),
        (g(0, 1), g(1, 1)),
        (
            g(0, 2).scale(Fraction(1, 2)) - p * p * q,
            g(1, 2).scale(Fraction(-1, 2)) + p * q * q,
        ),
    )
    assert density_equal(state.rungs[1].density, p * q)
    assert state.rungs[1].covector == (q, p)
    assert density_equal(
        state.rungs[2].density,
        (q * g(0, 1) - p * g(1, 1)).scale(Fraction(1, 4)),
    )
    assert state.rungs[2].covector == (
        g(1, 1).scale(Fraction(-1, 2)),
        g(0, 1).scale(Fraction(1, 2)),
    )
    methods = [cert.method for cert in state.certificates()]
    assert methods == ["seed", "zero-integrand", "antiderivative"]


def test_run_hierarchy_depth0():
    state = run_hierarchy(_nls_pack(), 0)
    assert len(state.rungs) == 1
    assert state.flows() == ((g(0).scale(2), g(1).scale(-2)),)

    H0, H1 = _kdv_pair()
    pack = SimpleNamespace(H0=H0, H1=H1, seed_density=g(0), seed_flow=None)
    state = run_hierarchy(pack, 0)
    assert state.flows() == ((g(0, 1),),)
    assert state.rungs[0].density == g(0)


def test_run_hierarchy_propagates_step_index():
    # H1 = multiplication by u sends the seed flow (u^2,) into the
    # solver, where xi' = u^2 has no solution; the failure must name
    # the step at which the scheme stopped.
    H0, _ = _kdv_pair()
    H1 = MatPsiDO.of([[PsiDO.of(g(0))]])
    pack = SimpleNamespace(
        H0=H0, H1=H1, seed_density=None, seed_flow=(g(0) * g(0),),
    )
    with pytest.raises(LenardObstruction, match="step 1"):
        run_hierarchy(pack, 1)


# ---------------------------------------------------- integrability checks


def test_involution_check_nls():
    state = run_hierarchy(_nls_pack(), 2)
    report = involution_check(state)
    assert report.ok
    # pairing a state with itself is the same computation
    assert involution_check(state, state).ok


def test_involution_check_detects_failure():
    state = run_hierarchy(_nls_pack(), 2)
    # (q, 0) paired with xi1 = (q, p) integrates q^2, which is not a
    # total derivative.
    bad = dataclasses.replace(
        state.rungs[0], flow=(g(1), DiffPoly.zero())
    )
    corrupted = dataclasses.replace(
        state, rungs=(bad,) + state.rungs[1:]
    )
    report = involution_check(corrupted)
    assert not report.ok
    assert report.counterexample is not None


def test_commutativity_check_nls():
    state = run_hierarchy(_nls_pack(), 2)
    assert commutativity_check(state).ok


def test_commutativity_check_detects_failure():
    # [ (2p, -2q), (q, 0) ] has first component -2q - 2q = -4q.
    state = run_hierarchy(_nls_pack(), 1)
    bad = dataclasses.replace(state.rungs[1], flow=(g(1), DiffPoly.zero()))
    corrupted = dataclasses.replace(state, rungs=(state.rungs[0], bad))
    report = commutativity_check(corrupted)
    assert not report.ok
    assert report.counterexample == (0, 1)


def test_independence_check_nls():
    state = run_hierarchy(_nls_pack(), 2)
    assert independence_check(state).ok
    assert independence_check(run_hierarchy(_nls_pack(), 0)).ok


def test_independence_check_detects_duplicates():
    state = run_hierarchy(_nls_pack(), 1)
    duplicated = dataclasses.replace(
        state, rungs=state.rungs + (state.rungs[1],)
    )
    report = independence_check(duplicated)
    assert not report.ok


def test_densities_conserved_along_all_flows():
    state = run_hierarchy(_nls_pack(), 2)
    for rung in state.rungs:
        if rung.density is None:
            continue
        for other in state.rungs:
            drift = evolutionary_apply(other.flow, rung.density)
            assert density_equal(drift, DiffPoly.zero())


# ---------------------------------------------------- fixture-pair ladders


def _affine_ladder_fixture():
    # Hand ladder for the affine sl2 structure (generators x, p, q):
    #   h0 = x          xi0 = (1, 0, 0)        P0 = (0, 2p, -2q)
    #   h1 = pq         xi1 = (0, q, p)        P1 = (0, p'-xp, q'+xq)
    #   h2 = (qp'-pq')/4 - xpq/2
    # with H1 xi0 = P0 = H0 xi1 and H1 xi1 = P1 = H0 xi2, where
    # xi2 = (-pq/2, -q'/2 - xq/2, p'/2 - xp/2).
    x, p, q = g(0), g(1), g(2)
    densities = (
        x,
        p * q,
        (q * g(1, 1) - p * g(2, 1)).scale(Fraction(1, 4))
        - (x * p * q).scale(Fraction(1, 2)),
    )
    flows = (
        (DiffPoly.zero(), p.scale(2), q.scale(-2)),
        (DiffPoly.zero(), g(1, 1) - x * p, g(2, 1) + x * q),
    )
    return densities, flows


def test_verify_ladder_affine_fixture():
    H0, H1 = _affine_sl2()
    densities, flows = _affine_ladder_fixture()
    report = verify_ladder(H0, H1, densities, flows)
    assert report.ok


def test_verify_ladder_detects_wrong_flow():
    H0, H1 = _affine_sl2()
    densities, flows = _affine_ladder_fixture()
    doctored = (flows[0], (DiffPoly.zero(), g(1, 1), g(2, 1)))
    report = verify_ladder(H0, H1, densities, doctored)
    assert not report.ok
    assert report.counterexample is not None


def test_verify_ladder_detects_bad_seed():
    H0, H1 = _affine_sl2()
    densities, flows = _affine_ladder_fixture()
    report = verify_ladder(H0, H1, (g(1) * g(2),) + densities[1:], flows)
    assert not report.ok


def test_state_from_fixture_checks_and_packs():
    H0, H1 = _affine_sl2()
    densities, flows = _affine_ladder_fixture()
    state = state_from_fixture(H0, H1, densities, flows)
    assert isinstance(state, HierarchyState)
    assert len(state.rungs) == 2
    assert state.rungs[0].covector == variational_derivative(densities[0], 3)
    assert involution_check(state).ok
    assert commutativity_check(state).ok
    assert independence_check(state).ok

    doctored = (flows[0], (DiffPoly.zero(), g(1, 1), g(2, 1)))
    with pytest.raises(LenardObstruction):
        state_from_fixture(H0, H1, densities, doctored)
