import numpy as np
import pytest

from nullforge.errors import NoLiftError
from nullforge.presets import (
    constant_direction_problem,
    plane_immersion,
    spinor_disc_problem,
)
from nullforge.rhsolver import (
    RhOptions,
    RhProblem,
    select_c_by_average,
    solve_rh3,
    solve_rhn,
    verify_rh_conditions,
)
from nullforge.series import BoundaryGrid, LaurentPoly
from nullforge.weierstrass import hopf_residual

rng = np.random.default_rng(42)

FAST = RhOptions(n_cap=1 << 15)


@pytest.fixture(scope="module")
def baseline3():
    p = spinor_disc_problem()
    return p, solve_rh3(p, FAST)


# -- Laurent-coefficient remainder decay (the estimate behind the method) ----

def remainder_sup(a_coeffs: dict, N: int, grid: int = 64) -> float:
    """sup over (z, c) on T x T of |int_0^z c N zeta^{N-1} mu_2(zeta, c zeta^N)
    d zeta - mu(z, c z^N)| for mu = sum_k A_k(zeta) xi^k.

    Exact coefficient algebra: the difference has coefficient
    a_{kj} (kN/(j+kN) - 1) at z^{j+kN} c^k; by the maximum principle the sup
    over the closed bidisc is attained on the torus.
    """
    cs = np.exp(2j * np.pi * np.arange(grid) / grid)
    vals = np.zeros((grid, grid), dtype=complex)  # (z, c)
    for k, ak in a_coeffs.items():
        poly = LaurentPoly(ak.jmin + k * N,
                           ak.coeffs * np.array([
                               -j / (j + k * N)
                               for j in range(ak.jmin, ak.jmax + 1)]))
        vz = poly.eval_on_circle(1.0, grid)
        vals += vz[:, None] * (cs ** k)[None, :]
    return float(np.abs(vals).max())


class TestRemainderDecay:
    def test_single_monomial_exact(self):
        # mu(zeta, xi) = xi integrates exactly for every N
        a = {1: LaurentPoly.constant(1.0)}
        for N in (5, 20, 80):
            assert remainder_sup(a, N) < 1e-12

    def test_zeta_xi_closed_form(self):
        # mu = zeta xi gives error exactly 1/(N+1)
        a = {1: LaurentPoly.monomial(1)}
        for N in (10, 25, 60):
            assert remainder_sup(a, N) == pytest.approx(1 / (N + 1), rel=1e-12)

    def test_decay_and_shape_random(self):
        for _ in range(20):
            a = {k: LaurentPoly(-3, rng.standard_normal(7) + 1j * rng.standard_normal(7))
                 for k in range(1, 6)}
            e20, e40, e80 = (remainder_sup(a, N) for N in (20, 40, 80))
            assert e80 < e40 < e20
            C = e20 * (20 - 4) / np.sqrt(41)
            assert e40 <= C * np.sqrt(81) / (40 - 4) * (1 + 1e-9)
            assert e80 <= C * np.sqrt(161) / (80 - 4) * (1 + 1e-9)


# -- the n = 3 solver ---------------------------------------------------------

class TestSolveRh3:
    def test_zero_size_returns_center(self):
        # G = F exactly; s1 and s3 vanish, s2 is the radial slack at rho'
        # (kappa degenerates to the point F(zeta), so s2 ~ ||F'|| (1 - rho'))
        p = spinor_disc_problem(amplitude=0.0)
        sol = solve_rh3(p, FAST)
        assert sol.N_used == 0
        assert sol.G.phi is p.center.phi
        assert sol.report.s1 < 1e-9 and sol.report.s3 < 1e-9
        assert sol.report.passed

    def test_baseline_passes(self, baseline3):
        p, sol = baseline3
        rep = sol.report
        assert rep.passed
        assert max(rep.s1, rep.s2, rep.s3) < 0.05
        assert hopf_residual(sol.G) < 1e-8
        # base-point pinning
        assert np.linalg.norm(sol.G.F(0.0) - p.center.F(0.0)) < 1e-10
        assert p.rho0 <= sol.rho_prime < 1.0

    def test_refused_pole_antiderivative(self):
        # a center whose phi has negative exponents is refused up front
        from nullforge.series import VectorLaurent
        from nullforge.weierstrass import ImmersionDisc
        from nullforge.errors import DomainError
        with pytest.raises(DomainError):
            ImmersionDisc(VectorLaurent([LaurentPoly(-2, [1.0]), LaurentPoly.zero(),
                                         LaurentPoly.zero()]),
                          np.zeros(3, complex), complex_valued=True)

    def test_monotone_past_first_pass(self, baseline3):
        # s1 + s2 nonincreasing (10% slack) along the schedule past first pass
        p, sol = baseline3
        n_pass = sol.N_used
        opts2 = RhOptions(n_cap=1 << 15, n_start=2 * n_pass)
        sol2 = solve_rh3(p, opts2)
        a = sol.report.s1 + sol.report.s2
        b = sol2.report.s1 + sol2.report.s2
        assert b <= 1.1 * a


class TestVerifyConditions:
    def test_negative_control_rho(self, baseline3):
        # shrinking rho' back to rho0 after the solver picked a larger one
        # must blow up condition ii
        p, sol = baseline3
        if sol.rho_prime <= p.rho0 + 1e-9:
            pytest.skip("solver already passed at rho0")
        rep_bad = verify_rh_conditions(sol.G, p, p.rho0, FAST)
        assert rep_bad.s2 > p.eps

    def test_measurement_is_pure(self):
        p = spinor_disc_problem(amplitude=0.0)
        rep = verify_rh_conditions(p.center, p, None, FAST)
        assert rep.passed and rep.s1 < 1e-9


# -- the constant-direction solver ---------------------------------------------

class TestSolveRhn:
    def test_r4_documented_quadruple(self):
        p = constant_direction_problem(n=4, eps=0.1)
        sol = solve_rhn(p, FAST)
        rep = sol.report
        assert rep.passed and max(rep.s1, rep.s2, rep.s3) < 0.1
        assert rep.nondegeneracy["theta_u_f_min"] > 0.5
        assert rep.nondegeneracy["theta_v_f_min"] > 0.5
        assert abs(rep.nondegeneracy["theta_u_v"] - 1.0) < 1e-12
        assert rep.winding == 0
        assert hopf_residual(sol.G) < 1e-8
        assert np.linalg.norm(sol.G.F(0.0) - p.center.F(0.0)) < 1e-10

    def test_zero_size_identity(self):
        p = constant_direction_problem(n=4, amplitude=0.0)
        sol = solve_rhn(p, FAST)
        assert sol.N_used == 0 and sol.report.passed

    def test_cross_solver_agreement_n3(self):
        # same geometric data solved by both engines: boundary tracks agree
        # within 2 eps as point-to-curve distances both ways
        eps = 0.05
        pn = constant_direction_problem(n=3, eps=eps)
        a = solve_rh3(spinor_disc_problem(eps=eps), FAST).G
        b = solve_rhn(pn, FAST).G
        mb = 512
        ga, gb = a.F_on_circle(1.0, mb), b.F_on_circle(1.0, mb)
        d_ab = np.linalg.norm(ga[:, None, :] - gb[None, :, :], axis=-1)
        assert max(d_ab.min(axis=1).max(), d_ab.min(axis=0).max()) < 2 * eps


class TestWindingGate:
    def test_nonzero_winding_rejected_on_full_circle(self):
        # sigma(zeta, xi) = zeta xi has winding 1 in d sigma/d xi(., 0)
        m = 256

        def sampler(z):
            rows = np.zeros((len(z), 2), dtype=complex)
            rows[:, 1] = z
            return rows

        z0 = np.exp(2j * np.pi * np.arange(m) / m)
        sigma = BoundaryGrid(xi_taylor=sampler(z0), sampler=sampler)
        r = BoundaryGrid(values=np.full(m, 0.25))
        from nullforge.rhsolver import ConstantDirection
        u = np.array([1, -1j, 0], dtype=complex)
        v = np.array([0, 1, 1j], dtype=complex)
        p = RhProblem(plane_immersion(complex_valued=True), r, sigma, 0.1, 0.9,
                      mode=ConstantDirection(u, v), arc=None)
        with pytest.raises(NoLiftError):
            solve_rhn(p, FAST)


class TestSelectC:
    def _candidates(self, p, sol):
        # reuse the solver output as a one-candidate family plus phase copies
        return [(sol.c_used, sol.G)]

    def test_zero_function_always_passes(self, baseline3):
        p, sol = baseline3
        c, G, passed, single, double = select_c_by_average(
            [(sol.c_used, sol.G)], lambda x: 0.0, p, eps=1e-12)
        assert passed and single == 0.0 and double == 0.0

    def test_norm_squared_mean_value(self, baseline3):
        # phi = ||x||^2: some candidate beats the double average + eps
        p, sol = baseline3
        c, G, passed, single, double = select_c_by_average(
            [(sol.c_used, sol.G)], lambda x: float(np.linalg.norm(x) ** 2),
            p, eps=3 * p.eps)
        assert passed
        assert single <= double + 3 * p.eps

    def test_bump_function_measured(self, baseline3):
        p, sol = baseline3
        target = p.center.F(np.exp(0.1j))

        def phi(x):
            return float(np.exp(-4 * np.linalg.norm(x - target) ** 2))

        c, G, passed, single, double = select_c_by_average(
            [(sol.c_used, sol.G)], phi, p, eps=3 * p.eps)
        assert single <= double + 3 * p.eps
