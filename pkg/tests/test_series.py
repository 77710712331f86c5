import math

import numpy as np
import pytest

from nullforge.errors import ApproximationError, DomainError, ResidueError
from nullforge.series import (
    BoundaryGrid,
    LaurentPoly,
    VectorLaurent,
    antiderivative_from_zero,
    dumps_vector,
    eval_poly,
    loads_vector,
    rationalize_boundary_map,
    trig_interpolate,
)

rng = np.random.default_rng(20240811)


def random_poly(jmin=-3, jmax=5):
    n = jmax - jmin + 1
    return LaurentPoly(jmin, rng.standard_normal(n) + 1j * rng.standard_normal(n))


class TestEval:
    def test_monomial(self):
        p = LaurentPoly.monomial(2)
        assert eval_poly(p, 2.0) == pytest.approx(4.0)

    def test_pole_plus_linear_symmetry(self):
        p = LaurentPoly(-1, [1.0, 0.0, 1.0])  # 1/z + z
        assert abs(eval_poly(p, 1j)) < 1e-15

    def test_constant_vector(self):
        v = VectorLaurent.constant([1.0, 0.0, -1j])  # first row of the unit frame matrix
        for z in (0.3 + 0.1j, 1.0, -2j):
            assert np.allclose(eval_poly(v, z), [1.0, 0.0, -1j])

    def test_zero_with_pole_raises(self):
        p = LaurentPoly(-1, [1.0])
        with pytest.raises(DomainError):
            p.eval(0.0)

    def test_eval_accuracy_on_circle(self):
        p = random_poly(-6, 40)
        z = np.exp(1j * rng.uniform(0, 2 * np.pi, 64))
        direct = np.array([sum(p.coeff(j) * zz ** j for j in range(p.jmin, p.jmax + 1))
                           for zz in z])
        assert np.max(np.abs(p.eval(z) - direct)) < 1e3 * np.finfo(float).eps * (
            p.jmax - p.jmin + 1) * np.abs(direct).max()

    def test_circle_folding_matches_pointwise(self):
        p = random_poly(-4, 37)
        m = 64
        th = 2 * np.pi * np.arange(m) / m + 0.37
        z = 0.83 * np.exp(1j * th)
        assert np.allclose(p.eval_on_circle(0.83, m, theta0=0.37), p.eval(z), atol=1e-12)


class TestAntiderivative:
    def test_constant(self):
        q = antiderivative_from_zero(LaurentPoly.constant(1.0))
        assert q.jmin == 1 and q.coeff(1) == pytest.approx(1.0)

    def test_power_rule(self):
        n = 5
        p = LaurentPoly.monomial(n - 1, n)  # N zeta^{N-1}
        q = antiderivative_from_zero(p)
        assert q.coeff(n) == pytest.approx(1.0) and q.jmin == n

    def test_pole_order_two_flagged_not_raised(self):
        q = antiderivative_from_zero(LaurentPoly.monomial(-2))
        assert q.coeff(-1) == pytest.approx(-1.0)
        assert q.has_pole  # base point excluded; pipeline callers must reject

    def test_residue_raises(self):
        with pytest.raises(ResidueError):
            antiderivative_from_zero(LaurentPoly.monomial(-1))

    def test_linearity_exact(self):
        p, q = random_poly(0, 12), random_poly(0, 12)
        a, b = 2.5 - 1j, -0.125
        lhs = antiderivative_from_zero(a * p + b * q)
        rhs = a * antiderivative_from_zero(p) + b * antiderivative_from_zero(q)
        lo, x, y = lhs._aligned(rhs)
        # coefficient-level identity: no quadrature involved, only roundoff
        assert np.max(np.abs(x - y)) < 8 * np.finfo(float).eps * np.abs(x).max()

    def test_matches_gauss_legendre_quadrature(self):
        # independent oracle: radial Gauss-Legendre integration of p from 0 to z
        nodes, weights = np.polynomial.legendre.leggauss(48)
        t = 0.5 * (nodes + 1.0)
        for _ in range(20):
            p = random_poly(0, 14)
            z = np.exp(1j * rng.uniform(0, 2 * np.pi))
            quad = 0.5 * z * np.sum(weights * p.eval(t * z))
            exact = antiderivative_from_zero(p).eval(z)
            assert abs(quad - exact) < 1e-10 * max(1.0, abs(exact))


class TestRationalize:
    def test_bilinear_exact(self):
        def rows(z):
            out = np.zeros((len(z), 2), dtype=complex)
            out[:, 1] = z  # eta = zeta * xi
            return out

        g = BoundaryGrid.from_taylor_function(rows, 64)
        bs, err = rationalize_boundary_map(g, tol=1e-12)
        assert err < 1e-12
        assert abs(bs[1].coeff(1) - 1.0) < 1e-13
        assert bs[0].l1_norm() < 1e-13

    def test_constant_exact(self):
        g = BoundaryGrid.from_function(lambda z: 3.0 * np.ones_like(z), 64)
        bs, err = rationalize_boundary_map(g, tol=1e-12)
        assert err < 1e-12
        assert abs(bs[0].coeff(0) - 3.0) < 1e-13

    def test_exp_taylor_window_matches_tail_oracle(self):
        # eta(zeta, xi) = e^zeta xi^2, tol = 1e-8: the zeta-window of B_2 must
        # equal the smallest k with sum_{j>k} 1/j! <= tol (factorial tail oracle)
        tol = 1e-8

        def rows(z):
            out = np.zeros((len(z), 3), dtype=complex)
            out[:, 2] = np.exp(z)
            return out

        k_oracle = next(
            k for k in range(1, 40)
            if sum(1.0 / math.factorial(j) for j in range(k + 1, 60)) <= tol)
        g = BoundaryGrid.from_taylor_function(rows, 128)
        bs, err = rationalize_boundary_map(g, tol=tol)
        assert err <= tol
        assert bs[2].jmax == k_oracle
        for j in range(0, k_oracle + 1):
            assert abs(bs[2].coeff(j) - 1.0 / math.factorial(j)) < 1e-10
        neg = [abs(bs[2].coeff(j)) for j in range(bs[2].jmin, 0)]
        assert max(neg, default=0.0) < 1e-14

    def test_refined_grid_error_within_reported_bound(self):
        # resampling the fit on a 4x-refined grid never exceeds 2x the estimate
        def fn(z):
            return np.exp(0.3 * z) / (1.2 - z * 0.5)

        g = BoundaryGrid.from_function(fn, 64)
        bs, err = rationalize_boundary_map(g, tol=1e-6)
        m4 = 4 * 64
        z4 = np.exp(2j * np.pi * np.arange(m4) / m4)
        resid = np.abs(fn(z4) - bs[0].eval(z4)).max()
        assert resid <= 2 * max(err, 1e-15)

    def test_rough_data_raises(self):
        def fn(z):
            return np.sign(np.real(z)) + 0j  # jump discontinuity

        g = BoundaryGrid.from_function(fn, 64)
        with pytest.raises(ApproximationError):
            rationalize_boundary_map(g, tol=1e-8)

    def test_vector_rows(self):
        def rows(z):
            out = np.zeros((len(z), 2, 3), dtype=complex)
            out[:, 1, 0] = 1.0
            out[:, 1, 1] = z
            out[:, 1, 2] = 1.0 / z
            return out

        g = BoundaryGrid.from_taylor_function(rows, 64)
        bs, err = rationalize_boundary_map(g, tol=1e-11)
        assert err < 1e-11
        b1 = bs[1]
        assert isinstance(b1, VectorLaurent)
        assert abs(b1[1].coeff(1) - 1.0) < 1e-12
        assert abs(b1[2].coeff(-1) - 1.0) < 1e-12


class TestGridValidation:
    def test_m_power_of_two(self):
        with pytest.raises(ValueError):
            BoundaryGrid(values=np.zeros(20))

    def test_m_minimum(self):
        with pytest.raises(ValueError):
            BoundaryGrid(values=np.zeros(8))

    def test_xi_degree_at_least_one(self):
        with pytest.raises(ValueError):
            BoundaryGrid(xi_taylor=np.zeros((16, 1)))


class TestJsonRoundTrip:
    def test_round_trip(self):
        v = VectorLaurent([random_poly(-2, 6), random_poly(0, 3), random_poly(-1, 1)])
        w = loads_vector(dumps_vector(v))
        assert w.n == v.n
        for a, b in zip(v.components, w.components):
            assert a.jmin == b.jmin
            assert np.allclose(a.coeffs, b.coeffs)


def test_trig_interpolate_reproduces_samples():
    m = 32
    z = np.exp(2j * np.pi * np.arange(m) / m)
    vals = np.exp(0.2 * z) + 0.1 / (z - 2.0)
    out = trig_interpolate(vals, z)
    assert np.allclose(out, vals, atol=1e-12)
