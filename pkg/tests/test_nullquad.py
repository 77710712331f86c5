import numpy as np
import pytest

from nullforge.errors import (
    DegenerateFrameError,
    DimensionError,
    LiftError,
    NondegeneracyError,
)
from nullforge.nullquad import (
    BranchTracker,
    FrameTriple,
    PsiFrameField,
    frame_matrices,
    lift_via_psi,
    psi_param,
    spinor_lift_disc,
    spinor_pi,
    spinor_pi_values,
    theta_form,
)
from nullforge.series import LaurentPoly, VectorLaurent

rng = np.random.default_rng(1)


def random_null(n=3, scale=1.0):
    """Random point of the punctured quadric via a rotated spinor image."""
    while True:
        s = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        z = np.zeros(n, dtype=complex)
        z[:3] = spinor_pi(s[0], s[1])
        if n > 3:
            q, _ = np.linalg.qr(rng.standard_normal((n, n)))
            z = q.astype(complex) @ z
        if np.linalg.norm(z) > 0.5:
            return z * scale


class TestTheta:
    def test_null_vector(self):
        assert theta_form([1, 1j, 0], [1, 1j, 0]) == 0

    def test_conjugate_pairing(self):
        assert theta_form([1, -1j, 0], [1, 1j, 0]) == pytest.approx(2)

    def test_orthonormal_basis(self):
        assert theta_form([1, 0, 0], [0, 1, 0]) == 0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            theta_form([1, 0], [1, 0, 0])


class TestSpinorPi:
    def test_e1(self):
        assert np.allclose(spinor_pi(1, 0), [1, 0, -1j])

    def test_e2(self):
        assert np.allclose(spinor_pi(0, 1), [-1, 0, -1j])

    def test_diagonal(self):
        assert np.allclose(spinor_pi(1, 1), [0, 2, -2j])

    def test_null_residual_random(self):
        # 1e4 trials, ||(u,v)|| <= 10; scale-aware residual gate
        uv = rng.uniform(-1, 1, (10_000, 4)) * 5
        u = uv[:, 0] + 1j * uv[:, 1]
        v = uv[:, 2] + 1j * uv[:, 3]
        z = spinor_pi(u, v)
        res = np.abs(theta_form(z, z))
        scale = np.maximum(1.0, np.linalg.norm(z, axis=-1) ** 2)
        assert np.max(res / scale) < 1e-12

    def test_homogeneity(self):
        for _ in range(100):
            s = rng.standard_normal(4)
            lam = complex(*rng.standard_normal(2))
            a = spinor_pi(lam * (s[0] + 1j * s[1]), lam * (s[2] + 1j * s[3]))
            b = lam ** 2 * spinor_pi(s[0] + 1j * s[1], s[2] + 1j * s[3])
            assert np.linalg.norm(a - b) < 1e-12 * max(1.0, np.linalg.norm(b))


class TestFrames:
    def test_unit_frame_matrices(self):
        # a = b = c = 1 with principal branches
        t = FrameTriple.__new__(FrameTriple)
        t.u, t.v, t.w = (np.zeros(3, complex),) * 3
        t.a = t.b = t.c = 1.0
        A, B = frame_matrices(t, BranchTracker())
        assert np.allclose(A, [[1, 0, -1j], [-1j, 1, 0], [0, -1j, 1]])
        s = np.sqrt(1j / 2)
        assert np.allclose(B, [[1, 0], [1j * s, -s]])

    def test_det_nonzero_random(self):
        # det A = (1+i)/(abc) for the explicit frame matrix
        for _ in range(1000):
            a, b, c = (complex(*rng.standard_normal(2)) for _ in range(3))
            if min(abs(a), abs(b), abs(c)) < 1e-3:
                continue
            t = FrameTriple.__new__(FrameTriple)
            t.a, t.b, t.c = a, b, c
            A, _ = frame_matrices(t, BranchTracker())
            det = np.linalg.det(A)
            assert abs(det) > 0
            assert abs(det - (1 + 1j) / (a * b * c)) < 1e-10 * abs(det)

    def test_scaling_w(self):
        u, v = random_null(), random_null()
        while abs(theta_form(u, v)) < 0.1:
            v = random_null()
        w = random_null()
        while min(abs(theta_form(v, w)), abs(theta_form(u, w))) < 0.1:
            w = random_null()
        lam = 2.5
        t1 = FrameTriple(u, v, w)
        t2 = FrameTriple(u, v, lam * w)
        A1, _ = frame_matrices(t1, BranchTracker())
        A2, _ = frame_matrices(t2, BranchTracker())
        assert np.allclose(A2[0], A1[0] / lam)
        assert np.allclose(A2[1], A1[1] / lam)
        assert np.allclose(A2[2], A1[2])

    def test_degenerate_frame_raises(self):
        u = np.array([1, 1j, 0], dtype=complex)
        with pytest.raises(DegenerateFrameError):
            FrameTriple(u, u, random_null())


class TestPsi:
    def admissible_triple(self, n=3):
        while True:
            u, v, w = random_null(n), random_null(n), random_null(n)
            scale = 0.05
            if (abs(theta_form(u, v)) > scale and abs(theta_form(u, w)) > scale
                    and abs(theta_form(v, w)) > scale):
                return u, v, w

    def test_normalization_thousand_frames(self):
        worst = 0.0
        for _ in range(1000):
            u, v, w = self.admissible_triple()
            t = FrameTriple(u, v, w)
            br = BranchTracker()
            r = (np.linalg.norm(psi_param(t, br, 1, 0) - u)
                 + np.linalg.norm(psi_param(t, br, 0, 1) - v))
            worst = max(worst, r / (np.linalg.norm(u) + np.linalg.norm(v)))
        assert worst < 1e-9

    def test_zero_maps_to_zero(self):
        u, v, w = self.admissible_triple()
        t = FrameTriple(u, v, w)
        out = psi_param(t, BranchTracker(), 0, 0)
        assert np.linalg.norm(out) < 1e-12

    def test_output_null(self):
        for n in (3, 4, 6):
            u, v, w = self.admissible_triple(n)
            t = FrameTriple(u, v, w)
            br = BranchTracker()
            for _ in range(50):
                s, tp = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
                out = psi_param(t, br, s, tp)
                nn = np.linalg.norm(out)
                assert abs(theta_form(out, out)) < 1e-10 * max(1.0, nn ** 2)


class TestSpinorLift:
    def test_constant_direction(self):
        f = VectorLaurent.constant([1, 0, -1j])
        h = spinor_lift_disc(f)
        hv = h.eval(0.3 + 0.2j)
        assert (np.linalg.norm(hv - [1, 0]) < 1e-8
                or np.linalg.norm(hv + [1, 0]) < 1e-8)

    def test_quadratic_homogeneity(self):
        # f = zeta^2 (1,0,-i)  ->  h = +- zeta (1,0)
        f = VectorLaurent([LaurentPoly.monomial(2), LaurentPoly.zero(),
                           LaurentPoly.monomial(2, -1j)])
        h = spinor_lift_disc(f)
        z = 0.7 * np.exp(0.3j)
        hv = h.eval(z)
        assert (np.linalg.norm(hv - [z, 0]) < 1e-8
                or np.linalg.norm(hv + [z, 0]) < 1e-8)

    def test_moving_spinor_disc(self):
        # f = pi(1, zeta) = (1 - zeta^2, 2 zeta, -i(1 + zeta^2))
        f = VectorLaurent([
            LaurentPoly(0, [1, 0, -1]),
            LaurentPoly(0, [0, 2]),
            LaurentPoly(0, [-1j, 0, -1j]),
        ])
        h = spinor_lift_disc(f)
        za = np.exp(1j * np.linspace(0, 2 * np.pi, 17))
        hv = h.eval(za)
        tgt = np.stack([np.ones_like(za), za], axis=-1)
        d1 = np.abs(hv - tgt).max()
        d2 = np.abs(hv + tgt).max()
        assert min(d1, d2) < 1e-10

    def test_round_trip_random_polynomial_spinor(self):
        for _ in range(5):
            hu = LaurentPoly(0, rng.standard_normal(4) + 1j * rng.standard_normal(4))
            hv = LaurentPoly(0, rng.standard_normal(4) + 1j * rng.standard_normal(4))
            hu = hu + 3.0  # keep away from the branch point
            f = VectorLaurent([hu * hu - hv * hv, 2 * (hu * hv),
                               -1j * (hu * hu + hv * hv)])
            h = spinor_lift_disc(f)
            z = rng.uniform(0.2, 1.0, 32) * np.exp(1j * rng.uniform(0, 2 * np.pi, 32))
            res = spinor_pi_values(h.eval(z)) - f.eval(z)
            assert np.abs(res).max() < 1e-6 * f.sup_norm_grid()

    def test_odd_monodromy_rejected(self):
        # f = zeta (1,0,-i): odd vanishing order, no single-valued lift
        f = VectorLaurent([LaurentPoly.monomial(1), LaurentPoly.zero(),
                           LaurentPoly.monomial(1, -1j)])
        with pytest.raises(LiftError):
            spinor_lift_disc(f)


class TestLiftViaPsi:
    def test_documented_example(self):
        # f = (1,i,0), u = (1,-i,0), v = (0,1,i): pairings 2, i, -i all nonzero
        f = VectorLaurent.constant([1, 1j, 0])
        u = np.array([1, -1j, 0], dtype=complex)
        v = np.array([0, 1, 1j], dtype=complex)
        assert theta_form(u, f.eval(1.0)) == pytest.approx(2)
        assert theta_form(v, f.eval(1.0)) == pytest.approx(1j)
        h = lift_via_psi(f, u, v)
        field_ = PsiFrameField(f, u, v)
        out = field_.psi_apply(field_.grid_eval(h))
        assert np.linalg.norm(out - field_.fvals, axis=-1).max() < 1e-8

    def test_round_trip_vs_spinor_lift(self):
        # moving f in C^3: compare pi(h_spinor) with psi-lift reproduction
        f = VectorLaurent([
            LaurentPoly(0, [1, 0, -0.25]),
            LaurentPoly(0, [0, 1.0]),
            LaurentPoly(0, [-1j, 0, -0.25j]),
        ])
        u = np.array([1, -1j, 0], dtype=complex)
        v = np.array([0, 1, 1j], dtype=complex)
        h = lift_via_psi(f, u, v)
        field_ = PsiFrameField(f, u, v)
        out = field_.psi_apply(field_.grid_eval(h))
        assert np.linalg.norm(out - field_.fvals, axis=-1).max() < 1e-6 * field_.sup_f

    def test_dimension_four(self):
        f = VectorLaurent([
            LaurentPoly(0, [1, 0.2]), LaurentPoly(0, [1j, 0.2j]),
            LaurentPoly.zero(), LaurentPoly.zero(),
        ])
        u = np.array([1, 0, 1j, 0], dtype=complex)
        v = np.array([1, 0, 0, 1j], dtype=complex)
        h = lift_via_psi(f, u, v)
        field_ = PsiFrameField(f, u, v)
        out = field_.psi_apply(field_.grid_eval(h))
        assert np.linalg.norm(out - field_.fvals, axis=-1).max() < 1e-6 * field_.sup_f

    def test_nondegeneracy_gate(self):
        f = VectorLaurent.constant([1, 1j, 0])
        u = np.array([1, 1j, 0], dtype=complex)  # Theta(u, f) = 0
        v = np.array([0, 1, 1j], dtype=complex)
        with pytest.raises((NondegeneracyError, DegenerateFrameError)):
            lift_via_psi(f, u, v)

    def test_cross_vector_identities(self):
        # psi(h + g e1) = f + g^2 u + g w forces Theta identities on w
        f = VectorLaurent([
            LaurentPoly(0, [1, 0, -0.25]),
            LaurentPoly(0, [0, 1.0]),
            LaurentPoly(0, [-1j, 0, -0.25j]),
        ])
        u = np.array([1, -1j, 0], dtype=complex)
        v = np.array([0, 1, 1j], dtype=complex)
        field_ = PsiFrameField(f, u, v)
        w = field_.cross_values()
        fv = field_.fvals
        assert np.abs(theta_form(w, fv)).max() < 1e-9
        assert np.abs(theta_form(w, u[None, None, :])).max() < 1e-9
        assert np.abs(theta_form(w, w) + 2 * theta_form(fv, u[None, None, :])).max() < 1e-9
