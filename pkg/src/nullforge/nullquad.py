"""Algebra of the null quadric {z : z_1^2 + ... + z_n^2 = 0}.

Provides the bilinear pairing, the degree-2 spinor cover of the punctured
quadric in C^3, square-root branch tracking along sample paths, the frame
matrices that linearize a 3-dimensional slice of the quadric in C^n, and the
two lifts used by the deformation solvers:

* ``spinor_lift_disc``  -- h with pi(h) = f for a disc map f into the C^3 quadric,
* ``lift_via_psi``      -- h with psi_{f(zeta)}(h(zeta)) = f(zeta) in any dimension.

Both lifts sample on concentric circles, propagate branches continuously, and
refit the result to a coefficient window with a verified residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateFrameError,
    DimensionError,
    FitError,
    LiftError,
    NondegeneracyError,
)
from .series import LaurentPoly, VectorLaurent, fourier_coefficients

LIFT_MIN_REL = 1e-6
LIFT_RESIDUAL_REL = 1e-6
FRAME_DEGENERACY_REL = 1e-8


def theta_form(z, w):
    """Sum z_j w_j over the last axis -- bilinear, no conjugation."""
    z = np.asarray(z)
    w = np.asarray(w)
    if z.shape[-1] != w.shape[-1]:
        raise DimensionError(f"theta: dimensions {z.shape[-1]} != {w.shape[-1]}")
    return np.sum(z * w, axis=-1)


def spinor_pi(u, v):
    """(u, v) -> (u^2 - v^2, 2uv, -i(u^2 + v^2)); lands on the C^3 quadric."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    uu, vv, uv = u * u, v * v, u * v
    return np.stack([uu - vv, 2 * uv, -1j * (uu + vv)], axis=-1)


def spinor_pi_values(h):
    """spinor_pi applied to an (..., 2) array."""
    h = np.asarray(h, dtype=complex)
    return spinor_pi(h[..., 0], h[..., 1])


def _pi_candidates(x):
    """One pi-preimage per point of an (..., 3) quadric array (sign-free)."""
    x = np.asarray(x, dtype=complex)
    u2 = (x[..., 0] + 1j * x[..., 2]) / 2
    v2 = (-x[..., 0] + 1j * x[..., 2]) / 2
    u = np.sqrt(u2)
    v = np.sqrt(v2)
    use_u = np.abs(u2) >= np.abs(v2)
    safe_u = np.where(u == 0, 1.0, u)
    safe_v = np.where(v == 0, 1.0, v)
    v_from_u = x[..., 1] / (2 * safe_u)
    u_from_v = x[..., 1] / (2 * safe_v)
    uu = np.where(use_u, u, np.where(v == 0, 0.0, u_from_v))
    vv = np.where(use_u, np.where(u == 0, 0.0, v_from_u), v)
    return np.stack([uu, vv], axis=-1)


def continuous_signs(cands: np.ndarray, seed=None) -> np.ndarray:
    """Resolve the global +- ambiguity of candidates along a path.

    cands has shape (m, k); consecutive rows are made close by sign flips.
    ``seed`` (shape (k,)) anchors the first row.  Returns the signed array.
    """
    c = np.asarray(cands, dtype=complex)
    prev = np.roll(c, 1, axis=0)
    prev[0] = c[0]
    d_plus = np.linalg.norm(c - prev, axis=1)
    d_minus = np.linalg.norm(c + prev, axis=1)
    rel = np.where(d_plus <= d_minus, 1.0, -1.0)
    signs = np.cumprod(rel)
    out = c * signs[:, None]
    if seed is not None:
        if np.linalg.norm(out[0] - seed) > np.linalg.norm(out[0] + seed):
            out = -out
    return out


@dataclass
class BranchTracker:
    """Continuity bookkeeping for square-root channels along a sampled path."""

    last: dict = field(default_factory=dict)

    def sqrt(self, channel: str, w) -> complex:
        s = np.sqrt(complex(w))
        prev = self.last.get(channel)
        if prev is not None and abs(-s - prev) < abs(s - prev):
            s = -s
        self.last[channel] = s
        return s

    def sqrt_along(self, channel: str, ws: np.ndarray, closed: bool = False) -> np.ndarray:
        """Continuous sqrt along a path of squared values; optional closure check."""
        ws = np.asarray(ws, dtype=complex)
        s = np.sqrt(ws)
        seed = self.last.get(channel)
        out = continuous_signs(s[:, None], seed=None if seed is None else [seed])[:, 0]
        if closed and len(out) > 2:
            if np.abs(out[-1] - out[0]) > np.abs(out[-1] + out[0]):
                raise LiftError(f"sqrt channel '{channel}': odd monodromy around a circle")
        self.last[channel] = out[0]
        return out


# -- spinor lift on the disc -------------------------------------------------

def _lift_grid(window_span: int, samples: int | None):
    rings = 12
    m = samples if samples else max(256, 1 << int(np.ceil(np.log2(max(16, 3 * window_span)))))
    radii = np.arange(1, rings + 1) / rings
    return radii, m


def _fit_boundary_ring(values: np.ndarray, keep_negative: bool, tol_drop: float = 1e-13):
    """Fit holomorphic boundary-ring samples (m, k) to Laurent windows."""
    expo, coef = fourier_coefficients(values)
    mag = np.abs(coef).max(axis=-1) if coef.ndim > 1 else np.abs(coef)
    scale = mag.max()
    keep = mag > tol_drop * scale
    if not keep_negative:
        neg = expo < 0
        neg_mass = mag[neg].max() if neg.any() else 0.0
        if neg_mass < 1e-8 * scale:
            keep &= ~neg
    idx = np.flatnonzero(keep)
    lo, hi = int(expo[idx].min()), int(expo[idx].max())
    k = values.shape[1]
    mat = np.zeros((hi - lo + 1, k), dtype=complex)
    for i in idx:
        mat[expo[i] - lo] += coef[i]
    return VectorLaurent.from_coeff_matrix(lo, mat)


def spinor_lift_disc(f: VectorLaurent, samples: int | None = None) -> VectorLaurent:
    """Continuous h: D -> C^2_* with pi(h) = f, refit to a coefficient window.

    f must take values in the punctured C^3 quadric on the sample grid.
    Raises LiftError near the branch point (f -> 0) or on odd monodromy,
    FitError if the refit cannot reproduce f at the required residual.
    """
    if f.n != 3:
        raise DimensionError("spinor lift requires ambient dimension 3")
    radii, m = _lift_grid(f.jmax - f.jmin + 1, samples)
    vals = np.stack([f.eval_on_circle(r, m) for r in radii])      # (R, m, 3)
    norms = np.linalg.norm(vals, axis=-1)
    sup = norms.max()
    if norms.min() <= LIFT_MIN_REL * sup:
        raise LiftError("f approaches 0 on the grid: spinor branch point")
    quad_res = np.abs(theta_form(vals, vals)).max()
    if quad_res > 1e-8 * sup ** 2:
        raise LiftError(f"f leaves the quadric: residual {quad_res:.2e}")

    cands = _pi_candidates(vals)                                   # (R, m, 2)
    h_vals = np.empty_like(cands)
    seed = None
    for k in range(len(radii)):
        ring = continuous_signs(cands[k], seed=seed)
        # closure around the circle
        if np.linalg.norm(ring[-1] - ring[0]) > np.linalg.norm(ring[-1] + ring[0]):
            raise LiftError("odd monodromy around a circle: no single-valued lift")
        h_vals[k] = ring
        seed = ring[0]

    h = _fit_boundary_ring(h_vals[-1], keep_negative=False)
    res = max(
        np.abs(spinor_pi_values(h.eval_on_circle(r, m)) - vals[k]).max()
        for k, r in enumerate(radii))
    if res > LIFT_RESIDUAL_REL * sup:
        raise FitError(f"spinor lift refit residual {res:.2e} exceeds "
                       f"{LIFT_RESIDUAL_REL:.0e} * sup|f| = {LIFT_RESIDUAL_REL * sup:.2e}")
    return h


# -- frames and the psi parametrization --------------------------------------

@dataclass
class FrameTriple:
    """Null vectors u, v (fixed legs) and w (varying leg) with Theta pairings."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    a: complex = 0.0
    b: complex = 0.0
    c: complex = 0.0

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=complex)
        self.v = np.asarray(self.v, dtype=complex)
        self.w = np.asarray(self.w, dtype=complex)
        self.a = complex(theta_form(self.v, self.w))
        self.b = complex(theta_form(self.u, self.w))
        self.c = complex(theta_form(self.u, self.v))
        nu, nv, nw = (np.linalg.norm(x) for x in (self.u, self.v, self.w))
        for name, val, scale in (("a", self.a, nv * nw), ("b", self.b, nu * nw),
                                 ("c", self.c, nu * nv)):
            if abs(val) < FRAME_DEGENERACY_REL * scale:
                raise DegenerateFrameError(
                    f"frame pairing {name} = {val:.3e} below {FRAME_DEGENERACY_REL:.0e} * scale")


def frame_matrices(t: FrameTriple, br: BranchTracker):
    """The 3x3 change-of-frame matrix A and the 2x2 spinor mixer B."""
    a, b, c = t.a, t.b, t.c
    A = np.array([
        [1 / a, 0, -1j / a],
        [-1j / b, 1 / b, 0],
        [0, -1j / c, 1 / c],
    ])
    sa = br.sqrt("sqrt_a", a)
    sb = br.sqrt("sqrt_i2b", 1j / (2 * b))
    B = np.array([
        [1 / sa, 0],
        [1j * sb, -sb],
    ])
    det = np.linalg.det(A)
    if det == 0:
        raise DegenerateFrameError("frame matrix A is singular")
    return A, B


def psi_param(t: FrameTriple, br: BranchTracker, s, tpar):
    """psi_{(u,v,w)}(s, t): quadratic parametrization of the quadric slice.

    Satisfies psi(1,0) = u and psi(0,1) = v for every branch choice.
    """
    A, B = frame_matrices(t, br)
    z = np.array([s, tpar], dtype=complex) @ B
    pz = spinor_pi(z[0], z[1])
    abg = np.linalg.solve(A.T, pz)
    return abg[0] * t.u + abg[1] * t.v + abg[2] * t.w


# -- the psi-frame lift along a disc map --------------------------------------

class PsiFrameField:
    """Branch-continuous frame data along concentric circles for w = f(zeta).

    Precomputes sqrt(a(zeta)) and sqrt(i/(2 b(zeta))) with a(zeta)=Theta(v,f),
    b(zeta)=Theta(u,f), plus the closed-form lift h and the cross-term vector
    field Bil_psi(h, e1).  Grid layout: rings x m angles, outermost ring last
    and on the unit circle.
    """

    def __init__(self, f: VectorLaurent, u, v, samples: int | None = None,
                 gate_rel: float = LIFT_MIN_REL):
        self.f = f
        self.u = np.asarray(u, dtype=complex)
        self.v = np.asarray(v, dtype=complex)
        if f.n != len(self.u) or f.n != len(self.v):
            raise DimensionError("u, v must match the ambient dimension of f")
        self.radii, self.m = _lift_grid(f.jmax - f.jmin + 1, samples)
        self.fvals = np.stack([f.eval_on_circle(r, self.m) for r in self.radii])
        sup = np.linalg.norm(self.fvals, axis=-1).max()
        self.sup_f = sup
        a = theta_form(self.fvals, self.v[None, None, :])
        b = theta_form(self.fvals, self.u[None, None, :])
        c = complex(theta_form(self.u, self.v))
        scale_a = np.linalg.norm(self.v) * sup
        scale_b = np.linalg.norm(self.u) * sup
        if np.abs(a).min() <= gate_rel * scale_a or np.abs(b).min() <= gate_rel * scale_b:
            raise NondegeneracyError(
                "Theta(u, f) or Theta(v, f) vanishes on the grid (condition (3.14)-type)")
        if abs(c) <= FRAME_DEGENERACY_REL * np.linalg.norm(self.u) * np.linalg.norm(self.v):
            raise DegenerateFrameError("Theta(u, v) too small")
        self.a, self.b, self.c = a, b, c

        # branch continuity: around each circle, seeded ring-to-ring at angle 0
        br = BranchTracker()
        self.sqrt_a = np.empty_like(a)
        self.sqrt_i2b = np.empty_like(b)
        for k in range(len(self.radii)):
            self.sqrt_a[k] = br.sqrt_along("sqrt_a", a[k], closed=True)
            self.sqrt_i2b[k] = br.sqrt_along("sqrt_i2b", 1j / (2 * b[k]), closed=True)
        self.q = np.sqrt(1j / (2 * c))

    def h_values(self) -> np.ndarray:
        """(rings, m, 2) lift values: psi_{f}(h) = f pointwise."""
        h1 = self.q * (1 - 1j) * self.sqrt_a
        h2 = self.q / self.sqrt_i2b
        return np.stack([h1, h2], axis=-1)

    def _z_of(self, h):
        """z = h . B(a,b) per sample; h has shape (rings, m, 2)."""
        z1 = h[..., 0] / self.sqrt_a + h[..., 1] * 1j * self.sqrt_i2b
        z2 = h[..., 1] * (-self.sqrt_i2b)
        return np.stack([z1, z2], axis=-1)

    def psi_apply(self, h) -> np.ndarray:
        """psi_{f(zeta)}(h(zeta)) on the grid; h shape (rings, m, 2)."""
        pz = spinor_pi_values(self._z_of(h))
        return self._from_quadric_coords(pz)

    def _from_quadric_coords(self, pz) -> np.ndarray:
        """Solve (alpha,beta,gamma) A = pz and expand in (u, v, f)."""
        a, b, c = self.a, self.b, self.c
        # A depends on the sample through a, b; invert the 3x3 system explicitly:
        # columns of A: (1/a, -i/b, 0), (0, 1/b, -i/c), (-i/a, 0, 1/c)
        # Solve alpha/a - i beta/b = z1 ; beta/b - i gamma/c = z2 ; -i alpha/a + gamma/c = z3
        z1, z2, z3 = pz[..., 0], pz[..., 1], pz[..., 2]
        # alpha/a = (z1 + i z2 - z3 i i ...) -- direct elimination:
        # let x = alpha/a, y = beta/b, g = gamma/c:
        # x - i y = z1 ; y - i g = z2 ; -i x + g = z3
        # => x = z1 + i y ; g = z3 + i x ; y = z2 + i g
        # y = z2 + i z3 + i i x = z2 + i z3 - x  =>  x - i(z2 + i z3 - x) = z1
        # x(1 + i) = z1 + i z2 - z3  =>  x = (z1 + i z2 - z3)/(1 + i)
        x = (z1 + 1j * z2 - z3) / (1 + 1j)
        g = z3 + 1j * x
        y = z2 + 1j * g
        alpha, beta, gamma = x * a, y * b, g * c
        return (alpha[..., None] * self.u + beta[..., None] * self.v
                + gamma[..., None] * self.fvals)

    def cross_values(self) -> np.ndarray:
        """Bil_psi(h, e1)(zeta): the coefficient of g in psi(h + g e1)."""
        h = self.h_values()
        zh = self._z_of(h)
        e1 = np.zeros_like(h)
        e1[..., 0] = 1.0
        zb = self._z_of(e1)
        # bilinear polarization of spinor_pi
        x1, x2 = zh[..., 0], zh[..., 1]
        y1, y2 = zb[..., 0], zb[..., 1]
        bil = np.stack([
            2 * (x1 * y1 - x2 * y2),
            2 * (x1 * y2 + x2 * y1),
            -2j * (x1 * y1 + x2 * y2),
        ], axis=-1)
        return self._from_quadric_coords(bil)

    def fit(self, values: np.ndarray, what: str,
            residual_rel: float = LIFT_RESIDUAL_REL) -> VectorLaurent:
        """Refit grid values (rings, m, k) to a window from the boundary ring."""
        vl = _fit_boundary_ring(values[-1], keep_negative=False)
        res = max(
            np.abs(vl.eval_on_circle(r, self.m) - values[k]).max()
            for k, r in enumerate(self.radii))
        scale = max(np.abs(values).max(), 1e-300)
        if res > residual_rel * scale:
            raise FitError(f"{what}: refit residual {res:.2e} > "
                           f"{residual_rel:.0e} * {scale:.2e}")
        return vl

    def grid_eval(self, vl: VectorLaurent) -> np.ndarray:
        """Evaluate a window object on the full ring grid, shape (rings, m, k)."""
        return np.stack([vl.eval_on_circle(r, self.m) for r in self.radii])


def lift_via_psi(f: VectorLaurent, u, v, samples: int | None = None) -> VectorLaurent:
    """h with psi_{f(zeta)}(h(zeta)) = f(zeta), refit and verified on the grid."""
    field_ = PsiFrameField(f, u, v, samples)
    h = field_.fit(field_.h_values(), "psi lift")
    res = np.linalg.norm(field_.psi_apply(field_.grid_eval(h)) - field_.fvals,
                         axis=-1).max()
    if res > LIFT_RESIDUAL_REL * field_.sup_f:
        raise FitError(f"psi lift verification residual {res:.2e} exceeds "
                       f"{LIFT_RESIDUAL_REL:.0e} * sup|f|")
    return h
