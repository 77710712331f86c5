"""Weierstrass calculus: between an immersion and its derivative data.

A conformal minimal immersion of the closed disc (or an annulus) into R^n is
stored as the coefficient window of its complex derivative ``phi`` together
with a base value; the map itself is ``F(z) = base + Re Int_0^z phi``.  The
complex-valued variant (no real-part projection) stores null holomorphic
discs for the deformation solvers.  The module also measures the three
structural quantities: the Hopf residual (conformality), loop flux, and the
pointwise conformal factor of the pulled-back metric.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PeriodError
from .series import VectorLaurent, vector_from_json, vector_to_json

HOPF_TOL = 1e-8
IMMERSED_TOL = 1e-6
PERIOD_TOL = 1e-10


@dataclass
class ImmersionDisc:
    """Derivative window + base value of a (null) conformal immersion.

    phi            : VectorLaurent, the derivative dF/dzeta (with theta = dzeta)
    base           : F at the base point (0 on the disc, the positive-axis
                     mid-circle point on an annulus)
    domain         : "disc" | "annulus"
    rho_in         : inner radius for the annulus
    complex_valued : True for null holomorphic discs F: D -> C^n (no Re)
    """

    phi: VectorLaurent
    base: np.ndarray
    domain: str = "disc"
    rho_in: float | None = None
    complex_valued: bool = False
    _antider: VectorLaurent | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.base = np.asarray(self.base,
                               dtype=complex if self.complex_valued else float)
        if self.domain not in ("disc", "annulus"):
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.domain == "annulus":
            if not (self.rho_in and 0 < self.rho_in < 1):
                raise ValueError("annulus needs rho_in in (0,1)")
        elif self.phi.has_pole:
            raise DomainError("disc-domain phi cannot carry negative exponents")

    @property
    def n(self) -> int:
        return self.phi.n

    # -- sampling grids -------------------------------------------------------
    def grid_radii(self, rings: int = 12) -> np.ndarray:
        # the disc grid includes the center so interior zeros of phi are seen
        lo = self.rho_in if self.domain == "annulus" else 0.0
        return np.linspace(lo, 1.0, rings)

    def sup_phi(self, m: int = 1024) -> float:
        return float(max(self.phi.norm_on_circle(r, m).max() for r in self.grid_radii()))

    def min_phi(self, m: int = 1024) -> float:
        return float(min(self.phi.norm_on_circle(r, m).min() for r in self.grid_radii()))

    def validate(self, m: int = 1024) -> dict:
        """Gate the structural invariants; returns the measured numbers."""
        sup = self.sup_phi(m)
        mn = self.min_phi(m)
        hopf = hopf_residual(self, m)
        if hopf > HOPF_TOL:
            raise DomainError(f"Hopf residual {hopf:.2e} > {HOPF_TOL:.0e}: not conformal")
        if mn < IMMERSED_TOL * sup:
            raise DomainError(f"min|phi| = {mn:.2e} < {IMMERSED_TOL:.0e} * sup: not immersed")
        report = {"sup_phi": sup, "min_phi": mn, "hopf_residual": hopf}
        if self.domain == "annulus":
            per = np.abs(np.real(2j * np.pi * self._residue_coeff())).max()
            if not self.complex_valued and per > PERIOD_TOL * max(1.0, sup):
                raise PeriodError(f"real period {per:.2e} on the core circle")
            report["real_period"] = per
        return report

    # -- integration ----------------------------------------------------------
    def _residue_coeff(self) -> np.ndarray:
        return np.array([p.coeff(-1) for p in self.phi.components])

    def antiderivative_regular(self) -> VectorLaurent:
        """Antiderivative of phi with any zeta^{-1} terms removed (logged apart)."""
        if self._antider is None:
            comps = []
            for p in self.phi.components:
                q = p.copy()
                if q.jmin <= -1 <= q.jmax:
                    q.coeffs[-1 - q.jmin] = 0.0
                comps.append(q.antiderivative(residue_tol=np.inf))
            self._antider = VectorLaurent(comps)
        return self._antider

    def _base_point(self) -> complex:
        return 0.0 if self.domain == "disc" else (self.rho_in + 1.0) / 2.0

    def _log_term(self, z):
        """c_{-1} * (log|z/p0| + i arg z) along the arc-then-radial path."""
        res = self._residue_coeff()
        if not np.any(res):
            return 0.0
        p0 = self._base_point()
        z = np.asarray(z, dtype=complex)
        lg = np.log(np.abs(z) / p0) + 1j * np.angle(z)
        return np.multiply.outer(lg, res)

    def complex_integral(self, z, banded: bool = False) -> np.ndarray:
        """Int_{p0}^{z} phi dzeta along the declared path, exactly."""
        q = self.antiderivative_regular()
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        vals = q.eval_banded(z) if banded else q.eval(z)
        p0 = self._base_point()
        if self.domain == "annulus":
            vals = vals - q.eval(np.array([p0]))[0][None, :]
            vals = vals + self._log_term(z)
        return vals

    def F(self, z, banded: bool = False) -> np.ndarray:
        """The immersion at points z; real part unless complex_valued."""
        z = np.asarray(z, dtype=complex)
        scalar = z.ndim == 0
        vals = self.complex_integral(np.atleast_1d(z), banded=banded)
        out = self.base[None, :] + (vals if self.complex_valued else np.real(vals))
        return out[0] if scalar else out

    def F_on_circle(self, rho: float, m: int) -> np.ndarray:
        q = self.antiderivative_regular()
        vals = q.eval_on_circle(rho, m)
        p0 = self._base_point()
        if self.domain == "annulus":
            th = 2 * np.pi * np.arange(m) / m
            th = np.where(th > np.pi, th - 2 * np.pi, th)  # principal angles
            z = rho * np.exp(1j * th)
            vals = vals - q.eval(np.array([p0]))[0][None, :] + self._log_term(z)
        return self.base[None, :] + (vals if self.complex_valued else np.real(vals))

    def as_complex(self) -> "ImmersionDisc":
        """The null holomorphic disc with the same derivative data."""
        if self.complex_valued:
            return self
        return ImmersionDisc(self.phi, self.base.astype(complex), self.domain,
                             self.rho_in, complex_valued=True)

    def as_real(self, base=None) -> "ImmersionDisc":
        if not self.complex_valued:
            return self
        return ImmersionDisc(self.phi, np.real(self.base) if base is None else base,
                             self.domain, self.rho_in, complex_valued=False)

    def to_json(self) -> dict:
        return {
            "phi": vector_to_json(self.phi),
            "base": [[float(np.real(b)), float(np.imag(b))] for b in self.base],
            "domain": self.domain,
            "rho_in": self.rho_in,
            "complex": self.complex_valued,
        }

    @staticmethod
    def from_json(d: dict) -> "ImmersionDisc":
        base = np.array([complex(re, im) for re, im in d["base"]])
        if not d["complex"]:
            base = np.real(base)
        return ImmersionDisc(vector_from_json(d["phi"]), base, d["domain"],
                             d.get("rho_in"), complex_valued=d["complex"])


@dataclass
class FluxVector:
    """Imaginary loop period per homology generator (one on the annulus)."""

    value: np.ndarray

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=float)


def integrate_real_part(phi: VectorLaurent, base, z, domain: str = "disc",
                        rho_in: float | None = None) -> np.ndarray:
    """F(z) = base + Re Int phi along the declared path.

    On the annulus the real part must be path independent; the full-loop real
    period is checked against PERIOD_TOL (the second path differs from the
    first by the core loop).
    """
    imm = ImmersionDisc(phi, base, domain, rho_in, complex_valued=False)
    if domain == "annulus":
        per = np.abs(np.real(2j * np.pi * imm._residue_coeff())).max()
        scale = max(1.0, imm.sup_phi(256))
        if per > 1e-9 * scale:
            raise PeriodError(f"real part is path dependent: loop period {per:.2e}")
    return imm.F(z)


def hopf_residual(imm: ImmersionDisc, grid: int = 1024) -> float:
    """sup |Theta(phi, phi)| / sup ||phi||^2 over the sampling grid."""
    sup2 = 0.0
    worst = 0.0
    for r in imm.grid_radii():
        vals = imm.phi.eval_on_circle(r, grid)
        worst = max(worst, np.abs(np.sum(vals * vals, axis=-1)).max())
        sup2 = max(sup2, (np.abs(vals) ** 2).sum(axis=-1).max())
    return worst / max(sup2, 1e-300)


def flux_loop(imm: ImmersionDisc, loop_radius: float, quad_points: int = 1024) -> FluxVector:
    """Trapezoidal Im of the loop integral of phi, residue-cross-checked."""
    if quad_points < 256:
        raise ValueError("quad_points must be >= 256")
    if imm.domain == "annulus" and not (imm.rho_in < loop_radius < 1.0):
        raise DomainError("loop must lie inside the annulus")
    vals = imm.phi.eval_on_circle(loop_radius, quad_points)
    z = loop_radius * np.exp(2j * np.pi * np.arange(quad_points) / quad_points)
    integral = np.sum(vals * (1j * z)[:, None], axis=0) * (2 * np.pi / quad_points)
    exact = 2j * np.pi * imm._residue_coeff()
    scale = max(1.0, float(np.abs(vals).max()))
    mismatch = np.abs(integral - exact).max()
    if mismatch > 1e-10 * scale * quad_points:
        raise PeriodError(f"trapezoid vs residue mismatch {mismatch:.2e}")
    return FluxVector(np.imag(exact))


def conformal_factor(imm: ImmersionDisc, z) -> float | np.ndarray:
    """Length scale lambda with ds = lambda |dz|: ||phi(z)|| / sqrt(2).

    The constant is pinned by the finite-difference oracle
    ||F(z+h) - F(z)|| / |h| -> lambda(z); see the metric tests.
    """
    vals = np.linalg.norm(np.atleast_2d(imm.phi.eval(z)), axis=-1) / np.sqrt(2.0)
    return float(vals[0]) if np.ndim(z) == 0 else vals
