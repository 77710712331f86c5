"""Canonical immersions, bumps, and problem builders used by the CLI and tests."""

from __future__ import annotations

import numpy as np

from .rhsolver import ArcSpec, ConstantDirection, RhProblem
from .series import BoundaryGrid, LaurentPoly, VectorLaurent
from .weierstrass import ImmersionDisc


def plane_immersion(scale: float = 1.0, n: int = 3, base=None,
                    complex_valued: bool = False) -> ImmersionDisc:
    """F(zeta) = base + scale (Re zeta, Im zeta, 0, ...): the flat disc."""
    comps = [LaurentPoly.constant(scale), LaurentPoly.constant(1j * scale)]
    comps += [LaurentPoly.zero() for _ in range(n - 2)]
    base = np.zeros(n) if base is None else np.asarray(base, dtype=float)
    return ImmersionDisc(VectorLaurent(comps),
                         base.astype(complex) if complex_valued else base,
                         complex_valued=complex_valued)


def catenoid_immersion(rho_in: float = 0.25) -> ImmersionDisc:
    """The catenoid on an annulus; flux (0, 0, 2 pi) around the core circle."""
    phi = VectorLaurent([
        LaurentPoly(-2, [0.5, 0, -0.5]),
        LaurentPoly(-2, [0.5j, 0, 0.5j]),
        LaurentPoly(-1, [1.0]),
    ])
    return ImmersionDisc(phi, np.zeros(3), domain="annulus", rho_in=rho_in)


def bump_profile(theta, center: float, half_width: float, amplitude: float = 1.0):
    """Smooth size-function bump: amplitude * Hann^4, so sqrt(r) is C^1-smooth.

    Supported on |theta - center| <= half_width (mod 2 pi).
    """
    theta = np.asarray(theta, dtype=float)
    x = ((theta - center + np.pi) % (2 * np.pi)) - np.pi
    out = np.zeros_like(x)
    mask = np.abs(x) <= half_width
    h = 0.5 * (1 + np.cos(np.pi * x[mask] / half_width))
    out[mask] = amplitude * h ** 4
    return out


def bump_grid(m: int, center: float, half_width: float,
              amplitude: float = 1.0) -> BoundaryGrid:
    def sampler(z):
        return bump_profile(np.angle(z), center, half_width, amplitude)

    th = 2 * np.pi * np.arange(m) / m
    return BoundaryGrid(values=bump_profile(th, center, half_width, amplitude),
                        sampler=sampler)


def linear_disc_sigma(direction, m: int) -> BoundaryGrid:
    """sigma(zeta, xi) = xi * direction as xi-Taylor rows (vector data)."""
    direction = np.asarray(direction, dtype=complex)

    def sampler(z):
        rows = np.zeros((len(z), 2, len(direction)), dtype=complex)
        rows[:, 1, :] = direction
        return rows

    z0 = np.exp(2j * np.pi * np.arange(m) / m)
    return BoundaryGrid(xi_taylor=sampler(z0), sampler=sampler)


def scalar_linear_sigma(m: int) -> BoundaryGrid:
    """sigma(zeta, xi) = xi as scalar xi-Taylor rows."""

    def sampler(z):
        rows = np.zeros((len(z), 2), dtype=complex)
        rows[:, 1] = 1.0
        return rows

    z0 = np.exp(2j * np.pi * np.arange(m) / m)
    return BoundaryGrid(xi_taylor=sampler(z0), sampler=sampler)


def spinor_disc_problem(eps: float = 0.05, rho0: float = 0.9, m: int = 1024,
                        amplitude: float = 1.0) -> RhProblem:
    """The n = 3 regression problem: F' = (1, i, 0), bump r, sigma = xi (1,-i,0)."""
    center = plane_immersion(complex_valued=True)
    arc = ArcSpec(-np.pi / 4, np.pi / 4)
    return RhProblem(
        center=center,
        r=bump_grid(m, 0.0, np.pi / 4, amplitude),
        sigma=linear_disc_sigma([1.0, -1.0j, 0.0], m),
        eps=eps, rho0=rho0, arc=arc)


def admissible_quadruple_r4():
    """A documented admissible (F', u, v) for the n = 4 solver.

    F' = (1, i, 0, 0); u = (1, 0, i, 0); v = (1, 0, 0, i):
    all null, Theta(u, F') = 1, Theta(v, F') = 1, Theta(u, v) = 1.
    """
    u = np.array([1, 0, 1j, 0], dtype=complex)
    v = np.array([1, 0, 0, 1j], dtype=complex)
    center = plane_immersion(n=4, complex_valued=True)
    return center, u, v


def constant_direction_problem(n: int = 4, eps: float = 0.1, rho0: float = 0.9,
                               m: int = 1024, amplitude: float = 1.0) -> RhProblem:
    """Constant-direction problem at n = 3 or 4 with the bump size function."""
    if n == 4:
        center, u, v = admissible_quadruple_r4()
    elif n == 3:
        center = plane_immersion(complex_valued=True)
        u = np.array([1, -1j, 0], dtype=complex)   # Theta(u, F') = 2
        v = np.array([0, 1, 1j], dtype=complex)    # Theta(v, F') = i, Theta(u,v) = -i
    else:
        raise ValueError("presets cover n in {3, 4}")
    arc = ArcSpec(-np.pi / 4, np.pi / 4)
    return RhProblem(
        center=center,
        r=bump_grid(m, 0.0, np.pi / 4, amplitude),
        sigma=scalar_linear_sigma(m),
        eps=eps, rho0=rho0,
        mode=ConstantDirection(u, v), arc=arc)
