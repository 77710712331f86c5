"""Laurent-window arithmetic on the closed disc and boundary-data fitting.

Everything downstream (null-disc deformation, boundary pushes) is polynomial
algebra on finite coefficient windows: a map holomorphic on the punctured
plane with its only pole at 0 is stored as a contiguous block of coefficients
``c_j`` for exponents ``j in [jmin, jmax]``.  The module also turns sampled
boundary data ``eta(zeta, xi)`` into the rational normal form
``sum_j B_j(zeta) xi^j`` with a grid-audited sup-error estimate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ApproximationError,
    DimensionError,
    DomainError,
    ResidueError,
)

RESIDUE_TOL = 1e-14
DEFAULT_FIT_TOL = 1e-8
DEFAULT_MAX_WINDOW = 256


def _conv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Polynomial product of two coefficient blocks (FFT above crossover)."""
    n = len(a) + len(b) - 1
    if min(len(a), len(b)) <= 64 or n <= 1024:
        return np.convolve(a, b)
    nf = 1 << (n - 1).bit_length()
    out = np.fft.ifft(np.fft.fft(a, nf) * np.fft.fft(b, nf))[:n]
    return out


class LaurentPoly:
    """p(zeta) = sum_{j=jmin}^{jmax} c_j zeta^j with a dense window."""

    __slots__ = ("jmin", "coeffs")

    def __init__(self, jmin: int, coeffs):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim != 1 or len(coeffs) == 0:
            raise ValueError("coeffs must be a nonempty 1-d array")
        # trim exact-zero margins so jmin reflects the true window
        nz = np.flatnonzero(coeffs)
        if len(nz) == 0:
            jmin, coeffs = 0, np.zeros(1, dtype=complex)
        else:
            coeffs = coeffs[nz[0]:nz[-1] + 1].copy()
            jmin = jmin + int(nz[0])
        self.jmin = int(jmin)
        self.coeffs = coeffs

    # -- constructors ---------------------------------------------------
    @staticmethod
    def zero() -> "LaurentPoly":
        return LaurentPoly(0, [0.0])

    @staticmethod
    def constant(c) -> "LaurentPoly":
        return LaurentPoly(0, [c])

    @staticmethod
    def monomial(j: int, c=1.0) -> "LaurentPoly":
        return LaurentPoly(j, [c])

    @staticmethod
    def from_dict(d: dict) -> "LaurentPoly":
        if not d:
            return LaurentPoly.zero()
        lo, hi = min(d), max(d)
        arr = np.zeros(hi - lo + 1, dtype=complex)
        for j, c in d.items():
            arr[j - lo] = c
        return LaurentPoly(lo, arr)

    # -- structure ------------------------------------------------------
    @property
    def jmax(self) -> int:
        return self.jmin + len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and self.coeffs[0] == 0

    @property
    def has_pole(self) -> bool:
        return self.jmin < 0

    def __repr__(self):
        return f"LaurentPoly(jmin={self.jmin}, jmax={self.jmax})"

    def copy(self) -> "LaurentPoly":
        return LaurentPoly(self.jmin, self.coeffs.copy())

    def coeff(self, j: int) -> complex:
        if self.jmin <= j <= self.jmax:
            return complex(self.coeffs[j - self.jmin])
        return 0.0 + 0.0j

    # -- algebra ----------------------------------------------------------
    def _aligned(self, other: "LaurentPoly"):
        lo = min(self.jmin, other.jmin)
        hi = max(self.jmax, other.jmax)
        a = np.zeros(hi - lo + 1, dtype=complex)
        b = np.zeros(hi - lo + 1, dtype=complex)
        a[self.jmin - lo:self.jmax - lo + 1] = self.coeffs
        b[other.jmin - lo:other.jmax - lo + 1] = other.coeffs
        return lo, a, b

    def __add__(self, other):
        if np.isscalar(other):
            other = LaurentPoly.constant(other)
        lo, a, b = self._aligned(other)
        return LaurentPoly(lo, a + b)

    __radd__ = __add__

    def __sub__(self, other):
        if np.isscalar(other):
            other = LaurentPoly.constant(other)
        lo, a, b = self._aligned(other)
        return LaurentPoly(lo, a - b)

    def __neg__(self):
        return LaurentPoly(self.jmin, -self.coeffs)

    def __mul__(self, other):
        if np.isscalar(other):
            return LaurentPoly(self.jmin, self.coeffs * other)
        return LaurentPoly(self.jmin + other.jmin, _conv(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def shift(self, k: int) -> "LaurentPoly":
        """Multiply by zeta^k."""
        return LaurentPoly(self.jmin + k, self.coeffs)

    def derivative(self) -> "LaurentPoly":
        j = self.jmin + np.arange(len(self.coeffs))
        return LaurentPoly(self.jmin - 1, self.coeffs * j)

    def antiderivative(self, residue_tol: float = RESIDUE_TOL) -> "LaurentPoly":
        """Coefficient-wise antiderivative; see antiderivative_from_zero."""
        j = self.jmin + np.arange(len(self.coeffs))
        res = self.coeff(-1)
        if abs(res) > residue_tol:
            raise ResidueError(
                f"zeta^-1 coefficient {abs(res):.3e} exceeds {residue_tol:.1e}; "
                "no single-valued antiderivative")
        c = self.coeffs.copy()
        if -1 in j:
            c[-1 - self.jmin] = 0.0
        jj = np.where(j == -1, 1, j + 1)
        return LaurentPoly(self.jmin + 1, c / jj)

    # -- evaluation -------------------------------------------------------
    def __call__(self, z):
        return self.eval(z)

    @staticmethod
    def _poly_eval(block: np.ndarray, z: np.ndarray) -> np.ndarray:
        """sum_k block[k] z^k; plain Horner, or blocked Vandermonde for
        long windows on many points (BLAS matvec per 512-coefficient chunk)."""
        if len(block) <= 1024:
            acc = np.zeros_like(z)
            for c in block[::-1]:
                acc = acc * z + c
            return acc
        chunk = 512
        v = np.empty((len(z), chunk), dtype=complex)
        v[:, 0] = 1.0
        v[:, 1:] = z[:, None]
        np.multiply.accumulate(v, axis=1, out=v)
        z_chunk = v[:, -1] * z
        acc = np.zeros_like(z)
        for s in range(((len(block) - 1) // chunk) * chunk, -1, -chunk):
            blk = block[s:s + chunk]
            acc = acc * z_chunk + v[:, :len(blk)] @ blk
        return acc

    def eval(self, z):
        """Evaluation; positive and negative windows separately."""
        z = np.asarray(z, dtype=complex)
        scalar = z.ndim == 0
        z = np.atleast_1d(z)
        if self.jmin < 0 and np.any(z == 0):
            raise DomainError("evaluation at z=0 with negative exponents present")
        out = np.zeros_like(z)
        if self.jmax >= 0:
            lo = max(self.jmin, 0)
            acc = self._poly_eval(self.coeffs[lo - self.jmin:], z)
            if lo > 0:
                acc = acc * z ** lo
            out += acc
        if self.jmin < 0:
            hi = min(self.jmax, -1)
            block = self.coeffs[:hi - self.jmin + 1]   # exponents jmin..hi
            zin = 1.0 / z
            acc = self._poly_eval(block[::-1], zin)
            acc = acc * zin ** (-hi)
            out += acc
        return out[0] if scalar else out

    def eval_banded(self, z, rel_tol: float = 1e-15):
        """Evaluation with radius-banded window pruning.

        For points well inside the disc the high-degree tail of a long window
        contributes below ``rel_tol`` of the crude coefficient bound and is
        skipped; boundary points fall back to the full window.
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if len(self.coeffs) < 512:
            return self.eval(z)
        out = np.empty_like(z)
        r = np.abs(z)
        edges = np.quantile(r, np.linspace(0, 1, 9))
        edges[-1] = np.nextafter(edges[-1], np.inf)
        mags = np.abs(self.coeffs)
        j = self.jmin + np.arange(len(self.coeffs))
        for k in range(8):
            sel = (r >= edges[k]) & (r < edges[k + 1])
            if not sel.any():
                continue
            rmax = r[sel].max()
            w = mags * np.power(max(rmax, 1e-300), j.astype(float))
            total = w.sum()
            if total == 0:
                out[sel] = 0.0
                continue
            tail_hi = np.cumsum(w[::-1])[::-1]
            hi = int(np.searchsorted(-tail_hi, -rel_tol * total))
            hi = min(max(hi, 1), len(w))
            lo = 0
            if self.jmin < 0:
                tail_lo = np.cumsum(w)
                lo = int(np.searchsorted(tail_lo, rel_tol * total))
                lo = min(lo, hi - 1)
            sub = LaurentPoly(self.jmin + lo, self.coeffs[lo:hi])
            out[sel] = sub.eval(z[sel])
        return out

    def eval_on_circle(self, rho: float, m: int, theta0: float = 0.0) -> np.ndarray:
        """Values at rho*exp(i(theta0 + 2 pi k/m)), k=0..m-1, via folding."""
        j = self.jmin + np.arange(len(self.coeffs))
        if rho == 0:
            if self.jmin < 0:
                raise DomainError("circle of radius 0 with a pole at 0")
            return np.full(m, self.coeff(0), dtype=complex)
        radial = np.power(float(rho), j.astype(float))
        vals = self.coeffs * radial * np.exp(1j * theta0 * j)
        acc = np.zeros(m, dtype=complex)
        np.add.at(acc, np.mod(j, m), vals)
        # sum_k acc[k] e^{2 pi i k q / m} = m * ifft(acc)[q]
        return np.fft.ifft(acc) * m

    def sup_on_circle(self, rho: float, m: int = 1024) -> float:
        return float(np.abs(self.eval_on_circle(rho, m)).max())

    def l1_norm(self) -> float:
        return float(np.abs(self.coeffs).sum())


class VectorLaurent:
    """Ordered n-tuple of LaurentPoly sharing an ambient dimension."""

    __slots__ = ("components",)

    def __init__(self, components: Sequence[LaurentPoly]):
        components = list(components)
        if not components:
            raise DimensionError("need at least one component")
        self.components = components

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def jmin(self) -> int:
        return min(p.jmin for p in self.components)

    @property
    def jmax(self) -> int:
        return max(p.jmax for p in self.components)

    @property
    def has_pole(self) -> bool:
        return self.jmin < 0

    def __repr__(self):
        return f"VectorLaurent(n={self.n}, jmin={self.jmin}, jmax={self.jmax})"

    @staticmethod
    def constant(vec) -> "VectorLaurent":
        return VectorLaurent([LaurentPoly.constant(c) for c in vec])

    @staticmethod
    def from_coeff_matrix(jmin: int, mat) -> "VectorLaurent":
        """mat[k, i] = coefficient of zeta^(jmin+k) in component i."""
        mat = np.asarray(mat, dtype=complex)
        return VectorLaurent([LaurentPoly(jmin, mat[:, i]) for i in range(mat.shape[1])])

    def __getitem__(self, i: int) -> LaurentPoly:
        return self.components[i]

    def _check(self, other: "VectorLaurent"):
        if self.n != other.n:
            raise DimensionError(f"dimension mismatch {self.n} != {other.n}")

    def __add__(self, other):
        self._check(other)
        return VectorLaurent([a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other):
        self._check(other)
        return VectorLaurent([a - b for a, b in zip(self.components, other.components)])

    def __mul__(self, scalar):
        if isinstance(scalar, LaurentPoly):
            return VectorLaurent([p * scalar for p in self.components])
        return VectorLaurent([p * scalar for p in self.components])

    __rmul__ = __mul__

    def shift(self, k: int) -> "VectorLaurent":
        return VectorLaurent([p.shift(k) for p in self.components])

    def derivative(self) -> "VectorLaurent":
        return VectorLaurent([p.derivative() for p in self.components])

    def antiderivative(self, residue_tol: float = RESIDUE_TOL) -> "VectorLaurent":
        return VectorLaurent([p.antiderivative(residue_tol) for p in self.components])

    def __call__(self, z):
        return self.eval(z)

    def eval(self, z):
        """Returns shape (..., n)."""
        z = np.asarray(z, dtype=complex)
        scalar = z.ndim == 0
        za = np.atleast_1d(z)
        out = np.stack([p.eval(za) for p in self.components], axis=-1)
        return out[0] if scalar else out

    def eval_banded(self, z, rel_tol: float = 1e-15):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return np.stack([p.eval_banded(z, rel_tol) for p in self.components], axis=-1)

    def eval_on_circle(self, rho: float, m: int, theta0: float = 0.0) -> np.ndarray:
        """Shape (m, n)."""
        return np.stack(
            [p.eval_on_circle(rho, m, theta0) for p in self.components], axis=-1)

    def norm_on_circle(self, rho: float, m: int = 1024) -> np.ndarray:
        return np.linalg.norm(self.eval_on_circle(rho, m), axis=-1)

    def sup_norm_grid(self, radii=None, m: int = 1024) -> float:
        if radii is None:
            radii = np.linspace(0.05, 1.0, 12)
        return float(max(self.norm_on_circle(r, m).max() for r in radii))

    def min_norm_grid(self, radii=None, m: int = 1024) -> float:
        if radii is None:
            radii = np.linspace(0.05, 1.0, 12)
        return float(min(self.norm_on_circle(r, m).min() for r in radii))


# -- spec-surface wrappers -------------------------------------------------

def eval_poly(p, z):
    """Evaluate a LaurentPoly or VectorLaurent at z."""
    return p.eval(z)


def antiderivative_from_zero(p, residue_tol: float = RESIDUE_TOL):
    """Antiderivative q with q' = p and q(0) = 0 (when 0 is in the domain).

    Coefficients c_j map to c_j/(j+1).  A zeta^{-1} coefficient above
    ``residue_tol`` raises ResidueError.  Exponents <= -2 integrate to
    negative exponents: the result then carries ``has_pole`` (the base point
    is excluded) and pipeline callers must refuse it.
    """
    return p.antiderivative(residue_tol)


# -- boundary grids and rational fitting ------------------------------------

def _check_grid_m(m: int):
    if m < 16 or (m & (m - 1)) != 0:
        raise ValueError(f"boundary grid size {m} must be a power of two >= 16")


@dataclass
class BoundaryGrid:
    """Equispaced samples on the unit circle, optionally with xi-Taylor rows.

    values      : (m,) or (m, n) complex samples of a boundary function
    xi_taylor   : (m, d+1) or (m, d+1, n) Taylor coefficients in xi, per sample
    sampler     : optional callable(zeta_array) returning rows/values at fresh
                  points; enables refined-grid error audits beyond the stored m
    """

    values: np.ndarray | None = None
    xi_taylor: np.ndarray | None = None
    sampler: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.values is None and self.xi_taylor is None:
            raise ValueError("BoundaryGrid needs values or xi_taylor")
        if self.values is not None:
            self.values = np.asarray(self.values)
            _check_grid_m(self.values.shape[0])
        if self.xi_taylor is not None:
            self.xi_taylor = np.asarray(self.xi_taylor)
            _check_grid_m(self.xi_taylor.shape[0])
            if self.xi_taylor.shape[1] < 2:
                raise ValueError("xi_taylor must carry xi-degree d >= 1")

    @property
    def m(self) -> int:
        arr = self.values if self.values is not None else self.xi_taylor
        return arr.shape[0]

    def zetas(self) -> np.ndarray:
        return np.exp(2j * np.pi * np.arange(self.m) / self.m)

    def rows(self) -> np.ndarray:
        """Canonical (m, d+1, ncomp) array (values become degree-0 rows)."""
        if self.xi_taylor is not None:
            t = self.xi_taylor
            return t[:, :, None] if t.ndim == 2 else t
        v = np.asarray(self.values, dtype=complex)
        v = v[:, None] if v.ndim == 1 else v
        return v[:, None, :]

    @staticmethod
    def from_function(fn: Callable[[np.ndarray], np.ndarray], m: int) -> "BoundaryGrid":
        """Scalar/vector boundary samples from a callable on zeta arrays."""
        _check_grid_m(m)
        z = np.exp(2j * np.pi * np.arange(m) / m)
        return BoundaryGrid(values=np.asarray(fn(z)), sampler=fn)

    @staticmethod
    def from_taylor_function(fn: Callable[[np.ndarray], np.ndarray], m: int) -> "BoundaryGrid":
        """xi-Taylor rows from a callable returning (len(z), d+1[, n])."""
        _check_grid_m(m)
        z = np.exp(2j * np.pi * np.arange(m) / m)
        return BoundaryGrid(xi_taylor=np.asarray(fn(z)), sampler=fn)


def fourier_coefficients(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exponents and coefficients of the full-window interpolant.

    samples has shape (m, ...); returns (expo (m,), coef (m, ...)) with
    exponents in [-m/2, m/2).
    """
    m = samples.shape[0]
    coef = np.fft.fft(samples, axis=0) / m
    idx = np.arange(m)
    expo = np.where(idx < m // 2, idx, idx - m)
    return expo, coef


def trig_interpolate(samples: np.ndarray, zetas: np.ndarray) -> np.ndarray:
    """Evaluate the full-window trigonometric interpolant at |zeta|=1 points."""
    expo, coef = fourier_coefficients(samples)
    zetas = np.asarray(zetas, dtype=complex)
    out = np.zeros(zetas.shape + samples.shape[1:], dtype=complex)
    # chunk over modes to bound memory
    for s in range(0, len(expo), 512):
        e = expo[s:s + 512]
        basis = zetas[..., None] ** e          # (..., chunk)
        out += np.tensordot(basis, coef[s:s + 512], axes=([-1], [0]))
    return out


def rationalize_boundary_map(
    g: BoundaryGrid,
    tol: float = DEFAULT_FIT_TOL,
    max_window: int = DEFAULT_MAX_WINDOW,
):
    """Fit eta(zeta, xi) ~ sum_{j=0}^{d} B_j(zeta) xi^j.

    Each B_j is the Fourier fit (in zeta) of the j-th xi-Taylor coefficient,
    truncated at the smallest symmetric window meeting ``tol``.  The reported
    error is measured on a 2x-refined zeta grid (fresh samples when the grid
    carries a sampler, spectral interpolation otherwise) and bounds
    sup_{T x D} |eta - fit| by sum_j sup_zeta |b_j - B_j|.

    Returns (list of B_j, err_estimate); B_j are LaurentPoly for scalar grids
    and VectorLaurent otherwise.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    rows = np.ascontiguousarray(g.rows(), dtype=complex)   # (m, d+1, nc)
    m, dd, nc = rows.shape
    scalar = (g.xi_taylor is None and np.asarray(g.values).ndim == 1) or \
             (g.xi_taylor is not None and g.xi_taylor.ndim == 2)
    if not np.all(np.isfinite(rows)):
        raise ValueError("boundary data must be finite everywhere")

    expo, coef = fourier_coefficients(rows)                 # coef: (m, d+1, nc)

    m2 = 2 * m
    z2 = np.exp(2j * np.pi * np.arange(m2) / m2)
    if g.sampler is not None:
        truth = np.asarray(g.sampler(z2), dtype=complex)
        if truth.ndim == 1:
            truth = truth[:, None, None]
        elif truth.ndim == 2:
            truth = truth[:, :, None] if g.xi_taylor is not None else truth[:, None, :]
    else:
        # spectral refinement of the stored samples (Nyquist mode split)
        pad = np.zeros((m2, dd, nc), dtype=complex)
        fft_rows = np.fft.fft(rows, axis=0)
        half = m // 2
        pad[:half] = fft_rows[:half]
        pad[m2 - half + 1:] = fft_rows[half + 1:]
        pad[half] = fft_rows[half] / 2
        pad[m2 - half] = fft_rows[half] / 2
        truth = np.fft.ifft(pad, axis=0) * 2

    wmax = min(max_window, m // 2 - 1)

    def fit_values(w):
        # window-w fit evaluated on the refined grid via zero-padded FFT
        pad = np.zeros((m2, dd, nc), dtype=complex)
        keep = np.abs(expo) <= w
        for k in np.flatnonzero(keep):
            pad[expo[k] % m2] += coef[k]
        return np.fft.ifft(pad, axis=0) * m2

    def err_at(w):
        # sum over xi-degrees of the euclidean norm over components
        resid = truth - fit_values(w)
        return float(np.linalg.norm(resid, axis=2).sum(axis=1).max())

    # geometric growth to bracket, then binary search for the smallest
    # passing symmetric window (error is monotone for decaying spectra)
    best_w, err = None, None
    w = 1
    lo = 0
    while True:
        w = min(w, wmax)
        err = err_at(w)
        if err <= tol:
            best_w = w
            break
        if w >= wmax:
            raise ApproximationError(
                f"rationalize: tol={tol:.2e} unreachable at window {wmax} "
                f"(achieved {err:.2e}); data too rough for this grid")
        lo = w
        w *= 2
    while best_w > lo + 1:
        mid = (best_w + lo) // 2
        if err_at(mid) <= tol:
            best_w = mid
        else:
            lo = mid
    if best_w > 0 and err_at(best_w - 1) <= tol:
        best_w -= 1
    if best_w == 1 and err_at(0) <= tol:
        best_w = 0
    err = err_at(best_w)

    # assemble B_j from kept modes
    keep = np.abs(expo) <= best_w
    out = []
    for j in range(dd):
        mats = np.zeros((2 * best_w + 1, nc), dtype=complex)
        for k in np.flatnonzero(keep):
            mats[expo[k] + best_w] += coef[k, j]
        if scalar:
            out.append(LaurentPoly(-best_w, mats[:, 0]))
        else:
            out.append(VectorLaurent.from_coeff_matrix(-best_w, mats))
    return out, err


# -- JSON round trip ---------------------------------------------------------

def vector_to_json(v: VectorLaurent) -> dict:
    return {
        "n": v.n,
        "components": [
            {"jmin": p.jmin, "coeffs": [[float(c.real), float(c.imag)] for c in p.coeffs]}
            for p in v.components
        ],
    }


def vector_from_json(d: dict) -> VectorLaurent:
    comps = []
    for c in d["components"]:
        arr = np.array([complex(re, im) for re, im in c["coeffs"]], dtype=complex)
        comps.append(LaurentPoly(int(c["jmin"]), arr if len(arr) else [0.0]))
    v = VectorLaurent(comps)
    if v.n != d["n"]:
        raise DimensionError("component count disagrees with declared n")
    return v


def dumps_vector(v: VectorLaurent) -> str:
    return json.dumps(vector_to_json(v), sort_keys=True)


def loads_vector(s: str) -> VectorLaurent:
    return vector_from_json(json.loads(s))
