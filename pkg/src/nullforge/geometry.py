"""Discretization services: disc meshes, pullback distances, exports.

The mesh is a concentric-ring polar triangulation with a fan center; rings
share angles, so radial geodesics of radial metrics are represented exactly
and the refinement delta is an honest error bar for everything else.  Edge
weights are image lengths of the straight segments, computed by adaptive
chordal subdivision; the same routine backs ``curve_length``, which makes the
Dijkstra value and the recomputed witness-path length agree to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .weierstrass import ImmersionDisc

LENGTH_REL_TOL = 1e-6
GAP_MIN_SEPARATION = 2 * np.pi / 32


@dataclass
class DiscMesh:
    """Staggered polar triangulation of the closed unit disc."""

    n_r: int
    n_a: int
    vertices: np.ndarray          # (V,) complex, vertex 0 is the center
    triangles: np.ndarray         # (F, 3) int
    boundary: np.ndarray          # (n_a,) int, outermost ring

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def edges(self) -> np.ndarray:
        """Unique undirected edges as an (E, 2) index array."""
        t = self.triangles
        e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges()) + len(self.triangles)

    def interior_vertex_near(self, z: complex) -> int:
        """Index of the interior vertex closest to z."""
        d = np.abs(self.vertices - z)
        d[self.boundary] = np.inf
        return int(np.argmin(d))


def triangulate_disc(n_r: int, n_a: int) -> DiscMesh:
    """Concentric-ring mesh with fan center; 1 + n_r * n_a vertices."""
    if n_r < 4 or n_a < 16:
        raise ValueError("need n_r >= 4 and n_a >= 16")
    verts = [0.0 + 0.0j]
    for k in range(1, n_r + 1):
        theta = np.arange(n_a) * (2 * np.pi / n_a)
        verts.extend((k / n_r) * np.exp(1j * theta))
    verts = np.asarray(verts, dtype=complex)

    def idx(k, j):
        return 1 + (k - 1) * n_a + (j % n_a)

    tris = []
    for j in range(n_a):
        tris.append((0, idx(1, j), idx(1, j + 1)))
    for k in range(1, n_r):
        for j in range(n_a):
            a0, a1 = idx(k, j), idx(k, j + 1)
            b0, b1 = idx(k + 1, j), idx(k + 1, j + 1)
            tris.append((a0, b0, b1))
            tris.append((a0, b1, a1))
    boundary = np.array([idx(n_r, j) for j in range(n_a)])
    mesh = DiscMesh(n_r, n_a, verts, np.asarray(tris, dtype=int), boundary)
    areas = _triangle_areas(mesh)
    if areas.min() <= 1e-12:
        raise ValueError("degenerate triangle in mesh")
    return mesh


def _triangle_areas(mesh: DiscMesh) -> np.ndarray:
    v = mesh.vertices[mesh.triangles]
    a = v[:, 1] - v[:, 0]
    b = v[:, 2] - v[:, 0]
    return 0.5 * np.abs(a.real * b.imag - a.imag * b.real)


def segment_image_lengths(imm: ImmersionDisc, a: np.ndarray, b: np.ndarray,
                          rel_tol: float = LENGTH_REL_TOL,
                          max_depth: int = 14) -> np.ndarray:
    """Image lengths of segments [a_i, b_i] under F, adaptive chordal.

    All active segments share a subdivision level so the F evaluations batch;
    a segment retires once its length changed by < rel_tol at a doubling.
    """
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    m = len(a)
    lengths = np.linalg.norm(imm.F(b, banded=True) - imm.F(a, banded=True), axis=-1)
    active = np.ones(m, dtype=bool)
    segs = 1
    for _ in range(max_depth):
        if not active.any():
            break
        segs *= 2
        t = np.linspace(0.0, 1.0, segs + 1)
        ai, bi = a[active], b[active]
        pts = ai[:, None] * (1 - t)[None, :] + bi[:, None] * t[None, :]
        vals = imm.F(pts.ravel(), banded=True).reshape(len(ai), segs + 1, -1)
        new = np.linalg.norm(np.diff(vals, axis=1), axis=-1).sum(axis=1)
        old = lengths[active]
        conv = np.abs(new - old) <= rel_tol * np.maximum(new, 1e-300)
        lengths[active] = new
        idx = np.flatnonzero(active)
        active[idx[conv]] = False
    return lengths


def curve_length(imm: ImmersionDisc, polyline, rel_tol: float = LENGTH_REL_TOL) -> float:
    """Sum of adaptive chordal image lengths over consecutive polyline points."""
    pts = np.asarray(polyline, dtype=complex)
    if len(pts) < 2:
        return 0.0
    return float(segment_image_lengths(imm, pts[:-1], pts[1:], rel_tol).sum())


def edge_weights(imm: ImmersionDisc, mesh: DiscMesh,
                 rel_tol: float = LENGTH_REL_TOL) -> tuple[np.ndarray, np.ndarray]:
    e = mesh.edges()
    w = segment_image_lengths(imm, mesh.vertices[e[:, 0]], mesh.vertices[e[:, 1]], rel_tol)
    return e, w


def intrinsic_distance(imm: ImmersionDisc, mesh: DiscMesh, p0: int,
                       rel_tol: float = LENGTH_REL_TOL):
    """Shortest image length from vertex p0 to the boundary vertex set.

    Returns (distance, witness_path_vertex_indices).
    """
    if p0 in set(mesh.boundary.tolist()):
        raise ValueError("p0 must be an interior vertex")
    e, w = edge_weights(imm, mesh, rel_tol)
    nv = mesh.n_vertices
    g = csr_matrix((np.concatenate([w, w]),
                    (np.concatenate([e[:, 0], e[:, 1]]),
                     np.concatenate([e[:, 1], e[:, 0]]))), shape=(nv, nv))
    dist, pred = dijkstra(g, directed=False, indices=p0, return_predecessors=True)
    b = mesh.boundary[np.argmin(dist[mesh.boundary])]
    path = [int(b)]
    while path[-1] != p0:
        path.append(int(pred[path[-1]]))
    path.reverse()
    return float(dist[b]), path


def refinement_delta(imm: ImmersionDisc, mesh: DiscMesh, p0_point: complex,
                     rel_tol: float = LENGTH_REL_TOL) -> tuple[float, float]:
    """Distance at the given mesh and the change under one doubling.

    The anchor is a point (re-snapped to the nearest interior vertex at each
    resolution); the delta is the error bar the discretization contract
    promises.
    """
    d1, _ = intrinsic_distance(imm, mesh, mesh.interior_vertex_near(p0_point), rel_tol)
    fine = triangulate_disc(2 * mesh.n_r, 2 * mesh.n_a)
    d2, _ = intrinsic_distance(imm, fine, fine.interior_vertex_near(p0_point), rel_tol)
    return d1, abs(d1 - d2)


def boundary_injectivity_gap(imm: ImmersionDisc, n_samples: int = 512):
    """Min pairwise image distance over parameter-separated boundary pairs.

    Pairs closer than 2 pi / 32 in angle are skipped (they are neighbors along
    the curve); a positive gap is sampled-scale evidence of injectivity.
    Returns (gap, (zeta_p, zeta_q)).
    """
    if n_samples < 256:
        raise ValueError("need n_samples >= 256")
    th = 2 * np.pi * np.arange(n_samples) / n_samples
    pts = imm.F_on_circle(1.0, n_samples)
    sep = np.abs(((th[:, None] - th[None, :]) + np.pi) % (2 * np.pi) - np.pi)
    mask = sep > GAP_MIN_SEPARATION
    d2 = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    d2[~mask] = np.inf
    i, j = np.unravel_index(np.argmin(d2), d2.shape)
    return float(d2[i, j]), (np.exp(1j * th[i]), np.exp(1j * th[j]))


def vertex_conformal_factors(imm: ImmersionDisc, mesh: DiscMesh) -> np.ndarray:
    from .weierstrass import conformal_factor
    return conformal_factor(imm, mesh.vertices)


def export_obj(imm: ImmersionDisc, mesh: DiscMesh, path: str) -> dict:
    """ASCII OBJ of the image mesh {F(v)}; first three coordinates for n > 3."""
    pts = np.real(imm.F(mesh.vertices, banded=True))
    with open(path, "w", encoding="ascii") as fh:
        for p in pts:
            x, y, z = (list(p) + [0.0, 0.0])[:3]
            fh.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0]+1} {t[1]+1} {t[2]+1}\n")
    return {"vertices": int(mesh.n_vertices), "faces": int(len(mesh.triangles)),
            "path": path}
