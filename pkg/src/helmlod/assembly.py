"""P1 assembly of stiffness, mass and boundary mass matrices, quasi-interpolation and norms.

Coefficients are piecewise constant: sampled at element barycenters (volume
terms) or facet midpoints (boundary terms).  A coefficient may be a scalar,
an array with one value per element/facet, or a callable mapping an
``(npts, dim)`` array of points to values.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh, TwoLevelMesh


def sample_coefficient(coeff, points: np.ndarray) -> np.ndarray:
    if callable(coeff):
        vals = np.asarray(coeff(points), dtype=float)
    else:
        vals = np.asarray(coeff, dtype=float)
    return np.broadcast_to(vals, (points.shape[0],)).astype(float, copy=False)


def _p1_gradients(mesh: Mesh) -> np.ndarray:
    """Gradients of the barycentric coordinates, shape (ne, d+1, d)."""
    p = mesh.nodes[mesh.elements]
    if mesh.dimension == 1:
        h = p[:, 1, 0] - p[:, 0, 0]
        return np.stack([-1.0 / h, 1.0 / h], axis=1)[:, :, None]
    J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=1)  # rows are edge vectors
    Jinv_t = np.linalg.inv(J)  # columns give grads of lambda_1, lambda_2
    g12 = np.transpose(Jinv_t, (0, 2, 1))
    g0 = -g12.sum(axis=1, keepdims=True)
    return np.concatenate([g0, g12], axis=1)


def _scatter(conn: np.ndarray, local: np.ndarray, n: int) -> sp.csr_matrix:
    k = conn.shape[1]
    rows = np.repeat(conn, k, axis=1).ravel()
    cols = np.tile(conn, (1, k)).ravel()
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))


def assemble_stiffness(mesh: Mesh, coeff=1.0) -> sp.csr_matrix:
    """Matrix of ``(coeff grad u, grad v)``."""
    c = sample_coefficient(coeff, mesh.barycenters)
    if np.any(c <= 0):
        raise ValueError("stiffness coefficient must be positive on every element")
    G = _p1_gradients(mesh)
    local = np.einsum("eid,ejd->eij", G, G) * (c * mesh.element_measures)[:, None, None]
    return _scatter(mesh.elements, local, mesh.num_nodes)


def _simplex_mass(d: int) -> np.ndarray:
    return (np.ones((d + 1, d + 1)) + np.eye(d + 1)) / ((d + 1) * (d + 2))


def assemble_mass(mesh: Mesh, coeff=1.0) -> sp.csr_matrix:
    """Matrix of ``(coeff u, v)``."""
    c = sample_coefficient(coeff, mesh.barycenters)
    if np.any(c <= 0):
        raise ValueError("mass coefficient must be positive on every element")
    local = _simplex_mass(mesh.dimension)[None] * (c * mesh.element_measures)[:, None, None]
    return _scatter(mesh.elements, local, mesh.num_nodes)


def assemble_boundary_mass(mesh: Mesh, coeff=1.0) -> sp.csr_matrix:
    """Matrix of ``<coeff u, v>`` on the boundary of the domain."""
    c = sample_coefficient(coeff, mesh.facet_midpoints)
    if np.any(c < 0):
        raise ValueError("boundary coefficient must be nonnegative")
    d = mesh.dimension - 1
    local = _simplex_mass(d)[None] * (c * mesh.facet_measures)[:, None, None]
    return _scatter(mesh.boundary_facets, local, mesh.num_nodes)


def assemble_load(mesh: Mesh, f) -> np.ndarray:
    """Load vector ``(f, phi_i)`` with ``f`` sampled at barycenters."""
    vals = sample_coefficient(f, mesh.barycenters) * mesh.element_measures
    k = mesh.dimension + 1
    return np.bincount(
        mesh.elements.ravel(), weights=np.repeat(vals / k, k), minlength=mesh.num_nodes
    )


@dataclass(frozen=True, eq=False)
class QuasiInterpolation:
    """Weighted Clement operator: ``(I_H v)_k = (v, phi_k^H) / (1, phi_k^H)``.

    ``C[k, i] = (phi_i^h, phi_k^H)`` and ``weights[k] = (1, phi_k^H)``.
    """

    C: sp.csr_matrix
    weights: np.ndarray

    def apply(self, v: np.ndarray) -> np.ndarray:
        out = self.C @ v
        return out / (self.weights if out.ndim == 1 else self.weights[:, None])


def build_quasi_interpolation(mesh_pair: TwoLevelMesh) -> QuasiInterpolation:
    M = assemble_mass(mesh_pair.fine)
    C = (mesh_pair.prolongation.T @ M).tocsr()
    C.eliminate_zeros()
    w = np.asarray(C.sum(axis=1)).ravel()
    return QuasiInterpolation(C, w)


def _quad(A: sp.spmatrix, u: np.ndarray) -> float:
    return float(np.real(np.vdot(u, A @ u)))


def l2_norm(u: np.ndarray, mesh: Mesh) -> float:
    return np.sqrt(max(_quad(_unit_matrices(mesh)[1], u), 0.0))


def boundary_l2_norm(u: np.ndarray, mesh: Mesh) -> float:
    return np.sqrt(max(_quad(_unit_matrices(mesh)[2], u), 0.0))


def v_norm(u: np.ndarray, kappa: float, mesh: Mesh) -> float:
    """``sqrt(|grad u|^2 + kappa^2 |u|^2)`` for a fine nodal vector ``u``."""
    S, M, _ = _unit_matrices(mesh)
    return np.sqrt(max(_quad(S, u) + kappa**2 * _quad(M, u), 0.0))


def weighted_v_norm(u: np.ndarray, kappa: float, mesh: Mesh, diffusion) -> float:
    """``sqrt(|sqrt(A) grad u|^2 + kappa^2 |u|^2)``."""
    S = assemble_stiffness(mesh, diffusion)
    M = _unit_matrices(mesh)[1]
    return np.sqrt(max(_quad(S, u) + kappa**2 * _quad(M, u), 0.0))


_UNIT_CACHE: "weakref.WeakKeyDictionary[Mesh, tuple]" = weakref.WeakKeyDictionary()


def _unit_matrices(mesh: Mesh):
    hit = _UNIT_CACHE.get(mesh)
    if hit is None:
        hit = (assemble_stiffness(mesh), assemble_mass(mesh), assemble_boundary_mass(mesh))
        _UNIT_CACHE[mesh] = hit
    return hit


def write_coo(path, A: sp.spmatrix) -> None:
    """Coordinate text export: ``row col real imag`` per line."""
    coo = sp.coo_matrix(A)
    with open(path, "w") as fh:
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {np.real(v):.17g} {np.imag(v):.17g}\n")
