"""Deterministic Helmholtz problems with Robin boundary and the fine-scale reference solve."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (
    assemble_boundary_mass,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    sample_coefficient,
)
from .mesh import Mesh

Coefficient = Union[float, np.ndarray, Callable[[np.ndarray], np.ndarray]]

RESIDUAL_TOL = 1e-10


class SolverError(RuntimeError):
    pass


@dataclass
class ProblemInstance:
    """``-div(A grad u) - kappa^2 n u = f`` in D, ``A grad u . nu - i kappa sqrt(n) u = 0`` on dD."""

    kappa: float
    index: Coefficient = 1.0
    rhs: Coefficient = 1.0
    diffusion: Coefficient = 1.0
    dimension: int = 1
    name: str = ""
    index_floor: float = 1e-6

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")

    def index_on_elements(self, mesh: Mesh) -> np.ndarray:
        n = sample_coefficient(self.index, mesh.barycenters)
        _check_index(n, self.index_floor, "element barycenters")
        return n

    def index_on_facets(self, mesh: Mesh) -> np.ndarray:
        n = sample_coefficient(self.index, mesh.facet_midpoints)
        _check_index(n, self.index_floor, "boundary facets")
        return n


def _check_index(n: np.ndarray, floor: float, where: str) -> None:
    bad = ~(n > floor) | ~np.isfinite(n)
    if np.any(bad):
        raise ValueError(
            f"refractive index violates the lower bound {floor:g} at {bad.sum()} "
            f"{where} (min value {np.nanmin(n):.3e})"
        )


@dataclass(eq=False)
class HelmholtzMatrices:
    """Real pieces of the discrete sesquilinear form.

    ``a(u, v) = v^H (stiffness - kappa^2 mass - i kappa boundary) u``.
    """

    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    boundary: sp.csr_matrix
    load: np.ndarray
    kappa: float

    @property
    def system(self) -> sp.csr_matrix:
        k = self.kappa
        return (self.stiffness - k**2 * self.mass - 1j * k * self.boundary).tocsr()


def assemble_pieces(problem: ProblemInstance, mesh: Mesh) -> HelmholtzMatrices:
    if mesh.dimension != problem.dimension:
        raise ValueError("problem and mesh dimension differ")
    if np.any(mesh.element_measures <= 0):
        raise ValueError("mesh has degenerate elements")
    n_el = problem.index_on_elements(mesh)
    n_bd = problem.index_on_facets(mesh)
    S = assemble_stiffness(mesh, problem.diffusion)
    M = assemble_mass(mesh, n_el)
    B = assemble_boundary_mass(mesh, np.sqrt(n_bd))
    F = assemble_load(mesh, problem.rhs).astype(complex)
    return HelmholtzMatrices(S, M, B, F, problem.kappa)


def assemble_full_system(problem: ProblemInstance, mesh: Mesh):
    """Complex symmetric matrix ``S_A - kappa^2 M_n - i kappa B_sqrt(n)`` and load vector."""
    pieces = assemble_pieces(problem, mesh)
    return pieces.system, pieces.load


@dataclass
class ReferenceSolution:
    u: np.ndarray
    residual: float
    method: str = "splu"
    info: dict = field(default_factory=dict)


def sparse_solve(A: sp.spmatrix, b: np.ndarray, context: str = "") -> tuple[np.ndarray, float]:
    """Direct sparse LU solve; returns the solution and its backward error."""
    A = sp.csc_matrix(A)
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise SolverError(
            f"factorization failed {context}: n={A.shape[0]}, nnz={A.nnz}: {exc}"
        ) from exc
    x = lu.solve(b)
    return x, backward_error(A, x, b)


def backward_error(K: sp.spmatrix, x: np.ndarray, rhs: np.ndarray) -> float:
    """Normwise relative residual ``|Kx - b| / (|K| |x| + |b|)`` in the max norm, worst column."""
    r = np.abs(K @ x - rhs).max(axis=0)
    knorm = spla.norm(K, np.inf) if sp.issparse(K) else np.abs(K).sum(axis=1).max()
    denom = knorm * np.abs(x).max(axis=0) + np.abs(rhs).max(axis=0)
    denom = np.where(denom > 0, denom, 1.0)
    return float(np.max(r / denom))


def solve_reference(problem: ProblemInstance, mesh: Mesh) -> ReferenceSolution:
    A, F = assemble_full_system(problem, mesh)
    if not np.any(F):
        return ReferenceSolution(np.zeros(mesh.num_nodes, dtype=complex), 0.0, "zero-load")
    u, res = sparse_solve(A, F, context=f"(reference, {problem.name or 'problem'})")
    if res > RESIDUAL_TOL:
        raise SolverError(f"reference residual {res:.2e} exceeds {RESIDUAL_TOL:g}")
    return ReferenceSolution(u, res, "splu", {"n": A.shape[0], "nnz": A.nnz})


def solve_tridiagonal_batch(
    lower: np.ndarray, diag: np.ndarray, upper: np.ndarray, rhs: np.ndarray
) -> np.ndarray:
    """Thomas algorithm over a batch of tridiagonal systems.

    ``diag`` has shape (batch, n) and ``lower``/``upper`` (batch, n-1) hold the
    sub- and super-diagonal.  ``rhs`` is (batch, n) or (batch, n, k) for
    several right-hand sides.  No pivoting: callers check residuals.
    """
    dtype = np.result_type(lower, diag, upper, rhs)
    diag = np.asarray(diag, dtype=dtype)
    x = np.array(rhs, dtype=dtype)
    n = diag.shape[1]
    extra = (None,) * (x.ndim - 2)
    idx = (slice(None), slice(None)) + extra
    lower, diag, upper = lower[idx], diag[idx], upper[idx]
    cprime = np.empty(upper.shape, dtype=dtype)
    cprime[:, 0] = upper[:, 0] / diag[:, 0]
    x[:, 0] /= diag[:, 0]
    for i in range(1, n):
        denom = diag[:, i] - lower[:, i - 1] * cprime[:, i - 1]
        if i < n - 1:
            cprime[:, i] = upper[:, i] / denom
        x[:, i] = (x[:, i] - lower[:, i - 1] * x[:, i - 1]) / denom
    for i in range(n - 2, -1, -1):
        x[:, i] -= cprime[:, i] * x[:, i + 1]
    return x


def tridiagonal_matvec(lower, diag, upper, x: np.ndarray) -> np.ndarray:
    """Batched product with the matrices of :func:`solve_tridiagonal_batch`."""
    extra = (None,) * (x.ndim - 2)
    idx = (slice(None), slice(None)) + extra
    lower, diag, upper = lower[idx], diag[idx], upper[idx]
    out = diag * x
    out[:, :-1] += upper * x[:, 1:]
    out[:, 1:] += lower * x[:, :-1]
    return out


def write_solution(path, u: np.ndarray, dimension: int, H_exp, h_exp: int, kappa: float) -> None:
    """Plain-text export: header ``dim H_exp h_exp kappa`` then one ``re im`` pair per node."""
    with open(path, "w") as fh:
        fh.write(f"{dimension} {H_exp if H_exp is not None else -1} {h_exp} {kappa:.17g}\n")
        for z in u:
            fh.write(f"{z.real:.17g} {z.imag:.17g}\n")


def read_solution(path):
    with open(path) as fh:
        dim, H_exp, h_exp, kappa = fh.readline().split()
        data = np.loadtxt(fh, ndmin=2)
    u = data[:, 0] + 1j * data[:, 1]
    return u, {"dim": int(dim), "H_exp": int(H_exp), "h_exp": int(h_exp), "kappa": float(kappa)}
