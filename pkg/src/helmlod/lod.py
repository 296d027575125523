"""Boundary-corrected multiscale basis and the coarse Galerkin solve.

Each basis function ``Phi_j = phi_R + i phi_I`` is the stationary point of the
real quadratic form

    a0(phi_R, phi_R) + a0(phi_I, phi_I) + sign * kappa <sqrt(n), phi_R^2 - phi_I^2>

subject to ``(phi_R, phi_k^H) = alpha_j delta_jk`` and the same (``one-one``)
or zero (``one-zero``) target for ``phi_I``.  With ``a0 = S_A - kappa^2 M_n``
the real part solves a saddle-point system with ``S_A - kappa^2 M_n + sign kappa B``
and the imaginary part one with ``S_A - kappa^2 M_n - sign kappa B``.
``alpha_j = (1, phi_j^H)``, so the constraint reads ``I_H Phi_j = e_j``.
"""

from __future__ import annotations

import logging
import weakref
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (
    QuasiInterpolation,
    _unit_matrices,
    build_quasi_interpolation,
)
from .helmholtz import (
    HelmholtzMatrices,
    ProblemInstance,
    SolverError,
    assemble_pieces,
    backward_error,
    RESIDUAL_TOL,
)
from .mesh import TwoLevelMesh, node_patch

log = logging.getLogger(__name__)

CONSTRAINT_TOL = 1e-9
SIGNS = {"plus": 1.0, "minus": -1.0}
CONSTRAINT_MODES = ("one-one", "one-zero")
CORRECTORS = ("split", "complex")


@dataclass(eq=False)
class CorrectedForm:
    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    boundary: sp.csr_matrix
    kappa: float
    _blocks: dict = field(default_factory=dict, repr=False)

    def block(self, sign: float) -> sp.csr_matrix:
        """``S_A - kappa^2 M_n + sign * kappa * B`` (plain symmetric)."""
        if sign not in self._blocks:
            k = self.kappa
            A = self.stiffness - k**2 * self.mass
            if sign != 0 and self.boundary.nnz:
                A = A + (sign * k) * self.boundary
            self._blocks[sign] = A.tocsr()
        return self._blocks[sign]

    def complex_block(self) -> sp.csr_matrix:
        """Full Robin form ``S_A - kappa^2 M_n - i kappa B`` (complex symmetric)."""
        if "complex" not in self._blocks:
            k = self.kappa
            self._blocks["complex"] = (self.stiffness - k**2 * self.mass - 1j * k * self.boundary).tocsr()
        return self._blocks["complex"]


def corrected_form(pieces: HelmholtzMatrices, boundary_corrected: bool = True) -> CorrectedForm:
    B = pieces.boundary if boundary_corrected else sp.csr_matrix(pieces.boundary.shape)
    return CorrectedForm(pieces.stiffness, pieces.mass, B, pieces.kappa)


@dataclass(eq=False)
class MultiscaleBasis:
    mesh_pair: TwoLevelMesh
    matrix: object  # dense (N_fine, N_H) ndarray for the global basis, csc otherwise
    layers: Optional[int]
    boundary_corrected: bool
    sign: str = "plus"
    constraint_mode: str = "one-one"
    constraint_residual: float = 0.0
    kkt_residual: float = 0.0
    corrector: str = "split"

    @property
    def is_global(self) -> bool:
        return self.layers is None

    def dense(self) -> np.ndarray:
        return self.matrix if isinstance(self.matrix, np.ndarray) else self.matrix.toarray()

    def column(self, j: int) -> np.ndarray:
        if isinstance(self.matrix, np.ndarray):
            return self.matrix[:, j].copy()
        return self.matrix[:, j].toarray().ravel()

    def write(self, path) -> None:
        """Sparse text export: ``node_j fine_index re im`` per nonzero entry."""
        coo = sp.coo_matrix(self.matrix)
        order = np.lexsort((coo.row, coo.col))
        with open(path, "w") as fh:
            for k in order:
                v = coo.data[k]
                fh.write(f"{coo.col[k]} {coo.row[k]} {v.real:.17g} {v.imag:.17g}\n")


def _targets(alpha: float, mode: str) -> tuple[float, float]:
    if mode not in CONSTRAINT_MODES:
        raise ValueError(f"constraint mode must be one of {CONSTRAINT_MODES}, got {mode!r}")
    return alpha, (alpha if mode == "one-one" else 0.0)


def _kkt_matrix(A: sp.spmatrix, C: sp.spmatrix) -> sp.csc_matrix:
    return sp.bmat([[A, C.T], [C, None]], format="csc")


def _row_scaling(A: sp.spmatrix, C: sp.spmatrix) -> np.ndarray:
    """Row factors bringing the constraint block to the magnitude of ``A``."""
    rowmax = abs(C).max(axis=1).toarray().ravel()
    return abs(A).max() / rowmax


def _factor(K: sp.spmatrix, context: str, permc_spec: str = "COLAMD"):
    try:
        return spla.splu(sp.csc_matrix(K), permc_spec=permc_spec)
    except RuntimeError as exc:
        raise SolverError(f"singular saddle-point system {context}: {exc}") from exc


def saddle_point_solve(A: sp.spmatrix, C: sp.spmatrix, T: np.ndarray, context: str = ""):
    """Solve ``[[A, C^T], [C, 0]] [phi; lam] = [0; T]`` for one or more target columns.

    Eliminates ``phi`` through a sparse factorization of ``A`` and a dense
    Schur complement ``C A^-1 C^T`` (the bordered matrix fills in badly
    because constraint rows are wide), with two steps of iterative
    refinement.  Falls back to factorizing the bordered matrix when ``A`` is
    singular or the refined backward error stays above tolerance.

    Returns ``(phi, lam, backward_error)``.
    """
    T = np.asarray(T)
    dtype = np.result_type(A.dtype, T.dtype, float)
    A = sp.csc_matrix(A, dtype=dtype)
    C = sp.csr_matrix(C)
    Ct = sp.csc_matrix(C.T)
    n = A.shape[0]
    zero_top = np.zeros((n,) + T.shape[1:], dtype=dtype)
    T = T.astype(dtype)
    top = np.asarray(np.abs(A).sum(axis=1) + np.abs(Ct).sum(axis=1)).ravel()
    knorm = max(top.max(), np.abs(C).sum(axis=1).max())

    def berr(phi, lam):
        r = np.maximum(
            np.abs(A @ phi + Ct @ lam).max(axis=0), np.abs(T - C @ phi).max(axis=0)
        )
        denom = knorm * np.maximum(np.abs(phi).max(axis=0), np.abs(lam).max(axis=0))
        denom = denom + np.abs(T).max(axis=0)
        return float(np.max(r / np.where(denom > 0, denom, 1.0)))

    try:
        lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A")
        Y = lu.solve(Ct.toarray().astype(dtype))
        schur = sla.lu_factor(C @ Y)
    except (RuntimeError, sla.LinAlgError, ValueError):
        lu = None
    if lu is not None:

        def apply(r_top, r_bot):
            # solve [[A, C^T], [C, 0]] [x; y] = [r_top; r_bot]
            z = lu.solve(r_top) if np.any(r_top) else np.zeros_like(r_top)
            y = sla.lu_solve(schur, C @ z - r_bot)
            return z - Y @ y, y

        with np.errstate(all="ignore"):
            phi, lam = apply(zero_top, T)
            err = berr(phi, lam)
            for _ in range(2):
                if err <= 0.1 * RESIDUAL_TOL or not np.isfinite(err):
                    break
                dphi, dlam = apply(-(A @ phi + Ct @ lam), T - C @ phi)
                phi, lam = phi + dphi, lam + dlam
                err = berr(phi, lam)
        if np.isfinite(err) and err <= RESIDUAL_TOL:
            return phi, lam, err
        log.debug("Schur path inaccurate %s; falling back to bordered factorization", context)
    K = _kkt_matrix(A, C)
    rhs = np.concatenate([zero_top, T])
    x = _factor(K, context).solve(rhs)
    return x[:n], x[n:], berr(x[:n], x[n:])


@dataclass
class PatchSolution:
    dofs: np.ndarray
    phi_real: np.ndarray
    phi_imag: np.ndarray
    multipliers: tuple
    constraint_rows: np.ndarray
    kkt_residual: float


@dataclass(frozen=True, eq=False)
class PatchConstraint:
    """Constraint rows of ``C`` that touch a patch, restricted to its free fine dofs."""

    dofs: np.ndarray
    touches_boundary: bool
    rows: np.ndarray
    C: sp.csr_matrix
    pos: int


def patch_constraint(qi: QuasiInterpolation, dofs: np.ndarray, j: int, touches: bool, context: str = ""):
    Cp = qi.C[:, dofs]
    rows = np.flatnonzero(Cp.getnnz(axis=1))
    pos = int(np.searchsorted(rows, j))
    if pos >= len(rows) or rows[pos] != j:
        raise SolverError(f"coarse node {j} has no support in its patch {context}")
    return PatchConstraint(dofs, touches, rows, Cp[rows].tocsr(), pos)


# patch geometry depends only on the meshes; keyed by the quasi-interpolation of the mesh pair
_PATCH_CACHE: "weakref.WeakKeyDictionary[QuasiInterpolation, dict]" = weakref.WeakKeyDictionary()


def _cached_patch(mesh_pair: TwoLevelMesh, qi: QuasiInterpolation, j: int, layers, context: str):
    per_qi = _PATCH_CACHE.setdefault(qi, {})
    key = (id(mesh_pair), j, layers)
    hit = per_qi.get(key)
    if hit is None:
        if layers is None:
            dofs, touches = np.arange(mesh_pair.fine.num_nodes), True
        else:
            patch = node_patch(mesh_pair, j, layers)
            dofs, touches = patch.free_fine_nodes, patch.touches_boundary()
        hit = per_qi[key] = patch_constraint(qi, dofs, j, touches, context)
    return hit


def solve_patch(
    form: CorrectedForm,
    qi: QuasiInterpolation,
    dofs: np.ndarray,
    j: int,
    touches_boundary: bool,
    sign: float = 1.0,
    mode: str = "one-one",
    context: str = "",
    corrector: str = "split",
    constraint: Optional[PatchConstraint] = None,
) -> PatchSolution:
    """Saddle-point solves for coarse node ``j`` restricted to fine ``dofs``.

    ``corrector="split"`` solves the two real blocks separately;
    ``corrector="complex"`` solves one complex system with the full Robin form.
    """
    if constraint is None:
        constraint = patch_constraint(qi, dofs, j, touches_boundary, context)
    rows, Cp, pos = constraint.rows, constraint.C, constraint.pos
    n = len(dofs)
    t_re, t_im = _targets(qi.weights[j], mode)

    def solve(block, target):
        if target == 0.0:
            return np.zeros(n), np.zeros(len(rows)), 0.0
        A = block[dofs][:, dofs]
        r = _row_scaling(A, Cp)
        t = np.zeros(len(rows), dtype=np.result_type(target, float))
        t[pos] = r[pos] * target
        phi, lam, res = saddle_point_solve(A, sp.diags(r) @ Cp, t, context)
        return phi, r * lam, res

    if corrector == "complex":
        phi, lam, res = solve(form.complex_block(), t_re + 1j * t_im)
        return PatchSolution(dofs, phi.real.copy(), phi.imag.copy(), (lam,), rows, res)
    if corrector != "split":
        raise ValueError(f"corrector must be one of {CORRECTORS}, got {corrector!r}")
    same_blocks = (not touches_boundary) or form.boundary.nnz == 0
    phi_r, lam_r, res_r = solve(form.block(sign), t_re)
    if mode == "one-one" and same_blocks:
        phi_i, lam_i, res_i = phi_r, lam_r, res_r
    else:
        phi_i, lam_i, res_i = solve(form.block(-sign), t_im)
    return PatchSolution(dofs, phi_r, phi_i, (lam_r, lam_i), rows, max(res_r, res_i))


def build_node_basis(
    mesh_pair: TwoLevelMesh,
    form: CorrectedForm,
    qi: QuasiInterpolation,
    j: int,
    layers: Optional[int],
    sign: str = "plus",
    mode: str = "one-one",
    corrector: str = "split",
) -> np.ndarray:
    """Fine nodal vector of ``Phi_j`` on patch ``D_layers(x_j)`` (whole domain if ``layers`` is None)."""
    sol = _node_solution(mesh_pair, form, qi, j, layers, SIGNS[sign], mode, corrector)
    out = np.zeros(mesh_pair.fine.num_nodes, dtype=complex)
    out[sol.dofs] = sol.phi_real + 1j * sol.phi_imag
    return out


def _node_solution(mesh_pair, form, qi, j, layers, sign, mode, corrector="split") -> PatchSolution:
    ctx = f"(node {j}, layers {layers}, kappa {form.kappa:g}, H {mesh_pair.coarse.size_h:g})"
    pc = _cached_patch(mesh_pair, qi, j, layers, ctx)
    sol = solve_patch(form, qi, pc.dofs, j, pc.touches_boundary, sign, mode, ctx, corrector, pc)
    if sol.kkt_residual > RESIDUAL_TOL:
        raise SolverError(f"saddle-point residual {sol.kkt_residual:.2e} too large {ctx}")
    return sol


def _global_solve(block: sp.spmatrix, qi: QuasiInterpolation, target: complex, context: str):
    """Saddle-point solve on the whole mesh for all coarse nodes at once."""
    NH = qi.C.shape[0]
    r = _row_scaling(block, qi.C)
    T = np.zeros((NH, NH), dtype=np.result_type(target, float))
    T[np.arange(NH), np.arange(NH)] = r * qi.weights * target
    phi, _, res = saddle_point_solve(block, sp.diags(r) @ qi.C, T, context)
    return phi, res


def _global_basis(form: CorrectedForm, qi: QuasiInterpolation, sign: float, mode: str, corrector: str):
    ctx = f"(global basis, kappa {form.kappa:g})"
    t_re, t_im = _targets(1.0, mode)
    if corrector == "complex":
        return _global_solve(form.complex_block(), qi, t_re + 1j * t_im, ctx)
    if corrector != "split":
        raise ValueError(f"corrector must be one of {CORRECTORS}, got {corrector!r}")
    re, res_r = _global_solve(form.block(sign), qi, t_re, ctx)
    if t_im == 0.0:
        return re.astype(complex), res_r
    if form.boundary.nnz == 0:
        return re * (1.0 + 1j), res_r
    im, res_i = _global_solve(form.block(-sign), qi, t_im, ctx)
    return re + 1j * im, max(res_r, res_i)


def build_basis(
    mesh_pair: TwoLevelMesh,
    problem: ProblemInstance,
    layers: Optional[int] = None,
    boundary_corrected: bool = True,
    sign: str = "plus",
    constraint_mode: str = "one-one",
    pieces: Optional[HelmholtzMatrices] = None,
    qi: Optional[QuasiInterpolation] = None,
    n_jobs: int = 1,
    corrector: str = "split",
) -> MultiscaleBasis:
    """Multiscale basis for every coarse node; ``layers=None`` builds the global basis.

    ``boundary_corrected=False`` drops the boundary term from the corrector
    problems (plain LOD).  Node problems are independent; ``n_jobs > 1``
    spreads them over a thread pool, each writing its own column.
    """
    if sign not in SIGNS:
        raise ValueError(f"sign must be one of {tuple(SIGNS)}, got {sign!r}")
    pieces = pieces if pieces is not None else assemble_pieces(problem, mesh_pair.fine)
    qi = qi if qi is not None else build_quasi_interpolation(mesh_pair)
    form = corrected_form(pieces, boundary_corrected)
    s = SIGNS[sign]
    NH = mesh_pair.num_coarse_nodes

    if layers is None:
        matrix, kkt = _global_basis(form, qi, s, constraint_mode, corrector)
        if kkt > RESIDUAL_TOL:
            raise SolverError(f"global saddle-point residual {kkt:.2e}")
    else:
        if layers < 0:
            raise ValueError("layers must be nonnegative")

        def one(j):
            return _node_solution(mesh_pair, form, qi, j, layers, s, constraint_mode, corrector)

        failures = []
        sols = [None] * NH
        if n_jobs > 1:
            with ThreadPoolExecutor(n_jobs) as pool:
                futures = [pool.submit(one, j) for j in range(NH)]
                for j, fut in enumerate(futures):
                    try:
                        sols[j] = fut.result()
                    except SolverError as exc:
                        failures.append(str(exc))
        else:
            for j in range(NH):
                try:
                    sols[j] = one(j)
                except SolverError as exc:
                    failures.append(str(exc))
        if failures:
            raise SolverError(f"{len(failures)} node problems failed; first: {failures[0]}")
        rows = np.concatenate([sol.dofs for sol in sols])
        cols = np.repeat(np.arange(NH), [len(sol.dofs) for sol in sols])
        vals = np.concatenate([sol.phi_real + 1j * sol.phi_imag for sol in sols])
        matrix = sp.csc_matrix((vals, (rows, cols)), shape=(mesh_pair.fine.num_nodes, NH))
        kkt = max(sol.kkt_residual for sol in sols)

    basis = MultiscaleBasis(
        mesh_pair, matrix, layers, boundary_corrected, sign, constraint_mode, 0.0, kkt, corrector
    )
    basis.constraint_residual = constraint_residual(basis, qi)
    if basis.constraint_residual > CONSTRAINT_TOL * qi.weights.max():
        raise SolverError(f"constraint residual {basis.constraint_residual:.2e} too large")
    return basis


def constraint_residual(basis: MultiscaleBasis, qi: QuasiInterpolation) -> float:
    """``max_{j,k} |(Phi_j, phi_k^H) - alpha_j delta_jk (1, t)|`` with ``t`` per constraint mode."""
    CP = qi.C @ basis.matrix
    CP = CP.toarray() if sp.issparse(CP) else np.asarray(CP)
    t = 1.0 + (1j if basis.constraint_mode == "one-one" else 0.0)
    CP[np.diag_indices_from(CP)] -= t * qi.weights
    return float(max(np.abs(CP.real).max(), np.abs(CP.imag).max()))


@dataclass
class CoarseSolution:
    coefficients: np.ndarray
    u: np.ndarray
    residual: float
    errors: Optional["ErrorReport"] = None


def solve_coarse(
    basis: MultiscaleBasis,
    problem: Optional[ProblemInstance] = None,
    pieces: Optional[HelmholtzMatrices] = None,
) -> CoarseSolution:
    """Galerkin solve of the full Robin form ``a`` in the span of the basis columns."""
    if pieces is None:
        pieces = assemble_pieces(problem, basis.mesh_pair.fine)
    Phi = basis.matrix
    F = pieces.load
    NH = Phi.shape[1]
    if not np.any(F):
        return CoarseSolution(np.zeros(NH, complex), np.zeros(Phi.shape[0], complex), 0.0)
    A = pieces.system
    b = Phi.conj().T @ F
    AP = A @ Phi
    G = Phi.conj().T @ AP
    if sp.issparse(G):
        G = G.tocsc()
        c = _factor(G, "(coarse system)").solve(b)
    else:
        try:
            c = sla.solve(G, b)
        except sla.LinAlgError as exc:
            raise SolverError(f"singular coarse system (N_H={NH}): {exc}") from exc
    c = np.asarray(c).ravel()
    res = backward_error(G, c, b)
    if not np.isfinite(res) or res > RESIDUAL_TOL:
        raise SolverError(
            f"coarse residual {res:.2e}; the coarse system is (near) singular, "
            f"check H*kappa = {basis.mesh_pair.coarse.size_h * pieces.kappa:g}"
        )
    u = np.asarray(Phi @ c).ravel()
    return CoarseSolution(c, u, float(res))


def fem_coarse_solution(mesh_pair: TwoLevelMesh, problem: ProblemInstance, pieces=None) -> np.ndarray:
    """Standard P1 FEM on the coarse mesh, evaluated on the fine mesh.

    Coefficients are sampled on the fine mesh and projected by the Galerkin
    restriction ``P^T A_h P`` so both methods see the same data.
    """
    if pieces is None:
        pieces = assemble_pieces(problem, mesh_pair.fine)
    P = mesh_pair.prolongation.astype(complex)
    G = (P.T @ pieces.system @ P).tocsc()
    b = P.T @ pieces.load
    c = _factor(G, "(coarse FEM)").solve(b)
    return np.asarray(P @ c).ravel()


@dataclass
class ErrorReport:
    l2: float
    v: float
    av: float
    boundary: float

    def as_row(self) -> dict:
        return {"err_L2": self.l2, "err_V": self.v, "err_AV": self.av, "err_bd": self.boundary}


def error_report(u: np.ndarray, reference: np.ndarray, kappa: float, mesh, diffusion=1.0) -> ErrorReport:
    """Relative L2, V, A-weighted V and boundary L2 errors of ``u`` against ``reference``."""
    S, M, B = _unit_matrices(mesh)
    SA = S if np.isscalar(diffusion) and diffusion == 1.0 else None
    if SA is None:
        from .assembly import assemble_stiffness

        SA = assemble_stiffness(mesh, diffusion)
    e = np.asarray(u) - np.asarray(reference)

    def q(A, v):
        return max(float(np.real(np.vdot(v, A @ v))), 0.0)

    ref = np.asarray(reference)
    denoms = {
        "l2": q(M, ref),
        "v": q(S, ref) + kappa**2 * q(M, ref),
        "av": q(SA, ref) + kappa**2 * q(M, ref),
        "bd": q(B, ref),
    }
    if denoms["l2"] == 0.0:
        raise ZeroDivisionError("reference solution is zero; relative errors undefined")
    nums = {
        "l2": q(M, e),
        "v": q(S, e) + kappa**2 * q(M, e),
        "av": q(SA, e) + kappa**2 * q(M, e),
        "bd": q(B, e),
    }
    rel = {k: np.sqrt(nums[k] / denoms[k]) if denoms[k] > 0 else np.nan for k in nums}
    return ErrorReport(rel["l2"], rel["v"], rel["av"], rel["bd"])


def default_layers(H: float, c: float = 1.0) -> int:
    """``ceil(c * log2(1/H))``."""
    return int(np.ceil(c * np.log2(1.0 / H)))


def random_experiment_layers(H: float) -> int:
    """``-3 floor(log10 H)``."""
    return int(-3 * np.floor(np.log10(H)))
