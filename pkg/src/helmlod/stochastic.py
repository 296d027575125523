"""Parametric refractive index, per-sample spatial solvers and qMC/MC expectation estimators."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .assembly import (
    assemble_boundary_mass,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    build_quasi_interpolation,
    l2_norm,
    sample_coefficient,
)
from .helmholtz import (
    RESIDUAL_TOL,
    HelmholtzMatrices,
    SolverError,
    solve_tridiagonal_batch,
    sparse_solve,
)
from .lod import build_basis, solve_coarse
from .mesh import Mesh, TwoLevelMesh
from .qmc import QmcPointSet, lattice_points, mc_points, random_shifts, sobol_points

log = logging.getLogger(__name__)

POSITIVITY_FLOOR = 1e-6


@dataclass
class ParametricIndex:
    """``n(x, w) = n0(x) + sum_{j<=s} w_j psi_j(x)`` with ``psi_j = delta sin(j pi x) / (1 + (j pi)^q)``.

    Only the first coordinate of ``x`` enters the modes.
    """

    n0: Callable[[np.ndarray], np.ndarray]
    delta: float
    q: float
    s: int
    floor: float = POSITIVITY_FLOOR

    def __post_init__(self):
        if self.s < 0:
            raise ValueError(f"truncation dimension must be nonnegative, got {self.s}")

    def mode_sup_norms(self) -> np.ndarray:
        j = np.arange(1, self.s + 1)
        return abs(self.delta) / (1.0 + (j * np.pi) ** self.q)

    def modes(self, points: np.ndarray) -> np.ndarray:
        """Mode values ``psi_j(x_k)`` as an (s, npts) array."""
        j = np.arange(1, self.s + 1)[:, None]
        x = np.asarray(points)[:, 0][None, :]
        return self.delta * np.sin(j * np.pi * x) / (1.0 + (j * np.pi) ** self.q)

    def values(self, omega: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Realized index at ``points`` for one ``omega`` (s,) or a batch (B, s)."""
        omega = self._check_omega(omega)
        base = sample_coefficient(self.n0, points)
        # trailing zero coordinates are dropped so zero-padding cannot change the summation
        active = np.flatnonzero(np.atleast_2d(omega).any(axis=0))
        k = active[-1] + 1 if len(active) else 0
        out = base + omega[..., :k] @ self.truncated(k).modes(points)
        self.check_positive(out, omega)
        return out

    def realize(self, omega: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
        omega = self._check_omega(np.asarray(omega, dtype=float))
        if omega.ndim != 1:
            raise ValueError("realize takes a single parameter vector")
        return lambda x: self.values(omega, x)

    def truncated(self, s: int) -> "ParametricIndex":
        return ParametricIndex(self.n0, self.delta, self.q, s, self.floor)

    def check_positive(self, values: np.ndarray, omega: np.ndarray) -> None:
        bad = ~(values > self.floor)
        if np.any(bad):
            rows = np.atleast_2d(omega)
            which = np.flatnonzero(np.atleast_2d(bad).any(axis=-1))[0]
            raise ValueError(
                f"realized refractive index below {self.floor:g} for omega={rows[which].tolist()}"
            )

    def _check_omega(self, omega: np.ndarray) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        if omega.shape[-1] != self.s:
            raise ValueError(f"omega has {omega.shape[-1]} components, expected s={self.s}")
        if np.any(np.abs(omega) > 0.5):
            raise ValueError("omega must lie in [-1/2, 1/2]^s")
        return omega


def reference_family(q: float, s: int, delta: float = 0.5) -> ParametricIndex:
    """Built-in 1D family with ``n0(x) = 1 + 5 sin(pi x / 2)``."""
    return ParametricIndex(lambda x: 1.0 + 5.0 * np.sin(0.5 * np.pi * x[:, 0]), delta, q, s)


def realize_index(parametric: ParametricIndex, omega: np.ndarray):
    return parametric.realize(omega)


class _SampleSolverBase:
    """Shared per-sample coefficient handling: the index is evaluated once per entity."""

    mesh: Mesh
    parametric: ParametricIndex

    def _setup_coefficients(self, mesh: Mesh, parametric: ParametricIndex) -> None:
        self.mesh = mesh
        self.parametric = parametric
        self._n0_el = sample_coefficient(parametric.n0, mesh.barycenters)
        self._n0_bd = sample_coefficient(parametric.n0, mesh.facet_midpoints)
        self._modes_el = parametric.modes(mesh.barycenters)
        self._modes_bd = parametric.modes(mesh.facet_midpoints)

    def index_values(self, omegas: np.ndarray):
        omegas = self.parametric._check_omega(np.atleast_2d(omegas))
        n_el = self._n0_el + omegas @ self._modes_el
        n_bd = self._n0_bd + omegas @ self._modes_bd
        self.parametric.check_positive(n_el, omegas)
        self.parametric.check_positive(n_bd, omegas)
        return n_el, n_bd

    def solve_deterministic(self) -> np.ndarray:
        return self.solve_batch(np.zeros((1, self.parametric.s)))[0]

    @property
    def num_outputs(self) -> int:
        return self.mesh.num_nodes


class FemSampleSolver(_SampleSolverBase):
    """Fine-mesh P1 solves of ``-u'' - kappa^2 n u = f`` with Robin boundary, one per parameter.

    In 1D all samples of a batch go through one vectorized tridiagonal sweep;
    samples whose backward error exceeds the tolerance are re-solved with a
    pivoting sparse LU.
    """

    def __init__(self, mesh: Mesh, kappa: float, parametric: ParametricIndex, rhs=1.0, diffusion=1.0):
        self.kappa = float(kappa)
        self._setup_coefficients(mesh, parametric)
        self.stiffness = assemble_stiffness(mesh, diffusion)
        self.load = assemble_load(mesh, rhs).astype(complex)
        self.diffusion = diffusion
        self.fallbacks = 0
        if mesh.dimension == 1:
            S = self.stiffness
            self._s_diag = S.diagonal()
            self._s_off = S.diagonal(1)
            self._h = mesh.element_measures

    def pieces(self, n_el: np.ndarray, n_bd: np.ndarray) -> HelmholtzMatrices:
        M = assemble_mass(self.mesh, n_el)
        B = assemble_boundary_mass(self.mesh, np.sqrt(n_bd))
        return HelmholtzMatrices(self.stiffness, M, B, self.load, self.kappa)

    def solve_batch(self, omegas: np.ndarray) -> np.ndarray:
        n_el, n_bd = self.index_values(omegas)
        if self.mesh.dimension == 1:
            return self._solve_1d(n_el, n_bd)
        out = np.empty((n_el.shape[0], self.mesh.num_nodes), dtype=complex)
        for b in range(n_el.shape[0]):
            out[b] = self._solve_sparse(n_el[b], n_bd[b])
        return out

    def _solve_sparse(self, n_el, n_bd) -> np.ndarray:
        A = self.pieces(n_el, n_bd).system
        u, res = sparse_solve(A, self.load, "(sample solve)")
        if res > RESIDUAL_TOL:
            raise SolverError(f"sample backward error {res:.2e}")
        return u

    def _solve_1d(self, n_el: np.ndarray, n_bd: np.ndarray) -> np.ndarray:
        k2 = self.kappa**2
        w = n_el * self._h  # element-integrated index
        nb = n_el.shape[0]
        diag = np.zeros((nb, self.mesh.num_nodes), dtype=complex)
        diag[:, :-1] += w / 3.0
        diag[:, 1:] += w / 3.0
        diag = self._s_diag - k2 * diag
        bnodes = self.mesh.boundary_facets[:, 0]
        np.add.at(diag, (slice(None), bnodes), -1j * self.kappa * np.sqrt(n_bd))
        off = self._s_off - k2 * w / 6.0
        rhs = np.broadcast_to(self.load, diag.shape)
        u = solve_tridiagonal_batch(off, diag, off, rhs)

        # batched backward error in the max norm
        Au = diag * u
        Au[:, :-1] += off * u[:, 1:]
        Au[:, 1:] += off * u[:, :-1]
        rowsum = np.abs(diag)
        rowsum[:, :-1] += np.abs(off)
        rowsum[:, 1:] += np.abs(off)
        denom = rowsum.max(axis=1) * np.abs(u).max(axis=1) + np.abs(self.load).max()
        with np.errstate(invalid="ignore", divide="ignore"):
            err = np.abs(Au - rhs).max(axis=1) / np.where(denom > 0, denom, 1.0)
        for b in np.flatnonzero(~(err <= RESIDUAL_TOL)):
            self.fallbacks += 1
            u[b] = self._solve_sparse(n_el[b], n_bd[b])
        return u


class LodSampleSolver(_SampleSolverBase):
    """Per-sample multiscale solve: basis and coarse Galerkin system are rebuilt for each parameter."""

    def __init__(
        self,
        mesh_pair: TwoLevelMesh,
        kappa: float,
        parametric: ParametricIndex,
        layers: Optional[int],
        rhs=1.0,
        boundary_corrected: bool = True,
        corrector: str = "split",
    ):
        self.mesh_pair = mesh_pair
        self.kappa = float(kappa)
        self.layers = layers
        self.boundary_corrected = boundary_corrected
        self.corrector = corrector
        self._fem = FemSampleSolver(mesh_pair.fine, kappa, parametric, rhs)
        self._setup_coefficients(mesh_pair.fine, parametric)
        self.qi = build_quasi_interpolation(mesh_pair)

    def solve_batch(self, omegas: np.ndarray) -> np.ndarray:
        n_el, n_bd = self.index_values(omegas)
        out = np.empty((n_el.shape[0], self.mesh.num_nodes), dtype=complex)
        for b in range(n_el.shape[0]):
            pieces = self._fem.pieces(n_el[b], n_bd[b])
            basis = build_basis(
                self.mesh_pair,
                None,
                self.layers,
                self.boundary_corrected,
                pieces=pieces,
                qi=self.qi,
                corrector=self.corrector,
            )
            out[b] = solve_coarse(basis, pieces=pieces).u
        return out


@dataclass
class EstimatorResult:
    mean: np.ndarray
    shift_means: np.ndarray  # (R, ...) one estimate per shift / replicate
    rms: float
    num_points: int
    kind: str
    info: dict = field(default_factory=dict)

    @property
    def num_shifts(self) -> int:
        return self.shift_means.shape[0]


def anchored_mean(chunks) -> np.ndarray:
    """Mean over the leading axis of a stream of arrays, summed in a fixed order.

    Values are accumulated as deviations from the first sample, so a stream of
    identical samples returns that sample bit for bit.
    """
    anchor = None
    total = None
    count = 0
    for block in chunks:
        block = np.asarray(block)
        if anchor is None:
            anchor = block[0].copy()
            total = np.zeros_like(anchor)
        total += (block - anchor).sum(axis=0)
        count += block.shape[0]
    if anchor is None:
        raise ValueError("no samples")
    return anchor + total / count


def rms_across_shifts(shift_means: np.ndarray, norm: Callable[[np.ndarray], float]) -> float:
    """``sqrt( sum_r |Q_r - Q|^2 / (R (R - 1)) )``; zero for a single shift."""
    R = shift_means.shape[0]
    if R < 2:
        return 0.0
    mean = anchored_mean([shift_means])
    dev = sum(norm(shift_means[r] - mean) ** 2 for r in range(R))
    return float(np.sqrt(dev / (R * (R - 1))))


def _euclid(v: np.ndarray) -> float:
    return float(np.linalg.norm(np.ravel(v)))


def estimate_expectation(
    solver,
    point_sets: Sequence[QmcPointSet],
    functional: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    chunk_size: int = 256,
    norm: Optional[Callable[[np.ndarray], float]] = None,
) -> EstimatorResult:
    """Equal-weight cubature of the solution (or ``functional`` of it) for each point set.

    Each point set gives one estimate ``Q_r``; the result averages them and
    reports their root-mean-square spread.  Points enter the solver only after
    the map to the parameter box.
    """
    if not point_sets:
        raise ValueError("need at least one point set")
    kinds = {ps.kind for ps in point_sets}
    if len(kinds) != 1:
        raise ValueError(f"mixed point-set kinds {sorted(kinds)}")
    N = point_sets[0].num_points
    if any(ps.num_points != N for ps in point_sets):
        raise ValueError("all point sets must have the same number of points")
    norm = norm or _euclid

    def evaluate(omegas):
        u = solver.solve_batch(omegas)
        return u if functional is None else np.asarray(functional(u))

    def stream(ps):
        params = ps.parameters()
        for start in range(0, N, chunk_size):
            yield evaluate(params[start : start + chunk_size])

    shift_means = np.stack([anchored_mean(stream(ps)) for ps in point_sets])
    mean = anchored_mean([shift_means])
    rms = rms_across_shifts(shift_means, norm)
    return EstimatorResult(mean, shift_means, rms, N, kinds.pop())


def make_point_sets(
    kind: str, s: int, N: int, R: int = 1, rng: Optional[np.random.Generator] = None, skip: int = 1
) -> list[QmcPointSet]:
    """``R`` point sets: shifted lattices, independent MC draws, or one unshifted Sobol set."""
    rng = rng if rng is not None else np.random.default_rng(0)
    if kind == "sobol":
        return [sobol_points(s, N, skip)]
    if kind == "lattice":
        return [lattice_points(s, N, shift=d) for d in random_shifts(s, R, rng)]
    if kind == "mc":
        return [mc_points(s, N, rng) for _ in range(R)]
    raise ValueError(f"unknown point-set kind {kind!r}")


@dataclass
class TruncationStudy:
    s_values: list
    errors: list
    s_ref: int
    slope: float
    reference: np.ndarray = field(repr=False)


def truncation_study(
    make_solver: Callable[[ParametricIndex], object],
    parametric: ParametricIndex,
    s_list: Sequence[int],
    s_ref: int,
    N: int,
    mesh: Mesh,
    kind: str = "sobol",
    skip: int = 1,
    chunk_size: int = 256,
) -> TruncationStudy:
    """Errors ``|E[u^{s_ref}] - E[u^s]|_{L2} / |E[u^{s_ref}]|_{L2}`` on a shared point set.

    Sobol and lattice point sets are dimension-nested, so the truncated runs
    reuse the leading coordinates of the reference points.
    """
    from .rates import fit_rate

    if s_ref <= max(s_list):
        raise ValueError(f"s_ref={s_ref} must exceed max(s_list)={max(s_list)}")
    if kind == "sobol":
        full = sobol_points(s_ref, N, skip)
    elif kind == "lattice":
        full = lattice_points(s_ref, N, shift=np.full(s_ref, 0.5 / N))
    else:
        raise ValueError("truncation study needs a nested point set (sobol or lattice)")

    def expectation(s):
        solver = make_solver(parametric.truncated(s))
        pts = QmcPointSet(full.kind, full.points[:, :s])
        return estimate_expectation(solver, [pts], chunk_size=chunk_size).mean

    ref = expectation(s_ref)
    scale = l2_norm(ref, mesh)
    errors = [l2_norm(ref - expectation(s), mesh) / scale for s in s_list]
    slope = fit_rate(s_list, errors).slope if len(s_list) >= 3 else float("nan")
    return TruncationStudy(list(s_list), errors, s_ref, slope, ref)


def write_estimator_rows(path, rows: Sequence[dict]) -> None:
    """CSV with header ``N,s,R,kind,err,rms``."""
    with open(path, "w") as fh:
        fh.write("N,s,R,kind,err,rms\n")
        for r in rows:
            fh.write(f"{r['N']},{r['s']},{r['R']},{r['kind']},{r['err']:.17g},{r['rms']:.17g}\n")
