"""Acceptance criteria: one PASS/FAIL line per criterion in the terminal summary.

Set ``HELMLOD_PAPER_SCALE=1`` to also run the full-resolution variants
(hours on one core).
"""

import os
import warnings

import numpy as np
import pytest
from conftest import ACCEPTANCE
from oracles import dense_forms

from helmlod.assembly import (
    assemble_boundary_mass,
    assemble_mass,
    assemble_stiffness,
    build_quasi_interpolation,
    l2_norm,
)
from helmlod.experiments import preset, run_experiment
from helmlod.helmholtz import ProblemInstance, assemble_pieces, solve_reference
from helmlod.lod import CONSTRAINT_TOL, corrected_form, solve_patch
from helmlod.mesh import build_two_level, node_patch, uniform_mesh
from helmlod.problems import get_problem
from helmlod.qmc import lattice_points, random_shifts, sobol_points
from helmlod.stochastic import FemSampleSolver, estimate_expectation, make_point_sets, reference_family

PAPER = os.environ.get("HELMLOD_PAPER_SCALE") == "1"

pytestmark = pytest.mark.slow


def record(key: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[key] = (passed, detail)
    print(f"criterion {key}: {'PASS' if passed else 'FAIL'} | {detail}")
    assert passed, detail


def _run(name, scale="desk", problem=None, **changes):
    cfg = preset(name, scale, problem).replace(**changes)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return run_experiment(cfg, write=False)


def test_criterion_1_convergence_1d():
    parts, ok = [], True
    for c in (1, 2, 3, 4):
        s = _run("convergence-h", problem=f"ex1-cfg{c}").summary
        good = s["slope_L2"] >= 3.7 and s["slope_V"] >= 1.9 and s["fem_over_lod_L2_finest"] >= 10
        ok &= good
        parts.append(
            f"cfg{c}: L2 slope {s['slope_L2']:.2f} (>=3.7), V slope {s['slope_V']:.2f} (>=1.9), "
            f"FEM/LOD {s['fem_over_lod_L2_finest']:.1f} (>=10)"
        )
    record(1, ok, "; ".join(parts))


def test_criterion_2_convergence_2d():
    scale = "paper" if PAPER else "desk"
    parts, ok = [], True
    for name in ("ex2-i", "ex2-ii"):
        s = _run("convergence-h", scale, problem=name).summary
        good = s["slope_L2"] >= 3.5 and s["slope_V"] >= 1.8
        ok &= good
        parts.append(f"{name}: L2 slope {s['slope_L2']:.2f} (>=3.5), V slope {s['slope_V']:.2f} (>=1.8)")
    record(2, ok, f"{scale} scale; " + "; ".join(parts))


def test_criterion_3_boundary_correction():
    desk = _run("boundary-correction").summary
    ok = desk["improvement"] >= 5
    detail = (
        f"desk (H=2^-6, h=2^-7, l=6): A,V error {desk['err_AV_uncorrected']:.3e} -> "
        f"{desk['err_AV_corrected']:.3e}, factor {desk['improvement']:.2f} (>=5)"
    )
    if PAPER:
        paper = _run("boundary-correction", "paper").summary
        ok &= paper["improvement"] >= 10
        detail += (
            f"; paper (h=2^-9, l=10): {paper['err_AV_uncorrected']:.3e} -> "
            f"{paper['err_AV_corrected']:.3e}, factor {paper['improvement']:.2f} (>=10)"
        )
    else:
        detail += "; paper-scale part not run (set HELMLOD_PAPER_SCALE=1)"
    record(3, ok, detail)


def test_criterion_4_localization():
    scale = "paper" if PAPER else "desk"
    parts, ok = [], True
    for problem in ("ex4-1d", "ex4-2d"):
        res = _run("convergence-ell", scale, problem=problem)
        rows = res.tables["convergence_ell"][1]
        errs = ", ".join(f"{r['err_V']:.2e}" for r in rows[:-1])
        s = res.summary
        ok &= bool(s["monotone"] and s["plateau"])
        parts.append(
            f"{problem}: V errors l=1..{len(rows) - 1} [{errs}], global {s['global_err_V']:.2e}, "
            f"monotone={bool(s['monotone'])}, plateau={bool(s['plateau'])}"
        )
    record(4, ok, f"{scale} scale; " + "; ".join(parts))


def test_criterion_5_qmc_rate():
    s = _run("mc-vs-qmc").summary
    sob, lat, mc = s["slope_sobol_q2"], s["slope_lattice_q2"], s["slope_mc_q2"]
    ok = sob <= -0.85 and lat <= -0.85 and -0.65 <= mc <= -0.35
    record(5, ok, f"slopes: Sobol {sob:.3f}, lattice {lat:.3f} (<=-0.85), MC {mc:.3f} (in [-0.65,-0.35])")


def test_criterion_6_truncation_rate():
    s = _run("truncation-rate").summary
    q2, q3 = s["slope_q2"], s["slope_q3"]
    ok = q2 <= -2.0 and q3 < q2
    record(6, ok, f"slopes: q=2 {q2:.3f} (<=-2.0), q=3 {q3:.3f} (steeper than q=2)")


# ---------------------------------------------------------------- criterion 7 checks


def _check_assembly():
    worst = 0.0
    for dim, n in ((1, 64), (2, 4), (2, 5)):
        mesh = uniform_mesh(dim, n)
        rng = np.random.default_rng(n)
        a, m = rng.uniform(0.5, 2, (2, mesh.num_elements))
        b = rng.uniform(0.5, 2, len(mesh.boundary_facets))
        S0, M0, B0 = dense_forms(mesh.nodes, mesh.elements, a, m, mesh.boundary_facets, b)
        for A, ref in ((assemble_stiffness(mesh, a), S0), (assemble_mass(mesh, m), M0),
                       (assemble_boundary_mass(mesh, b), B0)):
            worst = max(worst, np.abs(A.toarray() - ref).max() / np.abs(ref).max())
    return worst <= 1e-13, f"assembly vs dense quadrature rel {worst:.1e}"


def _check_kkt():
    worst_kkt, worst_con = 0.0, 0.0
    for dim, H, prob in ((1, 4, get_problem("ex1-cfg4", kappa=16.0)), (2, 2, get_problem("ex2-ii"))):
        mp = build_two_level(dim, H, H + 2)
        qi = build_quasi_interpolation(mp)
        form = corrected_form(assemble_pieces(prob, mp.fine))
        for j in range(mp.num_coarse_nodes):
            patch = node_patch(mp, j, 1)
            dofs = patch.free_fine_nodes
            sol = solve_patch(form, qi, dofs, j, patch.touches_boundary())
            Cp = qi.C[sol.constraint_rows][:, dofs]
            t = np.zeros(len(sol.constraint_rows))
            t[np.searchsorted(sol.constraint_rows, j)] = qi.weights[j]
            for sign, phi, lam in ((1.0, sol.phi_real, sol.multipliers[0]),
                                   (-1.0, sol.phi_imag, sol.multipliers[1])):
                A = form.block(sign)[dofs][:, dofs]
                r = np.abs(A @ phi + Cp.T @ lam).max()
                scale = abs(A).max() * np.abs(phi).max() + abs(Cp).max() * np.abs(lam).max()
                worst_kkt = max(worst_kkt, r / scale)
                worst_con = max(worst_con, np.abs(Cp @ phi - t).max() / qi.weights.max())
    ok = worst_kkt <= 1e-9 and worst_con <= CONSTRAINT_TOL
    return ok, f"KKT rel residual {worst_kkt:.1e}, constraint rel residual {worst_con:.1e}"


def _check_partition():
    worst = 0.0
    for dim, H, h in ((1, 3, 6), (2, 2, 5)):
        qi = build_quasi_interpolation(build_two_level(dim, H, h))
        worst = max(worst, np.abs(qi.apply(np.ones(qi.C.shape[1])) - 1).max())
    return worst <= 1e-13, f"I_H(1) - 1 max {worst:.1e}"


def _check_im_identity():
    worst = 0.0
    for name, n in (("ex1-cfg2", 2**10), ("ex2-ii", 2**5)):
        prob = get_problem(name)
        mesh = uniform_mesh(prob.dimension, n)
        pieces = assemble_pieces(prob, mesh)
        u = solve_reference(prob, mesh).u
        lhs = prob.kappa * np.real(np.vdot(u, pieces.boundary @ u))
        rhs = np.imag(pieces.load @ u)
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return worst <= 1e-8, f"Im-identity rel {worst:.1e}"


def _check_kappa_sweep():
    mesh = uniform_mesh(1, 2**12)
    vals = [2.0**k * l2_norm(solve_reference(ProblemInstance(2.0**k), mesh).u, mesh) for k in range(3, 7)]
    ratio = max(vals) / min(vals)
    return ratio < 3, f"kappa|u| over kappa=2^3..2^6: {', '.join(f'{v:.3e}' for v in vals)}, max/min {ratio:.2f} (<3)"


def _check_sobol_net():
    bad = 0
    for k in range(1, 13):
        N = 2**k
        pts = sobol_points(2, N, skip=0).points
        for a in range(k + 1):
            cells = np.floor(pts[:, 0] * 2**a).astype(int) * 2 ** (k - a) + np.floor(
                pts[:, 1] * 2 ** (k - a)
            ).astype(int)
            bad += int(np.any(np.bincount(cells, minlength=N) != 1))
    return bad == 0, f"Sobol net-balance violations {bad} (N=2..4096)"


def _check_lattice_unbiased():
    rng = np.random.default_rng(0)
    s, N, R = 16, 128, 256
    Q = np.array([ps.parameters().sum(axis=1).mean()
                  for ps in (lattice_points(s, N, shift=d) for d in random_shifts(s, R, rng))])
    z = abs(Q.mean()) / (Q.std(ddof=1) / np.sqrt(R))
    return z <= 3, f"lattice mean of sum(omega) at {z:.2f} standard errors (<=3)"


def _check_zero_delta():
    fam = reference_family(2.0, 8, delta=0.0)
    solver = FemSampleSolver(uniform_mesh(1, 2**8), 16.0, fam)
    exact = True
    for kind in ("sobol", "lattice"):
        est = estimate_expectation(solver, make_point_sets(kind, 8, 64, R=8, rng=np.random.default_rng(0)))
        exact &= bool(np.array_equal(est.mean, solver.solve_deterministic()) and est.rms == 0.0)
    return exact, f"delta=0 estimator bit-identical to deterministic solve: {exact}"


def test_criterion_7_property_suites():
    checks = [_check_assembly, _check_kkt, _check_partition, _check_im_identity, _check_kappa_sweep,
              _check_sobol_net, _check_lattice_unbiased, _check_zero_delta]
    results = [c() for c in checks]
    failed = [msg for ok, msg in results if not ok]
    detail = "; ".join(("ok: " if ok else "FAILED: ") + msg for ok, msg in results)
    record(7, not failed, detail)
