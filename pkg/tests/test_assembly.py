import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st
from oracles import dense_forms, hat_values_1d

from helmlod.assembly import (
    assemble_boundary_mass,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    build_quasi_interpolation,
    l2_norm,
    sample_coefficient,
    v_norm,
    write_coo,
)
from helmlod.mesh import build_two_level, uniform_mesh


def test_stiffness_1d_example():
    S = assemble_stiffness(uniform_mesh(1, 2)).toarray()
    assert np.allclose(S, [[2, -2, 0], [-2, 4, -2], [0, -2, 2]])


def test_mass_1d_example():
    M = assemble_mass(uniform_mesh(1, 2)).toarray()
    assert np.allclose(M, np.array([[2, 1, 0], [1, 4, 1], [0, 1, 2]]) / 12)


def test_mass_piecewise_coefficient_total():
    mesh = uniform_mesh(1, 2)
    M = assemble_mass(mesh, lambda x: np.where(x[:, 0] < 0.5, 2.0, 1.0))
    assert np.isclose(M.sum(), 1.5)


def test_boundary_mass_1d_example():
    B = assemble_boundary_mass(uniform_mesh(1, 4)).toarray()
    expected = np.zeros((5, 5))
    expected[0, 0] = expected[4, 4] = 1.0
    assert np.allclose(B, expected)


def test_boundary_mass_2d_perimeter_and_local_block():
    mesh = uniform_mesh(2, 4)
    assert np.isclose(assemble_boundary_mass(mesh).sum(), 4.0)
    c = 3.0
    vals = np.zeros(len(mesh.boundary_facets))
    vals[0] = c
    B = assemble_boundary_mass(mesh, vals).toarray()
    a, b = mesh.boundary_facets[0]
    h = mesh.facet_measures[0]
    assert np.allclose(B[np.ix_([a, b], [a, b])], c * h / 6 * np.array([[2, 1], [1, 2]]))
    assert np.count_nonzero(B) == 4


def test_stiffness_single_square_exact():
    # hat gradients on the triangles (0,0),(1,0),(1,1) and (0,0),(1,1),(0,1)
    S = assemble_stiffness(uniform_mesh(2, 1)).toarray()
    nodes = uniform_mesh(2, 1).nodes
    order = [int(np.flatnonzero(np.all(nodes == p, axis=1))[0]) for p in ([0, 0], [1, 0], [0, 1], [1, 1])]
    exact = np.array(
        [[1.0, -0.5, -0.5, 0.0], [-0.5, 1.0, 0.0, -0.5], [-0.5, 0.0, 1.0, -0.5], [0.0, -0.5, -0.5, 1.0]]
    )
    assert np.allclose(S[np.ix_(order, order)], exact)


@pytest.mark.parametrize("dim,n", [(1, 4), (1, 64), (2, 1), (2, 2), (2, 4)])
def test_matches_dense_quadrature(dim, n):
    # at most 64 elements in every case
    mesh = uniform_mesh(dim, n)
    rng = np.random.default_rng(n)
    a = rng.uniform(0.5, 2.0, mesh.num_elements)
    m = rng.uniform(0.5, 2.0, mesh.num_elements)
    b = rng.uniform(0.5, 2.0, len(mesh.boundary_facets))
    S0, M0, B0 = dense_forms(mesh.nodes, mesh.elements, a, m, mesh.boundary_facets, b)
    assert np.allclose(assemble_stiffness(mesh, a).toarray(), S0, atol=1e-13)
    assert np.allclose(assemble_mass(mesh, m).toarray(), M0, atol=1e-15)
    assert np.allclose(assemble_boundary_mass(mesh, b).toarray(), B0, atol=1e-15)


@given(st.integers(1, 2), st.integers(1, 4), st.integers(0, 2**31))
def test_forms_equal_exact_integrals(dim, n, seed):
    mesh = uniform_mesh(dim, n)
    rng = np.random.default_rng(seed)
    coeff = rng.uniform(0.1, 3.0, mesh.num_elements)
    u, v = rng.standard_normal((2, mesh.num_nodes))
    S0, M0, _ = dense_forms(mesh.nodes, mesh.elements, coeff, coeff, [], [])
    S, M = assemble_stiffness(mesh, coeff), assemble_mass(mesh, coeff)
    assert np.isclose(u @ S @ v, u @ S0 @ v, rtol=1e-12, atol=1e-12)
    assert np.isclose(u @ M @ v, u @ M0 @ v, rtol=1e-12, atol=1e-12)


@given(st.integers(1, 2), st.integers(1, 5))
def test_matrix_symmetry_and_row_sums(dim, n):
    mesh = uniform_mesh(dim, n)
    for A in (assemble_stiffness(mesh), assemble_mass(mesh), assemble_boundary_mass(mesh)):
        assert abs(A - A.T).max() <= 1e-14 * abs(A).max()
    S = assemble_stiffness(mesh)
    assert np.allclose(np.asarray(S.sum(axis=1)).ravel(), 0.0, atol=1e-12)
    assert np.isclose(assemble_mass(mesh).sum(), 1.0)


def test_boundary_mass_supported_on_boundary():
    mesh = uniform_mesh(2, 4)
    B = assemble_boundary_mass(mesh).tocoo()
    bd = set(mesh.boundary_nodes.tolist())
    assert set(B.row.tolist()) <= bd and set(B.col.tolist()) <= bd


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_nonpositive_coefficients_rejected(bad):
    mesh = uniform_mesh(1, 4)
    with pytest.raises(ValueError):
        assemble_stiffness(mesh, bad)
    with pytest.raises(ValueError):
        assemble_mass(mesh, bad)


def test_negative_boundary_coefficient_rejected():
    with pytest.raises(ValueError):
        assemble_boundary_mass(uniform_mesh(1, 4), -1.0)


@pytest.mark.parametrize("dim,H,h", [(1, 2, 4), (2, 1, 3)])
def test_refinement_consistency(dim, H, h):
    mp = build_two_level(dim, H, h)
    nc = 2**H
    # constant on every coarse grid square, hence on every coarse element
    coeff = lambda x: 1.0 + np.floor(x[:, 0] * nc) + 3 * np.floor(x[:, -1] * nc) % 2  # noqa: E731
    P = mp.prolongation
    for assemble in (assemble_stiffness, assemble_mass):
        fine = assemble(mp.fine, coeff)
        coarse = assemble(mp.coarse, coeff)
        assert np.allclose((P.T @ fine @ P).toarray(), coarse.toarray(), atol=1e-13)


def test_load_vector_total():
    for dim in (1, 2):
        mesh = uniform_mesh(dim, 8)
        assert np.isclose(assemble_load(mesh, 1.0).sum(), 1.0)


def test_quasi_interpolation_examples():
    mp = build_two_level(1, 1, 2)
    qi = build_quasi_interpolation(mp)
    assert np.allclose(qi.weights, [0.25, 0.5, 0.25])
    assert np.allclose(qi.apply(np.ones(mp.fine.num_nodes)), 1.0)
    # v = x: (v, phi_k) / (1, phi_k) by dense integration of piecewise linears
    x = mp.fine.nodes[:, 0]
    t = np.linspace(0, 1, 20001)
    hats = hat_values_1d(mp.coarse.nodes[:, 0], t)
    v = np.interp(t, x, x)
    dt = t[1] - t[0]
    trap = lambda g: dt * (g.sum() - 0.5 * (g[0] + g[-1]))  # noqa: E731
    expected = [trap(v * hats[:, k]) / trap(hats[:, k]) for k in range(3)]
    assert np.allclose(qi.apply(x), expected, atol=1e-8)
    assert np.allclose(expected, [1 / 6, 1 / 2, 5 / 6], atol=1e-8)


@given(st.integers(1, 2), st.integers(1, 3), st.integers(1, 2))
def test_quasi_interpolation_partition_of_unity(dim, H, extra):
    mp = build_two_level(dim, H, H + extra)
    qi = build_quasi_interpolation(mp)
    assert np.all(qi.weights > 0)
    assert np.allclose(np.asarray(qi.C.sum(axis=1)).ravel(), qi.weights)
    assert np.allclose(qi.apply(np.ones(mp.fine.num_nodes)), 1.0, atol=1e-13)
    assert np.isclose(qi.weights.sum(), 1.0)


def test_norm_examples():
    mesh = uniform_mesh(1, 16)
    assert np.isclose(v_norm(np.ones(17), 2.0, mesh), 2.0)
    assert np.isclose(v_norm(mesh.nodes[:, 0], 0.0, mesh), 1.0)
    assert np.isclose(v_norm(1j * np.ones(17), 3.0, mesh), 3.0)
    assert np.isclose(l2_norm(np.ones(17), mesh), 1.0)


def test_sample_coefficient_forms():
    pts = np.array([[0.0], [0.5]])
    assert np.array_equal(sample_coefficient(2.0, pts), [2.0, 2.0])
    assert np.array_equal(sample_coefficient(np.array([1.0, 3.0]), pts), [1.0, 3.0])
    assert np.array_equal(sample_coefficient(lambda x: x[:, 0], pts), [0.0, 0.5])


def test_write_coo_format(tmp_path):
    A = sp.csr_matrix(np.array([[1.0, 0.0], [0.1 + 2j, 3.0]]))
    write_coo(tmp_path / "a.txt", A)
    lines = (tmp_path / "a.txt").read_text().splitlines()
    rows = [line.split() for line in lines]
    assert all(len(r) == 4 for r in rows)
    back = {(int(r), int(c)): float(re) + 1j * float(im) for r, c, re, im in rows}
    assert back[(1, 0)] == 0.1 + 2j and back[(0, 0)] == 1.0
