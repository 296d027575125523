from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helmlod.qmc import (
    SOBOL_MAX_DIM,
    default_generating_vector,
    lattice_points,
    mc_points,
    random_shifts,
    sobol_points,
    to_parameter_box,
)


def test_sobol_first_points():
    pts = sobol_points(1, 4, skip=0).points[:, 0]
    assert np.array_equal(pts, [0.0, 0.5, 0.75, 0.25])


def test_sobol_skip_drops_leading_points():
    full = sobol_points(3, 9, skip=0).points
    assert np.array_equal(sobol_points(3, 8, skip=1).points, full[1:])


@given(st.integers(1, 10))
def test_sobol_2d_net_balance(k):
    N = 2**k
    pts = sobol_points(2, N, skip=0).points
    for axis in range(2):
        counts = np.bincount(np.floor(pts[:, axis] * N).astype(int), minlength=N)
        assert np.all(counts == 1)
    # (0, m, 2)-net: every dyadic box of area 1/N holds exactly one point
    for a in range(k + 1):
        cells = np.floor(pts[:, 0] * 2**a).astype(int) * 2 ** (k - a) + np.floor(pts[:, 1] * 2 ** (k - a)).astype(int)
        assert np.all(np.bincount(cells, minlength=N) == 1)


@given(st.integers(1, 64), st.integers(1, 300))
def test_sobol_unit_cube(s, N):
    pts = sobol_points(s, N).points
    assert pts.shape == (N, s)
    assert np.all((pts >= 0) & (pts < 1))


def test_sobol_dimension_limit():
    assert SOBOL_MAX_DIM >= 512
    sobol_points(512, 4)
    with pytest.raises(ValueError):
        sobol_points(SOBOL_MAX_DIM + 1, 4)


def test_lattice_single_point():
    ps = lattice_points(5, 1)
    assert np.array_equal(ps.points, np.zeros((1, 5)))
    assert np.array_equal(ps.parameters(), np.full((1, 5), -0.5))


@given(st.integers(1, 8), st.integers(1, 64), st.integers(0, 2**31))
def test_lattice_points_exact(s, N, seed):
    rng = np.random.default_rng(seed)
    z = rng.integers(1, 10**6, s)
    ps = lattice_points(s, N, z=z)
    for j in (1, N // 2 + 1, N):
        exact = [Fraction(j * int(zi), N) % 1 for zi in z]
        assert np.array_equal(ps.points[j - 1], [float(f) for f in exact])
    assert np.all((ps.points >= 0) & (ps.points < 1))


def test_lattice_constant_integrand():
    rng = np.random.default_rng(0)
    for shift in rng.random((3, 6)):
        ps = lattice_points(6, 37, shift=shift)
        assert np.mean(np.ones(ps.num_points)) == 1.0
        assert np.all((ps.points >= 0) & (ps.points < 1))


def test_lattice_unbiased_for_linear_integrand():
    rng = np.random.default_rng(1)
    s, N, R = 8, 64, 200
    Q = np.array([ps.parameters().sum(axis=1).mean() for ps in
                  (lattice_points(s, N, shift=d) for d in random_shifts(s, R, rng))])
    se = Q.std(ddof=1) / np.sqrt(R)
    assert abs(Q.mean()) <= 3 * se


def test_lattice_validation():
    with pytest.raises(ValueError):
        lattice_points(3, 8, z=np.array([1, 3]))
    with pytest.raises(ValueError):
        lattice_points(2, 8, shift=np.array([0.5, 1.0]))
    with pytest.raises(ValueError):
        lattice_points(2, 0)


def test_embedded_generating_vector():
    z = default_generating_vector(1024)
    assert z[0] == 1 and len(z) == 1024
    assert np.all(z % 2 == 1)
    with pytest.raises(ValueError):
        default_generating_vector(1025)


@given(st.integers(1, 16), st.integers(1, 100))
def test_parameter_box(s, N):
    rng = np.random.default_rng(s * N)
    for ps in (sobol_points(s, N), lattice_points(s, N, shift=rng.random(s)), mc_points(s, N, rng)):
        w = ps.parameters()
        assert np.all((w >= -0.5) & (w < 0.5))
        assert np.array_equal(w, to_parameter_box(ps.points))


def test_point_set_export(tmp_path):
    ps = lattice_points(3, 8, shift=np.full(3, 0.1))
    ps.write(tmp_path / "p.txt")
    back = np.loadtxt(tmp_path / "p.txt")
    assert np.array_equal(back, ps.points)


def test_shift_reproducibility():
    a = random_shifts(4, 3, np.random.default_rng(7))
    b = random_shifts(4, 3, np.random.default_rng(7))
    assert np.array_equal(a, b)
