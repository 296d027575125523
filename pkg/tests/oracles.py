"""Independent dense reference implementations used by the test suite.

Nothing here calls into ``helmlod.assembly`` or ``helmlod.lod``; element
integrals are computed from coordinates with exact quadrature rules.
"""

from __future__ import annotations

import numpy as np

# Simpson's rule on [0, 1] (exact for cubics)
_SIMPSON = (np.array([0.0, 0.5, 1.0]), np.array([1.0, 4.0, 1.0]) / 6.0)
# edge-midpoint rule on a triangle, barycentric coordinates (exact for quadratics)
_MIDPOINTS = (
    np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]),
    np.full(3, 1.0 / 3.0),
)


def _element_basis(verts: np.ndarray):
    """Affine P1 basis on one simplex: coefficients ``c`` with ``phi_a(x) = c[a,0] + c[a,1:] . x``."""
    d = verts.shape[1]
    V = np.hstack([np.ones((d + 1, 1)), verts])
    coef = np.linalg.inv(V).T  # row a -> coefficients of phi_a
    measure = abs(np.linalg.det(V)) / (1.0 if d == 1 else 2.0)
    return coef, measure


def dense_forms(nodes: np.ndarray, elements: np.ndarray, coeff_el, mass_el, facets, bd_coeff):
    """Dense stiffness, mass and boundary mass by exact element quadrature.

    ``coeff_el``/``mass_el`` are per-element constants, ``facets`` a list of
    node-index tuples on the boundary with per-facet constants ``bd_coeff``.
    """
    n = nodes.shape[0]
    d = nodes.shape[1]
    S = np.zeros((n, n))
    M = np.zeros((n, n))
    B = np.zeros((n, n))
    for e, tri in enumerate(elements):
        verts = nodes[tri]
        coef, meas = _element_basis(verts)
        grads = coef[:, 1:]
        S[np.ix_(tri, tri)] += coeff_el[e] * meas * grads @ grads.T
        if d == 1:
            t, w = _SIMPSON
            lam = np.stack([1 - t, t], axis=1)
        else:
            lam, w = _MIDPOINTS
        pts = lam @ verts
        vals = coef[:, :1].T + pts @ grads.T  # (q, d+1) basis values
        M[np.ix_(tri, tri)] += mass_el[e] * meas * (vals.T * w) @ vals
    for f, fac in enumerate(facets):
        fac = list(fac)
        if len(fac) == 1:
            B[fac[0], fac[0]] += bd_coeff[f]
            continue
        a, b = nodes[fac[0]], nodes[fac[1]]
        length = np.linalg.norm(b - a)
        t, w = _SIMPSON
        vals = np.stack([1 - t, t], axis=1)
        B[np.ix_(fac, fac)] += bd_coeff[f] * length * (vals.T * w) @ vals
    return S, M, B


def hat_values_1d(coarse_x: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Coarse hat functions evaluated at points ``x`` (len(x) x len(coarse_x))."""
    out = np.zeros((len(x), len(coarse_x)))
    for k in range(len(coarse_x)):
        e = np.zeros(len(coarse_x))
        e[k] = 1.0
        out[:, k] = np.interp(x, coarse_x, e)
    return out


def dense_kkt_basis(A: np.ndarray, C: np.ndarray, targets: np.ndarray, dofs=None) -> np.ndarray:
    """Stationary points of ``phi^T A phi`` subject to ``C phi = targets[:, j]`` on ``dofs``.

    Returns an (n, ncols) array with zeros outside ``dofs``.
    """
    n = A.shape[0]
    dofs = np.arange(n) if dofs is None else np.asarray(dofs)
    Ap = A[np.ix_(dofs, dofs)]
    Cp = C[:, dofs]
    rows = np.flatnonzero(np.abs(Cp).sum(axis=1) > 0)
    Cp = Cp[rows]
    m = len(rows)
    K = np.block([[Ap, Cp.T], [Cp, np.zeros((m, m))]])
    rhs = np.vstack([np.zeros((len(dofs), targets.shape[1])), targets[rows]])
    sol = np.linalg.solve(K, rhs)
    out = np.zeros((n, targets.shape[1]))
    out[dofs] = sol[: len(dofs)]
    return out


def poisson_lod_1d(H: float, h: float, layers=None):
    """Classical diffusion LOD basis on [0, 1] with Clement constraints, built densely.

    ``layers=None`` gives the global basis; otherwise each column lives on the
    coarse elements within ``layers`` layers of the hat support, with zero
    values on the patch boundary inside the domain.
    """
    x = np.linspace(0.0, 1.0, round(1 / h) + 1)
    X = np.linspace(0.0, 1.0, round(1 / H) + 1)
    elements = np.stack([np.arange(len(x) - 1), np.arange(1, len(x))], axis=1)
    ones = np.ones(len(elements))
    S, M, _ = dense_forms(x[:, None], elements, ones, ones, [], [])
    P = hat_values_1d(X, x)
    C = P.T @ M
    w = C.sum(axis=1)
    T = np.diag(w)
    if layers is None:
        return dense_kkt_basis(S, C, T), C, w
    cols = []
    for j in range(len(X)):
        lo = max(X[j] - (layers + 1) * H, 0.0)
        hi = min(X[j] + (layers + 1) * H, 1.0)
        inside = (x >= lo - 1e-12) & (x <= hi + 1e-12)
        free = inside & ((x > lo + 1e-12) | (x < 1e-12)) & ((x < hi - 1e-12) | (x > 1 - 1e-12))
        cols.append(dense_kkt_basis(S, C, T[:, [j]], np.flatnonzero(free))[:, 0])
    return np.stack(cols, axis=1), C, w
