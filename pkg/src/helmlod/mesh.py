"""Uniform dyadic meshes of [0,1] and [0,1]^2, coarse/fine embedding and node patches."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True, eq=False)
class Mesh:
    """Structured simplicial mesh with ``n`` elements (1D) or squares (2D) per side.

    Nodes are ordered lexicographically by (y, x).  In 2D each grid square
    ``(ix, iy)`` is split along its lower-left/upper-right diagonal into the
    triangles ``2*sq`` (below the diagonal) and ``2*sq + 1`` (above it), with
    ``sq = iy * n + ix``; both are counter-clockwise.
    """

    dimension: int
    n: int
    nodes: np.ndarray
    elements: np.ndarray
    boundary_facets: np.ndarray
    facet_elements: np.ndarray

    @property
    def size_h(self) -> float:
        return 1.0 / self.n

    @property
    def num_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def num_elements(self) -> int:
        return self.elements.shape[0]

    @cached_property
    def barycenters(self) -> np.ndarray:
        return self.nodes[self.elements].mean(axis=1)

    @cached_property
    def element_measures(self) -> np.ndarray:
        if self.dimension == 1:
            x = self.nodes[self.elements, 0]
            return x[:, 1] - x[:, 0]
        p = self.nodes[self.elements]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def facet_midpoints(self) -> np.ndarray:
        return self.nodes[self.boundary_facets].mean(axis=1)

    @cached_property
    def facet_measures(self) -> np.ndarray:
        if self.dimension == 1:
            return np.ones(len(self.boundary_facets))
        p = self.nodes[self.boundary_facets]
        return np.linalg.norm(p[:, 1] - p[:, 0], axis=1)

    @cached_property
    def facet_normals(self) -> np.ndarray:
        """Outward unit normals, computed from geometry."""
        mid = self.facet_midpoints
        inner = self.barycenters[self.facet_elements]
        if self.dimension == 1:
            return np.sign(mid - inner)
        p = self.nodes[self.boundary_facets]
        t = p[:, 1] - p[:, 0]
        nrm = np.stack([t[:, 1], -t[:, 0]], axis=1) / self.facet_measures[:, None]
        flip = np.einsum("ij,ij->i", nrm, mid - inner) < 0
        nrm[flip] *= -1
        return nrm

    @cached_property
    def boundary_nodes(self) -> np.ndarray:
        return np.unique(self.boundary_facets)

    @cached_property
    def incidence(self) -> sp.csr_matrix:
        """Element-by-node 0/1 incidence matrix."""
        ne, k = self.elements.shape
        rows = np.repeat(np.arange(ne), k)
        data = np.ones(ne * k, dtype=np.int8)
        return sp.csr_matrix(
            (data, (rows, self.elements.ravel())), shape=(ne, self.num_nodes)
        )

    def dump(self, path) -> None:
        """Debug dump: node coordinates, then element node indices, one record per line."""
        with open(path, "w") as fh:
            fh.write(f"nodes {self.num_nodes}\n")
            for p in self.nodes:
                fh.write(" ".join(repr(float(c)) for c in p) + "\n")
            fh.write(f"elements {self.num_elements}\n")
            for e in self.elements:
                fh.write(" ".join(str(int(i)) for i in e) + "\n")


def uniform_mesh(dimension: int, n: int) -> Mesh:
    """Uniform mesh of the unit interval or unit square with ``n`` cells per side."""
    if dimension == 1:
        nodes = (np.arange(n + 1, dtype=float) / n)[:, None]
        idx = np.arange(n)
        elements = np.stack([idx, idx + 1], axis=1)
        facets = np.array([[0], [n]])
        facet_elements = np.array([0, n - 1])
        return Mesh(1, n, nodes, elements, facets, facet_elements)
    if dimension != 2:
        raise ValueError(f"dimension must be 1 or 2, got {dimension}")

    coords = np.arange(n + 1, dtype=float) / n
    xx, yy = np.meshgrid(coords, coords)
    nodes = np.stack([xx.ravel(), yy.ravel()], axis=1)

    iy, ix = np.divmod(np.arange(n * n), n)
    v00 = iy * (n + 1) + ix
    v10 = v00 + 1
    v01 = v00 + n + 1
    v11 = v01 + 1
    lower = np.stack([v00, v10, v11], axis=1)
    upper = np.stack([v00, v11, v01], axis=1)
    elements = np.empty((2 * n * n, 3), dtype=np.int64)
    elements[0::2] = lower
    elements[1::2] = upper

    k = np.arange(n)
    # bottom, right, top, left; each facet's owning triangle
    bottom = np.stack([k, k + 1], axis=1)
    bottom_el = 2 * k
    right = np.stack([k * (n + 1) + n, (k + 1) * (n + 1) + n], axis=1)
    right_el = 2 * (k * n + n - 1)
    top = np.stack([n * (n + 1) + k + 1, n * (n + 1) + k], axis=1)
    top_el = 2 * ((n - 1) * n + k) + 1
    left = np.stack([(k + 1) * (n + 1), k * (n + 1)], axis=1)
    left_el = 2 * (k * n) + 1
    facets = np.concatenate([bottom, right, top, left])
    facet_elements = np.concatenate([bottom_el, right_el, top_el, left_el])
    return Mesh(2, n, nodes, elements, facets, facet_elements)


@dataclass(frozen=True, eq=False)
class TwoLevelMesh:
    coarse: Mesh
    fine: Mesh
    fine_element_parent: np.ndarray  # coarse element of each fine element
    coarse_to_fine_node: np.ndarray

    @property
    def dimension(self) -> int:
        return self.coarse.dimension

    @property
    def num_coarse_nodes(self) -> int:
        return self.coarse.num_nodes

    @cached_property
    def fine_elements_of_coarse(self) -> list[np.ndarray]:
        order = np.argsort(self.fine_element_parent, kind="stable")
        counts = np.bincount(self.fine_element_parent, minlength=self.coarse.num_elements)
        return np.split(order, np.cumsum(counts)[:-1])

    @cached_property
    def prolongation(self) -> sp.csr_matrix:
        """Fine-by-coarse matrix of coarse hat functions evaluated at fine nodes."""
        fine, coarse = self.fine, self.coarse
        d = self.dimension
        parents = self.fine_element_parent
        fine_pts = fine.nodes[fine.elements]  # (nf, d+1, d)
        cverts = coarse.nodes[coarse.elements[parents]]  # (nf, d+1, d)
        if d == 1:
            x0 = cverts[:, 0, 0][:, None]
            x1 = cverts[:, 1, 0][:, None]
            lam1 = (fine_pts[:, :, 0] - x0) / (x1 - x0)
            lam = np.stack([1 - lam1, lam1], axis=2)
        else:
            T = np.stack([cverts[:, 1] - cverts[:, 0], cverts[:, 2] - cverts[:, 0]], axis=2)
            rel = fine_pts - cverts[:, 0][:, None, :]
            mu = np.linalg.solve(T[:, None], rel[..., None])[..., 0]
            lam = np.concatenate([1 - mu.sum(axis=2, keepdims=True), mu], axis=2)
        rows = np.repeat(fine.elements[:, :, None], d + 1, axis=2).ravel()
        cols = np.repeat(coarse.elements[parents][:, None, :], d + 1, axis=1).ravel()
        vals = lam.ravel()
        keep = np.abs(vals) > 1e-12
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        key = rows * coarse.num_nodes + cols
        _, first = np.unique(key, return_index=True)
        return sp.csr_matrix(
            (vals[first], (rows[first], cols[first])),
            shape=(fine.num_nodes, coarse.num_nodes),
        )


def build_two_level(dimension: int, H_exponent: int, h_exponent: int) -> TwoLevelMesh:
    """Coarse mesh of width 2**-H_exponent and its uniform refinement of width 2**-h_exponent."""
    if not (h_exponent > H_exponent >= 1):
        raise ValueError(
            f"need h_exponent > H_exponent >= 1, got H_exponent={H_exponent}, "
            f"h_exponent={h_exponent}"
        )
    nc, nf = 2**H_exponent, 2**h_exponent
    m = nf // nc
    coarse = uniform_mesh(dimension, nc)
    fine = uniform_mesh(dimension, nf)

    if dimension == 1:
        parent = np.arange(nf) // m
        c2f = np.arange(nc + 1) * m
    else:
        iy, ix = np.divmod(np.arange(nf * nf), nf)
        csq = (iy // m) * nc + ix // m
        lx, ly = ix % m, iy % m
        lower_parent = 2 * csq + (ly > lx)
        upper_parent = 2 * csq + (ly >= lx)
        parent = np.empty(2 * nf * nf, dtype=np.int64)
        parent[0::2] = lower_parent
        parent[1::2] = upper_parent
        ciy, cix = np.divmod(np.arange((nc + 1) ** 2), nc + 1)
        c2f = ciy * m * (nf + 1) + cix * m
    return TwoLevelMesh(coarse, fine, parent, c2f)


@dataclass(frozen=True, eq=False)
class Patch:
    center_node: int
    layers: int
    elements: np.ndarray
    fine_elements: np.ndarray
    fine_boundary_facets: np.ndarray
    free_fine_nodes: np.ndarray = field(repr=False)

    def touches_boundary(self) -> bool:
        return len(self.fine_boundary_facets) > 0


def coarse_element_layers(mesh: Mesh, node: int, layers: int) -> np.ndarray:
    """Coarse elements of D_layers(node): D_0 is the hat support, each layer adds touching elements."""
    if not 0 <= node < mesh.num_nodes:
        raise IndexError(f"coarse node {node} out of range [0, {mesh.num_nodes})")
    if layers < 0:
        raise ValueError("layers must be nonnegative")
    inc = mesh.incidence
    inc_t = inc.T.tocsr()
    elems = inc_t.indices[inc_t.indptr[node] : inc_t.indptr[node + 1]]
    for _ in range(layers):
        touched = np.zeros(mesh.num_nodes, dtype=bool)
        touched[mesh.elements[elems].ravel()] = True
        grown = np.flatnonzero(inc[:, touched].getnnz(axis=1))
        if len(grown) == len(elems):
            break
        elems = grown
    return np.sort(elems)


def node_patch(mesh_pair: TwoLevelMesh, j: int, layers: int) -> Patch:
    """Patch of ``layers`` coarse element layers around coarse node ``j``.

    ``free_fine_nodes`` are fine nodes all of whose incident fine elements lie
    in the patch, i.e. the patch closure minus its artificial boundary inside D.
    """
    elems = coarse_element_layers(mesh_pair.coarse, j, layers)
    fine = mesh_pair.fine
    in_patch = np.zeros(mesh_pair.coarse.num_elements, dtype=bool)
    in_patch[elems] = True
    fine_mask = in_patch[mesh_pair.fine_element_parent]
    fine_elems = np.flatnonzero(fine_mask)

    outside_nodes = np.zeros(fine.num_nodes, dtype=bool)
    outside_nodes[fine.elements[~fine_mask].ravel()] = True
    inside_nodes = np.zeros(fine.num_nodes, dtype=bool)
    inside_nodes[fine.elements[fine_mask].ravel()] = True
    free = np.flatnonzero(inside_nodes & ~outside_nodes)

    facets = np.flatnonzero(fine_mask[fine.facet_elements])
    return Patch(j, layers, elems, fine_elems, facets, free)
