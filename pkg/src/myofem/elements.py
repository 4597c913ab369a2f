"""Reference-element machinery on the hexahedron [-1, 1]^3.

Continuous Lagrange bases Q1 (8 nodes) and Q2 (27 nodes) in lexicographic
tensor-product ordering (xi fastest, then eta, then zeta), discontinuous
per-cell bases P0 (constant) and P1 (monomials 1, xi, eta, zeta), tensor
Gauss-Legendre quadrature, and the isoparametric map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvertedCell

# 1D Lagrange nodes for degree 1 and 2 on [-1, 1]
_NODES_1D = {1: np.array([-1.0, 1.0]), 2: np.array([-1.0, 0.0, 1.0])}


def _lagrange_1d(degree: int, x: np.ndarray):
    """Values and derivatives of the 1D Lagrange basis at points x."""
    nodes = _NODES_1D[degree]
    n = len(nodes)
    x = np.asarray(x, dtype=float)
    vals = np.ones((x.size, n))
    ders = np.zeros((x.size, n))
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            vals[:, i] *= (x - nodes[j]) / (nodes[i] - nodes[j])
        # derivative by product rule over the omitted factor
        for k in range(n):
            if k == i:
                continue
            term = np.ones(x.size) / (nodes[i] - nodes[k])
            for j in range(n):
                if j in (i, k):
                    continue
                term *= (x - nodes[j]) / (nodes[i] - nodes[j])
            ders[:, i] += term
    return vals, ders


@dataclass(frozen=True)
class ElementBasis:
    """A finite-element basis on the reference hexahedron.

    kind: one of "Q1", "Q2" (continuous Lagrange) or "P0disc", "P1disc"
    (discontinuous, cell-local). n_dofs is 8/27/1/4 respectively.
    """

    kind: str
    degree: int
    n_dofs: int

    def eval(self, ref_points: np.ndarray):
        """Shape values and reference gradients at the given points.

        Returns (values, grads) with shapes (n_pts, n_dofs) and
        (n_pts, n_dofs, 3).
        """
        return shape_eval(self, ref_points)

    @property
    def node_coords(self) -> np.ndarray:
        """Reference coordinates of the Lagrange nodes (lexicographic)."""
        if self.kind not in ("Q1", "Q2"):
            raise ValueError(f"{self.kind} has no Lagrange nodes")
        n1 = _NODES_1D[self.degree]
        zz, yy, xx = np.meshgrid(n1, n1, n1, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])


def basis(kind: str) -> ElementBasis:
    """Construct one of the supported bases by name."""
    table = {
        "Q1": ElementBasis("Q1", 1, 8),
        "Q2": ElementBasis("Q2", 2, 27),
        "P0disc": ElementBasis("P0disc", 0, 1),
        "P1disc": ElementBasis("P1disc", 1, 4),
    }
    try:
        return table[kind]
    except KeyError:
        raise ValueError(f"unknown element basis {kind!r}") from None


def shape_eval(b: ElementBasis, ref_points: np.ndarray):
    """Tabulate phi_i and grad_xi phi_i at reference points.

    ref_points: (n_pts, 3) array in [-1, 1]^3. Returns
    (values (n_pts, n_dofs), grads (n_pts, n_dofs, 3)).
    """
    pts = np.atleast_2d(np.asarray(ref_points, dtype=float))
    npts = pts.shape[0]

    if b.kind in ("Q1", "Q2"):
        vx, dx = _lagrange_1d(b.degree, pts[:, 0])
        vy, dy = _lagrange_1d(b.degree, pts[:, 1])
        vz, dz = _lagrange_1d(b.degree, pts[:, 2])
        n1 = b.degree + 1
        vals = np.empty((npts, b.n_dofs))
        grads = np.empty((npts, b.n_dofs, 3))
        for c in range(n1):
            for bb in range(n1):
                for a in range(n1):
                    i = a + n1 * (bb + n1 * c)
                    vals[:, i] = vx[:, a] * vy[:, bb] * vz[:, c]
                    grads[:, i, 0] = dx[:, a] * vy[:, bb] * vz[:, c]
                    grads[:, i, 1] = vx[:, a] * dy[:, bb] * vz[:, c]
                    grads[:, i, 2] = vx[:, a] * vy[:, bb] * dz[:, c]
        return vals, grads

    if b.kind == "P0disc":
        return np.ones((npts, 1)), np.zeros((npts, 1, 3))

    if b.kind == "P1disc":
        vals = np.empty((npts, 4))
        vals[:, 0] = 1.0
        vals[:, 1:] = pts
        grads = np.zeros((npts, 4, 3))
        grads[:, 1, 0] = 1.0
        grads[:, 2, 1] = 1.0
        grads[:, 3, 2] = 1.0
        return vals, grads

    raise ValueError(f"unknown basis kind {b.kind!r}")


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor-product quadrature on [-1, 1]^3; weights sum to 8."""

    points: np.ndarray  # (n_qp, 3)
    weights: np.ndarray  # (n_qp,)

    @property
    def n_points(self) -> int:
        return len(self.weights)


def gauss_rule(order: int) -> QuadratureRule:
    """Tensor Gauss-Legendre rule with `order` points per axis (1..5)."""
    if not 1 <= order <= 5:
        raise ValueError("quadrature order must be in 1..5")
    x, w = np.polynomial.legendre.leggauss(order)
    zz, yy, xx = np.meshgrid(x, x, x, indexing="ij")
    wz, wy, wx = np.meshgrid(w, w, w, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])
    wts = (wx * wy * wz).ravel()
    return QuadratureRule(pts, wts)


def isoparametric_map(cell_nodes: np.ndarray, b: ElementBasis, ref_point):
    """Map a reference point into one physical cell.

    Returns (x0, J_ref, detJ_ref, grad0) where J_ref[i, j] = dx_i/dxi_j,
    and grad0 are the physical (reference-configuration) shape gradients
    grad0 phi = J_ref^{-T} grad_xi phi, shape (n_dofs, 3).
    """
    cell_nodes = np.asarray(cell_nodes, dtype=float)
    vals, grads = shape_eval(b, np.atleast_2d(ref_point))
    vals, grads = vals[0], grads[0]
    x0 = vals @ cell_nodes
    jac = np.einsum("ai,aj->ij", cell_nodes, grads)
    det = float(np.linalg.det(jac))
    if det <= 0.0:
        raise InvertedCell(f"reference map determinant {det} <= 0")
    grad0 = grads @ np.linalg.inv(jac)
    return x0, jac, det, grad0


def map_gradients(cell_nodes_batch: np.ndarray, b: ElementBasis, rule: QuadratureRule):
    """Vectorized isoparametric geometry for a batch of cells.

    cell_nodes_batch: (n_cells, n_dofs, 3). Returns (grad0, dvol) with
    shapes (n_cells, n_qp, n_dofs, 3) and (n_cells, n_qp), where dvol is
    the quadrature weight times detJ_ref. Raises InvertedCell if any
    determinant is non-positive.
    """
    _, grads = shape_eval(b, rule.points)  # (q, a, 3)
    # J_ref[c, q, i, j] = sum_a X[c, a, i] dN[q, a, j]
    jac = np.einsum("cai,qaj->cqij", cell_nodes_batch, grads)
    det = np.linalg.det(jac)
    if np.any(det <= 0.0):
        bad = int(np.argwhere(det <= 0.0)[0][0])
        raise InvertedCell(f"cell {bad} has non-positive map determinant", cell=bad)
    inv = np.linalg.inv(jac)
    # grad0[c, q, a, i] = sum_j dN[q, a, j] * inv[c, q, j, i]
    grad0 = np.einsum("qaj,cqji->cqai", grads, inv)
    dvol = rule.weights[None, :] * det
    return grad0, dvol
