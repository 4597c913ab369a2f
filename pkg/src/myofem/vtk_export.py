"""Legacy-format unstructured-grid field export for visualization.

Writes the mesh with point fields (displacement vector, magnitude, and
components) and cell fields (volume ratio J, pressure, activation, fibre
direction) as ASCII, readable by standard viewers. Quadratic cells are
written as eight linear sub-hexahedra so the mid-edge resolution is
visible without quadratic cell types; cell fields replicate onto the
sub-cells. Output is deterministic: identical inputs give identical
bytes.
"""

from __future__ import annotations

import numpy as np

from .elements import basis, gauss_rule, map_gradients, shape_eval
from .errors import ValidationError
from .kinematics import deformation_batch
from .mesh import Mesh

_FMT = "%.17g"

# lexicographic (x fastest) corner order -> hexahedron corner order
# (bottom face counterclockwise, then top face)
_LEX_TO_HEX = (0, 1, 3, 2, 4, 5, 7, 6)

# sub-cell corner offsets of one octant of a 3x3x3 quadratic-cell lattice,
# in lexicographic order
_OCTANTS = [
    [(a + da) + 3 * (b + db) + 9 * (c + dc)
     for dc in (0, 1) for db in (0, 1) for da in (0, 1)]
    for c in (0, 1) for b in (0, 1) for a in (0, 1)
]


def _linear_cells(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """(hex corner connectivity, parent cell index) for the written cells."""
    if mesh.degree == 1:
        conn = mesh.cells[:, list(_LEX_TO_HEX)]
        return conn, np.arange(len(mesh.cells))
    conn = []
    parent = []
    for c, cell in enumerate(mesh.cells):
        for octant in _OCTANTS:
            lex = cell[octant]
            conn.append(lex[list(_LEX_TO_HEX)])
            parent.append(c)
    return np.array(conn, dtype=int), np.array(parent, dtype=int)


def _cell_averages(mesh: Mesh, state) -> tuple[np.ndarray, np.ndarray]:
    """Volume-averaged J and pressure per cell (rest values without state)."""
    m = len(mesh.cells)
    if state is None:
        return np.ones(m), np.zeros(m)
    b = basis(f"Q{mesh.degree}")
    rule = gauss_rule(mesh.degree + 1)
    grads, dvol = map_gradients(mesh.nodes[mesh.cells], b, rule)
    u_cells = state.u.reshape(-1, 3)[mesh.cells]
    grad_u = np.einsum("cni,cqnj->cqij", u_cells, grads)
    db = deformation_batch(grad_u)
    wsum = dvol.sum(axis=1)
    j_avg = (db.J * dvol).sum(axis=1) / wsum
    n_p = state.p.size // m
    pb = basis("P1disc" if n_p == 4 else "P0disc")
    phi = shape_eval(pb, rule.points)[0]
    p_q = state.p.reshape(m, n_p) @ phi.T
    p_avg = (p_q * dvol).sum(axis=1) / wsum
    return j_avg, p_avg


def _per_cell_activation(activation, m: int) -> np.ndarray:
    if activation is None:
        return np.zeros(m)
    a = np.atleast_1d(np.asarray(activation, dtype=float))
    if a.size == 1:
        return np.full(m, a[0])
    if a.size != m:
        raise ValidationError(
            f"activation has {a.size} entries for {m} cells")
    return a


def _fibre_per_cell(mesh: Mesh) -> np.ndarray:
    if mesh.fibres is None:
        return np.zeros((len(mesh.cells), 3))
    return mesh.fibres.resolve(mesh, 1)[:, 0, :]


def _rows(fh, data: np.ndarray) -> None:
    for row in np.atleast_2d(data):
        fh.write(" ".join(_FMT % v for v in row) + "\n")


def export_vtk(path, mesh: Mesh, state=None, activation=None,
               title: str = "myofem fields") -> None:
    """Write mesh + fields; ``state`` None exports the rest configuration."""
    mesh.validate()
    if state is not None and state.u.size != 3 * len(mesh.nodes):
        raise ValidationError(
            f"state carries {state.u.size // 3} nodes, mesh has "
            f"{len(mesh.nodes)}")
    conn, parent = _linear_cells(mesh)
    u = (state.u if state is not None else
         np.zeros(3 * len(mesh.nodes))).reshape(-1, 3)
    j_avg, p_avg = _cell_averages(mesh, state)
    act = _per_cell_activation(activation, len(mesh.cells))
    fib = _fibre_per_cell(mesh)

    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(title.replace("\n", " ")[:255] + "\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(mesh.nodes)} double\n")
        _rows(fh, mesh.nodes)
        fh.write(f"CELLS {len(conn)} {len(conn) * 9}\n")
        for row in conn:
            fh.write("8 " + " ".join(str(i) for i in row) + "\n")
        fh.write(f"CELL_TYPES {len(conn)}\n")
        fh.write("12\n" * len(conn))

        fh.write(f"POINT_DATA {len(mesh.nodes)}\n")
        fh.write("VECTORS displacement double\n")
        _rows(fh, u)
        fields = [("displacement_magnitude", np.linalg.norm(u, axis=1)),
                  ("displacement_x", u[:, 0]), ("displacement_y", u[:, 1]),
                  ("displacement_z", u[:, 2])]
        for name, vals in fields:
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            _rows(fh, vals[:, None])

        fh.write(f"CELL_DATA {len(conn)}\n")
        for name, vals in (("jacobian", j_avg), ("pressure", p_avg),
                           ("activation", act)):
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            _rows(fh, vals[parent][:, None])
        fh.write("VECTORS fibre_direction double\n")
        _rows(fh, fib[parent])
