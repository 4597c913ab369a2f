"""Reference-configuration hexahedral meshes.

Structured generators for the two study geometries (a rectangular
muscle block and a sheared muscle-aponeurosis stack), a self-describing
text format for import/export, and fibre-direction fields attached per
region, per cell, or per quadrature point.

Cells store node indices in lexicographic local order (x fastest) so
they pair directly with the Q1/Q2 bases. Local faces are numbered
0..5 = (xi=-1, xi=+1, eta=-1, eta=+1, zeta=-1, zeta=+1), which for the
structured generators coincide with the global -x,+x,-y,+y,-z,+z
directions. All lengths are metres.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .elements import basis, gauss_rule, map_gradients
from .errors import GeometryInfeasible, ParseError, ValidationError

FACE_NAMES = ("-x", "+x", "-y", "+y", "-z", "+z")


def face_local_nodes(degree: int, face: int) -> np.ndarray:
    """Local node indices of one face of a Q1/Q2 hexahedron."""
    n1 = degree + 1
    idx = np.arange(n1 ** 3).reshape(n1, n1, n1)  # [c, b, a] with a fastest
    axis, side = face // 2, face % 2
    sel = [slice(None)] * 3
    sel[2 - axis] = 0 if side == 0 else n1 - 1
    return idx[tuple(sel)].ravel()


# ---------------------------------------------------------------------------
# geometry specifications

@dataclass(frozen=True)
class BlockGeometry:
    """Axis-aligned muscle block dimensions (m)."""

    L_mus: float = 52.0008e-3
    W_mus: float = 13.7500e-3
    H_mus: float = 5.5783e-3

    def validate(self) -> "BlockGeometry":
        if min(self.L_mus, self.W_mus, self.H_mus) <= 0.0:
            raise ValidationError("block dimensions must be positive")
        return self


@dataclass(frozen=True)
class GastrocGeometry:
    """Sheared muscle stack with aponeurosis sheets (m, rad).

    The muscle occupies a parallelogram prism of base span B, width
    W_mus, and height H = lambda0*sin(theta0), sheared so the end faces
    are parallel to the fibre direction (angle theta0 from x in the x-z
    plane). The belly line of length L_mus rises at theta0 - gamma0,
    giving the closure lambda0*sin(theta0) = L_mus*sin(theta0 - gamma0)
    and B = L_mus*cos(theta0 - gamma0) - lambda0*cos(theta0).
    Aponeurosis sheets of thickness T_apo sit under the -x end of the
    bottom face and over the +x end of the top face, covering L_apo
    (fraction f_apo of B when L_apo is unset).
    """

    L_apo: float | None = 52.0008e-3
    lambda0: float = 16.25e-3
    theta0: float = math.radians(20.0)
    L_mus: float = 67.5e-3
    T_apo: float = 0.75e-3
    W_mus: float = 13.7500e-3
    gamma0: float | None = None
    f_apo: float = 0.75
    n_apo_layers: int = 1

    def validate(self) -> "GastrocGeometry":
        for name in ("lambda0", "L_mus", "T_apo", "W_mus"):
            if getattr(self, name) <= 0.0:
                raise ValidationError(f"{name} must be positive")
        if not 0.0 < self.theta0 <= 0.5 * math.pi:
            raise ValidationError("theta0 must lie in (0, pi/2]")
        if not 0.0 < self.f_apo <= 1.0:
            raise ValidationError("f_apo must lie in (0, 1]")
        if self.n_apo_layers < 1:
            raise ValidationError("n_apo_layers must be >= 1")
        return self

    def solve_closure(self) -> tuple[float, float, float]:
        """Resolve (gamma0, H, B) from the pennation closure relation."""
        s = self.lambda0 * math.sin(self.theta0) / self.L_mus
        if not 0.0 < s < 1.0:
            raise GeometryInfeasible(
                f"closure sin(theta0-gamma0) = lambda0 sin(theta0)/L_mus = {s} "
                "outside (0,1)")
        gamma0 = self.theta0 - math.asin(s)
        if self.gamma0 is not None:
            resid = abs(self.lambda0 * math.sin(self.theta0)
                        - self.L_mus * math.sin(self.theta0 - self.gamma0))
            if resid > 1e-9 * self.lambda0:
                raise GeometryInfeasible(
                    f"given gamma0 violates the closure relation by {resid} m")
            gamma0 = self.gamma0
        H = self.lambda0 * math.sin(self.theta0)
        B = self.L_mus * math.cos(self.theta0 - gamma0) \
            - self.lambda0 * math.cos(self.theta0)
        if B <= 0.0:
            raise GeometryInfeasible(f"muscle base span B = {B} m not positive")
        return gamma0, H, B


@dataclass(frozen=True)
class GeometrySpec:
    """Parametric geometry request: exactly one of block/gastroc set."""

    block: BlockGeometry | None = None
    gastroc: GastrocGeometry | None = None
    divisions: tuple[int, int, int] = (4, 2, 2)

    def validate(self) -> "GeometrySpec":
        if (self.block is None) == (self.gastroc is None):
            raise ValidationError("exactly one of block/gastroc must be given")
        if len(self.divisions) != 3 or min(self.divisions) < 1:
            raise ValidationError(f"divisions must be three integers >= 1, "
                                  f"got {self.divisions}")
        if self.block is not None:
            self.block.validate()
        if self.gastroc is not None:
            self.gastroc.validate()
        return self


# ---------------------------------------------------------------------------
# fibre fields

@dataclass
class FibreField:
    """Unit fibre directions, resolved per region/cell/quadrature point.

    Precedence at resolution: point overrides cell overrides region.
    Point records are tied to the quadrature rule the run uses.
    """

    source: str = "constant-angle"
    region: dict[str, np.ndarray] = field(default_factory=dict)
    cell: dict[int, np.ndarray] = field(default_factory=dict)
    point: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)

    def validate(self, n_cells: int, auto_normalize: bool = False) -> "FibreField":
        for store in (self.region, self.cell, self.point):
            for key, vec in store.items():
                nrm = float(np.linalg.norm(vec))
                if abs(nrm - 1.0) > 1e-6:
                    if not auto_normalize or nrm == 0.0:
                        raise ValidationError(
                            f"fibre vector for {key!r} has norm {nrm}, not 1")
                    store[key] = vec / nrm
        for c in self.cell:
            if not 0 <= c < n_cells:
                raise ValidationError(f"fibre cell index {c} out of range")
        for c, _ in self.point:
            if not 0 <= c < n_cells:
                raise ValidationError(f"fibre point record cell {c} out of range")
        return self

    def resolve(self, mesh: "Mesh", n_qp: int) -> np.ndarray:
        """Per-cell, per-quadrature-point direction array (m, n_qp, 3)."""
        out = np.zeros((len(mesh.cells), n_qp, 3))
        seen = np.zeros(len(mesh.cells), dtype=bool)
        for c, region in enumerate(mesh.region_tag):
            if region in self.region:
                out[c] = self.region[region]
                seen[c] = True
        for c, vec in self.cell.items():
            out[c] = vec
            seen[c] = True
        for (c, q), vec in self.point.items():
            if q >= n_qp:
                raise ValidationError(
                    f"fibre point record (cell {c}, point {q}) exceeds the "
                    f"{n_qp}-point quadrature rule of this run")
            out[c, q] = vec
            seen[c] = True
        if not seen.all():
            missing = int(np.argwhere(~seen)[0][0])
            raise ValidationError(
                f"no fibre direction for cell {missing} "
                f"(region {mesh.region_tag[missing]!r})")
        return out


# ---------------------------------------------------------------------------
# the mesh container

@dataclass
class Mesh:
    """Hexahedral mesh with region tags, face sets, and node sets."""

    nodes: np.ndarray
    cells: np.ndarray
    region_tag: list[str]
    face_sets: dict[str, np.ndarray]
    node_sets: dict[str, np.ndarray]
    fibres: FibreField | None = None

    @property
    def degree(self) -> int:
        return 1 if self.cells.shape[1] == 8 else 2

    def validate(self) -> "Mesh":
        n, m = len(self.nodes), len(self.cells)
        if self.cells.shape[1] not in (8, 27):
            raise ValidationError(f"cells must have 8 or 27 nodes, "
                                  f"got {self.cells.shape[1]}")
        if self.cells.min(initial=0) < 0 or self.cells.max(initial=-1) >= n:
            raise ValidationError("cell connectivity references invalid nodes")
        if len(self.region_tag) != m:
            raise ValidationError("region_tag length does not match cell count")
        for name, pairs in self.face_sets.items():
            if pairs.size and (pairs[:, 0].min() < 0 or pairs[:, 0].max() >= m
                               or pairs[:, 1].min() < 0 or pairs[:, 1].max() > 5):
                raise ValidationError(f"face set {name!r} references invalid faces")
        for name, ids in self.node_sets.items():
            if ids.size and (ids.min() < 0 or ids.max() >= n):
                raise ValidationError(f"node set {name!r} references invalid nodes")
        b = basis(f"Q{self.degree}")
        rule = gauss_rule(self.degree + 1)
        try:
            map_gradients(self.nodes[self.cells], b, rule)
        except Exception as exc:  # InvertedCell carries the cell index
            cell = getattr(exc, "cell", None)
            raise ValidationError(f"non-positive Jacobian in cell {cell}") from exc
        if self.fibres is not None:
            self.fibres.validate(m)
        return self

    def volume(self) -> float:
        b = basis(f"Q{self.degree}")
        rule = gauss_rule(self.degree + 1)
        _, dvol = map_gradients(self.nodes[self.cells], b, rule)
        return float(dvol.sum())

    def face_nodes(self, name: str) -> np.ndarray:
        """Sorted unique node indices touched by a face set."""
        pairs = self.face_sets[name]
        out = [self.cells[c][face_local_nodes(self.degree, f)] for c, f in pairs]
        return np.unique(np.concatenate(out)) if out else np.empty(0, dtype=int)


# ---------------------------------------------------------------------------
# structured generation

def _lattice_mesh(xb: np.ndarray, yb: np.ndarray, zb: np.ndarray, degree: int,
                  keep_cell, region_of, shear: float = 0.0):
    """Tensor-lattice hexahedra over break points, with per-cell predicate.

    keep_cell(i,j,k) selects which lattice cells exist; region_of(i,j,k)
    tags them. ``shear`` tilts the stack via x += z*shear. Unused lattice
    nodes are compacted away.
    """
    nx, ny, nz = len(xb) - 1, len(yb) - 1, len(zb) - 1
    d = degree

    def refine(breaks: np.ndarray) -> np.ndarray:
        out = [breaks[0]]
        for a, b in zip(breaks[:-1], breaks[1:]):
            for s in range(1, d + 1):
                out.append(a + (b - a) * s / d)
        return np.array(out)

    xr, yr, zr = refine(xb), refine(yb), refine(zb)
    NX, NY = len(xr), len(yr)

    def gid(i: int, j: int, k: int) -> int:
        return i + NX * (j + NY * k)

    cells, regions = [], []
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                if not keep_cell(i, j, k):
                    continue
                conn = [gid(d * i + a, d * j + b, d * k + c)
                        for c in range(d + 1) for b in range(d + 1)
                        for a in range(d + 1)]
                cells.append(conn)
                regions.append(region_of(i, j, k))
    cells = np.array(cells, dtype=int)
    used = np.unique(cells)
    remap = -np.ones(NX * NY * len(zr), dtype=int)
    remap[used] = np.arange(len(used))
    ii = used % NX
    jj = (used // NX) % NY
    kk = used // (NX * NY)
    nodes = np.column_stack([xr[ii] + shear * zr[kk], yr[jj], zr[kk]])
    return nodes, remap[cells], regions


def _structured_sets(nx, ny, nz, keep):
    """Boundary face sets named by global direction, for lattice meshes."""
    face_sets = {name: [] for name in FACE_NAMES}
    cell_index = {}
    c = 0
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                if keep(i, j, k):
                    cell_index[(i, j, k)] = c
                    c += 1
    for (i, j, k), c in cell_index.items():
        if (i - 1, j, k) not in cell_index:
            face_sets["-x"].append((c, 0))
        if (i + 1, j, k) not in cell_index:
            face_sets["+x"].append((c, 1))
        if (i, j - 1, k) not in cell_index:
            face_sets["-y"].append((c, 2))
        if (i, j + 1, k) not in cell_index:
            face_sets["+y"].append((c, 3))
        if (i, j, k - 1) not in cell_index:
            face_sets["-z"].append((c, 4))
        if (i, j, k + 1) not in cell_index:
            face_sets["+z"].append((c, 5))
    return {n: np.array(v, dtype=int).reshape(-1, 2) for n, v in face_sets.items()}, \
        cell_index


def _corner_sets(nodes: np.ndarray) -> dict[str, np.ndarray]:
    """Eight sets naming the extreme corners of the bounding box."""
    out = {}
    lo, hi = nodes.min(axis=0), nodes.max(axis=0)
    span = np.maximum(hi - lo, 1e-300)
    for mask in range(8):
        target = np.array([(hi if mask >> a & 1 else lo)[a] for a in range(3)])
        d = np.abs(nodes - target) / span
        idx = int(np.argmin(d.max(axis=1)))
        name = "corner-" + "".join("p" if mask >> a & 1 else "m" for a in range(3))
        out[name] = np.array([idx], dtype=int)
    return out


def _face_node_sets(mesh: Mesh) -> dict[str, np.ndarray]:
    return {name: mesh.face_nodes(name) for name in mesh.face_sets}


def generate_block(spec: GeometrySpec, divisions: tuple[int, int, int] | None = None,
                   degree: int = 1) -> Mesh:
    """Structured axis-aligned muscle block with the six boundary face sets."""
    spec.validate()
    if spec.block is None:
        raise ValidationError("spec does not describe a block geometry")
    nx, ny, nz = divisions if divisions is not None else spec.divisions
    if min(nx, ny, nz) < 1:
        raise ValidationError(f"divisions must be >= 1, got {(nx, ny, nz)}")
    g = spec.block
    xb = np.linspace(0.0, g.L_mus, nx + 1)
    yb = np.linspace(0.0, g.W_mus, ny + 1)
    zb = np.linspace(0.0, g.H_mus, nz + 1)
    keep = lambda i, j, k: True
    nodes, cells, regions = _lattice_mesh(xb, yb, zb, degree, keep,
                                          lambda i, j, k: "muscle")
    face_sets, _ = _structured_sets(nx, ny, nz, keep)
    fibres = FibreField(source="constant-angle",
                        region={"muscle": np.array([1.0, 0.0, 0.0])})
    mesh = Mesh(nodes=nodes, cells=cells, region_tag=regions,
                face_sets=face_sets, node_sets={}, fibres=fibres)
    mesh.node_sets = {**_face_node_sets(mesh), **_corner_sets(nodes)}
    return mesh.validate()


def generate_gastroc(spec: GeometrySpec,
                     divisions: tuple[int, int, int] | None = None,
                     degree: int = 1) -> Mesh:
    """Sheared muscle stack with aponeurosis sheets at both ends.

    The muscle block [0,B]x[0,W]x[0,H] and the aponeurosis layers
    (bottom, z in [-T_apo,0], covering the -x end; top, z in [H,H+T_apo],
    covering the +x end) are sheared together by x += z*cot(theta0), so
    the mesh conforms across the tissue interfaces and the end faces are
    parallel to the muscle fibre direction (cos t0, 0, sin t0).
    Aponeurosis coverage snaps to the x lattice. Extra face sets
    "-x-apo"/"+x-apo" name the free tendon-side end faces of the sheets.
    """
    spec.validate()
    if spec.gastroc is None:
        raise ValidationError("spec does not describe a gastroc geometry")
    nx, ny, nz = divisions if divisions is not None else spec.divisions
    if min(nx, ny, nz) < 1:
        raise ValidationError(f"divisions must be >= 1, got {(nx, ny, nz)}")
    g = spec.gastroc
    gamma0, H, B = g.solve_closure()
    L_apo = g.L_apo if g.L_apo is not None else g.f_apo * B
    # tabulated lengths are printed to ~6 digits, so allow L_apo to
    # overshoot the derived base span by rounding and clamp
    if not 0.0 < L_apo <= B * (1.0 + 1e-6):
        raise GeometryInfeasible(f"aponeurosis length {L_apo} outside (0, B={B}]")
    kx = min(nx, max(1, round(nx * min(L_apo, B) / B)))
    na = g.n_apo_layers
    shear = math.cos(g.theta0) / math.sin(g.theta0)

    xb = np.linspace(0.0, B, nx + 1)
    yb = np.linspace(0.0, g.W_mus, ny + 1)
    zb = np.concatenate([np.linspace(-g.T_apo, 0.0, na + 1)[:-1],
                         np.linspace(0.0, H, nz + 1),
                         np.linspace(H, H + g.T_apo, na + 1)[1:]])

    def keep(i, j, k):
        if k < na:  # bottom sheet: -x end
            return i < kx
        if k >= na + nz:  # top sheet: +x end
            return i >= nx - kx
        return True

    def region_of(i, j, k):
        return "muscle" if na <= k < na + nz else "aponeurosis"

    nodes, cells, regions = _lattice_mesh(xb, yb, zb, degree, keep, region_of,
                                          shear=shear)
    face_sets, cell_index = _structured_sets(nx, ny, nz + 2 * na, keep)
    face_sets["-x-apo"] = np.array(
        [(cell_index[(0, j, k)], 0) for k in range(na) for j in range(ny)],
        dtype=int).reshape(-1, 2)
    face_sets["+x-apo"] = np.array(
        [(cell_index[(nx - 1, j, k)], 1)
         for k in range(na + nz, 2 * na + nz) for j in range(ny)],
        dtype=int).reshape(-1, 2)
    t0 = g.theta0
    fibres = FibreField(source="constant-angle", region={
        "muscle": np.array([math.cos(t0), 0.0, math.sin(t0)]),
        "aponeurosis": np.array([1.0, 0.0, 0.0]),
    })
    mesh = Mesh(nodes=nodes, cells=cells, region_tag=regions,
                face_sets=face_sets, node_sets={}, fibres=fibres)
    mesh.node_sets = {**_face_node_sets(mesh), **_corner_sets(nodes)}
    return mesh.validate()


def gastroc_analytic_volume(g: GastrocGeometry, divisions: tuple[int, int, int],
                            ) -> float:
    """Exact volume of the generated stack (apo coverage lattice-snapped)."""
    _, H, B = g.solve_closure()
    L_apo = g.L_apo if g.L_apo is not None else g.f_apo * B
    nx = divisions[0]
    kx = min(nx, max(1, round(nx * min(L_apo, B) / B)))
    cover = B * kx / nx
    return B * g.W_mus * H + 2.0 * cover * g.W_mus * g.T_apo


# ---------------------------------------------------------------------------
# the native text format

_MAGIC = "MYOMESH 1"


def export_mesh(mesh: Mesh, path) -> None:
    """Write the mesh in the native text format (17 significant digits)."""
    lines = [_MAGIC]
    lines.append(f"NODES {len(mesh.nodes)}")
    for i, (x, y, z) in enumerate(mesh.nodes):
        lines.append(f"{i} {x:.17g} {y:.17g} {z:.17g}")
    lines.append(f"CELLS {len(mesh.cells)}")
    for i, conn in enumerate(mesh.cells):
        lines.append(f"{i} {mesh.region_tag[i]} " + " ".join(map(str, conn)))
    lines.append(f"FACESETS {len(mesh.face_sets)}")
    for name in sorted(mesh.face_sets):
        pairs = mesh.face_sets[name]
        lines.append(f"{name} {len(pairs)}")
        for c, f in pairs:
            lines.append(f"{c} {f}")
    fib = mesh.fibres
    if fib is not None:
        records = []
        for name in sorted(fib.region):
            v = fib.region[name]
            records.append(f"region {name} {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
        for c in sorted(fib.cell):
            v = fib.cell[c]
            records.append(f"cell {c} {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
        for c, q in sorted(fib.point):
            v = fib.point[(c, q)]
            records.append(f"point {c} {q} {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
        lines.append(f"FIBRES {len(records)}")
        lines.extend(records)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


class _Reader:
    """Line cursor that raises ParseError with position context."""

    def __init__(self, path):
        self.path = str(path)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                self.lines = fh.read().splitlines()
        except OSError as exc:
            raise ParseError(f"cannot read mesh file: {exc}", path=str(path)) from exc
        self.pos = 0

    def next(self) -> list[str]:
        while self.pos < len(self.lines):
            self.pos += 1
            tokens = self.lines[self.pos - 1].split()
            if tokens:
                return tokens
        raise ParseError("unexpected end of file", line=len(self.lines),
                         path=self.path)

    def fail(self, message: str):
        raise ParseError(message, line=self.pos, path=self.path)

    def intval(self, token: str) -> int:
        try:
            return int(token)
        except ValueError:
            self.fail(f"expected an integer, got {token!r}")

    def floatval(self, token: str) -> float:
        try:
            return float(token)
        except ValueError:
            self.fail(f"expected a number, got {token!r}")


def import_mesh(path, auto_normalize_fibres: bool = False) -> Mesh:
    """Read a mesh in the native text format and validate its invariants."""
    r = _Reader(path)
    if " ".join(r.next()) != _MAGIC:
        r.fail(f"bad magic, expected {_MAGIC!r}")

    tok = r.next()
    if tok[0] != "NODES" or len(tok) != 2:
        r.fail("expected 'NODES <count>'")
    n_nodes = r.intval(tok[1])
    nodes = np.zeros((n_nodes, 3))
    for _ in range(n_nodes):
        rec = r.next()
        if len(rec) != 4:
            r.fail("node records need 'index x y z'")
        i = r.intval(rec[0])
        if not 0 <= i < n_nodes:
            r.fail(f"node index {i} out of range")
        nodes[i] = [r.floatval(t) for t in rec[1:]]

    tok = r.next()
    if tok[0] != "CELLS" or len(tok) != 2:
        r.fail("expected 'CELLS <count>'")
    n_cells = r.intval(tok[1])
    conn_rows, regions = [None] * n_cells, [None] * n_cells
    width = None
    for _ in range(n_cells):
        rec = r.next()
        if len(rec) not in (2 + 8, 2 + 27):
            r.fail("cell records need 'index region n0..n7' or 'index region n0..n26'")
        i = r.intval(rec[0])
        if not 0 <= i < n_cells:
            r.fail(f"cell index {i} out of range")
        if width is None:
            width = len(rec) - 2
        elif len(rec) - 2 != width:
            r.fail("mixed cell arities are not supported")
        regions[i] = rec[1]
        conn_rows[i] = [r.intval(t) for t in rec[2:]]

    tok = r.next()
    if tok[0] != "FACESETS" or len(tok) != 2:
        r.fail("expected 'FACESETS <count>'")
    face_sets = {}
    for _ in range(r.intval(tok[1])):
        head = r.next()
        if len(head) != 2:
            r.fail("face set header needs 'name count'")
        name, count = head[0], r.intval(head[1])
        pairs = np.zeros((count, 2), dtype=int)
        for k in range(count):
            rec = r.next()
            if len(rec) != 2:
                r.fail("face set records need 'cell face'")
            pairs[k] = [r.intval(rec[0]), r.intval(rec[1])]
        face_sets[name] = pairs

    fibres = None
    if r.pos < len(r.lines) and any(l.split() for l in r.lines[r.pos:]):
        tok = r.next()
        if tok[0] != "FIBRES" or len(tok) != 2:
            r.fail("expected 'FIBRES <count>'")
        fibres = FibreField(source="per-point file")
        for _ in range(r.intval(tok[1])):
            rec = r.next()
            if rec[0] == "region" and len(rec) == 5:
                fibres.region[rec[1]] = np.array([r.floatval(t) for t in rec[2:]])
            elif rec[0] == "cell" and len(rec) == 5:
                fibres.cell[r.intval(rec[1])] = np.array(
                    [r.floatval(t) for t in rec[2:]])
            elif rec[0] == "point" and len(rec) == 6:
                fibres.point[(r.intval(rec[1]), r.intval(rec[2]))] = np.array(
                    [r.floatval(t) for t in rec[3:]])
            else:
                r.fail("fibre records are 'region name ax ay az', "
                       "'cell idx ax ay az', or 'point cell qp ax ay az'")

    mesh = Mesh(nodes=nodes, cells=np.array(conn_rows, dtype=int),
                region_tag=regions, face_sets=face_sets, node_sets={},
                fibres=fibres)
    if fibres is not None:
        fibres.validate(n_cells, auto_normalize=auto_normalize_fibres)
    mesh.validate()
    mesh.node_sets = {**_face_node_sets(mesh), **_corner_sets(nodes)}
    return mesh
