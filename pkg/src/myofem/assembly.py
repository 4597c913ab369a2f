"""Total-Lagrangian assembly of the three-field weak form.

Unknown fields: displacement u (continuous Q1/Q2 nodes, 3 dofs each),
pressure p and dilation D (discontinuous P0/P1 monomials per cell).
For a time step of size dt the residual equations are

  r_u : dt^-2 <rho0 (u - u_prev), du> - dt^-1 <rho0 v_prev, du>
        + <tau, grad_x du> - <f0, du>          (inertia off in quasi-static)
  r_p : <J(u) - D, dp>
  r_D : <psi_vol'(D) - p, dD>

integrated over the reference configuration, with tau the Kirchhoff
stress and grad_x the spatial gradient grad_0 F^-1. Written this way the
consistent tangent is symmetric in both modes (the equations differ from
a mass-unscaled form only by one global factor dt^2, which leaves the
Newton iterates unchanged). The fibre strain rate entering tau is built
once per step from the lagged velocity and frozen across Newton
iterations, so it contributes no tangent term.

Assembly is vectorized over cells in fixed-size chunks; each chunk
produces dense element blocks that are scattered into COO triplets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .constitutive import (TissueParams, stress_tangent_batch,
                           volumetric_response)
from .elements import basis, gauss_rule, map_gradients, shape_eval
from .errors import GridMismatch, NonPositiveDilation, ValidationError
from .kinematics import DeformationBatch, deformation_batch, strain_rate_batch
from .mesh import Mesh

_CHUNK = 64

ELEMENT_FAMILIES = {"q2-p1": (2, "P1disc", 3), "q1-p0": (1, "P0disc", 2)}


@dataclass(frozen=True)
class DirichletBC:
    """One constrained node-set component with a value program.

    ``value`` is a constant or a callable of time returning the
    prescribed displacement component (m).
    """

    node_set: str
    component: int
    value: float | Callable[[float], float] = 0.0

    def value_at(self, t: float) -> float:
        return self.value(t) if callable(self.value) else float(self.value)


class DofMap:
    """Global dof layout [u | p | D] plus the constrained-dof table."""

    def __init__(self, mesh: Mesh, element: str = "q2-p1",
                 bcs: list[DirichletBC] | None = None):
        if element not in ELEMENT_FAMILIES:
            raise ValidationError(f"unknown element family {element!r}; "
                                  f"choose from {sorted(ELEMENT_FAMILIES)}")
        degree, p_kind, quad_order = ELEMENT_FAMILIES[element]
        if mesh.degree != degree:
            raise GridMismatch(
                f"element family {element!r} needs a degree-{degree} mesh, "
                f"got degree {mesh.degree}")
        self.mesh = mesh
        self.element = element
        self.u_basis = basis(f"Q{degree}")
        self.p_basis = basis(p_kind)
        self.quad_order = quad_order
        self.n_nodes = len(mesh.nodes)
        self.n_cells = len(mesh.cells)
        self.n_p = self.p_basis.n_dofs
        self.n_u = 3 * self.n_nodes
        self.p_offset = self.n_u
        self.d_offset = self.n_u + self.n_cells * self.n_p
        self.n_dofs = self.n_u + 2 * self.n_cells * self.n_p

        self.bcs = list(bcs or [])
        dof_to_bc: dict[int, DirichletBC] = {}
        for bc in self.bcs:
            if bc.node_set not in mesh.node_sets:
                raise ValidationError(f"unknown node set {bc.node_set!r}")
            if bc.component not in (0, 1, 2):
                raise ValidationError(f"bad component {bc.component}")
            for node in mesh.node_sets[bc.node_set]:
                dof_to_bc[3 * int(node) + bc.component] = bc
        self.constrained_dofs = np.array(sorted(dof_to_bc), dtype=int)
        self._constrained_bcs = [dof_to_bc[d] for d in self.constrained_dofs]
        free = np.ones(self.n_dofs, dtype=bool)
        free[self.constrained_dofs] = False
        self.free_dofs = np.flatnonzero(free)

    def u_dofs_of_cells(self) -> np.ndarray:
        """(n_cells, 3*n_local) global u-dof indices, interleaved xyz."""
        conn = self.mesh.cells
        return (3 * conn[:, :, None] + np.arange(3)).reshape(len(conn), -1)

    def p_dofs_of_cells(self) -> np.ndarray:
        return self.p_offset + (self.n_p * np.arange(self.n_cells)[:, None]
                                + np.arange(self.n_p))

    def d_dofs_of_cells(self) -> np.ndarray:
        return self.d_offset + (self.n_p * np.arange(self.n_cells)[:, None]
                                + np.arange(self.n_p))


def apply_constraints(dofmap: DofMap, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Prescribed displacement dof values at time t.

    Setting these on the state before each step realizes the standard
    increment rule: the full jump at the first Newton iteration, zero
    increments afterwards.
    """
    values = np.array([bc.value_at(t) for bc in dofmap._constrained_bcs])
    return dofmap.constrained_dofs.copy(), values


@dataclass
class SystemState:
    """Solution fields at one time level."""

    u: np.ndarray
    p: np.ndarray
    D: np.ndarray
    v: np.ndarray
    t: float = 0.0
    epsbar: np.ndarray | None = None  # per-quadrature fibre strain rate cache

    @classmethod
    def zeros(cls, dofmap: DofMap) -> "SystemState":
        D = np.zeros((dofmap.n_cells, dofmap.n_p))
        D[:, 0] = 1.0
        return cls(u=np.zeros(dofmap.n_u), p=np.zeros(dofmap.n_cells * dofmap.n_p),
                   D=D.ravel(), v=np.zeros(dofmap.n_u), t=0.0)

    def copy(self) -> "SystemState":
        return SystemState(u=self.u.copy(), p=self.p.copy(), D=self.D.copy(),
                           v=self.v.copy(), t=self.t,
                           epsbar=None if self.epsbar is None else self.epsbar.copy())

    def pack(self) -> np.ndarray:
        return np.concatenate([self.u, self.p, self.D])

    def add_packed(self, delta: np.ndarray, dofmap: DofMap) -> "SystemState":
        out = self.copy()
        out.u = out.u + delta[:dofmap.p_offset]
        out.p = out.p + delta[dofmap.p_offset:dofmap.d_offset]
        out.D = out.D + delta[dofmap.d_offset:]
        return out


class Discretization:
    """Precomputed geometry, bases, materials, and fibres for assembly."""

    def __init__(self, mesh: Mesh, materials: dict[str, TissueParams],
                 element: str = "q2-p1", bcs: list[DirichletBC] | None = None,
                 body_force: np.ndarray | None = None,
                 fibre_on: bool = True):
        self.dofmap = DofMap(mesh, element, bcs)
        self.mesh = mesh
        self.rule = gauss_rule(self.dofmap.quad_order)
        self.n_q = len(self.rule.weights)
        self.phi, _ = shape_eval(self.dofmap.u_basis, self.rule.points)
        self.psi, _ = shape_eval(self.dofmap.p_basis, self.rule.points)
        self.grad0, self.dvol = map_gradients(mesh.nodes[mesh.cells],
                                              self.dofmap.u_basis, self.rule)
        self.body_force = None if body_force is None else np.asarray(body_force,
                                                                     dtype=float)
        self.fibre_on = fibre_on

        regions = sorted(set(mesh.region_tag))
        missing = [r for r in regions if r not in materials]
        if missing:
            raise ValidationError(f"no material parameters for region(s) {missing}")
        self.materials = {r: materials[r] for r in regions}
        self.groups = [(materials[r],
                        np.array([c for c, tag in enumerate(mesh.region_tag)
                                  if tag == r], dtype=int))
                       for r in regions]
        self.rho0_cell = np.array([materials[t].rho0 for t in mesh.region_tag])

        if fibre_on:
            if mesh.fibres is None:
                raise ValidationError("mesh carries no fibre field")
            self.fibre_q = mesh.fibres.resolve(mesh, self.n_q)
        else:
            self.fibre_q = np.zeros((self.dofmap.n_cells, self.n_q, 3))
            self.fibre_q[:, :, 0] = 1.0

        # characteristic scales for the nondimensional residual norm
        self.volume = float(self.dvol.sum())
        self.area_ref = self.volume ** (2.0 / 3.0)
        self.sigma0_ref = max(p.sigma0 for p in self.materials.values())

    # -- pointwise field evaluation -----------------------------------------

    def u_cellwise(self, u: np.ndarray) -> np.ndarray:
        """Nodal displacements per cell, (m, n_local, 3)."""
        return u.reshape(-1, 3)[self.mesh.cells]

    def grad0_field(self, u: np.ndarray) -> np.ndarray:
        """Reference gradient of a nodal field at all (cell, point)."""
        return np.einsum("cqaj,cai->cqij", self.grad0, self.u_cellwise(u))

    def scalar_at_points(self, coeffs: np.ndarray) -> np.ndarray:
        """Evaluate a per-cell monomial field at the quadrature points."""
        return coeffs.reshape(self.dofmap.n_cells, self.dofmap.n_p) @ self.psi.T

    def refresh_rate_cache(self, prev: SystemState) -> np.ndarray:
        """Fibre strain rate per (cell, point) from the lagged velocity.

        Uses the deformation at the previous converged step, so the cache
        is fixed data for every Newton iteration of the current step.
        """
        if prev is None or not self.fibre_on or not np.any(prev.v):
            return np.zeros((self.dofmap.n_cells, self.n_q))
        db = deformation_batch(self.grad0_field(prev.u), self.fibre_q)
        return strain_rate_batch(self.grad0_field(prev.v), db.Finv,
                                 db.abar, db.lambdabar)

    def deformation(self, state: SystemState):
        return deformation_batch(self.grad0_field(state.u), self.fibre_q)


def _activation_per_cell(disc: Discretization, activation) -> np.ndarray:
    a = np.asarray(activation, dtype=float)
    if a.ndim == 0:
        a = np.full(disc.dofmap.n_cells, float(a))
    if a.shape != (disc.dofmap.n_cells,):
        raise ValidationError(f"activation field must be scalar or per-cell "
                              f"({disc.dofmap.n_cells},), got {a.shape}")
    if np.any((a < 0.0) | (a > 1.0)):
        raise ValidationError("activation values must lie in [0,1]")
    return a


def _stress_fields(disc: Discretization, state: SystemState, mode: str,
                   activation, want_tangent: bool):
    """Per-point stress (and tangent) arrays grouped over regions."""
    db = disc.deformation(state)
    p_q = disc.scalar_at_points(state.p)
    D_q = disc.scalar_at_points(state.D)
    if np.any(D_q <= 0.0):
        cell = int(np.argwhere((D_q <= 0.0).any(axis=1))[0][0])
        raise NonPositiveDilation(f"dilation <= 0 in cell {cell}", cell=cell)
    eps = state.epsbar if state.epsbar is not None else \
        np.zeros((disc.dofmap.n_cells, disc.n_q))
    act = _activation_per_cell(disc, activation)

    m, q = disc.dofmap.n_cells, disc.n_q
    tau = np.zeros((m, q, 3, 3))
    ctang = np.zeros((m, q, 6, 6)) if want_tangent else None
    for params, cells in disc.groups:
        sub = _slice_batch(db, cells)
        t_, _, c_ = stress_tangent_batch(
            sub, eps[cells], p_q[cells], act[cells, None], params,
            fibre_on=disc.fibre_on, quasi_static=(mode == "quasistatic"),
            want_tangent=want_tangent)
        tau[cells] = t_
        if want_tangent:
            ctang[cells] = c_
    return db, p_q, D_q, tau, ctang


def _slice_batch(db, cells):
    return DeformationBatch(F=db.F[cells], J=db.J[cells], Finv=db.Finv[cells],
                            Fbar=db.Fbar[cells], Bbar=db.Bbar[cells],
                            I1bar=db.I1bar[cells], a0=db.a0[cells],
                            abar=db.abar[cells], lambdabar=db.lambdabar[cells],
                            I4bar=db.I4bar[cells])


def _vol_terms(disc: Discretization, D_q: np.ndarray):
    kappa = np.array([disc.materials[t].kappa for t in disc.mesh.region_tag])
    _, p_of_D, dp_dD = volumetric_response(D_q, kappa[:, None])
    return p_of_D, dp_dD


def assemble_residual(disc: Discretization, state: SystemState,
                      prev: SystemState | None, dt: float, mode: str,
                      activation=0.0, full: bool = False) -> np.ndarray:
    """Weak-form residual; free dofs only unless ``full`` is set.

    ``prev`` supplies the lagged displacement/velocity for the inertial
    terms (dynamic mode) and may be None in quasi-static mode.
    """
    if mode not in ("dynamic", "quasistatic"):
        raise ValidationError(f"mode must be dynamic or quasistatic, got {mode!r}")
    if mode == "dynamic" and not dt > 0.0:
        raise ValidationError("dynamic mode needs dt > 0")
    db, p_q, D_q, tau, _ = _stress_fields(disc, state, mode, activation,
                                          want_tangent=False)
    dvol = disc.dvol
    gradx = np.einsum("cqaj,cqji->cqai", disc.grad0, db.Finv)

    r = np.zeros(disc.dofmap.n_dofs)
    # internal stress work: tau_ik gradx[a,k]
    r_u = np.einsum("cq,cqik,cqak->cai", dvol, tau, gradx)
    if mode == "dynamic":
        uh = np.einsum("qa,cai->cqi", disc.phi, disc.u_cellwise(state.u - prev.u))
        vh = np.einsum("qa,cai->cqi", disc.phi, disc.u_cellwise(prev.v))
        rho = disc.rho0_cell[:, None, None]
        r_u += np.einsum("cq,cqi,qa->cai", dvol,
                         rho * (uh / dt ** 2 - vh / dt), disc.phi)
    if disc.body_force is not None:
        r_u -= np.einsum("cq,i,qa->cai", dvol, disc.body_force, disc.phi)
    np.add.at(r, (3 * disc.mesh.cells[:, :, None] + np.arange(3)).ravel(),
              r_u.ravel())

    p_of_D, _ = _vol_terms(disc, D_q)
    r_p = np.einsum("cq,cq,qm->cm", dvol, db.J - D_q, disc.psi)
    r_d = np.einsum("cq,cq,qm->cm", dvol, p_of_D - p_q, disc.psi)
    r[disc.dofmap.p_offset:disc.dofmap.d_offset] = r_p.ravel()
    r[disc.dofmap.d_offset:] = r_d.ravel()
    return r if full else r[disc.dofmap.free_dofs]


def _element_matrices(disc: Discretization, db, D_q, tau, ctang,
                      dt: float, mode: str):
    """Dense element blocks for all cells, chunked; yields COO triplets."""
    dm = disc.dofmap
    m, q, nl, npp = dm.n_cells, disc.n_q, dm.u_basis.n_dofs, dm.n_p
    _, dp_dD = _vol_terms(disc, D_q)

    u_dofs = dm.u_dofs_of_cells()
    p_dofs = dm.p_dofs_of_cells()
    d_dofs = dm.d_dofs_of_cells()

    rows, cols, vals = [], [], []

    def scatter(block, rdofs, cdofs):
        r = np.repeat(rdofs, cdofs.shape[1], axis=1).reshape(block.shape)
        c = np.tile(cdofs, (1, rdofs.shape[1])).reshape(block.shape)
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(block.ravel())

    for lo in range(0, m, _CHUNK):
        sel = slice(lo, min(lo + _CHUNK, m))
        nc = sel.stop - sel.start
        w = disc.dvol[sel]
        gradx = np.einsum("cqaj,cqji->cqai", disc.grad0[sel], db.Finv[sel])

        # Voigt strain-displacement operator B (c,q,6,3*nl)
        B = np.zeros((nc, q, 6, 3 * nl))
        g = gradx
        B[:, :, 0, 0::3] = g[..., 0]
        B[:, :, 1, 1::3] = g[..., 1]
        B[:, :, 2, 2::3] = g[..., 2]
        B[:, :, 3, 0::3] = g[..., 1]
        B[:, :, 3, 1::3] = g[..., 0]
        B[:, :, 4, 0::3] = g[..., 2]
        B[:, :, 4, 2::3] = g[..., 0]
        B[:, :, 5, 1::3] = g[..., 2]
        B[:, :, 5, 2::3] = g[..., 1]

        kuu = np.einsum("cq,cqia,cqij,cqjb->cab", w, B, ctang[sel], B,
                        optimize=True)
        geo = np.einsum("cq,cqak,cqkl,cqbl->cab", w, gradx, tau[sel], gradx,
                        optimize=True)
        kuu += np.einsum("cab,ij->caibj", geo, np.eye(3)).reshape(
            nc, 3 * nl, 3 * nl)
        if mode == "dynamic":
            mass = np.einsum("cq,qa,qb->cab", w * disc.rho0_cell[sel, None],
                             disc.phi, disc.phi) / dt ** 2
            kuu += np.einsum("cab,ij->caibj", mass, np.eye(3)).reshape(
                nc, 3 * nl, 3 * nl)
        scatter(kuu, u_dofs[sel], u_dofs[sel])

        # coupling: d tau / dp = J I  ->  K_up[(a,i),m] = int J psi_m gradx[a,i]
        kup = np.einsum("cq,cq,cqai,qm->caim", w, db.J[sel], gradx, disc.psi
                        ).reshape(nc, 3 * nl, npp)
        scatter(kup, u_dofs[sel], p_dofs[sel])
        scatter(np.swapaxes(kup, 1, 2), p_dofs[sel], u_dofs[sel])

        mpsi = np.einsum("cq,qm,qn->cmn", w, disc.psi, disc.psi)
        scatter(-mpsi, p_dofs[sel], d_dofs[sel])
        scatter(-mpsi, d_dofs[sel], p_dofs[sel])
        kdd = np.einsum("cq,cq,qm,qn->cmn", w, dp_dD[sel], disc.psi, disc.psi)
        scatter(kdd, d_dofs[sel], d_dofs[sel])

    return (np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))


def assemble_tangent(disc: Discretization, state: SystemState,
                     prev: SystemState | None, dt: float, mode: str,
                     activation=0.0, full: bool = False) -> sp.csc_matrix:
    """Consistent tangent as a sparse symmetric matrix over free dofs."""
    db, p_q, D_q, tau, ctang = _stress_fields(disc, state, mode, activation,
                                              want_tangent=True)
    rows, cols, vals = _element_matrices(disc, db, D_q, tau, ctang, dt, mode)
    n = disc.dofmap.n_dofs
    A = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsc()
    if full:
        return A
    f = disc.dofmap.free_dofs
    return A[np.ix_(f, f)].tocsc()


def residual_scales(disc: Discretization) -> np.ndarray:
    """Per-dof nondimensionalization for the convergence norm.

    Displacement equations carry units of force and are scaled by
    sigma0 * V^(2/3); the p equation integrates a dimensionless mismatch
    over volume (scale V); the D equation integrates a stress mismatch
    (scale sigma0 * V).
    """
    dm = disc.dofmap
    s = np.empty(dm.n_dofs)
    s[:dm.p_offset] = disc.sigma0_ref * disc.area_ref
    s[dm.p_offset:dm.d_offset] = disc.volume
    s[dm.d_offset:] = disc.sigma0_ref * disc.volume
    return s
