"""Newton iteration and the linear saddle-point solve.

The linearized systems are sparse, symmetric, and indefinite (pressure
and dilation act as per-cell Lagrange-multiplier-like fields), so the
default path is a sparse LU factorization with one step of iterative
refinement and an explicit residual check. A MINRES path with Jacobi
preconditioning is available for experimentation, and the discontinuous
p/D dofs can optionally be condensed out per cell before the solve.

Convergence is measured on the nondimensionalized residual (see
``assembly.residual_scales``) so displacement, pressure, and dilation
equations contribute comparably to one Euclidean norm.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (Discretization, SystemState, assemble_residual,
                       assemble_tangent, residual_scales)
from .errors import (LinearSolveFailure, NonConvergence, NonPositiveDilation,
                     NonPositiveJacobian, SingularMatrix)


@dataclass(frozen=True)
class NewtonConfig:
    """Iteration limits, tolerances, and linear-solver choice."""

    abs_tol: float = 1e-9
    rel_tol: float = 1e-8
    max_iters: int = 25
    ls_decrease: float = 1e-4
    ls_max_halvings: int = 8
    linear_solver: str = "sparse-direct"  # or "minres"
    iterative_tol: float = 1e-10
    condense: bool = False

    def validate(self) -> "NewtonConfig":
        if min(self.abs_tol, self.rel_tol) <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.linear_solver not in ("sparse-direct", "minres"):
            raise ValueError(f"unknown linear solver {self.linear_solver!r}")
        return self


@dataclass
class SolveStats:
    """Bookkeeping for one Newton solve."""

    iterations: int = 0
    residual_history: list[float] = field(default_factory=list)
    linear_iters: list[int] = field(default_factory=list)
    wall_time: float = 0.0


def linear_solve(A: sp.spmatrix, b: np.ndarray,
                 config: NewtonConfig | None = None,
                 stats: SolveStats | None = None) -> np.ndarray:
    """Solve the symmetric indefinite system to certified accuracy.

    Direct path: sparse LU + one iterative-refinement pass, then the
    relative residual must reach 1e-10; a singular factorization (or a
    refinement that cannot certify) raises. MINRES path: Jacobi-scaled,
    relative tolerance from the config.
    """
    config = config or NewtonConfig()
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b)
    A = A.tocsc()

    if config.linear_solver == "minres":
        return _minres_solve(A, b, bnorm, config, stats)

    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise SingularMatrix(
            f"factorization failed ({exc}); the system may lack constraints"
        ) from exc
    x = lu.solve(b)
    x += lu.solve(b - A @ x)  # one refinement pass
    rel = float(np.linalg.norm(A @ x - b)) / bnorm
    if not np.isfinite(rel) or rel > 1e-10:
        # Distinguish a numerically singular operator (rigid modes from
        # missing constraints) from ordinary loss of accuracy: a healthy
        # factorization keeps the pivot spread many orders below 1/eps.
        du = np.abs(lu.U.diagonal())
        if du.min() == 0.0 or du.max() / du.min() > 1e13:
            raise SingularMatrix(
                "assembled system is numerically singular; the mesh likely "
                "has unconstrained rigid modes")
        raise LinearSolveFailure(
            f"direct solve reached relative residual {rel:.3e} > 1e-10")
    if stats is not None:
        stats.linear_iters.append(1)
    return x


def _minres_solve(A: sp.spmatrix, b: np.ndarray, bnorm: float,
                  config: NewtonConfig, stats: SolveStats | None) -> np.ndarray:
    """MINRES on the symmetrically equilibrated system, with refinement.

    Row-max scaling tames the stiffness/volume unit disparity; outer
    refinement rounds drive the true residual to the certification level.
    """
    s = np.sqrt(np.asarray(np.abs(A).max(axis=1).todense()).ravel())
    S = sp.diags(1.0 / s)
    As = (S @ A @ S).tocsr()
    tol = max(config.iterative_tol, 1e-12)
    it = [0]

    def count(_):
        it[0] += 1

    x = np.zeros_like(b)
    for _ in range(6):
        res = b - A @ x
        rel = float(np.linalg.norm(res)) / bnorm
        if rel <= tol:
            if stats is not None:
                stats.linear_iters.append(it[0])
            return x
        y, info = spla.minres(As, S @ res, rtol=1e-14,
                              maxiter=40 * A.shape[0], callback=count)
        if info < 0:
            raise LinearSolveFailure(f"minres failed (info={info})")
        x = x + S @ y
    rel = float(np.linalg.norm(A @ x - b)) / bnorm
    if rel > tol:
        raise LinearSolveFailure(
            f"minres refinement stalled at relative residual {rel:.3e}")
    if stats is not None:
        stats.linear_iters.append(it[0])
    return x


def _pd_block_inverse(A22: sp.spmatrix, n_cells: int, n_p: int) -> sp.spmatrix:
    """Closed-form inverse of the per-cell [[0,-M],[-M,K]] saddle blocks."""
    half = n_cells * n_p
    A22 = A22.tocsr()
    neg_minv, schur = [], []
    for c in range(n_cells):
        pi = np.arange(c * n_p, (c + 1) * n_p)
        di = half + pi
        M = -np.asarray(A22[np.ix_(pi, di)].todense())
        K = np.asarray(A22[np.ix_(di, di)].todense())
        Minv = np.linalg.inv(M)
        neg_minv.append(-Minv)
        schur.append(-Minv @ K @ Minv)
    P11 = sp.block_diag(schur)
    P12 = sp.block_diag(neg_minv)
    zero = sp.csr_matrix((half, half))
    return sp.bmat([[P11, P12], [P12, zero]]).tocsc()


def _solve_condensed(disc: Discretization, A: sp.spmatrix, b: np.ndarray,
                     config: NewtonConfig, stats: SolveStats) -> np.ndarray:
    """Eliminate the (never-constrained) p/D dofs, solve, back-substitute."""
    dm = disc.dofmap
    n_pd = 2 * dm.n_cells * dm.n_p
    nfu = A.shape[0] - n_pd
    A = A.tocsr()
    A11, A12 = A[:nfu, :nfu], A[:nfu, nfu:]
    A22inv = _pd_block_inverse(A[nfu:, nfu:], dm.n_cells, dm.n_p)
    b1, b2 = b[:nfu], b[nfu:]
    A_eff = (A11 - A12 @ A22inv @ A12.T).tocsc()
    x1 = linear_solve(A_eff, b1 - A12 @ (A22inv @ b2), config, stats)
    x2 = A22inv @ (b2 - A12.T @ x1)
    return np.concatenate([x1, x2])


def newton_solve(disc: Discretization, state_guess: SystemState,
                 prev: SystemState | None, dt: float, mode: str,
                 config: NewtonConfig | None = None,
                 activation=0.0) -> tuple[SystemState, SolveStats]:
    """Full Newton iteration with backtracking line search.

    ``state_guess`` must already carry the prescribed values on
    constrained dofs (warm start plus constraint update); increments are
    computed on free dofs only. Trial states with non-positive J or D are
    rejected by halving the step. Raises NonConvergence (with the best
    state attached) when the tolerance is not met within max_iters.
    """
    config = (config or NewtonConfig()).validate()
    stats = SolveStats()
    t0 = time.perf_counter()
    scales = residual_scales(disc)[disc.dofmap.free_dofs]

    def norm_of(state: SystemState) -> tuple[float, np.ndarray]:
        r = assemble_residual(disc, state, prev, dt, mode, activation)
        return float(np.linalg.norm(r / scales)), r

    state = state_guess.copy()
    norm, r = norm_of(state)
    stats.residual_history.append(norm)
    target = max(config.abs_tol, config.rel_tol * norm)

    for _ in range(config.max_iters):
        if norm <= target:
            stats.wall_time = time.perf_counter() - t0
            return state, stats
        A = assemble_tangent(disc, state, prev, dt, mode, activation)
        if config.condense:
            dx_free = _solve_condensed(disc, A, -r, config, stats)
        else:
            dx_free = linear_solve(A, -r, config, stats)
        dx = np.zeros(disc.dofmap.n_dofs)
        dx[disc.dofmap.free_dofs] = dx_free
        stats.iterations += 1

        alpha, best = 1.0, None
        for _ in range(config.ls_max_halvings + 1):
            trial = state.add_packed(alpha * dx, disc.dofmap)
            try:
                trial_norm, trial_r = norm_of(trial)
            except (NonPositiveJacobian, NonPositiveDilation):
                alpha *= 0.5
                continue
            if trial_norm <= (1.0 - config.ls_decrease * alpha) * norm:
                best = (trial, trial_norm, trial_r)
                break
            if best is None or trial_norm < best[1]:
                best = (trial, trial_norm, trial_r)
            alpha *= 0.5
        if best is None or best[1] >= norm:
            stats.wall_time = time.perf_counter() - t0
            raise NonConvergence(
                f"line search stalled at residual {norm:.3e}",
                best_state=state, stats=stats)
        state, norm, r = best
        stats.residual_history.append(norm)

    stats.wall_time = time.perf_counter() - t0
    if norm <= target:
        return state, stats
    raise NonConvergence(
        f"residual {norm:.3e} above target {target:.3e} "
        f"after {config.max_iters} iterations", best_state=state, stats=stats)
