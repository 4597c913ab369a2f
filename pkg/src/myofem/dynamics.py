"""Time marching: semi-implicit dynamic stepping and the quasi-static driver.

Each dynamic step solves the implicit momentum balance with velocity held
at the previous step inside the stress evaluation (the fibre strain-rate
cache), then recovers the new velocity from the displacement difference.
The quasi-static driver solves a sequence of equilibria with the
force-velocity effect switched off. The step size is limited by a
convective CFL rule; checkpoints round-trip the full state as text.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import Discretization, SystemState, apply_constraints
from .errors import ParseError, ValidationError
from .mesh import Mesh
from .solver import NewtonConfig, SolveStats, newton_solve

STATE_MAGIC = "MYOSTATE 1"
_FMT = "%.17g"


@dataclass(frozen=True)
class TimeConfig:
    """Step size request, horizon, Courant limit, and marching mode."""

    dt_in: float
    t_end: float
    C_max: float = 1.0
    mode: str = "dynamic"
    n_steps: int | None = None  # quasi-static pseudo-time discretization
    output_every: int = 1

    def validate(self) -> "TimeConfig":
        if self.dt_in <= 0.0:
            raise ValidationError("dt_in must be positive")
        if self.t_end <= 0.0:
            raise ValidationError("t_end must be positive")
        if not 0.0 < self.C_max <= 1.0:
            raise ValidationError("C_max must lie in (0, 1]")
        if self.mode not in ("dynamic", "quasistatic"):
            raise ValidationError(f"unknown marching mode {self.mode!r}")
        if self.n_steps is not None and self.n_steps < 1:
            raise ValidationError("n_steps must be >= 1")
        if self.output_every < 1:
            raise ValidationError("output_every must be >= 1")
        return self


def min_edge_length(mesh: Mesh) -> float:
    """Shortest corner-hexahedron edge over all cells."""
    n1 = mesh.degree + 1
    d = mesh.degree
    corner = np.array([c * n1 * n1 + b * n1 + a
                       for c in (0, d) for b in (0, d) for a in (0, d)])
    x = mesh.nodes[mesh.cells[:, corner]]  # (m, 8, 3), lex corner order
    edges = [(0, 1), (2, 3), (4, 5), (6, 7), (0, 2), (1, 3), (4, 6), (5, 7),
             (0, 4), (1, 5), (2, 6), (3, 7)]
    i, j = np.array(edges).T
    lengths = np.linalg.norm(x[:, i] - x[:, j], axis=-1)
    return float(lengths.min())


def cfl_dt(mesh: Mesh, v_field: np.ndarray, dt_in: float,
           C_max: float) -> float:
    """Convective step bound: min of the request and C_max·h_min/max|v|."""
    if not 0.0 < C_max <= 1.0:
        raise ValidationError("C_max must lie in (0, 1]")
    v = np.asarray(v_field, dtype=float).reshape(-1, 3)
    vmax = float(np.linalg.norm(v, axis=1).max()) if v.size else 0.0
    if vmax == 0.0:
        return dt_in
    return min(dt_in, C_max * min_edge_length(mesh) / vmax)


def initial_state(disc: Discretization, t0: float = 0.0) -> SystemState:
    """Rest state (u = v = 0, p = 0, D = 1) with constraints applied."""
    state = SystemState.zeros(disc.dofmap)
    state.t = t0
    dofs, vals = apply_constraints(disc.dofmap, t0)
    state.u[dofs] = vals
    return state


def step_dynamic(disc: Discretization, prev: SystemState, dt: float,
                 activation=0.0, newton: NewtonConfig | None = None,
                 rate: float | np.ndarray | None = None
                 ) -> tuple[SystemState, SolveStats]:
    """One implicit step; velocity lags one level inside the stress.

    ``rate`` overrides the fibre strain rate fed to the force-velocity
    factor: None recomputes it from the previous step's velocity field,
    a scalar or per-quadrature array prescribes it directly (constant-
    rate protocols where the driven-end rate is taken to hold pointwise).
    """
    t_new = prev.t + dt
    guess = prev.copy()
    dofs, vals = apply_constraints(disc.dofmap, t_new)
    guess.u[dofs] = vals
    if rate is None:
        guess.epsbar = disc.refresh_rate_cache(prev)
    else:
        guess.epsbar = np.broadcast_to(
            np.asarray(rate, dtype=float),
            (disc.dofmap.n_cells, disc.n_q)).copy()
    state, stats = newton_solve(disc, guess, prev, dt, "dynamic",
                                newton, activation)
    state.v = (state.u - prev.u) / dt
    state.t = t_new
    return state, stats


def step_quasistatic(disc: Discretization, prev: SystemState, t_new: float,
                     activation=0.0, newton: NewtonConfig | None = None
                     ) -> tuple[SystemState, SolveStats]:
    """Equilibrium at t_new; no inertia, force-velocity effect off."""
    guess = prev.copy()
    dofs, vals = apply_constraints(disc.dofmap, t_new)
    guess.u[dofs] = vals
    guess.epsbar = None
    state, stats = newton_solve(disc, guess, None, 0.0, "quasistatic",
                                newton, activation)
    state.v = np.zeros_like(state.u)
    state.t = t_new
    return state, stats


def _activation_at(activation, t: float, dt: float):
    if hasattr(activation, "advance"):
        return activation.advance(t, dt)
    if callable(activation):
        return activation(t)
    return activation


def march(disc: Discretization, cfg: TimeConfig, activation=0.0,
          on_step=None, newton: NewtonConfig | None = None,
          initial: SystemState | None = None, rate=None) -> SystemState:
    """Run the configured time loop from rest (or a given state).

    ``activation`` may be a constant, a callable of t, or a stateful
    program with ``advance(t, dt)``. After every accepted step,
    ``on_step(state, stats, index, prev, dt, a)`` is invoked with the
    pre-step state and the applied step data, so probes can re-assemble
    the converged residual consistently. ``rate`` (dynamic mode only)
    prescribes the fibre strain rate: a constant, or a callable of t
    evaluated at the step midpoint; None keeps the velocity-field rate.
    """
    cfg.validate()
    state = initial.copy() if initial is not None else initial_state(disc)
    t_end = cfg.t_end
    tiny = 1e-12 * max(t_end, 1.0)
    k = 0
    if cfg.mode == "dynamic":
        while state.t < t_end - tiny:
            dt = cfl_dt(disc.mesh, state.v, cfg.dt_in, cfg.C_max)
            dt = min(dt, t_end - state.t)
            a = _activation_at(activation, state.t + dt, dt)
            r = rate(state.t + 0.5 * dt) if callable(rate) else rate
            prev = state
            state, stats = step_dynamic(disc, state, dt, a, newton, rate=r)
            k += 1
            if on_step is not None:
                on_step(state, stats, k, prev, dt, a)
    else:
        n = cfg.n_steps if cfg.n_steps is not None else \
            max(1, int(round(t_end / cfg.dt_in)))
        times = state.t + (t_end - state.t) * np.arange(1, n + 1) / n
        for t_new in times:
            dt = t_new - state.t
            a = _activation_at(activation, t_new, dt)
            prev = state
            state, stats = step_quasistatic(disc, state, t_new, a, newton)
            k += 1
            if on_step is not None:
                on_step(state, stats, k, prev, dt, a)
    return state


# ---------------------------------------------------------------------------
# checkpoints

def write_state(path, state: SystemState, n_p: int,
                activation=None) -> None:
    """Write a full-precision text checkpoint of one time level."""
    n_nodes = state.u.size // 3
    m = state.p.size // n_p
    lines = [STATE_MAGIC, "T " + _FMT % state.t]
    u = state.u.reshape(n_nodes, 3)
    v = state.v.reshape(n_nodes, 3)
    lines.append(f"U {n_nodes}")
    lines.extend(" ".join(_FMT % c for c in row) for row in u)
    lines.append(f"V {n_nodes}")
    lines.extend(" ".join(_FMT % c for c in row) for row in v)
    lines.append(f"P {m} {n_p}")
    lines.extend(" ".join(_FMT % c for c in row)
                 for row in state.p.reshape(m, n_p))
    lines.append(f"DIL {m} {n_p}")
    lines.extend(" ".join(_FMT % c for c in row)
                 for row in state.D.reshape(m, n_p))
    if state.epsbar is not None:
        eb = np.asarray(state.epsbar)
        lines.append(f"EPSBAR {eb.shape[0]} {eb.shape[1]}")
        lines.extend(" ".join(_FMT % c for c in row) for row in eb)
    if activation is not None:
        a = np.atleast_1d(np.asarray(activation, dtype=float))
        lines.append(f"ACTIVATION {a.size}")
        lines.extend(_FMT % c for c in a)
    lines.append("END")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


class _StateReader:
    def __init__(self, path):
        self.path = str(path)
        with open(path, encoding="ascii") as fh:
            self.lines = fh.read().splitlines()
        self.k = 0

    def next(self) -> str:
        while self.k < len(self.lines):
            line = self.lines[self.k].strip()
            self.k += 1
            if line:
                return line
        self.fail("unexpected end of file")

    def fail(self, msg):
        raise ParseError(msg, line=self.k, path=self.path)

    def floats(self, n: int) -> np.ndarray:
        parts = self.next().split()
        if len(parts) != n:
            self.fail(f"expected {n} values, found {len(parts)}")
        try:
            return np.array([float(p) for p in parts])
        except ValueError:
            self.fail("malformed number")


def read_state(path) -> tuple[SystemState, np.ndarray | None]:
    """Read a checkpoint; returns the state and the stored activation."""
    r = _StateReader(path)
    if r.next() != STATE_MAGIC:
        r.fail(f"bad header; expected {STATE_MAGIC!r}")
    tline = r.next().split()
    if len(tline) != 2 or tline[0] != "T":
        r.fail("expected T record")
    t = float(tline[1])

    def section(name, n_counts):
        head = r.next().split()
        if head[0] != name or len(head) != 1 + n_counts:
            r.fail(f"expected {name} section header")
        try:
            return [int(c) for c in head[1:]]
        except ValueError:
            r.fail(f"malformed {name} count")

    (n_nodes,) = section("U", 1)
    u = np.array([r.floats(3) for _ in range(n_nodes)]).reshape(-1)
    head = section("V", 1)
    if head[0] != n_nodes:
        r.fail("V count differs from U count")
    v = np.array([r.floats(3) for _ in range(n_nodes)]).reshape(-1)
    m, n_p = section("P", 2)
    p = np.array([r.floats(n_p) for _ in range(m)]).reshape(-1)
    m2, n_p2 = section("DIL", 2)
    if (m2, n_p2) != (m, n_p):
        r.fail("DIL shape differs from P shape")
    D = np.array([r.floats(n_p) for _ in range(m)]).reshape(-1)
    epsbar, activation = None, None
    line = r.next()
    while line != "END":
        head = line.split()
        if head[0] == "EPSBAR" and len(head) == 3:
            me, qe = int(head[1]), int(head[2])
            epsbar = np.array([r.floats(qe) for _ in range(me)])
        elif head[0] == "ACTIVATION" and len(head) == 2:
            activation = np.array([r.floats(1)[0] for _ in range(int(head[1]))])
        else:
            r.fail(f"unknown section {head[0]!r}")
        line = r.next()
    state = SystemState(u=u, p=p, D=D, v=v, t=t, epsbar=epsbar)
    return state, activation
