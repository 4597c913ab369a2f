"""Experiment programs: activation schedules, boundary drivers, probes,
and the canned desk-scale studies.

Studies build a mesh + discretization, march it, and record probe series
(reaction forces via constraint-residual extraction, centerline point
displacements, field summaries). Paired runs (active/passive) share mesh,
boundary program, and time grid so effective-force decompositions are
well defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import (DirichletBC, Discretization, SystemState,
                       assemble_residual)
from .constitutive import (TissueParams, default_materials,
                           volumetric_response, with_overrides)
from .dynamics import TimeConfig, initial_state, march
from .errors import ConfigError, GridMismatch, ValidationError
from .kinematics import deformation_batch
from .mesh import (BlockGeometry, GastrocGeometry, GeometrySpec,
                   generate_block, generate_gastroc)
from .solver import NewtonConfig


# ---------------------------------------------------------------------------
# activation programs

class HoldActivation:
    """Constant activation level."""

    def __init__(self, level: float = 0.0):
        if not 0.0 <= level <= 1.0:
            raise ValidationError("activation level must lie in [0,1]")
        self.level = level

    def value(self, t: float) -> float:
        return self.level

    def advance(self, t: float, dt: float) -> float:
        return self.level


class RampActivation:
    """Zero until t_act, linear to ``level`` at t_end, held after."""

    def __init__(self, t_act: float, t_end: float, level: float = 1.0):
        if t_end <= t_act:
            raise ValidationError("ramp needs t_end > t_act")
        if not 0.0 <= level <= 1.0:
            raise ValidationError("activation level must lie in [0,1]")
        self.t_act, self.t_end, self.level = t_act, t_end, level

    def value(self, t: float) -> float:
        if t <= self.t_act:
            return 0.0
        if t >= self.t_end:
            return self.level
        return self.level * (t - self.t_act) / (self.t_end - self.t_act)

    def advance(self, t: float, dt: float) -> float:
        return self.value(t)


class SquareWave:
    """Periodic on/off excitation: 1 on the first ``duty`` of each period."""

    def __init__(self, period: float, duty: float, t_off: float = math.inf):
        if period <= 0.0 or not 0.0 < duty <= 1.0:
            raise ValidationError("square wave needs period > 0, duty in (0,1]")
        self.period, self.duty, self.t_off = period, duty, t_off

    def __call__(self, t: float) -> float:
        if t < 0.0 or t >= self.t_off:
            return 0.0
        return 1.0 if (t % self.period) < self.duty * self.period else 0.0


class ZajacActivation:
    """First-order activation ODE driven by an excitation signal.

    da/dt + (beta + (1-beta) u0)/tau * a = u0/tau, a(0) = a0, advanced by
    implicit Euler so each step is unconditionally stable and keeps
    a in [0,1] for u0 in [0,1].
    """

    def __init__(self, tau_act: float, beta_deact: float, excitation,
                 a0: float = 0.0):
        if tau_act <= 0.0:
            raise ValidationError("tau_act must be positive")
        if not 0.0 < beta_deact <= 1.0:
            raise ValidationError("beta_deact must lie in (0,1]")
        self.tau, self.beta = tau_act, beta_deact
        self.u0 = excitation if callable(excitation) else (lambda t: excitation)
        self.a = float(a0)
        self.t = 0.0

    def reset(self, a0: float = 0.0, t0: float = 0.0):
        self.a, self.t = float(a0), t0
        return self

    def advance(self, t: float, dt: float) -> float:
        u = min(1.0, max(0.0, float(self.u0(t))))
        a = (self.a + dt * u / self.tau) / \
            (1.0 + dt * (self.beta + (1.0 - self.beta) * u) / self.tau)
        self.a = min(1.0, max(0.0, a))
        self.t = t
        return self.a

    def value(self, t: float, dt: float | None = None) -> float:
        """Integrate a fresh copy from 0 to t (for stateless evaluation)."""
        dt = dt if dt is not None else self.tau / 200.0
        fresh = ZajacActivation(self.tau, self.beta, self.u0)
        n = max(1, int(math.ceil(t / dt)))
        for k in range(1, n + 1):
            fresh.advance(t * k / n, t / n)
        return fresh.a


class RegionActivation:
    """Restrict a scalar program to one mesh region (per-cell field)."""

    def __init__(self, program, disc: Discretization, region: str):
        self.program = program
        self.mask = np.array([r == region for r in disc.mesh.region_tag])
        self.n_cells = len(disc.mesh.cells)

    def advance(self, t: float, dt: float):
        a = self.program.advance(t, dt)
        out = np.zeros(self.n_cells)
        out[self.mask] = a
        return out


def activation_value(program, X, t: float) -> float:
    """Scalar activation of a program at time t (X reserved for masks)."""
    if isinstance(program, ZajacActivation):
        return program.value(t)
    return program.value(t)


# ---------------------------------------------------------------------------
# boundary programs

class PiecewiseLinear:
    """Continuous piecewise-linear signal through (t, value) breakpoints."""

    def __init__(self, breakpoints):
        pts = sorted((float(t), float(v)) for t, v in breakpoints)
        if len(pts) < 1:
            raise ValidationError("need at least one breakpoint")
        self.t = np.array([p[0] for p in pts])
        self.v = np.array([p[1] for p in pts])

    def __call__(self, t: float) -> float:
        return float(np.interp(t, self.t, self.v))


def ramp_pull(rate: float, t_start: float = 0.05,
              t_hold: float = 0.15) -> PiecewiseLinear:
    """Hold, pull at constant ``rate``, hold at the reached displacement."""
    return PiecewiseLinear([(0.0, 0.0), (t_start, 0.0),
                            (t_hold, rate * (t_hold - t_start))])


def sinusoid(amplitude: float, frequency: float):
    """s·sin(2π f t) displacement signal."""
    return lambda t: amplitude * math.sin(2.0 * math.pi * frequency * t)


def phase_program(phases) -> PiecewiseLinear:
    """Displacement from (duration, velocity) phases starting at rest."""
    t, d = 0.0, 0.0
    pts = [(0.0, 0.0)]
    for duration, velocity in phases:
        if duration < 0.0:
            raise ValidationError("phase durations must be nonnegative")
        t += duration
        d += duration * velocity
        pts.append((t, d))
    return PiecewiseLinear(pts)


def clamp_face(face: str, components=(0, 1, 2)) -> list[DirichletBC]:
    return [DirichletBC(face, c, 0.0) for c in components]


def drive_face(face: str, signal, component: int = 0,
               zero_others: bool = True) -> list[DirichletBC]:
    """Prescribe one component of a face; optionally pin the others to 0."""
    bcs = [DirichletBC(face, component, signal)]
    if zero_others:
        bcs += [DirichletBC(face, c, 0.0) for c in range(3) if c != component]
    return bcs


@dataclass(frozen=True)
class BoundaryProgram:
    """Named bundle of Dirichlet conditions for one experiment."""

    name: str
    bcs: tuple[DirichletBC, ...]

    @classmethod
    def build(cls, name: str, *groups) -> "BoundaryProgram":
        out = []
        for g in groups:
            out.extend(g)
        return cls(name=name, bcs=tuple(out))


# ---------------------------------------------------------------------------
# probes

@dataclass(frozen=True)
class Probe:
    """A named scalar measurement extracted from states during a run."""

    name: str
    kind: str  # reaction-force | point-displacement | field-summary
    face_set: str | None = None
    direction: tuple[float, float, float] = (1.0, 0.0, 0.0)
    location: tuple[float, float, float] | None = None
    component: int = 0
    summary: str = "max_j_dev"  # or volume | p_mean | p_classical_mean


def reaction_force(disc: Discretization, state: SystemState,
                   prev: SystemState | None, dt: float, mode: str,
                   activation, face_set: str,
                   direction=(1.0, 0.0, 0.0)) -> float:
    """Force the tissue exerts on a constrained face's fixture.

    Extracted as the negative converged residual summed over the face's
    dofs; a face held against tissue tension therefore reads negative
    along the outward axis.
    """
    r = assemble_residual(disc, state, prev, dt, mode, activation, full=True)
    nodes = np.asarray(disc.mesh.node_sets[face_set], dtype=int)
    f = -np.array([r[3 * nodes + c].sum() for c in range(3)])
    return float(f @ np.asarray(direction, dtype=float))


def field_summary(disc: Discretization, state: SystemState) -> dict:
    """Volume, incompressibility deviation, and pressure consistency.

    ``p_classical_mean`` evaluates the volumetric stress directly from
    J(u) (the displacement-based mean stress tr(sigma)/3), which the
    mixed pressure field should reproduce at convergence.
    """
    db = deformation_batch(disc.grad0_field(state.u), disc.fibre_q)
    J = db.J
    w = disc.dvol * J  # current-configuration weights
    p_q = disc.scalar_at_points(state.p)
    kappa = np.array([disc.materials[r].kappa for r in disc.mesh.region_tag])
    p_from_u = volumetric_response(J, kappa[:, None])[0]
    return {
        "volume": float(w.sum()),
        "max_j_dev": float(np.abs(J - 1.0).max()),
        "p_mean": float((w * p_q).sum() / w.sum()),
        "p_classical_mean": float((w * p_from_u).sum() / w.sum()),
    }


class ProbeSet:
    """Probes resolved against one discretization at setup time."""

    def __init__(self, disc: Discretization, probes: list[Probe]):
        self.disc = disc
        self.probes = list(probes)
        self._node = {}
        for pr in self.probes:
            if pr.kind == "point-displacement":
                d = np.linalg.norm(disc.mesh.nodes - np.asarray(pr.location),
                                   axis=1)
                self._node[pr.name] = int(np.argmin(d))
            elif pr.kind == "reaction-force":
                if pr.face_set not in disc.mesh.node_sets:
                    raise ValidationError(f"unknown face set {pr.face_set!r}")

    def sample(self, state: SystemState, prev: SystemState | None,
               dt: float, mode: str, activation) -> dict[str, float]:
        out = {}
        summary = None
        for pr in self.probes:
            if pr.kind == "point-displacement":
                out[pr.name] = float(state.u[3 * self._node[pr.name]
                                             + pr.component])
            elif pr.kind == "reaction-force":
                out[pr.name] = reaction_force(self.disc, state, prev, dt,
                                              mode, activation, pr.face_set,
                                              pr.direction)
            elif pr.kind == "field-summary":
                if summary is None:
                    summary = field_summary(self.disc, state)
                out[pr.name] = summary[pr.summary]
            else:
                raise ValidationError(f"unknown probe kind {pr.kind!r}")
        return out


# ---------------------------------------------------------------------------
# run artifacts

@dataclass
class RunResult:
    """Probe series plus identifying grid/boundary signatures."""

    times: np.ndarray
    series: dict[str, np.ndarray]
    grid: tuple  # (n_nodes, n_cells, degree)
    boundary: str
    newton_iters: list[int] = field(default_factory=list)
    final_state: SystemState | None = None
    disc: Discretization | None = None
    activation: np.ndarray | None = None
    final_residual: float = 0.0

    def column(self, name: str) -> np.ndarray:
        return self.series[name]


def effective_force_decomposition(active_run: RunResult,
                                  passive_run: RunResult,
                                  force_column: str) -> dict[str, np.ndarray]:
    """total/passive/active force triples on a shared grid."""
    if active_run.grid != passive_run.grid:
        raise GridMismatch("runs use different meshes")
    if active_run.boundary != passive_run.boundary:
        raise GridMismatch("runs use different boundary programs")
    if active_run.times.shape != passive_run.times.shape or \
            not np.allclose(active_run.times, passive_run.times,
                            rtol=0.0, atol=1e-12):
        raise GridMismatch("runs use different time grids")
    total = active_run.series[force_column]
    passive = passive_run.series[force_column]
    return {"total": total, "passive": passive, "active": total - passive}


def write_probe_csv(path, times: np.ndarray,
                    series: dict[str, np.ndarray]) -> None:
    names = list(series)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join(["t"] + names) + "\n")
        for k, t in enumerate(times):
            row = [t] + [series[n][k] for n in names]
            fh.write(",".join("%.17g" % v for v in row) + "\n")


def _run_probed(disc: Discretization, cfg: TimeConfig, activation,
                probes: ProbeSet, boundary_tag: str,
                newton: NewtonConfig | None = None,
                sample_every: int = 1, rate=None) -> RunResult:
    """March and collect probe samples (always including t=0 and t_end)."""
    state0 = initial_state(disc)
    rows = [probes.sample(state0, None, 0.0, "quasistatic", 0.0)]
    times = [0.0]
    iters = []
    acts = [0.0]
    last_res = [0.0]

    def on_step(state, stats, k, prev, dt, a):
        iters.append(stats.iterations)
        if stats.residual_history:
            last_res[0] = float(stats.residual_history[-1])
        if k % sample_every == 0 or state.t >= cfg.t_end * (1 - 1e-12):
            rows.append(probes.sample(state, prev, dt, cfg.mode, a))
            times.append(state.t)
            acts.append(float(np.max(a)))

    final = march(disc, cfg, activation, on_step, newton, initial=state0,
                  rate=rate)
    series = {name: np.array([r[name] for r in rows]) for name in rows[0]}
    return RunResult(times=np.array(times), series=series,
                     grid=(len(disc.mesh.nodes), len(disc.mesh.cells),
                           disc.mesh.degree),
                     boundary=boundary_tag, newton_iters=iters,
                     final_state=final, disc=disc,
                     activation=np.array(acts), final_residual=last_res[0])


# ---------------------------------------------------------------------------
# canned studies

def _merge_config(defaults: dict, config: dict | None, study: str) -> dict:
    cfg = dict(defaults)
    for key, val in (config or {}).items():
        if key not in defaults:
            raise ConfigError(f"unknown key {key!r} for study {study!r}")
        cfg[key] = val
    return cfg


def _apo_ramped_materials() -> dict[str, TissueParams]:
    """Default tissues with the sheet curve's step at stretch 1 ramped.

    The printed aponeurosis/tendon fit jumps from 0 to 0.01 at stretch 1;
    studies whose sheets unload through that point (cyclic drives,
    isometric activation against clamped sheets) stall the line search on
    the discontinuity, so they default to the ramped variant.
    """
    return {key: (with_overrides(p, apo_regularized=True)
                  if p.tissue_kind in ("aponeurosis", "tendon") else p)
            for key, p in default_materials().items()}


def _muscle_block_disc(L, W, H, divisions, degree, element, materials,
                       bcs, fibre=(1.0, 0.0, 0.0)) -> Discretization:
    geo = GeometrySpec(block=BlockGeometry(L_mus=L, W_mus=W, H_mus=H),
                       divisions=tuple(divisions))
    mesh = generate_block(geo, tuple(divisions), degree=degree)
    mesh.fibres.region["muscle"] = np.asarray(fibre, dtype=float)
    return Discretization(mesh, materials, element, bcs)


def _centerline_probes(L, W, H, fractions, force_face="+x",
                       with_force=True) -> list[Probe]:
    names = {1.0: "x_end", 0.75: "x1", 0.5: "x_mid", 0.1: "x2"}
    probes = [Probe(name=names.get(f, f"x_{f:g}"), kind="point-displacement",
                    location=(f * L, 0.5 * W, 0.5 * H), component=0)
              for f in fractions]
    if with_force:
        probes.append(Probe(name="reaction_x", kind="reaction-force",
                            face_set=force_face, direction=(1.0, 0.0, 0.0)))
        probes.append(Probe(name="max_j_dev", kind="field-summary",
                            summary="max_j_dev"))
    return probes


DYNAMIC_PULL_DEFAULTS = {
    "L": 52.0008e-3, "W": 13.75e-3, "H": 5.5783e-3,
    "divisions": (6, 2, 2), "degree": 2, "element": "q2-p1",
    "dt": 5e-5, "t_end": 0.2, "C_max": 1.0,
    "t_start": 0.05, "t_hold": 0.15, "rate_factor": 0.1,
    "n_quasistatic": 40, "sample_every": 1, "materials": None,
    "newton": None,
}


def _dynamic_pull_setup(cfg, materials):
    L, W, H = cfg["L"], cfg["W"], cfg["H"]
    d_of_t = ramp_pull(cfg["rate_factor"] * L, cfg["t_start"], cfg["t_hold"])
    program = BoundaryProgram.build(
        f"ramp-pull:{cfg['t_start']}:{cfg['t_hold']}:{cfg['rate_factor']}",
        clamp_face("-x"), drive_face("+x", d_of_t))
    disc = _muscle_block_disc(L, W, H, cfg["divisions"], cfg["degree"],
                              cfg["element"], materials, list(program.bcs))
    probes = ProbeSet(disc, _centerline_probes(L, W, H, (1.0, 0.75, 0.5, 0.1),
                                               with_force=False))
    return disc, program, probes, d_of_t


def study_dynamic_pull(config: dict | None = None) -> dict[str, RunResult]:
    """Ramp-pull a parallel-fibre block dynamically; record centerline traces."""
    cfg = _merge_config(DYNAMIC_PULL_DEFAULTS, config, "dynamic-pull")
    materials = cfg["materials"] or default_materials()
    disc, program, probes, _ = _dynamic_pull_setup(cfg, materials)
    run = _run_probed(disc, TimeConfig(dt_in=cfg["dt"], t_end=cfg["t_end"],
                                       C_max=cfg["C_max"], mode="dynamic"),
                      0.0, probes, program.name, newton=cfg["newton"],
                      sample_every=cfg["sample_every"])
    return {"dynamic": run}


def study_quasi_vs_dynamic(config: dict | None = None) -> dict[str, RunResult]:
    """The same ramp-pull marched dynamically and as equilibria."""
    cfg = _merge_config(DYNAMIC_PULL_DEFAULTS, config, "quasi-vs-dynamic")
    materials = cfg["materials"] or default_materials()
    out = study_dynamic_pull(cfg)
    disc, program, probes, _ = _dynamic_pull_setup(cfg, materials)
    run_q = _run_probed(disc, TimeConfig(dt_in=cfg["dt"], t_end=cfg["t_end"],
                                         mode="quasistatic",
                                         n_steps=cfg["n_quasistatic"]),
                        0.0, probes, program.name, newton=cfg["newton"])
    out["quasistatic"] = run_q
    return out


ISOKINETIC_DEFAULTS = {
    "L": 0.2080, "W": 0.055, "H": 0.022,
    "divisions": (2, 1, 1), "degree": 2, "element": "q2-p1",
    "dt": 1e-3, "speeds": (-1.0, -2.0, -4.0),
    "stretch_to": 1.1, "lengthen_speed": 1.0,
    "settle_steps_1": 5, "activation_time": 0.25, "settle_steps_2": 15,
    "shorten_to": 0.6, "sample_every": 1, "materials": None,
    "rate_model": "isokinetic",
    "isometric_reference": True, "reference_steps": 12, "newton": None,
}


def _isokinetic_timeline(cfg, speed):
    """(duration, velocity_m_per_s) phases and the activation window."""
    L = cfg["L"]
    dt = cfg["dt"]
    t1 = (cfg["stretch_to"] - 1.0) / cfg["lengthen_speed"]
    if t1 < 0.0:
        raise ConfigError("lengthen_speed must point from stretch 1 toward "
                          "stretch_to (their signs disagree)")
    t2 = cfg["settle_steps_1"] * dt
    t3 = cfg["activation_time"]
    t4 = cfg["settle_steps_2"] * dt
    t5 = (cfg["stretch_to"] - cfg["shorten_to"]) / abs(speed)
    phases = [(t1, cfg["lengthen_speed"] * L), (t2, 0.0), (t3, 0.0),
              (t4, 0.0), (t5, speed * L)]
    act_start = t1 + t2
    phases = [(d, v) for d, v in phases if d > 0.0]
    return phases, (act_start, act_start + t3)


def _phase_rate(phases, L):
    """Normalized end-face rate (stretch per second), by phase."""
    ends = np.cumsum([d for d, _ in phases])
    vels = np.array([v for _, v in phases]) / L

    def rate(t: float) -> float:
        i = int(np.searchsorted(ends, t, side="left"))
        return float(vels[min(i, len(vels) - 1)])

    return rate


def study_isokinetic(config: dict | None = None) -> dict[str, RunResult]:
    """Lengthen-settle-activate-settle-shorten protocol over a speed sweep.

    Returns runs keyed "active:<speed>" / "passive:<speed>"; pair them
    with effective_force_decomposition for force-velocity analysis. When
    isometric_reference is set, a zero-velocity pair "isometric:active" /
    "isometric:passive" is added: the same block pulled to the target
    stretch on frictionless grips and activated in place, so the rate
    factor is exactly one and the stress state is uniform.

    rate_model picks how the fibre strain rate entering the velocity
    factor is formed. "isokinetic" prescribes the driven-end rate
    pointwise (constant per phase), the assumption that every material
    point shortens at the applied rate; "field" recovers it from the
    lagged velocity field. The field rate carries step-to-step noise at
    desk scale (the velocity enters the stress one step behind), so
    compare speeds through force_velocity_points, which averages around
    a matched stretch.
    """
    cfg = _merge_config(ISOKINETIC_DEFAULTS, config, "isokinetic")
    if cfg["rate_model"] not in ("isokinetic", "field"):
        raise ConfigError("rate_model must be 'isokinetic' or 'field', "
                          f"got {cfg['rate_model']!r}")
    materials = cfg["materials"]
    if materials is None:
        materials = default_materials()
        materials["muscle"] = with_overrides(materials["muscle"], beta=0.0)
    L, W, H = cfg["L"], cfg["W"], cfg["H"]
    out: dict[str, RunResult] = {}
    for speed in cfg["speeds"]:
        phases, (a0, a1) = _isokinetic_timeline(cfg, speed)
        d_of_t = phase_program(phases)
        rate = _phase_rate(phases, L) if cfg["rate_model"] == "isokinetic" \
            else None
        t_end = sum(p[0] for p in phases)
        program = BoundaryProgram.build(
            f"isokinetic:{speed}:{cfg['stretch_to']}:{cfg['shorten_to']}",
            clamp_face("-x"), drive_face("+x", d_of_t))
        for label, act in (("active", RampActivation(a0, a1, 1.0)),
                           ("passive", HoldActivation(0.0))):
            disc = _muscle_block_disc(L, W, H, cfg["divisions"],
                                      cfg["degree"], cfg["element"],
                                      materials, list(program.bcs))
            probes = ProbeSet(disc, _centerline_probes(L, W, H, (1.0,)))
            run = _run_probed(disc, TimeConfig(dt_in=cfg["dt"], t_end=t_end,
                                               mode="dynamic"),
                              act, probes, program.name,
                              newton=cfg["newton"],
                              sample_every=cfg["sample_every"], rate=rate)
            run.series["stretch"] = 1.0 + np.array(
                [d_of_t(t) for t in run.times]) / L
            out[f"{label}:{speed:g}"] = run
    if cfg["isometric_reference"]:
        out.update(_isokinetic_reference(cfg, materials))
    return out


def _isokinetic_reference(cfg, materials) -> dict[str, RunResult]:
    """Zero-velocity companion: quasistatic pull to the held stretch, then
    an activation ramp holding that length.

    The grips are frictionless: each face constrains only its own normal
    component, so the block deforms homogeneously and the end reaction
    divided by the deformed cross-section recovers the along-fibre
    stress exactly.
    """
    L, W, H = cfg["L"], cfg["W"], cfg["H"]
    n = cfg["reference_steps"]
    d_hold = (cfg["stretch_to"] - 1.0) * L
    pull = PiecewiseLinear([(0.0, 0.0), (1.0, d_hold), (2.0, d_hold)])
    program = BoundaryProgram.build(
        f"isokinetic-reference:{cfg['stretch_to']}",
        clamp_face("-x", components=(0,)), clamp_face("-y", components=(1,)),
        clamp_face("-z", components=(2,)),
        drive_face("+x", pull, component=0, zero_others=False))
    out = {}
    for label, act in (("active", RampActivation(1.0, 2.0, 1.0)),
                       ("passive", HoldActivation(0.0))):
        disc = _muscle_block_disc(L, W, H, cfg["divisions"], cfg["degree"],
                                  cfg["element"], materials,
                                  list(program.bcs))
        probes = ProbeSet(disc, _centerline_probes(L, W, H, (1.0,)))
        run = _run_probed(disc, TimeConfig(dt_in=1.0 / n, t_end=2.0,
                                           mode="quasistatic", n_steps=2 * n),
                          act, probes, program.name, newton=cfg["newton"])
        run.series["stretch"] = 1.0 + np.array(
            [pull(t) for t in run.times]) / L
        out[f"isometric:{label}"] = run
    return out


def force_velocity_points(runs: dict[str, RunResult], speeds,
                          stretch_match: float = 0.95,
                          window: float = 0.04) -> dict[float, float]:
    """Effective active force per speed, averaged where the end-face
    stretch lies within window/2 of stretch_match during shortening."""
    points: dict[float, float] = {}
    for speed in speeds:
        active = runs[f"active:{speed:g}"]
        passive = runs[f"passive:{speed:g}"]
        dec = effective_force_decomposition(active, passive, "reaction_x")
        stretch = active.series["stretch"]
        peak = int(np.argmax(stretch))
        mask = np.abs(stretch - stretch_match) <= 0.5 * window
        mask[:peak + 1] = False
        if not np.any(mask):
            raise ValidationError(
                f"no samples near stretch {stretch_match} for speed {speed}")
        points[speed] = float(np.mean(dec["active"][mask]))
    return points


CP_DEFAULTS = {
    # passive block sub-study
    "alphas": (0.02, 0.2, 0.4), "c_sarcos": (0.0,), "stretch_max": 1.3,
    "n_stretch_steps": 12, "ecm_scale": 10.0, "shift_passive": True,
    "block_divisions": (4, 2, 2),
    "L": 52.0008e-3, "W": 13.75e-3, "H": 5.5783e-3,
    # active pennate sub-study
    "pennate": True, "pennate_divisions": (6, 2, 2),
    "pcsa_factor": 0.7, "activation_steps": 10, "prestretch": 0.0,
    "td": {"alpha": 0.02, "beta": 0.1, "c_sarco": 0.0},
    "cp": {"alpha": 0.4, "beta": 0.2, "c_sarco": 0.0},
    "degree": 2, "element": "q2-p1", "materials": None, "newton": None,
}


def _cp_muscle(materials, alpha=None, beta=None, c_sarco=None,
               ecm_scale=None, shift_passive=None) -> dict[str, TissueParams]:
    mats = dict(materials)
    kw = {}
    if alpha is not None:
        kw["alpha"] = alpha
    if beta is not None:
        kw["beta"] = beta
    if c_sarco is not None:
        kw["c_sarco"] = c_sarco
    if shift_passive is not None:
        kw["shift_passive"] = shift_passive
    if ecm_scale is not None:
        base = np.asarray(mats["muscle"].yeoh_c, dtype=float)
        kw["yeoh_c_ecm"] = tuple(ecm_scale * base)
        kw["yeoh_c_cell"] = tuple(base)
    mats["muscle"] = with_overrides(mats["muscle"], **kw)
    return mats


def _passive_stretch_run(mats, cfg) -> RunResult:
    """Quasi-static pull of a block to stretch_max; force at each stretch."""
    L, W, H = cfg["L"], cfg["W"], cfg["H"]
    t_end = 1.0
    d_max = (cfg["stretch_max"] - 1.0) * L
    program = BoundaryProgram.build(
        f"stretch:{cfg['stretch_max']}",
        clamp_face("-x"), drive_face("+x", lambda t: d_max * t))
    disc = _muscle_block_disc(L, W, H, cfg["block_divisions"], cfg["degree"],
                              cfg["element"], mats, list(program.bcs))
    probes = ProbeSet(disc, _centerline_probes(L, W, H, (1.0,)))
    run = _run_probed(disc, TimeConfig(dt_in=t_end / cfg["n_stretch_steps"],
                                       t_end=t_end, mode="quasistatic",
                                       n_steps=cfg["n_stretch_steps"]),
                      0.0, probes, program.name, newton=cfg["newton"])
    run.series["stretch"] = 1.0 + run.series["x_end"] / L
    return run


def _pennate_activation_run(mats, cfg, pcsa_factor: float,
                            activate: bool) -> RunResult:
    """Quasi-static activation ramp on an aponeurosis-connected pennate mesh.

    The mesh is pulled to the configured prestretch, held, and activation
    is ramped to full while the end force is recorded.  A physiological
    cross-section reduction removes fibre area at fixed belly geometry:
    the homogenized fibre stress scale is multiplied by the area factor
    while the matrix and the sheets stay as built.
    """
    if pcsa_factor != 1.0:
        mats = dict(mats)
        mats["muscle"] = with_overrides(
            mats["muscle"], sigma0=pcsa_factor * mats["muscle"].sigma0)
    g = GastrocGeometry(L_apo=None)
    geo = GeometrySpec(gastroc=g, divisions=tuple(cfg["pennate_divisions"]))
    mesh = generate_gastroc(geo, tuple(cfg["pennate_divisions"]),
                            degree=cfg["degree"])
    d_pre = cfg["prestretch"] * g.solve_closure()[2]
    program = BoundaryProgram.build(
        f"pennate-fl:{cfg['prestretch']}",
        clamp_face("-x-apo"),
        drive_face("+x-apo", PiecewiseLinear([(0.0, 0.0), (0.5, d_pre),
                                              (1.0, d_pre)])))
    disc = Discretization(mesh, mats, cfg["element"], list(program.bcs))
    probes = ProbeSet(disc, [
        Probe(name="reaction_x", kind="reaction-force", face_set="+x-apo",
              direction=(1.0, 0.0, 0.0)),
        Probe(name="max_j_dev", kind="field-summary", summary="max_j_dev"),
    ])
    activation = RampActivation(0.5, 1.0, 1.0) if activate \
        else HoldActivation(0.0)
    n = 2 * cfg["activation_steps"]
    return _run_probed(disc, TimeConfig(dt_in=1.0 / n, t_end=1.0,
                                        mode="quasistatic", n_steps=n),
                       RegionActivation(activation, disc, "muscle"),
                       probes, program.name, newton=cfg["newton"])


def study_cp_force_length(config: dict | None = None) -> dict[str, RunResult]:
    """Tissue-composition force-length studies.

    Passive part: block stretch sweeps over ECM fraction alpha and
    sarcomere shift. Active part: pennate activation at full and reduced
    cross-section for typical and stiff-composition parameter sets.
    """
    cfg = _merge_config(CP_DEFAULTS, config, "cp-force-length")
    materials = cfg["materials"] or _apo_ramped_materials()
    out: dict[str, RunResult] = {}
    for alpha in cfg["alphas"]:
        mats = _cp_muscle(materials, alpha=alpha, ecm_scale=cfg["ecm_scale"])
        out[f"passive:alpha={alpha:g}"] = _passive_stretch_run(mats, cfg)
    for c in cfg["c_sarcos"]:
        if c == 0.0:
            continue
        mats = _cp_muscle(materials, c_sarco=c, ecm_scale=cfg["ecm_scale"],
                          shift_passive=cfg["shift_passive"])
        out[f"passive:c_sarco={c:g}"] = _passive_stretch_run(mats, cfg)
    if cfg["pennate"]:
        for label in ("td", "cp"):
            mats = _cp_muscle(materials, ecm_scale=cfg["ecm_scale"],
                              **cfg[label])
            for tag, f in (("full", 1.0), ("pcsa", cfg["pcsa_factor"])):
                out[f"{label}:{tag}:active"] = _pennate_activation_run(
                    mats, cfg, f, True)
                out[f"{label}:{tag}:passive"] = _pennate_activation_run(
                    mats, cfg, f, False)
    return out


CYCLIC_DEFAULTS = {
    "scale": 10.0, "divisions": (6, 2, 2), "degree": 2, "element": "q2-p1",
    "s_factor": 0.1, "frequency": 2.0, "t_end": 1.0, "dt": 2.5e-3,
    "tau_act": 0.02, "beta_deact": 0.5,
    "excitation_period": 0.5, "excitation_duty": 0.6,
    "sample_every": 1, "materials": None, "rate_model": "driven",
    "newton": None,
}


def study_cyclic(config: dict | None = None) -> dict[str, RunResult]:
    """Sinusoidal length drive with square-wave-excited activation.

    The geometry is the sheared muscle slab with full-length sheet layers
    on both faces (the block-scale pennate stack), driven on its +x end.
    rate_model "driven" feeds the normalized end velocity to the
    force-velocity factor (smooth work loops at coarse steps); "field"
    recovers the rate from the lagged velocity field.
    """
    cfg = _merge_config(CYCLIC_DEFAULTS, config, "cyclic")
    if cfg["rate_model"] not in ("driven", "field"):
        raise ConfigError("rate_model must be 'driven' or 'field', "
                          f"got {cfg['rate_model']!r}")
    materials = cfg["materials"] or _apo_ramped_materials()
    k = cfg["scale"]
    g = GastrocGeometry(L_apo=None, f_apo=1.0, lambda0=16.25e-3 * k,
                        L_mus=67.5e-3 * k, T_apo=0.75e-3 * k,
                        W_mus=13.75e-3 * k)
    geo = GeometrySpec(gastroc=g, divisions=tuple(cfg["divisions"]))
    mesh = generate_gastroc(geo, tuple(cfg["divisions"]), cfg["degree"])
    B = g.solve_closure()[2]
    s = cfg["s_factor"] * B
    f = cfg["frequency"]
    signal = sinusoid(s, f)
    rate = (lambda t: s * 2.0 * math.pi * f * math.cos(2.0 * math.pi * f * t)
            / B) if cfg["rate_model"] == "driven" else None
    program = BoundaryProgram.build(
        f"cyclic:{cfg['s_factor']}:{cfg['frequency']}",
        clamp_face("-x"), drive_face("+x", signal))
    disc = Discretization(mesh, materials, cfg["element"], list(program.bcs))
    probes = ProbeSet(disc, [
        Probe(name="reaction_x", kind="reaction-force", face_set="+x",
              direction=(1.0, 0.0, 0.0)),
        Probe(name="max_j_dev", kind="field-summary", summary="max_j_dev"),
    ])
    excitation = SquareWave(cfg["excitation_period"], cfg["excitation_duty"])
    zajac = ZajacActivation(cfg["tau_act"], cfg["beta_deact"], excitation)
    run = _run_probed(disc, TimeConfig(dt_in=cfg["dt"], t_end=cfg["t_end"],
                                       mode="dynamic"),
                      RegionActivation(zajac, disc, "muscle"), probes,
                      program.name, newton=cfg["newton"],
                      sample_every=cfg["sample_every"], rate=rate)
    run.series["length_norm"] = 1.0 + np.array(
        [signal(t) for t in run.times]) / B
    return {"cyclic": run}


GASTROC_ACTIVATE_DEFAULTS = {
    "divisions": (6, 2, 2), "degree": 2, "element": "q2-p1",
    "n_steps": 10, "level": 1.0, "materials": None, "newton": None,
}


def study_gastroc_activate(config: dict | None = None) -> dict[str, RunResult]:
    """Quasi-static full activation of the default pennate geometry."""
    cfg = _merge_config(GASTROC_ACTIVATE_DEFAULTS, config, "gastroc-activate")
    materials = cfg["materials"] or _apo_ramped_materials()
    g = GastrocGeometry()
    geo = GeometrySpec(gastroc=g, divisions=tuple(cfg["divisions"]))
    mesh = generate_gastroc(geo, tuple(cfg["divisions"]), cfg["degree"])
    program = BoundaryProgram.build("gastroc-activate",
                                    clamp_face("-x-apo"),
                                    clamp_face("+x-apo"))
    disc = Discretization(mesh, materials, cfg["element"], list(program.bcs))
    probes = ProbeSet(disc, [
        Probe(name="reaction_x", kind="reaction-force", face_set="+x-apo",
              direction=(1.0, 0.0, 0.0)),
        Probe(name="max_j_dev", kind="field-summary", summary="max_j_dev"),
    ])
    run = _run_probed(disc, TimeConfig(dt_in=1.0 / cfg["n_steps"],
                                       t_end=1.0, mode="quasistatic",
                                       n_steps=cfg["n_steps"]),
                      RegionActivation(RampActivation(0.0, 1.0, cfg["level"]),
                                       disc, "muscle"),
                      probes, program.name, newton=cfg["newton"])
    return {"gastroc-activate": run}


STUDIES = {
    "dynamic-pull": study_dynamic_pull,
    "quasi-vs-dynamic": study_quasi_vs_dynamic,
    "isokinetic": study_isokinetic,
    "cp-force-length": study_cp_force_length,
    "cyclic": study_cyclic,
    "gastroc-activate": study_gastroc_activate,
}


def run_study(name: str, config: dict | None = None) -> dict[str, RunResult]:
    """Execute a canned study by name; returns its probe runs."""
    if name not in STUDIES:
        raise ConfigError(f"unknown study {name!r}; available: "
                          + ", ".join(sorted(STUDIES)))
    return STUDIES[name](config)
