"""Constitutive response of muscle, aponeurosis, tendon, and fat.

Nearly incompressible, transversely isotropic behaviour split into

* a volumetric part driven by an independent dilation field D,
* an isotropic isochoric base material (Yeoh energies, volume-fraction
  mixed for muscle),
* an along-fibre stress (Hill-type active + passive for muscle, a
  passive toe-linear curve for aponeurosis/tendon),

all expressed through the Kirchhoff stress tau = p*J*I + dev(tau_bar).
The curve functions are vectorized over numpy arrays; the ``*_slope``
companions feed the consistent spatial tangent. Scalar operations wrap
the same kernels.

Voigt convention used throughout: (11, 22, 33, 12, 13, 23) with
engineering shear strain, so a 4th-order minor-symmetric tensor maps to
a plain 6x6 matrix and symmetric 2nd-order tensors to plain 6-vectors.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from importlib.resources import files as _pkg_files

import numpy as np

from .errors import NonPositiveDilation, ParseError, ValidationError
from .kinematics import (DeformationBatch, DeformationPoint, RatePoint,
                         deformation_batch)

_I3 = np.eye(3)

TISSUE_KINDS = ("muscle", "aponeurosis", "tendon", "fat-region")

# Voigt index pairs and constant matrices (see module docstring).
_VOIGT_PAIRS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))
VEC_I = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
ISYM_VOIGT = np.diag([1.0, 1.0, 1.0, 0.5, 0.5, 0.5])
PDEV_VOIGT = ISYM_VOIGT - np.outer(VEC_I, VEC_I) / 3.0


def sym_to_voigt(t: np.ndarray) -> np.ndarray:
    """Map symmetric (...,3,3) tensors to (...,6) Voigt vectors."""
    return np.stack([t[..., i, j] for i, j in _VOIGT_PAIRS], axis=-1)


def voigt_to_sym(v: np.ndarray) -> np.ndarray:
    """Inverse of sym_to_voigt."""
    t = np.zeros(v.shape[:-1] + (3, 3))
    for k, (i, j) in enumerate(_VOIGT_PAIRS):
        t[..., i, j] = v[..., k]
        t[..., j, i] = v[..., k]
    return t


# ---------------------------------------------------------------------------
# parameters

@dataclass(frozen=True)
class TissueParams:
    """Material constants for one tissue kind.

    ``yeoh_c`` is the base-material coefficient set in Pa. For muscle the
    volume-fraction mixture runs over separate ECM/cell sets, which
    default to the base set so the mixture collapses to the tabulated
    behaviour unless overridden.
    """

    tissue_kind: str
    kappa: float
    yeoh_c: tuple[float, float, float]
    alpha: float = 0.0
    beta: float = 0.0
    sigma0: float = 2.0e5
    sigma0_apo: float = 3.0e7
    sigma0_ten: float = 3.0e7
    epsbar0: float = 5.0
    c_sarco: float = 0.0
    rho0: float = 1060.0
    yeoh_c_ecm: tuple[float, float, float] | None = None
    yeoh_c_cell: tuple[float, float, float] | None = None
    fat_w1: float = 0.13e6
    kappa_ecm: float = 1.0e6
    kappa_cell: float = 1.0e7
    kappa_fat: float = 1.0e7
    shift_passive: bool = False
    apo_regularized: bool = False

    @property
    def c_ecm(self) -> tuple[float, float, float]:
        return self.yeoh_c_ecm if self.yeoh_c_ecm is not None else self.yeoh_c

    @property
    def c_cell(self) -> tuple[float, float, float]:
        return self.yeoh_c_cell if self.yeoh_c_cell is not None else self.yeoh_c

    def validate(self) -> "TissueParams":
        if self.tissue_kind not in TISSUE_KINDS:
            raise ValidationError(f"unknown tissue kind {self.tissue_kind!r}")
        if not self.kappa > 0.0:
            raise ValidationError(f"kappa must be positive, got {self.kappa}")
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must lie in [0,1], got {v}")
        if not self.epsbar0 > 0.0:
            raise ValidationError(f"epsbar0 must be positive, got {self.epsbar0}")
        if not self.rho0 > 0.0:
            raise ValidationError(f"rho0 must be positive, got {self.rho0}")
        if self.tissue_kind == "muscle":
            kmix = mix_bulk_modulus(self.alpha, self.beta, self.kappa_ecm,
                                    self.kappa_cell, self.kappa_fat)
            if abs(self.kappa - kmix) > 1e-9 * max(abs(kmix), 1.0):
                raise ValidationError(
                    f"muscle kappa {self.kappa} inconsistent with mixture value {kmix}")
        return self


def mix_bulk_modulus(alpha: float, beta: float, kappa_ecm: float,
                     kappa_cell: float, kappa_fat: float) -> float:
    """Volume-fraction mixture of constituent bulk moduli.

    kappa = (1-beta)*(alpha*kappa_ecm + (1-alpha)*kappa_cell) + beta*kappa_fat
    """
    return (1.0 - beta) * (alpha * kappa_ecm + (1.0 - alpha) * kappa_cell) \
        + beta * kappa_fat


def volumetric_response(D, kappa):
    """Volumetric energy, pressure, and pressure slope at dilation D.

    psi = kappa/4 (D^2 - 2 ln D - 1); p = psi' = kappa/2 (D - 1/D);
    dp_dD = kappa/2 (1 + 1/D^2). Accepts scalars or arrays; raises
    NonPositiveDilation if any entry of D is <= 0.
    """
    D = np.asarray(D, dtype=float)
    if np.any(D <= 0.0):
        raise NonPositiveDilation(f"dilation must be positive, got min {D.min()}")
    psi = 0.25 * kappa * (D * D - 2.0 * np.log(D) - 1.0)
    p = 0.5 * kappa * (D - 1.0 / D)
    dp_dD = 0.5 * kappa * (1.0 + 1.0 / (D * D))
    if psi.ndim == 0:
        return float(psi), float(p), float(dp_dD)
    return psi, p, dp_dD


def yeoh_energy_derivs(I1bar, c1: float, c2: float, c3: float):
    """First and second derivative of the Yeoh energy w.r.t. I1bar."""
    x = np.asarray(I1bar, dtype=float) - 3.0
    w1 = c1 + 2.0 * c2 * x + 3.0 * c3 * x * x
    w11 = 2.0 * c2 + 6.0 * c3 * x
    if w1.ndim == 0:
        return float(w1), float(w11)
    return w1, w11


def yeoh_uniaxial_oracle(lam: float, c1: float, c2: float, c3: float) -> float:
    """Closed-form uniaxial Cauchy stress of an incompressible Yeoh solid.

    Reproduced exactly as published, including the linear (not squared)
    c3 term; kept for documentation/regression only. The solver derives
    stress from yeoh_energy_derivs instead.
    """
    x = lam * lam + 2.0 / lam - 3.0
    return 2.0 * (lam * lam - 1.0 / lam) * (c1 + 2.0 * c2 * x + 3.0 * c3 * x)


# ---------------------------------------------------------------------------
# along-fibre curves (dimensionless), each with a slope companion

def _pass_kernel(lam: np.ndarray):
    """Muscle passive curve value and slope (piecewise quadratic/linear)."""
    lam = np.asarray(lam, dtype=float)
    # interior knots evaluate through the right piece so the printed
    # knot constants are returned exactly
    conds = [lam <= 1.0,
             lam < 1.25,
             lam < 1.5,
             lam < 1.65]
    d1, d2, d3 = lam - 1.0, lam - 1.25, lam - 1.5
    vals = np.select(conds, [
        np.zeros_like(lam),
        2.353 * d1 * d1,
        3.44 * d2 * d2 + 1.18 * d2 + 0.147,
        0.427 * d3 * d3 + 2.90 * d3 + 0.656,
    ], default=3.023 * (lam - 1.65) + 1.1)
    slopes = np.select(conds, [
        np.zeros_like(lam),
        2.0 * 2.353 * d1,
        2.0 * 3.44 * d2 + 1.18,
        2.0 * 0.427 * d3 + 2.90,
    ], default=3.023)
    return vals, slopes


def passive_fibre_stress(lambdabar):
    """Dimensionless passive along-fibre stress of muscle."""
    v, _ = _pass_kernel(lambdabar)
    return float(v) if v.ndim == 0 else v


_FL_AMP = np.array([0.642, 0.325, 0.328, 0.015, 0.139, 0.0018, 0.012])
_FL_FREQ = np.array([1.29, 5.31, 6.74, 19.8, 8.04, 32.2, 23.2])
_FL_PHASE = np.array([0.629, -4.52, 1.69, -7.39, 2.54, -6.45, -2.64])


def _force_length_kernel(y: np.ndarray):
    """Force-length sinusoid sum at shifted stretch y, with slope.

    Supported on [0.4, 1.75]; negative excursions of the fit inside the
    support are floored at zero (slope zeroed there too).
    """
    y = np.asarray(y, dtype=float)
    arg = np.multiply.outer(y, _FL_FREQ) + _FL_PHASE
    s = np.sin(arg) @ _FL_AMP
    ds = (np.cos(arg) * _FL_FREQ) @ _FL_AMP
    inside = (y >= 0.4) & (y <= 1.75) & (s > 0.0)
    vals = np.where(inside, s, 0.0)
    slopes = np.where(inside, ds, 0.0)
    return vals, slopes


def active_force_length(lambdabar, c_sarco: float = 0.0):
    """Dimensionless active force-length factor at lambdabar + c_sarco."""
    v, _ = _force_length_kernel(np.asarray(lambdabar, dtype=float) + c_sarco)
    return float(v) if v.ndim == 0 else v


def _force_velocity_kernel(z: np.ndarray):
    """Force-velocity factor in the normalized rate z = epsbar/epsbar0.

    Piecewise cubic with knots at (-1.2, -0.25, 0, 0.05, 0.75); zero for
    fast shortening below the first knot, plateau 1.5950 beyond the last.
    The printed coefficients are continuous only in the normalized
    variable, so the normalization happens before this kernel.
    """
    z = np.asarray(z, dtype=float)
    w1, w2, w3, w4 = z + 1.2, z + 0.25, z, z - 0.05
    conds = [z <= -1.2,
             z < -0.25,
             z < 0.0,
             z < 0.05,
             z < 0.75]
    return np.select(conds, [
        np.zeros_like(z),
        0.2579 * w1 ** 3 + 0.1431 * w1 ** 2,
        29.8255 * w2 ** 3 - 0.9435 * w2 ** 2 + 0.9703 * w2 + 0.3503,
        -3165.6847 * w3 ** 3 + 186.1961 * w3 ** 2 + 6.0908 * w3 + 1.0,
        0.6882 * w4 ** 3 - 1.4139 * w4 ** 2 + 0.9678 * w4 + 1.3743,
    ], default=1.5950)


def force_velocity(epsbar, epsbar0: float):
    """Dimensionless force-velocity factor at fibre strain rate epsbar."""
    if not epsbar0 > 0.0:
        raise ValidationError(f"epsbar0 must be positive, got {epsbar0}")
    v = _force_velocity_kernel(np.asarray(epsbar, dtype=float) / epsbar0)
    return float(v) if v.ndim == 0 else v


def _apo_kernel(lam: np.ndarray, regularized: bool):
    """Aponeurosis/tendon passive curve value and slope.

    The published fit starts at 0.01 for stretch just above 1 (a genuine
    jump from the slack value 0); ``regularized`` blends the first
    quadratic piece smoothly to zero over [1.0, 1.01], removing the jump
    while keeping value and slope continuous at both window ends. The
    quadratic pieces use the linear coefficient 10.327640 on
    [1.01, 1.02]; see the parameter provenance notes shipped alongside
    the repository.
    """
    lam = np.asarray(lam, dtype=float)
    d1, d2, d3, d4 = lam - 1.0, lam - 1.01, lam - 1.02, lam - 1.15
    conds = [lam <= 1.0, lam < 1.01, lam < 1.02, lam < 1.15]
    vals = np.select(conds, [
        np.zeros_like(lam),
        515.882034 * d1 * d1 + 0.01 * d1 + 0.01,
        600.590242 * d2 * d2 + 10.327640 * d2 + 0.06168820,
        -9.975321 * d3 * d3 + 22.3394455 * d3 + 0.2250236,
    ], default=19.7458618 * d4 + 2.960568)
    slopes = np.select(conds, [
        np.zeros_like(lam),
        2.0 * 515.882034 * d1 + 0.01,
        2.0 * 600.590242 * d2 + 10.327640,
        2.0 * (-9.975321) * d3 + 22.3394455,
    ], default=19.7458618)
    if regularized:
        s = np.clip(d1 / 1e-2, 0.0, 1.0)
        in_ramp = (d1 > 0.0) & (d1 < 1e-2)
        blend = s * s * (3.0 - 2.0 * s)
        dblend = 6.0 * s * (1.0 - s) / 1e-2
        slopes = np.where(in_ramp, blend * slopes + dblend * vals, slopes)
        vals = np.where(in_ramp, blend * vals, vals)
    return vals, slopes


def apo_ten_fibre_stress(lambdabar, regularized: bool = False):
    """Dimensionless passive along-fibre stress of aponeurosis/tendon."""
    v, _ = _apo_kernel(lambdabar, regularized)
    return float(v) if v.ndim == 0 else v


@dataclass(frozen=True)
class MuscleFibreStress:
    total: float
    active: float
    passive: float


def muscle_fibre_stress(lambdabar: float, epsbar: float, activation: float,
                        params: TissueParams,
                        quasi_static: bool = False) -> MuscleFibreStress:
    """Hill-type along-fibre stress of muscle in Pa.

    total = sigma0 * (a * len(lambdabar + c_sarco) * vel(epsbar) + pass).
    Quasi-static evaluation pins the velocity factor at 1. The passive
    curve takes the unshifted stretch unless ``shift_passive`` is set.
    """
    if not 0.0 <= activation <= 1.0:
        raise ValidationError(f"activation must lie in [0,1], got {activation}")
    len_v, _ = _force_length_kernel(np.asarray(lambdabar + params.c_sarco))
    vel = 1.0 if quasi_static else float(
        _force_velocity_kernel(np.asarray(epsbar / params.epsbar0)))
    lam_p = lambdabar + params.c_sarco if params.shift_passive else lambdabar
    pass_v, _ = _pass_kernel(np.asarray(lam_p))
    active = params.sigma0 * activation * float(len_v) * vel
    passive = params.sigma0 * float(pass_v)
    return MuscleFibreStress(total=active + passive, active=active, passive=passive)


# ---------------------------------------------------------------------------
# pointwise stress and tangent

@dataclass
class StressPoint:
    """Kirchhoff stress and bookkeeping at one material point."""

    tau: np.ndarray
    tau_iso: np.ndarray
    p_contrib: float
    decomposition: dict[str, np.ndarray]
    C_tangent: np.ndarray | None = None


@dataclass
class TangentPoint:
    """Spatial tangent blocks at one material point.

    C is the 6x6 Voigt displacement tangent (Kirchhoff level, holding
    the rate factor fixed); dtau_dp the pressure coupling vec(J*I);
    dp_dD the volumetric stiffness at the given dilation.
    """

    C: np.ndarray
    dtau_dp: np.ndarray
    dp_dD: float


def _base_shear(I1bar, params: TissueParams):
    """Mixture-weighted base-material energy derivatives (w1, w11)."""
    if params.tissue_kind == "muscle":
        w1e, w11e = yeoh_energy_derivs(I1bar, *params.c_ecm)
        w1c, w11c = yeoh_energy_derivs(I1bar, *params.c_cell)
        a, b = params.alpha, params.beta
        w1 = (1.0 - b) * (a * w1e + (1.0 - a) * w1c) + b * params.fat_w1
        w11 = (1.0 - b) * (a * w11e + (1.0 - a) * w11c)
        return w1, w11
    if params.tissue_kind == "fat-region":
        z = np.zeros_like(np.asarray(I1bar, dtype=float))
        return params.fat_w1 + z, z
    return yeoh_energy_derivs(I1bar, *params.yeoh_c)


def _fibre_closure(lambdabar, epsbar, activation, params: TissueParams,
                   quasi_static: bool):
    """Weighted along-fibre stress and its stretch derivative.

    Returns (sigma_f, dsigma_f_dlam, sigma_passive, sigma_active) where
    sigma_f multiplies (abar x abar)/I4bar in tau_bar. Muscle carries the
    (1 - beta) homogenization weight; aponeurosis/tendon use their own
    stress scale; fat has no fibres.
    """
    lam = np.asarray(lambdabar, dtype=float)
    z = np.zeros_like(lam)
    if params.tissue_kind == "fat-region":
        return z, z, z, z
    if params.tissue_kind in ("aponeurosis", "tendon"):
        s0 = params.sigma0_apo if params.tissue_kind == "aponeurosis" else params.sigma0_ten
        v, dv = _apo_kernel(lam, params.apo_regularized)
        return s0 * v, s0 * dv, s0 * v, z
    # muscle
    len_v, len_d = _force_length_kernel(lam + params.c_sarco)
    if quasi_static:
        vel = np.ones_like(lam)
    else:
        vel = _force_velocity_kernel(np.asarray(epsbar, dtype=float) / params.epsbar0)
    lam_p = lam + params.c_sarco if params.shift_passive else lam
    pas_v, pas_d = _pass_kernel(lam_p)
    a = np.asarray(activation, dtype=float)
    w = (1.0 - params.beta) * params.sigma0
    act = w * a * len_v * vel
    pas = w * pas_v
    dtot = w * (a * len_d * vel + pas_d)
    return act + pas, dtot, pas, act


def stress_tangent_batch(db: DeformationBatch, epsbar, p, activation,
                         params: TissueParams, fibre_on: bool = True,
                         quasi_static: bool = False, want_tangent: bool = True):
    """Vectorized Kirchhoff stress (and optional Voigt tangent) arrays.

    db carries the deformation measures; epsbar/p/activation broadcast
    over the batch. Returns (tau, tau_bar, C) with C None when
    want_tangent is false. The tangent holds epsbar fixed, matching a
    scheme in which velocity is explicit.
    """
    p = np.asarray(p, dtype=float)
    w1, w11 = _base_shear(db.I1bar, params)
    tau_bar = 2.0 * w1[..., None, None] * db.Bbar
    use_fibre = fibre_on and params.tissue_kind != "fat-region" and db.abar is not None
    if use_fibre:
        sig_f, dsig_f, _, _ = _fibre_closure(db.lambdabar, epsbar, activation,
                                             params, quasi_static)
        aa = db.abar[..., :, None] * db.abar[..., None, :]
        tau_bar = tau_bar + (sig_f / db.I4bar)[..., None, None] * aa
    tr = np.trace(tau_bar, axis1=-2, axis2=-1)
    dev_tau_bar = tau_bar - (tr / 3.0)[..., None, None] * _I3
    tau = (p * db.J)[..., None, None] * _I3 + dev_tau_bar
    if not want_tangent:
        return tau, tau_bar, None

    dev_bbar = db.Bbar - (db.I1bar / 3.0)[..., None, None] * _I3
    vb = sym_to_voigt(dev_bbar)
    vt = sym_to_voigt(dev_tau_bar)
    C = 4.0 * w11[..., None, None] * (vb[..., :, None] * vb[..., None, :])
    C = C + (2.0 / 3.0) * tr[..., None, None] * PDEV_VOIGT
    C = C - (2.0 / 3.0) * (vt[..., :, None] * VEC_I[None, :]
                           + VEC_I[:, None] * vt[..., None, :])
    C = C + (p * db.J)[..., None, None] * (np.outer(VEC_I, VEC_I) - 2.0 * ISYM_VOIGT)
    if use_fibre:
        # d(psi_fibre)/dI4 twice: psi44 = sig_f'/(4 lam I4) - sig_f/(2 I4^2)
        psi44 = dsig_f / (4.0 * db.lambdabar * db.I4bar) \
            - sig_f / (2.0 * db.I4bar * db.I4bar)
        dev_aa = aa - (db.I4bar / 3.0)[..., None, None] * _I3
        va = sym_to_voigt(dev_aa)
        C = C + 4.0 * psi44[..., None, None] * (va[..., :, None] * va[..., None, :])
    return tau, tau_bar, C


def evaluate_stress(dp: DeformationPoint, rp: RatePoint | None, p: float,
                    activation: float, params: TissueParams,
                    fibre_on: bool = True) -> StressPoint:
    """Kirchhoff stress with labeled contributions at one point.

    rp = None evaluates quasi-statically (velocity factor pinned at 1).
    The decomposition tensors (volumetric, base, fibre_passive,
    fibre_active) sum to tau.
    """
    w1, _ = _base_shear(dp.I1bar, params)
    base = 2.0 * w1 * dp.Bbar
    base_dev = base - (np.trace(base) / 3.0) * _I3
    vol = p * dp.J * _I3
    use_fibre = fibre_on and params.tissue_kind != "fat-region" and dp.a0 is not None
    fib_p = np.zeros((3, 3))
    fib_a = np.zeros((3, 3))
    if use_fibre:
        epsbar = 0.0 if rp is None else rp.epsbar
        sig_f, _, sig_p, sig_a = _fibre_closure(
            np.asarray(dp.lambdabar), epsbar, activation, params,
            quasi_static=rp is None)
        aa = np.outer(dp.a_spatial, dp.a_spatial)
        dev_aa_term = aa / dp.I4bar - _I3 / 3.0
        fib_p = float(sig_p) * dev_aa_term
        fib_a = float(sig_a) * dev_aa_term
    tau_iso = base_dev + fib_p + fib_a
    tau = vol + tau_iso
    return StressPoint(tau=tau, tau_iso=tau_iso, p_contrib=p * dp.J,
                       decomposition={"volumetric": vol, "base": base_dev,
                                      "fibre_passive": fib_p,
                                      "fibre_active": fib_a})


def evaluate_tangent(dp: DeformationPoint, rp: RatePoint | None, p: float,
                     D: float, activation: float, params: TissueParams,
                     fibre_on: bool = True) -> TangentPoint:
    """Consistent spatial tangent blocks at one point (see TangentPoint)."""
    a0 = dp.a0 if dp.a0 is not None else None
    grad0_u = dp.F - _I3
    db = deformation_batch(grad0_u[None, ...], None if a0 is None else a0[None, ...])
    epsbar = 0.0 if rp is None else rp.epsbar
    _, _, C = stress_tangent_batch(db, epsbar, p, activation, params,
                                   fibre_on=fibre_on, quasi_static=rp is None,
                                   want_tangent=True)
    _, _, dp_dD = volumetric_response(D, params.kappa)
    return TangentPoint(C=C[0], dtau_dp=dp.J * VEC_I.copy(), dp_dD=dp_dD)


# ---------------------------------------------------------------------------
# material parameter files

_COMMON_KEYS = {"kappa", "rho0"}
_SECTION_KEYS = {
    "muscle": _COMMON_KEYS | {"yeoh_c1", "yeoh_c2", "yeoh_c3", "yeoh_unit",
                              "yeoh_ecm_c1", "yeoh_ecm_c2", "yeoh_ecm_c3",
                              "yeoh_cell_c1", "yeoh_cell_c2", "yeoh_cell_c3",
                              "fat_w1", "kappa_ecm", "kappa_cell", "kappa_fat",
                              "alpha", "beta", "sigma0", "epsbar0", "c_sarco",
                              "shift_passive"},
    "aponeurosis": _COMMON_KEYS | {"yeoh_c1", "yeoh_c2", "yeoh_c3", "yeoh_unit",
                                   "sigma0", "regularized"},
    "tendon": _COMMON_KEYS | {"yeoh_c1", "yeoh_c2", "yeoh_c3", "yeoh_unit",
                              "sigma0", "regularized"},
    "fat-region": _COMMON_KEYS | {"w1"},
}
_UNIT_SCALE = {"Pa": 1.0, "kPa": 1.0e3, "MPa": 1.0e6}


def _parse_bool(raw: str, key: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValidationError(f"{key}: expected a boolean, got {raw!r}")


def load_material_file(path) -> dict[str, TissueParams]:
    """Parse a per-tissue key-value parameter file.

    Sections name tissue kinds; unknown sections or keys are rejected.
    Yeoh coefficients may carry a yeoh_unit of Pa/kPa/MPa and are stored
    in Pa. Muscle kappa is derived from the constituent moduli.
    """
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cp.read_file(fh, source=str(path))
    except OSError as exc:
        raise ParseError(f"cannot read material file: {exc}", path=str(path)) from exc
    except configparser.Error as exc:
        raise ParseError(f"malformed material file: {exc}", path=str(path)) from exc

    out: dict[str, TissueParams] = {}
    for section in cp.sections():
        if section not in TISSUE_KINDS:
            raise ValidationError(f"{path}: unknown tissue section [{section}]")
        raw = dict(cp[section])
        unknown = set(raw) - _SECTION_KEYS[section]
        if unknown:
            raise ValidationError(
                f"{path}: unknown key(s) {sorted(unknown)} in section [{section}]")

        def num(key: str, default: float | None = None) -> float:
            if key not in raw:
                if default is None:
                    raise ValidationError(f"{path}: [{section}] missing key {key!r}")
                return default
            try:
                return float(raw[key])
            except ValueError as exc:
                raise ValidationError(
                    f"{path}: [{section}] {key} is not a number: {raw[key]!r}") from exc

        scale = _UNIT_SCALE.get(raw.get("yeoh_unit", "Pa"))
        if scale is None:
            raise ValidationError(f"{path}: [{section}] unknown yeoh_unit "
                                  f"{raw['yeoh_unit']!r}")
        rho0 = num("rho0", 1060.0)
        if section == "muscle":
            c = (num("yeoh_c1") * scale, num("yeoh_c2") * scale, num("yeoh_c3") * scale)
            c_ecm = c_cell = None
            if any(f"yeoh_ecm_c{k}" in raw for k in (1, 2, 3)):
                c_ecm = tuple(num(f"yeoh_ecm_c{k}") * scale for k in (1, 2, 3))
            if any(f"yeoh_cell_c{k}" in raw for k in (1, 2, 3)):
                c_cell = tuple(num(f"yeoh_cell_c{k}") * scale for k in (1, 2, 3))
            ke, kc, kf = num("kappa_ecm", 1.0e6), num("kappa_cell", 1.0e7), \
                num("kappa_fat", 1.0e7)
            alpha, beta = num("alpha"), num("beta")
            out[section] = TissueParams(
                tissue_kind="muscle",
                kappa=num("kappa", mix_bulk_modulus(alpha, beta, ke, kc, kf)),
                yeoh_c=c, yeoh_c_ecm=c_ecm, yeoh_c_cell=c_cell,
                alpha=alpha, beta=beta, sigma0=num("sigma0"),
                epsbar0=num("epsbar0", 5.0), c_sarco=num("c_sarco", 0.0),
                rho0=rho0, fat_w1=num("fat_w1", 0.13e6),
                kappa_ecm=ke, kappa_cell=kc, kappa_fat=kf,
                shift_passive=_parse_bool(raw.get("shift_passive", "false"),
                                          "shift_passive"),
            ).validate()
        elif section in ("aponeurosis", "tendon"):
            c = (num("yeoh_c1") * scale, num("yeoh_c2") * scale, num("yeoh_c3") * scale)
            s0 = num("sigma0")
            out[section] = TissueParams(
                tissue_kind=section, kappa=num("kappa"), yeoh_c=c,
                sigma0_apo=s0, sigma0_ten=s0, rho0=rho0,
                apo_regularized=_parse_bool(raw.get("regularized", "false"),
                                            "regularized"),
            ).validate()
        else:  # fat-region
            out[section] = TissueParams(
                tissue_kind="fat-region", kappa=num("kappa"),
                yeoh_c=(0.0, 0.0, 0.0), fat_w1=num("w1", 0.13e6), rho0=rho0,
            ).validate()
    return out


def default_materials() -> dict[str, TissueParams]:
    """The bundled tissue parameter library."""
    return load_material_file(
        _pkg_files("myofem").joinpath("data/default_materials.params"))


def with_overrides(params: TissueParams, **kw) -> TissueParams:
    """Functional update of a TissueParams, re-validated.

    Changing alpha/beta (or constituent moduli) without an explicit kappa
    recomputes the muscle mixture value.
    """
    if params.tissue_kind == "muscle" and "kappa" not in kw:
        probe = replace(params, **kw)
        kw = dict(kw, kappa=mix_bulk_modulus(probe.alpha, probe.beta,
                                             probe.kappa_ecm, probe.kappa_cell,
                                             probe.kappa_fat))
    return replace(params, **kw).validate()
