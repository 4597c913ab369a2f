"""Pointwise finite-strain kinematics.

Deformation gradient and its multiplicative volumetric/isochoric split,
fibre stretch measures, and the modified fibre strain rate. The public
operations work on single points (dense 3x3 tensors); the ``*_batch``
helpers evaluate the same formulas over arrays of points and are what the
assembly loop calls.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonPositiveJacobian

_I3 = np.eye(3)


@dataclass
class DeformationPoint:
    """Deformation measures at one material point.

    Fibre-related fields stay None until ``fibre_measures`` is applied.
    """

    F: np.ndarray
    J: float
    Fbar: np.ndarray
    Cbar: np.ndarray
    Bbar: np.ndarray
    I1bar: float
    a0: np.ndarray | None = None
    I4bar: float | None = None
    lam: float | None = None
    lambdabar: float | None = None
    a_spatial: np.ndarray | None = None


@dataclass
class RatePoint:
    """Velocity-gradient derived rates at one material point."""

    l: np.ndarray
    d: np.ndarray
    epsbar: float

    @classmethod
    def zero(cls) -> "RatePoint":
        z = np.zeros((3, 3))
        return cls(l=z, d=z.copy(), epsbar=0.0)


def deformation_gradient(grad0_u: np.ndarray) -> DeformationPoint:
    """Build F = I + grad0(u) and its volumetric/isochoric split.

    Raises NonPositiveJacobian if det F <= 0 (inverted point); the caller
    is expected to reject the Newton trial step.
    """
    grad0_u = np.asarray(grad0_u, dtype=float)
    F = _I3 + grad0_u
    J = float(np.linalg.det(F))
    if J <= 0.0:
        raise NonPositiveJacobian(f"det F = {J} <= 0", j_min=J)
    Fbar = J ** (-1.0 / 3.0) * F
    Cbar = Fbar.T @ Fbar
    Bbar = Fbar @ Fbar.T
    return DeformationPoint(F=F, J=J, Fbar=Fbar, Cbar=Cbar, Bbar=Bbar,
                            I1bar=float(np.trace(Cbar)))


def fibre_measures(dp: DeformationPoint, a0: np.ndarray) -> DeformationPoint:
    """Attach fibre stretch quantities for reference direction a0.

    a0 must be a unit vector (checked to 1e-10). Populates lambda,
    lambdabar, I4bar and the deformed fibre vector a_spatial = Fbar a0.
    """
    a0 = np.asarray(a0, dtype=float)
    if abs(np.linalg.norm(a0) - 1.0) > 1e-10:
        raise ValueError(f"fibre direction must be unit length, got |a0| = {np.linalg.norm(a0)}")
    dp.a0 = a0
    fa = dp.F @ a0
    dp.lam = float(np.linalg.norm(fa))
    dp.lambdabar = dp.J ** (-1.0 / 3.0) * dp.lam
    dp.I4bar = float(a0 @ dp.Cbar @ a0)
    dp.a_spatial = dp.Fbar @ a0
    return dp


def fibre_strain_rate(dp: DeformationPoint, l: np.ndarray) -> RatePoint:
    """Modified fibre strain rate from a spatial velocity gradient.

    epsbar = (Fbar a0)^T dev(d) (Fbar a0) / lambdabar with d = sym(l);
    the deviatoric projection makes the rate insensitive to volumetric
    velocity fields.
    """
    if dp.a_spatial is None or dp.lambdabar is None:
        raise ValueError("DeformationPoint lacks fibre data; call fibre_measures first")
    if dp.lambdabar <= 0.0:
        raise ValueError("lambdabar must be positive")
    l = np.asarray(l, dtype=float)
    d = 0.5 * (l + l.T)
    dev_d = d - (np.trace(d) / 3.0) * _I3
    abar = dp.a_spatial
    epsbar = float(abar @ dev_d @ abar) / dp.lambdabar
    return RatePoint(l=l, d=d, epsbar=epsbar)


# ---------------------------------------------------------------------------
# batched versions used by assembly (shapes (..., 3, 3) / (..., 3))

@dataclass
class DeformationBatch:
    """Deformation measures over an array of points (assembly internal)."""

    F: np.ndarray
    J: np.ndarray
    Finv: np.ndarray
    Fbar: np.ndarray
    Bbar: np.ndarray
    I1bar: np.ndarray
    a0: np.ndarray | None = None
    abar: np.ndarray | None = None  # Fbar a0
    lambdabar: np.ndarray | None = None
    I4bar: np.ndarray = field(default=None)  # type: ignore[assignment]


def deformation_batch(grad0_u: np.ndarray, a0: np.ndarray | None = None) -> DeformationBatch:
    """Vectorized deformation measures; grad0_u has shape (..., 3, 3).

    a0, when given, broadcasts against the batch shape as (..., 3).
    Raises NonPositiveJacobian when any point has det F <= 0 (the flat
    index of the first offending point is attached).
    """
    F = grad0_u + _I3
    J = np.linalg.det(F)
    if np.any(J <= 0.0):
        flat = int(np.argwhere((J <= 0.0).ravel())[0][0])
        raise NonPositiveJacobian(f"det F <= 0 at point {flat}", cell=flat,
                                  j_min=float(J.min()))
    Finv = np.linalg.inv(F)
    s = J ** (-1.0 / 3.0)
    Fbar = s[..., None, None] * F
    Bbar = Fbar @ np.swapaxes(Fbar, -1, -2)
    I1bar = np.trace(Bbar, axis1=-2, axis2=-1)
    out = DeformationBatch(F=F, J=J, Finv=Finv, Fbar=Fbar, Bbar=Bbar, I1bar=I1bar)
    if a0 is not None:
        a0b = np.broadcast_to(a0, F.shape[:-2] + (3,))
        abar = np.einsum("...ij,...j->...i", Fbar, a0b)
        out.a0 = a0b
        out.abar = abar
        out.I4bar = np.einsum("...i,...i->...", abar, abar)
        out.lambdabar = np.sqrt(out.I4bar)
    return out


def strain_rate_batch(grad0_v: np.ndarray, Finv: np.ndarray,
                      abar: np.ndarray, lambdabar: np.ndarray) -> np.ndarray:
    """Vectorized modified fibre strain rate.

    grad0_v is the reference gradient of the (lagged) velocity field and
    Finv the inverse deformation gradient it is paired with, so the
    spatial velocity gradient is l = grad0(v) F^{-1}.
    """
    l = grad0_v @ Finv
    d = 0.5 * (l + np.swapaxes(l, -1, -2))
    tr = np.trace(d, axis1=-2, axis2=-1)
    dev = d - (tr / 3.0)[..., None, None] * _I3
    num = np.einsum("...i,...ij,...j->...", abar, dev, abar)
    return num / lambdabar
