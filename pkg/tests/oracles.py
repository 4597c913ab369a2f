"""Hand-derived reference values frozen for the test suite.

Every quantity here is computed from the closed-form material fits and
geometry definitions using plain arithmetic — independently of the
package implementation — and then frozen as literals. Run

    python3 -m tests.oracles

to re-derive all literals and fail loudly if any of them drifts. Tests
compare package output against the frozen literals, never against the
package's own functions.
"""

from __future__ import annotations

import math

# ---------------------------------------------------------------------------
# material scales shared by the default tissue set
# ---------------------------------------------------------------------------

SIGMA0_MUSCLE = 2.0e5      # Pa, peak isometric fibre stress
SIGMA0_APO = 3.0e7         # Pa, aponeurosis fibre stress scale
SIGMA0_TEN = 3.0e7         # Pa, tendon fibre stress scale
EPSBAR0 = 5.0              # 1/s, fibre strain-rate scale
RHO0 = 1060.0              # kg/m^3, reference density
KAPPA_ECM = 1.0e6          # Pa
KAPPA_CELL = 1.0e7         # Pa
KAPPA_FAT = 1.0e7          # Pa
YEOH_MUSCLE = (3703.0, -707.7, 123.2)   # Pa, base-material coefficients

ALPHA_TYPICAL, BETA_TYPICAL = 0.02, 0.1
ALPHA_STIFF, BETA_STIFF = 0.4, 0.2


def mix_bulk_modulus(alpha: float, beta: float,
                     kappa_ecm: float = KAPPA_ECM,
                     kappa_cell: float = KAPPA_CELL,
                     kappa_fat: float = KAPPA_FAT) -> float:
    """Convex mixture of compartment bulk moduli."""
    return (1.0 - beta) * (alpha * kappa_ecm
                           + (1.0 - alpha) * kappa_cell) + beta * kappa_fat


# frozen mixture values (Pa)
MIX_BULK_TYPICAL = 9.838e6          # alpha=0.02, beta=0.1
MIX_BULK_STIFF = 7.12e6             # alpha=0.4,  beta=0.2
# wave speed of the near-incompressible response in default muscle (m/s)
WAVE_SPEED_TYPICAL = 96.33863231057258


# ---------------------------------------------------------------------------
# along-fibre muscle curves
# ---------------------------------------------------------------------------

def passive_force_length(lam: float) -> float:
    """Dimensionless passive along-fibre muscle stress.

    Interior knots evaluate through the right-hand piece so the printed
    knot constants (0.147, 0.656, 1.1) are returned exactly.
    """
    if lam <= 1.0:
        return 0.0
    if lam < 1.25:
        d = lam - 1.0
        return 2.353 * d * d
    if lam < 1.5:
        d = lam - 1.25
        return 3.44 * d * d + 1.18 * d + 0.147
    if lam < 1.65:
        d = lam - 1.5
        return 0.427 * d * d + 2.90 * d + 0.656
    return 3.023 * (lam - 1.65) + 1.1


def active_force_length(lam: float) -> float:
    """Dimensionless active along-fibre stress at optimal rate (sum of sines)."""
    if not 0.4 <= lam <= 1.75:
        return 0.0
    return (0.642 * math.sin(1.29 * lam + 0.629)
            + 0.325 * math.sin(5.31 * lam - 4.52)
            + 0.328 * math.sin(6.74 * lam + 1.69)
            + 0.015 * math.sin(19.8 * lam - 7.39)
            + 0.139 * math.sin(8.04 * lam + 2.54)
            + 0.0018 * math.sin(32.2 * lam - 6.45)
            + 0.012 * math.sin(23.2 * lam - 2.64))


def force_velocity(u: float) -> float:
    """Dimensionless rate factor; ``u`` is the strain rate over EPSBAR0."""
    k = (-1.2, -0.25, 0.0, 0.05, 0.75)
    if u <= k[0]:
        return 0.0
    if u < k[1]:
        d = u - k[0]
        return 0.2579 * d ** 3 + 0.1431 * d ** 2
    if u < k[2]:
        d = u - k[1]
        return 29.8255 * d ** 3 - 0.9435 * d ** 2 + 0.9703 * d + 0.3503
    if u < k[3]:
        d = u - k[2]
        return -3165.6847 * d ** 3 + 186.1961 * d ** 2 + 6.0908 * d + 1.0
    if u < k[4]:
        d = u - k[3]
        return 0.6882 * d ** 3 - 1.4139 * d ** 2 + 0.9678 * d + 1.3743
    return 1.5950


def apo_ten_force_length(lam: float) -> float:
    """Dimensionless passive sheet/tendon stress.

    The printed linear coefficient of the second quadratic piece breaks
    slope continuity at the 1.01 knot by exactly 10; the value used here
    (10.327640) restores it and matches the first piece's end slope
    2*515.882034*0.01 + 0.01 to the printed number of digits.
    """
    if lam <= 1.0:
        return 0.0
    if lam < 1.01:
        d = lam - 1.0
        return 515.882034 * d * d + 0.01 * d + 0.01
    if lam < 1.02:
        d = lam - 1.01
        return 600.590242 * d * d + 10.327640 * d + 0.06168820
    if lam < 1.15:
        d = lam - 1.02
        return -9.975321 * d * d + 22.3394455 * d + 0.2250236
    return 19.7458618 * (lam - 1.15) + 2.960568


# frozen curve values
PASSIVE_FL_125 = 0.147
PASSIVE_FL_130 = 0.21459999999999999
PASSIVE_FL_165 = 1.1
ACTIVE_FL_085 = 0.9263191592448162
ACTIVE_FL_090 = 0.9680211350531818
ACTIVE_FL_095 = 0.9937902002015264
ACTIVE_FL_100 = 0.9928298946309396
ACTIVE_FL_110 = 0.864018368627451
VEL_M02 = 0.4001844375
VEL_M04 = 0.22362879999999996
VEL_M08 = 0.03940159999999998
VEL_ZERO = 1.0
VEL_PLATEAU = 1.5950
APO_FL_110 = 1.9483371856000016
APO_FL_115 = 2.960568
APO_FL_125 = 4.93515418


# ---------------------------------------------------------------------------
# base-material uniaxial reference (fibre-free, incompressible limit)
# ---------------------------------------------------------------------------

def yeoh_uniaxial_cauchy(lam: float, c=YEOH_MUSCLE) -> float:
    """Axial Cauchy stress of an incompressible three-term polynomial solid.

    Isochoric uniaxial extension F = diag(lam, lam^-1/2, lam^-1/2) with
    traction-free lateral faces: sigma = 2 (lam^2 - 1/lam) dW/dI1.
    """
    c1, c2, c3 = c
    d = lam * lam + 2.0 / lam - 3.0
    dw = c1 + 2.0 * c2 * d + 3.0 * c3 * d * d
    return 2.0 * (lam * lam - 1.0 / lam) * dw


YEOH_CAUCHY_110 = 2204.703734175208   # Pa at stretch 1.1


# ---------------------------------------------------------------------------
# desk-rig geometry
# ---------------------------------------------------------------------------

# parallel-fibre test slab (m): length, width, height
SLAB_L, SLAB_W, SLAB_H = 0.2080, 0.055, 0.022
SLAB_A0 = 1.21e-3                      # m^2, end-face reference area


def cfl_time_step(dt_in: float, c_max: float, h_min: float,
                  v_max: float) -> float:
    """Largest admissible step: min of the input step and C*h/|v|."""
    if v_max == 0.0:
        return dt_in
    return min(dt_in, c_max * h_min / v_max)


# ---------------------------------------------------------------------------
# self-check: re-derive every frozen literal
# ---------------------------------------------------------------------------

def _selfcheck() -> None:
    def near(a, b, tol=5e-13):
        assert abs(a - b) <= tol * max(1.0, abs(b)), (a, b)

    near(mix_bulk_modulus(1.0, 0.0), KAPPA_ECM)
    near(mix_bulk_modulus(ALPHA_TYPICAL, BETA_TYPICAL), MIX_BULK_TYPICAL)
    near(mix_bulk_modulus(ALPHA_STIFF, BETA_STIFF), MIX_BULK_STIFF)
    near(math.sqrt(MIX_BULK_TYPICAL / RHO0), WAVE_SPEED_TYPICAL)

    near(passive_force_length(1.25), PASSIVE_FL_125)
    near(passive_force_length(1.30), PASSIVE_FL_130)
    near(passive_force_length(1.65), PASSIVE_FL_165)
    near(active_force_length(0.90), ACTIVE_FL_090)
    near(active_force_length(0.95), ACTIVE_FL_095)
    near(active_force_length(1.00), ACTIVE_FL_100)
    near(active_force_length(1.10), ACTIVE_FL_110)
    near(force_velocity(-0.2), VEL_M02)
    near(force_velocity(-0.4), VEL_M04)
    near(force_velocity(-0.8), VEL_M08)
    near(force_velocity(0.0), VEL_ZERO)
    near(force_velocity(0.75), VEL_PLATEAU)
    near(force_velocity(2.0), VEL_PLATEAU)
    near(apo_ten_force_length(1.10), APO_FL_110)
    near(apo_ten_force_length(1.15), APO_FL_115)
    near(apo_ten_force_length(1.25), APO_FL_125)
    near(yeoh_uniaxial_cauchy(1.1), YEOH_CAUCHY_110)
    near(SLAB_W * SLAB_H, SLAB_A0)

    # slope continuity of the sheet curve at its interior knots: the
    # printed knot constants carry ~1e-9 rounding, so the check only
    # needs to rule out an order-one slope break (a misprinted linear
    # coefficient would show up as a jump of 10)
    h = 1e-4
    for knot in (1.01, 1.02, 1.15):
        lo = (apo_ten_force_length(knot - h) - apo_ten_force_length(knot - 2 * h)) / h
        hi = (apo_ten_force_length(knot + 2 * h) - apo_ten_force_length(knot + h)) / h
        assert abs(lo - hi) < 1.0, (knot, lo, hi)

    print("oracle self-check passed")


if __name__ == "__main__":
    _selfcheck()
