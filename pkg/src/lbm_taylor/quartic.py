"""Closed-form fourth-order coefficients and the parameter choices that cancel them.

All functions are written over generic scalars so they run unchanged with
Fraction, QSqrt3 or float inputs. Relaxation parameters are the shifted
inverse rates sigma = 1/s - 1/2.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import QSqrt3, ScalarMode
from .schemes import rate_of

log = logging.getLogger(__name__)

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class QuarticSolution:
    sigmas: dict
    free: tuple[str, ...] = ()
    source: str = ""
    notes: str = ""
    params: dict = field(default_factory=dict)

    @property
    def rates(self) -> dict:
        return {k: rate_of(v) for k, v in self.sigmas.items()}

    def check_rates(self) -> None:
        for k, s in self.rates.items():
            if not 0 < float(s) < 2:
                raise ValueError(f"quartic value {k} gives rate {float(s):g} outside (0, 2)")


def _reject_alpha_one(alpha):
    if alpha == 1:
        raise ValueError("alpha = 1 makes the quartic condition singular")


# ------------------------------------------------------------------ d1q3

def d1q3_thermal_kappas(sigma1, sigma2, alpha, u):
    """Third and fourth order factors; the PDE terms are k3*lam^3/12 and k4*lam^4/12."""
    s1, s2, a = sigma1, sigma2, alpha
    k3 = -u * (2 * (1 - 12 * s1 ** 2) * u ** 2 + 1 - 3 * a - 12 * s1 * s2 * (1 - a) + 24 * s1 ** 2 * a)
    k4 = ((-9 + 60 * s1 ** 2) * s1 * u ** 4
          + (-5 * (1 - 3 * a) * s1 - 3 * (1 - a) * s2 + 12 * (1 - a) * s1 * s2 ** 2
             + 36 * (1 - a) * s1 ** 2 * s2 - 72 * s1 ** 3 * a) * u ** 2
          + a * s1 * (2 - 3 * a - 12 * (1 - a) * s1 * s2 + 12 * a * s1 ** 2))
    return k3, k4


def quartic_d1q3_thermal(sigma1, alpha):
    """sigma2 cancelling the fourth-order diffusion term at zero advection."""
    _reject_alpha_one(alpha)
    return (2 - 3 * alpha + 12 * alpha * sigma1 ** 2) / (12 * sigma1 * (1 - alpha))


def d1q3_fluid_zetas(sigma, alpha):
    s, a = sigma, alpha
    z3 = a * (1 - a) * (1 - 6 * s ** 2)
    z4 = -(1 - a) * s * (1 - 4 * a - 12 * (1 - 2 * a) * s ** 2)
    z5 = a * (1 - a) * (1 - 4 * a - 10 * (5 - 9 * a) * s ** 2 + 120 * (2 - 3 * a) * s ** 4)
    return z3, z4, z5


# Kills the third-order momentum term; mass stays formally second order.
D1Q3_FLUID_ZETA3_SIGMA = 1 / 6 ** 0.5


# ------------------------------------------------------------------ d2q5

def d2q5_kappas(sigma1, sigma3, sigma4, alpha):
    """Fourth-order factors; PDE terms are lam^4 sigma1 (4+alpha) k / 1200."""
    s1, s3, s4, a = sigma1, sigma3, sigma4, alpha
    k40 = 8 - 3 * a + 12 * (a + 4) * s1 ** 2 - 12 * (1 - a) * s1 * s3 - 60 * s1 * s4
    k22 = -6 * (a + 4) + 24 * (a + 4) * s1 ** 2 - 24 * (1 - a) * s1 * s3 + 120 * s1 * s4
    return k40, k22


def quartic_d2q5(sigma1, alpha):
    _reject_alpha_one(alpha)
    if alpha == -4:
        log.warning("alpha = -4 gives zero thermal diffusivity")
    sigma3 = sigma1 * (alpha + 4) / (1 - alpha) - (2 + 3 * alpha) / (12 * sigma1 * (1 - alpha))
    sigma4 = 1 / (6 * sigma1)
    return sigma3, sigma4


def quartic_d2q5_trt(mode: ScalarMode = ScalarMode.QUADRATIC):
    """Two-relaxation-time choice sigma3 = sigma4: (sigma1, sigma3)."""
    r3 = mode.sqrt3()
    return r3 / 6, r3 / 3


# ------------------------------------------------------------------ d2q9 thermal

def d2q9_thermal_kappas(sigma1, sigma3, sigma5, sigma7, sigma8, xi, a4):
    """Printed fourth-order factors at rest; PDE terms are lam^4 xi k / 36."""
    s1, s3, s5, s7, s8 = sigma1, sigma3, sigma5, sigma7, sigma8
    k40 = s1 * (2 * s5 * (s7 - s3) * (a4 - 4) + 6 * xi * (1 - s1 * s7 - 5 * s1 * s3 + 2 * s5 * (s7 - s3)))
    k22 = (2 * (s1 + s5 - 2 * s1 * s5 * (s3 + s7 + 4 * s8)) * (a4 - 4)
           + 12 * xi * (s5 + 3 * s1 - 2 * s1 * s5 * (s3 + s7) - 2 * s1 * s3 * s5
                        - 8 * s1 * s8 * (s1 + s5) + s1 ** 2 * s7))
    return k40, k22


def quartic_d2q9_thermal(sigma1):
    """(xi, a4) cancelling the fourth-order terms when every sigma equals sigma1."""
    den = 1 - 8 * sigma1 ** 2
    if den == 0:
        raise ValueError("sigma1 = 1/sqrt(8) is a pole of the quartic condition")
    xi = Fraction(2, 3) * (1 - 6 * sigma1 ** 2) / den
    a4 = -2 * (1 - 2 * sigma1 ** 2) / den
    return xi, a4


# Equal sigmas of 1/6 with xi = 0 leave no diffusion at all; the expansion only loses its
# cross fourth-order term as well when a4 = 4.
D2Q9_THERMAL_DEGENERATE = {"sigma": Fraction(1, 6), "xi": 0, "a4": 4, "note": "zero diffusivity"}


def quartic_d2q9_thermal_trt(mode: ScalarMode = ScalarMode.QUADRATIC):
    """(sigma1, sigma3) with sigma1 = sigma5 and sigma3 = sigma4 = sigma7 = sigma8."""
    r3 = mode.sqrt3()
    return r3 / 6, r3 / 3


# ------------------------------------------------------------------ d2q9 fluid

def d2q9_fluid_zetas(sigma3, sigma4, sigma5, sigma7):
    """Printed fourth-order momentum factors (z40, z31, z22, z13, z04)."""
    s3, s4, s5, s7 = sigma3, sigma4, sigma5, sigma7
    z40 = (-s3 - s7 - 12 * s3 ** 2 * s7 - 12 * s3 * s7 ** 2 + 18 * s3 ** 2 * s5 + 6 * s5 * s7 ** 2
           - 12 * s3 * s4 * s5 - 24 * s3 * s5 * s7 + 12 * s4 * s5 * s7)
    z31 = (-4 * s3 - 7 * s7 + 18 * s3 ** 2 * s5 + 18 * s5 * s7 ** 2 - 12 * s3 ** 2 * s7
           - 12 * s3 * s7 ** 2 - 12 * s3 * s4 * s5 + 12 * s3 * s5 * s7 + 12 * s4 * s5 * s7 + 12 * s7 ** 3)
    z22 = (-13 * s3 + 6 * s4 - 10 * s7 + 18 * s3 ** 2 * s5 - 12 * s3 ** 2 * s7 - 12 * s3 * s7 ** 2
           + 30 * s5 * s7 ** 2 - 12 * s3 * s4 * s5 + 120 * s3 * s5 * s7 - 60 * s4 * s5 * s7 - 12 * s7 ** 3)
    z13 = (-10 * s3 + 6 * s4 - 7 * s7 + 18 * s3 ** 2 * s5 - 12 * s3 ** 2 * s7 - 12 * s3 * s7 ** 2
           + 18 * s5 * s7 ** 2 + 12 * s3 * s4 * s5 + 84 * s3 * s5 * s7 - 60 * s4 * s5 * s7 + 12 * s7 ** 3)
    z04 = -3 * s7 + 24 * s5 * s7 ** 2 - 12 * s7 ** 3
    return z40, z31, z22, z13, z04


def quartic_d2q9_stokes(mode: ScalarMode = ScalarMode.QUADRATIC):
    """(sigma5, sigma7) cancelling the shear-mode error term."""
    r3 = mode.sqrt3()
    return r3 / 3, r3 / 6


def delta_m3(sigma5, sigma7, kx, ky, lam=1, dt=1):
    """Third-order term of det[A(k) - nu |k|^2 I] for the D2Q9 shear mode.

    The sigma5*sigma7 sign in the first bracket is +8; this is what the
    determinant of the expanded system gives (see tests).
    """
    k2 = kx * kx + ky * ky
    bracket = ((-1 - 4 * sigma7 ** 2 + 8 * sigma5 * sigma7) * (kx ** 4 + ky ** 4)
               + 2 * (1 - 4 * sigma7 ** 2 - 4 * sigma5 * sigma7) * kx * kx * ky * ky)
    return -(dt ** 3 * lam ** 6) * sigma7 * k2 * bracket / 108


def shear_viscosity_d2q9(sigma7, lam=1, dt=1):
    return lam * lam * dt * sigma7 / 3


# ------------------------------------------------------------------ d3q7

def d3q7_kappas(sigma1, sigma4, sigma6, alpha):
    """Fourth-order factors; PDE terms are lam^4 sigma1 (alpha+6) k / 1764."""
    s1, s4, s6, a = sigma1, sigma4, sigma6, alpha
    k400 = 8 - a + 4 * s1 ** 2 * (a + 6) - 56 * s1 * s4 - 4 * (1 - a) * s1 * s6
    k220 = -2 * (a + 6) + 8 * s1 ** 2 * (a + 6) + 56 * s1 * s4 - 8 * (1 - a) * s1 * s6
    return k400, k220


def quartic_d3q7(sigma1, alpha):
    _reject_alpha_one(alpha)
    sigma4 = 1 / (6 * sigma1)
    sigma6 = sigma1 * (alpha + 6) / (1 - alpha) - (4 + 3 * alpha) / (12 * (1 - alpha) * sigma1)
    return sigma4, sigma6


# ------------------------------------------------------------------ d3q19

def quartic_d3q19(sigma4, sigma13, mode: ScalarMode = ScalarMode.QUADRATIC) -> QuarticSolution:
    r3 = mode.sqrt3()
    sol = QuarticSolution(
        sigmas={"s4": mode.coerce(sigma4) if mode is not ScalarMode.QUADRATIC or isinstance(sigma4, QSqrt3)
                else QSqrt3(sigma4),
                "s5": r3 / 6, "s10": r3 / 3, "s13": mode.coerce(sigma13), "s14": r3 / 6, "s16": r3 / 3},
        free=("s4", "s13"),
        source="d3q19 shear-mode closure",
        notes="bulk and energy-square rates are free",
    )
    sol.check_rates()
    return sol


def d3q19_closure_residuals(sigma4, sigma5, sigma10, sigma13, sigma14, sigma16) -> list:
    """Residuals (left minus right side) of the eight shear-mode quartic conditions.

    sigma4 and sigma13 do not enter; they are accepted for a uniform signature.
    """
    s5, s10, s14, s16 = sigma5, sigma10, sigma14, sigma16
    e1 = 2 * s5 * s10 - 4 * s5 ** 2 + 6 * s5 * s16 - 1
    e2 = (80 * s5 ** 4 - 32 * s5 ** 3 * s10 + 24 * s5 ** 2 * s10 * s16 + 12 * s14 * s16 * s5 ** 2
          - 8 * s5 ** 2 - 4 * s5 ** 2 * s10 ** 2 + 12 * s5 ** 2 * s16 ** 2 - 12 * s5 ** 2 * s14 * s10
          - 12 * s5 * s16 * s14 * s10 + 6 * s5 * s14 * s10 ** 2 - 8 * s5 * s16
          + 6 * s5 * s16 ** 2 * s14 - s14 * s16 + s14 * s10 + 1)
    e3 = (-48 * s5 ** 5 * s10 + 44 * s5 ** 4 * s10 ** 2 + 2000 * s5 ** 5 * s16 + 95 * s5 ** 2
          - 16 * s5 ** 4 * s14 * s10 + 292 * s14 * s16 * s5 ** 2 + 68 * s5 ** 2 * s14 * s10
          - 272 * s5 ** 4 * s16 * s14 - 1032 * s5 ** 3 * s16 ** 2 * s14 + 56 * s5 ** 3 * s14 * s10 ** 2
          - 320 * s5 ** 6 - 1048 * s5 ** 4 * s10 * s16 + s14 ** 2 + 60 * s5 ** 2 * s16 ** 2 * s14 ** 2
          - 16 * s5 * s16 * s14 ** 2 + 72 * s5 ** 2 * s14 ** 2 * s10 * s16 - 8 * s5 * s14 ** 2 * s10
          + 24 * s5 ** 3 * s14 + 12 * s5 ** 2 * s14 ** 2 * s10 ** 2 - 248 * s5 ** 4
          - 464 * s5 ** 3 * s16 * s14 * s10 + 148 * s5 ** 3 * s10 - 1284 * s16 * s5 ** 3
          + 4284 * s16 ** 2 * s5 ** 4 - 20 * s5 * s14)
    e4 = ((-1 + 2 * s5 * s10 - 4 * s5 ** 2 + 6 * s5 * s16)
          * (2 * s5 * s10 + 2 * s14 * s10 - 2 * s5 ** 2 - 10 * s5 * s16 - 2 * s14 * s16 + 3))
    e5 = (96 * s5 ** 5 * s10 + 24 * s5 ** 4 * s10 ** 2 - 1920 * s5 ** 5 * s16 + 98 * s5 ** 2
          + 24 * s5 ** 4 * s14 * s10 + 350 * s14 * s16 * s5 ** 2 + 34 * s5 ** 2 * s14 * s10
          + 264 * s5 ** 4 * s16 * s14 - 1524 * s5 ** 3 * s16 ** 2 * s14 + 12 * s5 ** 3 * s14 * s10 ** 2
          + 240 * s5 ** 6 - 576 * s5 ** 4 * s10 * s16 + s14 ** 2 + 102 * s5 ** 2 * s16 ** 2 * s14 ** 2
          - 20 * s5 * s16 * s14 ** 2 + 36 * s5 ** 2 * s14 ** 2 * s10 * s16 - 4 * s5 * s14 ** 2 * s10
          - 24 * s5 ** 3 * s14 + 6 * s5 ** 2 * s14 ** 2 * s10 ** 2 + 240 * s5 ** 4
          - 216 * s5 ** 3 * s16 * s14 * s10 + 72 * s5 ** 3 * s10 - 1488 * s16 * s5 ** 3
          + 5688 * s16 ** 2 * s5 ** 4 - 20 * s5 * s14)
    e6 = -s5 + 6 * s16 * s5 ** 2 + 2 * s5 ** 2 * s10 - 4 * s5 ** 3
    e7 = 2 * s5 ** 2 * s10 - 2 * s16 * s5 ** 2 + s5 - s5 * s16 * s14 + s5 * s14 * s10 - 12 * s5 ** 3
    e8 = (10 * s5 * s16 * s14 + 2 * s5 * s14 * s10 + 11 * s5 - s14 + 8 * s5 ** 3
          - 82 * s16 * s5 ** 2 + 6 * s5 ** 2 * s10)
    return [e1, e2, e3, e4, e5, e6, e7, e8]


def shear_viscosity_d3q19(sigma5, lam=1, dt=1):
    return lam * lam * dt * sigma5 / 3


# public alias kept for the documented interface
appendix_c_residuals = d3q19_closure_residuals
