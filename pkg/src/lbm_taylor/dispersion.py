"""Plane-wave (one point) analysis of a linear lattice Boltzmann scheme.

A Fourier mode f_j(x) = F_j exp(i k.x) is advanced by the amplification matrix
G(k) = diag(exp(-i k.e_j)) M^-1 Psi M, with e_j the integer lattice displacement.
Eigenvalues z of G give discrete decay rates Gamma = -ln|z| / dt.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .algebra import ScalarMode
from .schemes import PsiMatrix, SchemeDefinition
from .taylor import EquivalentExpansion


class AcousticContaminationError(RuntimeError):
    """The eigenvalue nearest the guess is oscillatory, not a relaxation mode."""


@dataclass(frozen=True)
class AmplificationMatrix:
    k: tuple[float, ...]
    matrix: np.ndarray

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.matrix)


def _float_operator(scheme: SchemeDefinition, psi: PsiMatrix) -> np.ndarray:
    m = scheme.moments.to_numpy()
    return np.linalg.solve(m, psi.to_numpy() @ m)


def amplification(scheme: SchemeDefinition, psi: PsiMatrix, k) -> AmplificationMatrix:
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if k.shape != (scheme.dim,):
        raise ValueError(f"wave vector needs {scheme.dim} components, got {k.shape}")
    if np.any(np.abs(k) > math.pi + 1e-12):
        raise ValueError("wave vector components must lie in [-pi, pi]")
    e = np.asarray(scheme.lattice_velocities, dtype=float)
    phase = np.exp(-1j * (e @ k))
    return AmplificationMatrix(tuple(k), phase[:, None] * _float_operator(scheme, psi))


def measured_rate(g: AmplificationMatrix | np.ndarray, gamma_guess: float, gamma_th: float | None = None,
                  dt: float = 1.0) -> tuple[float, float]:
    """Decay rate of the eigenvalue nearest exp(-gamma_guess dt), and its relative error.

    The reference for the error is gamma_th when given, otherwise gamma_guess; a zero
    reference has no relative error, so |gamma| is returned in its place.
    """
    if gamma_guess < 0 or gamma_guess * dt >= 1:
        raise ValueError("gamma_guess * dt must lie in [0, 1)")
    mat = g.matrix if isinstance(g, AmplificationMatrix) else np.asarray(g)
    z = np.linalg.eigvals(mat)
    zi = z[np.argmin(np.abs(z - math.exp(-gamma_guess * dt)))]
    if abs(cmath.log(zi).imag) > math.pi / 2:
        raise AcousticContaminationError(f"selected eigenvalue {zi:.6g} has |arg z| > pi/2")
    gamma = -math.log(abs(zi)) / dt
    ref = gamma_guess if gamma_th is None else gamma_th
    if ref == 0:
        return gamma, abs(gamma)
    return gamma, abs(gamma / ref - 1)


def symbol(exp: EquivalentExpansion, k, max_order: int | None = None, dt: float = 1.0) -> np.ndarray:
    """sum_g dt^(|g|-1) A^g (i k)^g, the rate matrix of the truncated equivalent equations."""
    k = np.asarray(k, dtype=float)
    top = exp.order if max_order is None else max_order
    out = np.zeros((exp.conserved, exp.conserved), dtype=complex)
    for g, block in exp.A.items():
        q = sum(g)
        if q > top:
            continue
        factor = dt ** (q - 1) * np.prod([(1j * k[a]) ** e for a, e in enumerate(g)])
        out += factor * np.array([[float(x) for x in row] for row in block])
    return out


def diffusive_rate(exp: EquivalentExpansion, k, dt: float = 1.0) -> float:
    """Second-order decay rate of the non-propagating branch (diffusion or shear)."""
    w = np.linalg.eigvals(symbol(exp, k, max_order=2, dt=dt))
    return float(w[np.argmin(np.abs(w.imag))].real)


def order_fit(points) -> float:
    """Least-squares slope of log(error) against log(k)."""
    pts = list(points)
    if len(pts) < 4:
        raise ValueError("order_fit needs at least four points")
    ks = np.array([p[0] for p in pts], dtype=float)
    errs = np.array([p[1] for p in pts], dtype=float)
    if np.any(errs <= 0) or np.any(ks <= 0):
        raise ValueError("order_fit needs positive k and error values")
    slope, _ = np.polyfit(np.log(ks), np.log(errs), 1)
    return float(slope)


def direction(angle: float, dim: int, elevation: float = 0.0) -> np.ndarray:
    """Unit vector at the given azimuth (and elevation in 3D), both in radians."""
    if dim == 1:
        return np.array([1.0])
    if dim == 2:
        return np.array([math.cos(angle), math.sin(angle)])
    c = math.cos(elevation)
    return np.array([c * math.cos(angle), c * math.sin(angle), math.sin(elevation)])


def sweep(scheme: SchemeDefinition, psi: PsiMatrix, exp: EquivalentExpansion, periods, angle: float = 0.0,
          elevation: float = 0.0, dt: float = 1.0) -> list[dict]:
    """One-point error for k = 2 pi / N along a fixed direction, for each N in periods."""
    if exp.mode is not ScalarMode.FLOAT and exp.order < 2:
        raise ValueError("expansion must reach order 2")
    unit = direction(angle, scheme.dim, elevation)
    rows = []
    for n in periods:
        kmag = 2 * math.pi / n
        kv = kmag * unit
        g_th = diffusive_rate(exp, kv, dt)
        g_num, err = measured_rate(amplification(scheme, psi, kv), g_th, g_th, dt)
        rows.append({"N": n, "k": kmag, "angle": angle, "gamma_num": g_num, "gamma_th": g_th, "error": err})
    return rows
