"""Matrix-free Krylov-Schur (restarted Arnoldi) for the slow modes of a linear evolution.

The operator is usually an odd number 2l+1 of lattice Boltzmann steps; an even
power would fold the oscillating z < 0 (checker-board) branch onto z > 0.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import schur

log = logging.getLogger(__name__)


class ArnoldiError(RuntimeError):
    pass


@dataclass(frozen=True)
class EigenResult:
    z: complex              # eigenvalue of the applied operator
    power: int              # number of time steps per operator application
    residual: float         # ||A v - z v|| / ||v||
    converged: bool
    vector: np.ndarray | None = None
    dt: float = 1.0

    @property
    def gamma(self) -> float:
        return mode_rate(self)


def mode_rate(result: EigenResult) -> float:
    """Gamma = -ln|z| / (power dt); negative for growing modes."""
    mag = abs(result.z)
    if mag == 0:
        return math.inf
    g = -math.log(mag) / (result.power * result.dt)
    if mag > 1 + 1e-12:
        log.warning("growing mode |z| = %.6g: the scheme is unstable for these parameters", mag)
    return g


def _score(theta: np.ndarray, which: str, target: complex | None) -> np.ndarray:
    """Smaller is better."""
    if target is not None:
        return np.abs(theta - target)
    if which == "LM":
        return -np.abs(theta)
    if which == "LR":
        return -theta.real
    raise ValueError(f"unknown selection {which!r}")


def _guided(theta: np.ndarray, Y: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Overlap of the guide with each Ritz value's eigenspace, and the guide's projection on it.

    Ritz values that coincide form one eigenspace; any vector in it is an
    eigenvector, so the one closest to the guide is returned.
    """
    tol = 1e-9 * (1 + np.max(np.abs(theta)))
    scores = np.zeros(len(theta))
    coeffs = np.zeros_like(Y)
    for i, t in enumerate(theta):
        group = np.abs(theta - t) <= tol
        q, _ = np.linalg.qr(Y[:, group])
        a = q.conj().T @ c
        scores[i] = np.linalg.norm(a)
        coeffs[:, i] = q @ a if scores[i] > 0 else Y[:, i]
    return scores, coeffs


def arnoldi(apply: Callable[[np.ndarray], np.ndarray], dim: int, krylov_size: int = 30, n_wanted: int = 4,
            tol: float = 1e-10, max_restarts: int = 300, v0: np.ndarray | None = None, seed: int = 0,
            power: int = 1, which: str = "LM", target: complex | None = None, dt: float = 1.0,
            return_vectors: bool = False, guide: np.ndarray | None = None) -> list[EigenResult]:
    """Leading eigenpairs of a real linear operator given only its action.

    Selection is by largest modulus (which='LM'), largest real part ('LR'), or
    nearest to target. With a guide vector, Ritz pairs are ranked by how much
    their eigenspaces overlap it instead, which holds on to one interior mode
    that a smooth seed approximates; the returned vector is then the part of
    the guide inside that eigenspace. Returns n_wanted results ordered by the ranking;
    unconverged ones are flagged. Invariant subspaces end the iteration early.
    """
    m = krylov_size
    if m < n_wanted + 5:
        raise ValueError("krylov_size must be at least n_wanted + 5")
    m = min(m, dim)
    v = np.random.default_rng(seed).standard_normal(dim) if v0 is None else np.array(v0, dtype=float)
    if v.shape != (dim,):
        raise ValueError(f"start vector must have length {dim}")
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValueError("start vector is zero")
    V = np.zeros((dim, m + 1))
    H = np.zeros((m + 1, m))
    V[:, 0] = v / nrm
    k = 0
    results = None
    for restart in range(max_restarts + 1):
        size = m
        for j in range(k, m):
            w = np.asarray(apply(V[:, j]), dtype=float)
            if not np.all(np.isfinite(w)):
                raise ArnoldiError(f"operator returned non-finite values (restart {restart}, column {j})")
            scale = np.linalg.norm(w)
            h = np.zeros(j + 1)
            for _ in range(2):
                for i in range(j + 1):
                    c = V[:, i] @ w
                    w -= c * V[:, i]
                    h[i] += c
            H[: j + 1, j] = h
            beta = np.linalg.norm(w)
            H[j + 1, j] = beta
            if beta <= 1e-14 * max(scale, 1e-300):
                size = j + 1
                H[j + 1, j] = 0.0
                break
            V[:, j + 1] = w / beta
        Hm = H[:size, :size]
        theta, Y = np.linalg.eig(Hm)
        if guide is None:
            sc = _score(theta, which, target)
        else:
            overlap, Y = _guided(theta, Y, guide @ V[:, :size])
            sc = -overlap
        order = np.argsort(sc, kind="stable")
        beta = H[size, size - 1] if size == m else 0.0
        res = np.abs(beta * Y[size - 1, :]) / np.linalg.norm(Y, axis=0)
        if guide is None:
            best = order[:n_wanted]
        else:
            # one representative per eigenspace
            best, seen = [], []
            for idx in order:
                if all(abs(theta[idx] - theta[b]) > 1e-9 * (1 + np.max(np.abs(theta))) for b in seen):
                    best.append(idx)
                    seen.append(idx)
                if len(best) == n_wanted:
                    break
            best = np.array(best, dtype=int)
        if size < m or np.all(res[best] <= tol) or restart == max_restarts:
            results = []
            for idx in best:
                vec = V[:, :size] @ Y[:, idx] if return_vectors else None
                results.append(EigenResult(complex(theta[idx]), power, float(res[idx]),
                                           bool(res[idx] <= tol), vec, dt))
            if not all(r.converged for r in results):
                log.warning("Krylov-Schur stopped after %d restarts with %d of %d pairs converged",
                            restart, sum(r.converged for r in results), n_wanted)
            return results
        # keep the best half of the Ritz values, taking conjugate pairs together
        keep_target = min(m - 2, max(n_wanted + (m - n_wanted) // 2, n_wanted + 1))
        kept = theta[order[:keep_target]]
        spread = 1e-10 * (1 + np.max(np.abs(theta)))

        def select(re, im):
            return bool(np.min(np.abs(kept - complex(re, im))) <= spread)

        T, Z, sdim = schur(Hm, output="real", sort=select)
        k = int(sdim)
        if k >= m or k == 0:
            k = max(1, min(keep_target, m - 1))
        # a 2x2 block must not be split
        if k < m and abs(T[k, k - 1]) > 0:
            k += 1 if k + 1 < m else -1
        V[:, :k] = V[:, :m] @ Z[:, :k]
        V[:, k] = V[:, m]
        Hn = np.zeros((m + 1, m))
        Hn[:k, :k] = T[:k, :k]
        Hn[k, :k] = beta * Z[m - 1, :k]
        H = Hn
    raise ArnoldiError("unreachable")
