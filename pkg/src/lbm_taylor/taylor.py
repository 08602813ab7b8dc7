"""Taylor expansion of a linear lattice Boltzmann scheme into equivalent PDE coefficients.

The conserved moments W obey

    d_t W_i + sum_{1 <= |g| <= order} dt^(|g|-1) sum_j A[g][i][j] d^g W_j = O(dt^order)

and each nonconserved moment is m_k = sum_{|g| >= 0} dt^|g| sum_j B[g][k][j] d^g W_j.
Coefficients are built order by order from coupled recurrences on A, B and the
time-derivative compositions C (conserved) and D (nonconserved).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

from .algebra import (MultiIndex, ScalarMode, build_lambda, canonical_key, matmul,
                      multi_indices, multi_indices_upto, p_coefficients, splittings)
from .schemes import PsiMatrix, SchemeDefinition

MAX_ORDER = 6


@dataclass
class EquivalentExpansion:
    order: int
    dim: int
    conserved: int
    mode: ScalarMode
    A: dict[MultiIndex, list[list]]
    B: dict[MultiIndex, list[list]]            # rows indexed by k - conserved
    workspace: dict = field(default_factory=dict, repr=False)

    def a(self, i: int, j: int, g: MultiIndex):
        return self.A[tuple(g)][i][j]

    def b(self, k: int, j: int, g: MultiIndex):
        if k < self.conserved:
            raise IndexError(f"moment {k} is conserved")
        return self.B[tuple(g)][k - self.conserved][j]


class _Engine:
    def __init__(self, scheme: SchemeDefinition, psi: PsiMatrix, order: int):
        if not 1 <= order <= MAX_ORDER:
            raise ValueError(f"order must be in 1..{MAX_ORDER}, got {order}")
        if psi.size != scheme.q:
            raise ValueError("collision matrix does not match the scheme size")
        self.mode = scheme.mode
        self.order = order
        self.d = scheme.dim
        self.n = psi.conserved
        self.size = scheme.q
        self.psi = psi.matrix
        self.rates = psi.rates
        for k in range(self.n, self.size):
            if self.rates[k] == 0:
                raise ZeroDivisionError(f"moment {k} ({scheme.moment_names[k]}) has zero relaxation rate")
        self.M = scheme.moments.rows
        self.Minv = scheme.moments.inverse
        self.lam_tensor = build_lambda(scheme.moments)
        self.zero = self.mode.zero
        mi_psi = matmul(self.Minv, self.psi)
        # transport[delta][k][r] = sum_l M[k][l] P[l][delta] (M^-1 Psi)[l][r] / |delta|!
        velocity_rows = [[self.M[a + 1][l] for a in range(self.d)] for l in range(self.size)]
        per_order = [[p_coefficients(velocity_rows[l], q) for l in range(self.size)]
                     for q in range(order + 1)]
        self.transport = {}
        for delta in multi_indices_upto(self.d, order, start=1):
            q = sum(delta)
            scaled = [[per_order[q][l][delta] * x / factorial(q) for x in mi_psi[l]] for l in range(self.size)]
            self.transport[delta] = matmul(self.M, scaled)

    def _zeros(self, rows, cols):
        return [[self.zero] * cols for _ in range(rows)]

    def _b_row(self, B, eps, r):
        """Row r of the full moment expansion; conserved rows are W itself."""
        n = self.n
        if r < n:
            if sum(eps) == 0:
                return [self.mode.one if j == r else self.zero for j in range(n)]
            return None
        return B[eps][r - n]

    def _transport_sum(self, B, g, rows):
        n = self.n
        out = self._zeros(len(rows), n)
        for delta, eps in splittings(g):
            if sum(delta) == 0:
                continue
            t = self.transport[delta]
            for r in range(self.size):
                brow = self._b_row(B, eps, r)
                if brow is None:
                    continue
                for a, k in enumerate(rows):
                    c = t[k][r]
                    if c != 0:
                        row = out[a]
                        for j in range(n):
                            row[j] = row[j] + c * brow[j]
        return out

    def run(self, audit: bool) -> EquivalentExpansion:
        n, size, d = self.n, self.size, self.d
        A, B, C, D = {}, {}, {}, {}
        zero_g = (0,) * d
        B[zero_g] = [[self.psi[k][j] / self.rates[k] for j in range(n)] for k in range(n, size)]
        # first order from the momentum-velocity tensor
        first = [[self.psi[p][j] + sum((self.psi[p][l] * self.psi[l][j] / self.rates[l]
                                        for l in range(n, size)), start=self.zero)
                  for j in range(n)] for p in range(size)]
        for a in range(d):
            g = tuple(int(b == a) for b in range(d))
            lam_a = self.lam_tensor[a + 1]
            A[g] = [[sum((lam_a[i][p] * first[p][j] for p in range(size)), start=self.zero)
                     for j in range(n)] for i in range(n)]
            C[(1, g)] = A[g]
        nonconserved = list(range(n, size))
        for level in range(1, self.order + 1):
            gammas = multi_indices(d, level)
            if level > 1:
                for g in gammas:
                    for q in range(2, level + 1):
                        C[(q, g)] = self._compose(C, A, g, q, n, n)
                    acc = self._transport_sum(B, g, range(n))
                    A[g] = [[-acc[i][j] - sum((C[(q, g)][i][j] / factorial(q) for q in range(2, level + 1)),
                                             start=self.zero) for j in range(n)] for i in range(n)]
                    C[(1, g)] = A[g]
            for g in gammas:
                for q in range(1, level + 1):
                    D[(q, g)] = self._compose_d(D, B, A, g, q)
                acc = self._transport_sum(B, g, nonconserved)
                B[g] = [[(acc[a][j] - sum((D[(q, g)][a][j] / factorial(q) for q in range(1, level + 1)),
                                          start=self.zero)) / self.rates[k]
                         for j in range(n)] for a, k in enumerate(nonconserved)]
        ws = {"C": C, "D": D} if audit else {}
        return EquivalentExpansion(self.order, d, n, self.mode, A, B, ws)

    def _compose(self, C, A, g, q, rows, n):
        out = self._zeros(rows, n)
        for delta, eps in splittings(g):
            if sum(delta) < q - 1 or sum(eps) < 1:
                continue
            left, right = C[(q - 1, delta)], A[eps]
            for i in range(rows):
                for l in range(n):
                    c = left[i][l]
                    if c != 0:
                        for j in range(n):
                            out[i][j] = out[i][j] - c * right[l][j]
        return out

    def _compose_d(self, D, B, A, g, q):
        n = self.n
        rows = self.size - n
        out = self._zeros(rows, n)
        for delta, eps in splittings(g):
            if sum(delta) < q - 1 or sum(eps) < 1:
                continue
            left = B[delta] if q == 1 else D[(q - 1, delta)]
            right = A[eps]
            for a in range(rows):
                for l in range(n):
                    c = left[a][l]
                    if c != 0:
                        for j in range(n):
                            out[a][j] = out[a][j] - c * right[l][j]
        return out


def expand(scheme: SchemeDefinition, psi: PsiMatrix, order: int, audit: bool = False) -> EquivalentExpansion:
    """Equivalent PDE coefficients up to the given order (at most 6)."""
    return _Engine(scheme, psi, order).run(audit)


def pde_report(exp: EquivalentExpansion, i: int, include_zero: bool = False) -> list[tuple]:
    """Rows (gamma, j, dt_power, coefficient) of conservation law i in canonical order."""
    if not 0 <= i < exp.conserved:
        raise IndexError(f"index {i} is not a conserved moment (N = {exp.conserved})")
    rows = []
    for g in sorted(exp.A, key=canonical_key):
        for j in range(exp.conserved):
            c = exp.A[g][i][j]
            if include_zero or c != 0:
                rows.append((g, j, sum(g) - 1, c))
    return rows


def symbol_of(g: MultiIndex) -> str:
    axes = "xyz"
    return "".join(axes[a] * e for a, e in enumerate(g))
