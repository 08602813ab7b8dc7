"""Scalar modes, exact matrix helpers and the combinatorial tensors of the expansion."""
from __future__ import annotations

from enum import Enum
from fractions import Fraction
from functools import total_ordering
from itertools import product
from math import factorial
from numbers import Rational
from typing import Iterable, Sequence

MultiIndex = tuple[int, ...]


class ScalarModeError(TypeError):
    pass


class SingularMatrixError(ValueError):
    pass


def _as_fraction(x) -> Fraction:
    if isinstance(x, bool) or not isinstance(x, (int, Rational)):
        raise ScalarModeError(f"expected an exact rational, got {type(x).__name__}")
    return Fraction(x)


@total_ordering
class QSqrt3:
    """Element a + b*sqrt(3) of the quadratic field, a and b rational."""

    __slots__ = ("a", "b")

    def __init__(self, a=0, b=0):
        self.a = _as_fraction(a)
        self.b = _as_fraction(b)

    @classmethod
    def sqrt3(cls) -> "QSqrt3":
        return cls(0, 1)

    def _coerce(self, other) -> "QSqrt3":
        if isinstance(other, QSqrt3):
            return other
        if isinstance(other, float):
            raise ScalarModeError("cannot mix float with quadratic scalars")
        return QSqrt3(other)

    def __add__(self, other):
        o = self._coerce(other)
        return QSqrt3(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return QSqrt3(-self.a, -self.b)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        return QSqrt3(self.a * o.a + 3 * self.b * o.b, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def inverse(self) -> "QSqrt3":
        norm = self.a * self.a - 3 * self.b * self.b
        if norm == 0:
            raise ZeroDivisionError("division by zero in quadratic field")
        return QSqrt3(self.a / norm, -self.b / norm)

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise ScalarModeError("only integer powers are supported")
        if n < 0:
            return self.inverse() ** (-n)
        out, base = QSqrt3(1), self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def sign(self) -> int:
        sa = (self.a > 0) - (self.a < 0)
        sb = (self.b > 0) - (self.b < 0)
        if sa == sb or sb == 0:
            return sa
        if sa == 0:
            return sb
        # opposite signs: compare a^2 with 3 b^2
        d = self.a * self.a - 3 * self.b * self.b
        return sa if d > 0 else (sb if d < 0 else 0)

    def __eq__(self, other):
        if isinstance(other, float):
            return False
        try:
            o = self._coerce(other)
        except (ScalarModeError, TypeError):
            return NotImplemented
        return self.a == o.a and self.b == o.b

    def __lt__(self, other):
        return (self - self._coerce(other)).sign() < 0

    def __hash__(self):
        return hash(self.a) if self.b == 0 else hash((self.a, self.b))

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __bool__(self):
        return bool(self.a) or bool(self.b)

    def __float__(self):
        return float(self.a) + float(self.b) * 3.0 ** 0.5

    def __repr__(self):
        return f"QSqrt3({self.a}, {self.b})"

    def __str__(self):
        if self.b == 0:
            return str(self.a)
        if self.a == 0:
            return f"{self.b}*sqrt3"
        return f"{self.a}+{self.b}*sqrt3" if self.b > 0 else f"{self.a}-{-self.b}*sqrt3"


class ScalarMode(str, Enum):
    RATIONAL = "rational"
    QUADRATIC = "quadratic"
    FLOAT = "float"

    def coerce(self, x):
        """Convert x into this mode, refusing lossy or cross-mode conversions."""
        if self is ScalarMode.FLOAT:
            return float(x)
        if isinstance(x, float):
            raise ScalarModeError(f"float value {x!r} given in {self.value} mode")
        if self is ScalarMode.RATIONAL:
            if isinstance(x, QSqrt3):
                if x.b != 0:
                    raise ScalarModeError(f"{x} is irrational; use quadratic mode")
                return x.a
            return _as_fraction(x)
        return x if isinstance(x, QSqrt3) else QSqrt3(x)

    def sqrt3(self):
        if self is ScalarMode.RATIONAL:
            raise ScalarModeError("sqrt(3) is not representable in rational mode")
        if self is ScalarMode.FLOAT:
            return 3.0 ** 0.5
        return QSqrt3.sqrt3()

    @property
    def zero(self):
        return self.coerce(0)

    @property
    def one(self):
        return self.coerce(1)

    @classmethod
    def of(cls, x) -> "ScalarMode":
        if isinstance(x, QSqrt3):
            return cls.QUADRATIC
        if isinstance(x, float):
            return cls.FLOAT
        return cls.RATIONAL


def is_zero(x, mode: ScalarMode, atol: float = 0.0) -> bool:
    if mode is ScalarMode.FLOAT:
        return abs(x) <= atol
    return x == 0


# ---------------------------------------------------------------- matrices

Matrix = list[list]


def identity(n: int, mode: ScalarMode) -> Matrix:
    return [[mode.one if i == j else mode.zero for j in range(n)] for i in range(n)]


def matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> Matrix:
    bt = list(zip(*b))
    return [[sum((x * y for x, y in zip(row, col)), start=row[0] * 0) for col in bt] for row in a]


def matvec(a: Sequence[Sequence], v: Sequence) -> list:
    return [sum((x * y for x, y in zip(row, v)), start=row[0] * 0) for row in a]


def invert(a: Sequence[Sequence], mode: ScalarMode, name: str = "matrix") -> Matrix:
    """Gauss-Jordan inverse; first-nonzero pivot for exact modes, largest pivot for floats."""
    n = len(a)
    work = [list(row) + ident for row, ident in zip(a, identity(n, mode))]
    for c in range(n):
        if mode is ScalarMode.FLOAT:
            p = max(range(c, n), key=lambda r: abs(work[r][c]))
            if abs(work[p][c]) < 1e-300:
                raise SingularMatrixError(f"{name} is singular")
        else:
            p = next((r for r in range(c, n) if work[r][c] != 0), None)
            if p is None:
                raise SingularMatrixError(f"{name} is singular")
        work[c], work[p] = work[p], work[c]
        pivot = work[c][c]
        work[c] = [x / pivot for x in work[c]]
        for r in range(n):
            if r != c:
                f = work[r][c]
                if f != 0:
                    work[r] = [x - f * y for x, y in zip(work[r], work[c])]
    return [row[n:] for row in work]


class MomentMatrix:
    """Square change-of-basis matrix from populations to moments, with cached inverse."""

    def __init__(self, rows: Sequence[Sequence], mode: ScalarMode, name: str = "M"):
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError(f"{name} must be square")
        self.mode = mode
        self.name = name
        self.rows = tuple(tuple(mode.coerce(x) for x in r) for r in rows)
        self._inverse = None

    @property
    def size(self) -> int:
        return len(self.rows)

    @property
    def inverse(self) -> tuple[tuple, ...]:
        if self._inverse is None:
            self._inverse = tuple(map(tuple, invert(self.rows, self.mode, self.name)))
        return self._inverse

    def __getitem__(self, idx):
        return self.rows[idx]

    def to_numpy(self):
        import numpy as np

        return np.array([[float(x) for x in r] for r in self.rows])


def build_lambda(m: MomentMatrix) -> list[list[list]]:
    """lam[k][p][l] = sum_j M[k][j] M[p][j] Minv[j][l]."""
    inv = m.inverse
    n = m.size
    out = []
    for k in range(n):
        plane = []
        for p in range(n):
            w = [m.rows[k][j] * m.rows[p][j] for j in range(n)]
            plane.append([sum((w[j] * inv[j][l] for j in range(n)), start=m.mode.zero) for l in range(n)])
        out.append(plane)
    return out


# ----------------------------------------------------------- multi-indices

def multi_indices(d: int, q: int) -> list[MultiIndex]:
    """All exponent vectors of length d summing to q, in canonical order."""
    if d == 1:
        return [(q,)]
    return sorted((a,) + rest for a in range(q + 1) for rest in multi_indices(d - 1, q - a))


def multi_indices_upto(d: int, order: int, start: int = 0) -> list[MultiIndex]:
    return [g for q in range(start, order + 1) for g in multi_indices(d, q)]


def canonical_key(g: MultiIndex):
    return (sum(g), g)


def splittings(g: MultiIndex) -> Iterable[tuple[MultiIndex, MultiIndex]]:
    """Pairs (delta, eps) with delta + eps = g; eps runs over the downset of g."""
    for eps in product(*(range(x + 1) for x in g)):
        yield tuple(a - b for a, b in zip(g, eps)), eps


def multinomial(g: MultiIndex) -> int:
    out = factorial(sum(g))
    for e in g:
        out //= factorial(e)
    return out


def p_coefficients(velocity_row: Sequence, q: int) -> dict[MultiIndex, object]:
    """Coefficients of (-sum_a v_a d_a)^q on the monomial derivatives d^g, |g| = q."""
    d = len(velocity_row)
    one = velocity_row[0] * 0 + 1 if d else 1
    out = {}
    for g in multi_indices(d, q):
        c = one * multinomial(g)
        for v, e in zip(velocity_row, g):
            c = c * (-v) ** e
        out[g] = c
    return out
