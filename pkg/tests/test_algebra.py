from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lbm_taylor.algebra import (MomentMatrix, QSqrt3, ScalarMode, ScalarModeError, SingularMatrixError,
                                build_lambda, canonical_key, invert, matmul, multi_indices, multi_indices_upto,
                                multinomial, p_coefficients, splittings)

fractions = st.fractions(min_value=-50, max_value=50, max_denominator=40)
quad = st.builds(QSqrt3, fractions, fractions)
nonzero_quad = quad.filter(lambda x: x != 0)


@given(quad, quad, quad)
def test_qsqrt3_ring_axioms(x, y, z):
    assert (x + y) + z == x + (y + z)
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x + y == y + x and x * y == y * x
    assert x - x == 0 and x + 0 == x and x * 1 == x


@given(nonzero_quad)
def test_qsqrt3_inverse(x):
    assert x * x.inverse() == 1
    assert x / x == 1


@given(quad, quad)
def test_qsqrt3_float_homomorphism(x, y):
    assert float(x * y) == pytest.approx(float(x) * float(y), rel=1e-12, abs=1e-9)
    assert float(x + y) == pytest.approx(float(x) + float(y), rel=1e-12, abs=1e-9)


@given(quad, quad)
def test_qsqrt3_order_matches_floats(x, y):
    if abs(float(x) - float(y)) > 1e-9:
        assert (x < y) == (float(x) < float(y))
    assert abs(x) >= 0


def test_sqrt3_squares_to_three():
    r = QSqrt3.sqrt3()
    assert r * r == 3
    assert (2 - r) * (2 + r) == 1
    assert QSqrt3(1, 1) ** -1 == QSqrt3(Fraction(-1, 2), Fraction(1, 2))
    assert hash(QSqrt3(3)) == hash(QSqrt3(3, 0))


def test_scalar_modes_refuse_lossy_mixing():
    with pytest.raises(ScalarModeError):
        ScalarMode.RATIONAL.coerce(0.5)
    with pytest.raises(ScalarModeError):
        ScalarMode.RATIONAL.coerce(QSqrt3.sqrt3())
    with pytest.raises(ScalarModeError):
        ScalarMode.RATIONAL.sqrt3()
    with pytest.raises(ScalarModeError):
        QSqrt3(1) + 0.5
    assert ScalarMode.RATIONAL.coerce(QSqrt3(2)) == 2
    assert ScalarMode.FLOAT.sqrt3() == pytest.approx(3 ** 0.5)
    assert ScalarMode.of(QSqrt3(1)) is ScalarMode.QUADRATIC
    assert ScalarMode.of(1.0) is ScalarMode.FLOAT
    assert ScalarMode.of(Fraction(1, 3)) is ScalarMode.RATIONAL


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=2, max_value=6), st.integers(min_value=0, max_value=10 ** 6))
def test_exact_inverse_is_identity(n, seed):
    rng = np.random.default_rng(seed)
    a = [[Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 5))) for _ in range(n)] for _ in range(n)]
    try:
        inv = invert(a, ScalarMode.RATIONAL)
    except SingularMatrixError:
        assert abs(np.linalg.det(np.array(a, dtype=float))) < 1e-9
        return
    assert matmul(a, inv) == [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    assert matmul(inv, a) == [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def test_quadratic_inverse_and_float_agreement():
    r = QSqrt3.sqrt3()
    a = [[1 + r, QSqrt3(2)], [QSqrt3(Fraction(1, 3)), 2 - r]]
    inv = invert(a, ScalarMode.QUADRATIC)
    assert matmul(a, inv) == [[QSqrt3(1), QSqrt3(0)], [QSqrt3(0), QSqrt3(1)]]
    fa = [[float(x) for x in row] for row in a]
    np.testing.assert_allclose(np.array([[float(x) for x in row] for row in inv]), np.linalg.inv(fa), rtol=1e-12)


def test_singular_matrix_rejected():
    with pytest.raises(SingularMatrixError):
        invert([[Fraction(1), Fraction(2)], [Fraction(2), Fraction(4)]], ScalarMode.RATIONAL)
    with pytest.raises(SingularMatrixError):
        MomentMatrix([[1, 1], [1, 1]], ScalarMode.RATIONAL).inverse
    with pytest.raises(ValueError):
        MomentMatrix([[1, 1]], ScalarMode.RATIONAL)


def test_lambda_tensor_recomputes_products():
    # independent recomputation: lam[k][p] expresses the row product M_k * M_p back in moment space
    m = MomentMatrix([[1, 1, 1], [-1, 0, 1], [Fraction(1, 2), 0, Fraction(1, 2)]], ScalarMode.RATIONAL)
    lam = build_lambda(m)
    n = m.size
    for k, p in product(range(n), repeat=2):
        assert lam[k][p] == lam[p][k]
        prod = [m.rows[k][j] * m.rows[p][j] for j in range(n)]
        back = [sum(lam[k][p][l] * m.rows[l][j] for l in range(n)) for j in range(n)]
        assert back == prod


def test_multi_index_enumeration():
    assert multi_indices(2, 2) == [(0, 2), (1, 1), (2, 0)]
    assert len(multi_indices(3, 4)) == 15
    assert multi_indices_upto(2, 2, start=1) == [(0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]
    assert sorted([(1, 0), (0, 2), (0, 1)], key=canonical_key) == [(0, 1), (1, 0), (0, 2)]
    pairs = list(splittings((1, 2)))
    assert len(pairs) == 6
    assert all(tuple(a + b for a, b in zip(d, e)) == (1, 2) for d, e in pairs)
    assert multinomial((2, 1, 1)) == 12


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(min_value=-2, max_value=2), min_size=1, max_size=3), st.integers(min_value=1, max_value=5))
def test_p_coefficients_match_polynomial_expansion(v, q):
    # brute force: expand (-v.x)^q by multiplying out the q factors one at a time
    d = len(v)
    poly = {(0,) * d: Fraction(1)}
    for _ in range(q):
        nxt = {}
        for mono, c in poly.items():
            for a in range(d):
                m2 = tuple(e + (i == a) for i, e in enumerate(mono))
                nxt[m2] = nxt.get(m2, 0) + c * (-v[a])
        poly = nxt
    coeffs = p_coefficients([Fraction(x) for x in v], q)
    for g in multi_indices(d, q):
        assert coeffs[g] == poly.get(g, 0)
