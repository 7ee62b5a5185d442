import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from onebit_bernstein.bernstein import (
    BernsteinPoly,
    ConditioningWarning,
    abs_moment,
    basis_diff,
    basis_matrix,
    basis_value,
    de_casteljau,
    evaluate,
    moment,
    power_to_bernstein,
    variation,
)
from onebit_bernstein.errors import DomainError


def exact_basis(n, k, x):
    """Oracle: C(n,k) x^k (1-x)^(n-k) in rational arithmetic."""
    x = Fraction(x)
    if k > n:
        return Fraction(0)
    return math.comb(n, k) * x**k * (1 - x) ** (n - k)


unit = st.floats(0.0, 1.0, allow_nan=False)
interior = st.floats(1e-3, 1 - 1e-3)


# -- basis values ---------------------------------------------------------

@pytest.mark.parametrize(
    "n,k,x,expected",
    [(2, 1, 0.5, 0.5), (4, 0, 0.0, 1.0), (3, 1, 0.4, 0.432), (5, 7, 0.3, 0.0), (4, 4, 1.0, 1.0)],
)
def test_basis_value_examples(n, k, x, expected):
    assert basis_value(n, k, x) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("x", [-0.1, 1.5, float("nan")])
def test_basis_value_domain(x):
    with pytest.raises(DomainError):
        basis_value(3, 1, x)


def test_negative_degree_rejected():
    with pytest.raises(DomainError):
        basis_matrix(-1, 0.5)


@given(n=st.integers(0, 30), x=unit, data=st.data())
def test_small_degree_matches_rational_oracle(n, x, data):
    k = data.draw(st.integers(0, n + 2))
    assert basis_value(n, k, x) == pytest.approx(float(exact_basis(n, k, x)), rel=1e-13, abs=1e-300)


@pytest.mark.parametrize("n", [31, 100, 777, 4096])
def test_log_space_matches_scipy_pmf(n):
    x = np.array([1e-4, 0.013, 0.2, 0.5, 0.71, 0.9999])
    ours = basis_matrix(n, x)
    ref = stats.binom.pmf(np.arange(n + 1), n, x[:, None])
    big = ref > 1e-290
    # relative accuracy degrades like |log p| * eps deep in the tails
    assert np.allclose(ours[big], ref[big], rtol=5e-12, atol=0)
    bulk = ref > 1e-20
    assert np.allclose(ours[bulk], ref[bulk], rtol=1e-12, atol=0)
    assert np.all(ours[~big] < 1e-280)


@pytest.mark.parametrize("n", [1, 16, 31, 256, 4096])
def test_partition_of_unity(n):
    x = np.linspace(0.0, 1.0, 1001)
    assert np.abs(basis_matrix(n, x).sum(axis=-1) - 1.0).max() < 1e-12


def test_endpoints_exact():
    m = basis_matrix(50, np.array([0.0, 1.0]))
    assert m[0, 0] == 1.0 and m[0, 1:].sum() == 0.0
    assert m[1, -1] == 1.0 and m[1, :-1].sum() == 0.0


@given(n=st.integers(1, 200), x=interior)
def test_three_term_recurrence(n, x):
    # p_{n+1,k} = x p_{n,k-1} + (1-x) p_{n,k}
    lo = basis_matrix(n, x)
    hi = basis_matrix(n + 1, x)
    rhs = np.concatenate([[0.0], x * lo]) + np.concatenate([(1 - x) * lo, [0.0]])
    assert np.allclose(hi, rhs, atol=1e-14)


# -- evaluation -----------------------------------------------------------

def test_poly_validates_length():
    with pytest.raises(ValueError):
        BernsteinPoly(3, [1.0, 2.0])


def test_poly_is_immutable():
    p = BernsteinPoly.from_coeffs([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        p.coeffs[0] = 5.0


@given(n=st.integers(0, 300), c=st.floats(-5, 5), x=unit)
def test_constant_coefficients(n, c, x):
    assert evaluate(BernsteinPoly(n, np.full(n + 1, c)), x) == pytest.approx(c, abs=1e-12)


@given(n=st.integers(1, 300), x=unit)
def test_linear_precision(n, x):
    assert evaluate(BernsteinPoly(n, np.arange(n + 1) / n), x) == pytest.approx(x, abs=1e-12)


def test_evaluate_picks_single_basis():
    assert evaluate(BernsteinPoly(3, [0, 1, 0, 0]), 0.4) == pytest.approx(0.432, abs=1e-15)


@pytest.mark.parametrize("n", [5, 40, 128, 512])
def test_backends_agree(n):
    rng = np.random.default_rng(n)
    c = rng.uniform(-1, 1, n + 1)
    x = rng.uniform(0, 1, 300)
    poly = BernsteinPoly(n, c)
    direct = evaluate(poly, x)
    ref = evaluate(poly, x, method="casteljau")
    assert np.allclose(direct, ref, rtol=1e-10, atol=1e-10 * np.abs(ref).max())


def test_casteljau_rational_oracle():
    c = [0.5, -1.0, 2.0, 0.25]
    for x in (0.0, 0.3, 0.77, 1.0):
        exact = sum(Fraction(ck) * exact_basis(3, k, x) for k, ck in enumerate(c))
        assert de_casteljau(c, x) == pytest.approx(float(exact), abs=1e-15)


def test_unknown_method():
    with pytest.raises(ValueError):
        evaluate(BernsteinPoly(1, [0, 1]), 0.5, method="horner")


# -- differences, variations ---------------------------------------------

def test_basis_diff_example():
    d = basis_diff(3, 0.4, 1).values
    assert np.allclose(d, [0.216 - 0.432, 0.432 - 0.288, 0.288 - 0.064, 0.064], atol=1e-15)
    assert d[1] == pytest.approx(0.144, abs=1e-15)


def test_zeroth_difference_is_basis():
    x = np.linspace(0, 1, 7)
    assert np.array_equal(basis_diff(9, x, 0).values, basis_matrix(9, x))


@given(n=st.integers(1, 64), x=interior)
def test_difference_identity(n, x):
    # p_{n,k} - p_{n,k+1} = ((k+1) - (n+1)x) / ((n+1) X) * p_{n+1,k+1}
    X = x * (1 - x)
    k = np.arange(n + 1)
    rhs = ((k + 1) - (n + 1) * x) / ((n + 1) * X) * basis_matrix(n + 1, x)[1:]
    assert np.abs(basis_diff(n, x, 1).values - rhs).max() < 1e-12


@given(n=st.integers(1, 100), x=unit, r=st.integers(1, 6))
def test_telescoping(n, x, r):
    hi = basis_diff(n, x, r).values
    lo = basis_diff(n, x, r - 1).values
    assert hi.sum() == pytest.approx(lo[0], abs=1e-12)


@given(n=st.integers(1, 100), x=unit)
def test_first_difference_sums_to_leading_basis(n, x):
    assert basis_diff(n, x, 1).values.sum() == pytest.approx((1 - x) ** n, abs=1e-13)


def test_variation_examples():
    assert variation(37, 0.3, 0) == pytest.approx(1.0, abs=1e-13)
    assert variation(100, 0.5, 1) <= 1 / math.sqrt(101 * 0.25)
    assert variation(100, 0.5, 2) <= 2 / (101 * 0.25)


@pytest.mark.parametrize("n", [16, 64, 256, 1024])
def test_variation_envelopes(n):
    x = np.linspace(0.001, 0.999, 999)
    X = x * (1 - x)
    assert np.all(variation(n, x, 1) <= 1 / np.sqrt((n + 1) * X) + 1e-12)
    assert np.all(variation(n, x, 2) <= 2 / ((n + 1) * X) + 1e-12)


# -- moments --------------------------------------------------------------

def test_moment_examples():
    assert moment(10, 0.3, 0) == pytest.approx(1.0, abs=1e-14)
    assert abs(moment(10, 0.3, 1)) < 1e-10
    assert moment(10, 0.3, 2) == pytest.approx(2.1, rel=1e-12)


@given(n=st.integers(1, 2000), x=unit)
def test_moment_laws(n, x):
    X = x * (1 - x)
    assert abs(moment(n, x, 1)) < 1e-10 * max(1.0, n * X)
    assert moment(n, x, 2) == pytest.approx(n * X, rel=1e-10, abs=1e-10)


def test_even_moments_grow_like_powers_of_n():
    x = np.linspace(0.0, 1.0, 201)
    for s in range(1, 5):
        # sup_x T_{n,2s} / n^s approaches (2s-1)!! / 4^s from below
        a_s = math.prod(range(1, 2 * s, 2)) / 4**s
        for n in (16, 64, 256, 1024, 4096):
            t = moment(n, x, 2 * s)
            assert t.min() >= -1e-9 * n**s
            assert t.max() / n**s <= a_s * (1 + 1e-9)


def test_abs_moment_examples():
    assert abs_moment(20, 0.6, 0, 0) == pytest.approx(1.0, abs=1e-13)
    assert abs_moment(10, 0.3, 0, 2) == pytest.approx(2.1, rel=1e-12)
    assert abs_moment(64, 0.5, 1, 0) == pytest.approx(variation(64, 0.5, 1), rel=1e-14)


# -- power to Bernstein ---------------------------------------------------

@pytest.mark.parametrize(
    "a,n,expected",
    [([2.5], 6, [2.5] * 7), ([0, 1], 4, [0, 0.25, 0.5, 0.75, 1]), ([0, 0, 1], 2, [0, 0, 1])],
)
def test_power_to_bernstein_examples(a, n, expected):
    p = power_to_bernstein(a, n)
    assert np.allclose(p.coeffs, expected, atol=1e-15)
    assert p.meta["conversion"] == "exact"


def test_power_to_bernstein_square_at_points():
    p = power_to_bernstein([0, 0, 1], 2)
    x = np.linspace(0, 1, 5)
    assert np.allclose(evaluate(p, x), x**2, atol=1e-15)


@settings(max_examples=60)
@given(a=st.lists(st.floats(-3, 3), min_size=1, max_size=8), extra=st.integers(0, 50), x=unit)
def test_power_to_bernstein_roundtrip(a, extra, x):
    n = len(a) - 1 + extra
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConditioningWarning)
        p = power_to_bernstein(a, n)
    assert evaluate(p, x) == pytest.approx(np.polynomial.polynomial.polyval(x, a), abs=1e-10)


def test_power_to_bernstein_degree_too_small():
    with pytest.raises(DomainError):
        power_to_bernstein([0, 0, 0, 1], 2)


def test_power_to_bernstein_conditioning():
    with pytest.warns(ConditioningWarning):
        p = power_to_bernstein([1, 1], 80)
    assert p.meta["conversion"] == "float"
    assert p.meta["cond"] > power_to_bernstein([1, 1], 10).meta["cond"] > 1
