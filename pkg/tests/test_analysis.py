import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from onebit_bernstein.analysis import (
    CSV_COLUMNS,
    envelope,
    lp_norm,
    pointwise_error,
    rate_fit,
    summation_bound_excess,
    sup_on_interval,
)
from onebit_bernstein.bernstein import BernsteinPoly, power_to_bernstein
from onebit_bernstein.errors import DomainError
from onebit_bernstein.sigma_delta import QuantizerConfig, quantization_error_poly, quantize


def test_pointwise_error_of_exact_representation():
    f = lambda x: 1 - 2 * x + 3 * x**3
    poly = power_to_bernstein([1, -2, 0, 3], 7)
    rep = pointwise_error(f, poly)
    assert rep.pointwise_error.max() < 1e-10
    assert np.all(rep.pointwise_error >= 0)


def test_pointwise_error_sign_patterns():
    zero = lambda x: np.zeros_like(x)
    for s0, s1 in itertools.product((-1, 1), repeat=2):
        rep = pointwise_error(zero, BernsteinPoly(1, [s0, s1]), grid_size=3)
        assert rep.pointwise_error[1] == pytest.approx(abs(0.5 * s0 + 0.5 * s1))


def test_pointwise_error_endpoint():
    f = lambda x: np.cos(x)
    poly = BernsteinPoly(3, [0.2, 0.4, -1.0, 3.0])
    rep = pointwise_error(f, poly)
    assert rep.pointwise_error[0] == pytest.approx(abs(1 - 0.2))
    assert rep.pointwise_error[-1] == pytest.approx(abs(math.cos(1) - 3.0))


@pytest.mark.parametrize("p", [1, 2, 3.5, math.inf])
def test_lp_norm_constant(p):
    assert lp_norm(np.full(2001, 0.7), p) == pytest.approx(0.7, rel=1e-12)


def test_lp_norm_samples_max():
    assert lp_norm([0.1, 0.3, 0.2], math.inf) == 0.3


def test_lp_norm_envelope_oracle():
    n = 400
    e = lambda x: envelope(n, 1, x)
    ref, _ = integrate.quad(e, 0, 1, points=[0.5], limit=200)
    # the envelope has a kink at 1/2, so fixed-grid Simpson is only good to a few 1e-4
    assert lp_norm(e, 1) == pytest.approx(ref, rel=1e-3)
    assert lp_norm(e, 1) <= 4 * n**-0.5


def test_lp_norm_smooth_accuracy():
    assert lp_norm(lambda x: np.sin(3 * x), 2) == pytest.approx(
        math.sqrt(0.5 - math.sin(6) / 12), rel=1e-6)


@given(st.lists(st.floats(0, 10), min_size=3, max_size=201))
def test_lp_norm_monotone_in_p(values):
    v = np.asarray(values)
    norms = [lp_norm(v, p) for p in (1, 2, 4, math.inf)]
    tol = 1e-6 * (v.max() + 1e-300)
    assert all(a <= b + tol for a, b in zip(norms, norms[1:]))


def test_lp_norm_rejects_small_p():
    with pytest.raises(DomainError):
        lp_norm(np.ones(5), 0.5)


def test_envelope_examples():
    assert envelope(50, 1, 0.0) == 1.0
    assert envelope(100, 2, 0.5) == pytest.approx(1 / 26)
    assert envelope(16, 4, 0.5) == pytest.approx(1.0)


def test_envelope_regime_mismatch():
    with pytest.raises(DomainError):
        envelope(10, 3, 0.5, regime="second")


def test_rate_fit_examples():
    ns = np.array([16, 32, 64, 128, 256])
    fit = rate_fit(ns, 1.0 / ns)
    assert fit.slope == pytest.approx(-1.0, abs=1e-12) and fit.r_squared == pytest.approx(1.0)
    assert rate_fit(ns, 3 * ns**-0.5).slope == pytest.approx(-0.5, abs=1e-12)
    noise = np.random.default_rng(0).standard_normal(ns.size)
    assert rate_fit(ns, (1 + 0.01 * noise) / ns).slope == pytest.approx(-1.0, abs=0.05)


@given(c=st.floats(1e-6, 1e6))
def test_rate_fit_scale_invariant(c):
    ns = [10, 20, 40, 80, 160]
    errs = np.array([0.3, 0.2, 0.09, 0.05, 0.021])
    assert rate_fit(ns, c * errs).slope == pytest.approx(rate_fit(ns, errs).slope, abs=1e-12)


@pytest.mark.parametrize("errs", [[1, 0.5, 0.0, 0.1], [1, -0.5, 0.2, 0.1], [1, 0.5, 0.2]])
def test_rate_fit_rejects(errs):
    with pytest.raises(DomainError):
        rate_fit([1, 2, 4, 8][: len(errs)], errs)


def test_sup_on_interval_default():
    f = lambda x: x
    poly = BernsteinPoly(1, [0.0, 0.0])
    assert sup_on_interval(f, poly) == pytest.approx(0.8)
    assert sup_on_interval(f, poly, interval=(0.0, 1.0)) == pytest.approx(1.0)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_summation_bound_holds(r):
    n = 500
    y = np.cos(np.linspace(0, 9, n + 1)) * 3
    res = quantize(y, QuantizerConfig(order=r))
    eq = quantization_error_poly(y, res.q, n)
    assert summation_bound_excess(eq, res.u_max, r) <= 1e-9


def test_report_serialization():
    f = lambda x: np.abs(x - 0.5)
    rep = pointwise_error(f, BernsteinPoly(2, [0.5, -0.5, 0.5]), grid_size=11, order=1)
    d = json.loads(rep.to_json())
    assert d["schema"] == 1 and set(d["lp_norms"]) == {"1", "2", "inf"}
    text = rep.to_csv({"fn": "abs", "n": 2})
    lines = text.splitlines()
    assert lines[0] == '# fn: "abs"' and lines[1] == "# n: 2"
    assert lines[2] == ",".join(CSV_COLUMNS)
    assert len(lines) == 3 + 11
    assert "\r" not in text
