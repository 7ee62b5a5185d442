"""Stage-one polynomial approximants in Bernstein form.

All operators produce the ``n + 1`` coefficients that are later quantized:
grid samples (Bernstein operator), cell averages (Kantorovich), the iterated
combination ``f_{n,r}`` whose Bernstein polynomial is ``U_{n,r}(f)``, and
near-best proxies built from Chebyshev interpolation or Legendre least squares.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numpy.polynomial import Chebyshev, Legendre
from scipy import integrate

from .bernstein import BernsteinPoly, basis_matrix, evaluate
from .errors import ConditioningError, DomainError, QuadratureError

PROXY_MAX_DEGREE = 128
# relative tolerance for accepting a series-to-Bernstein conversion
CONVERSION_TOL = 1e-8


@dataclass(frozen=True)
class GridFunction:
    """Values at the grid ``k/n``, ``k = 0..n`` (or stage coefficients indexed the same way)."""

    n: int
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.n + 1,):
            raise ValueError(f"expected {self.n + 1} values, got shape {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def to_poly(self):
        return BernsteinPoly(self.n, self.values, dict(self.meta))


def _check_n(n):
    if int(n) != n or n < 1:
        raise DomainError(f"degree must be a positive integer, got {n!r}")
    return int(n)


def sample_grid(f, n):
    """``values[k] = f(k/n)``."""
    n = _check_n(n)
    return GridFunction(n, np.asarray(f(np.arange(n + 1) / n), dtype=float))


@functools.lru_cache(maxsize=16)
def operator_matrix(n):
    """``M[k, i] = p_{n,i}(k/n)``; ``M @ g`` is ``B_n(g)`` sampled on the grid."""
    n = _check_n(n)
    m = basis_matrix(n, np.arange(n + 1) / n)
    m.setflags(write=False)
    return m


def pr_coeffs(r):
    """Coefficients of ``P_{r-2}(t) = (1 - (1-t)^r - t^r) / (t (1 - t))`` and ``C_r = sum |c_j|``.

    ``c_j = 1 + (-1)^j C(r-1, j+1)`` for ``j = 0..r-2``.
    """
    if int(r) != r or r < 2:
        raise DomainError("r must be an integer >= 2")
    c = np.array([1 + (-1) ** j * math.comb(r - 1, j + 1) for j in range(r - 1)], dtype=float)
    return c, float(np.abs(c).sum())


def iterated_U_coeffs(f, n, r):
    """Grid values of ``f_{n,r} = B_n^{r-1} f + P_{r-2}(B_n)(I - B_n) f``.

    ``U_{n,r}(f) = B_n(f_{n,r})`` so these are its Bernstein coefficients.
    """
    if int(r) != r or r < 1:
        raise DomainError("r must be a positive integer")
    grid = sample_grid(f, n)
    if r == 1:
        return grid
    m = operator_matrix(grid.n)
    v = grid.values
    powered = v
    for _ in range(r - 1):
        powered = m @ powered
    g = v - m @ v
    c, _ = pr_coeffs(r)
    acc = c[-1] * g
    for cj in c[-2::-1]:
        acc = m @ acc + cj * g
    return GridFunction(grid.n, powered + acc, {"stage": f"iteru:{r}"})


def U_poly(f, n, r):
    """``U_{n,r}(f)`` as a Bernstein polynomial."""
    return iterated_U_coeffs(f, n, r).to_poly()


class Admissibility(NamedTuple):
    ok: bool
    max_abs: float


def check_onebit_admissible(coeffs, mu):
    """Gate before one-bit quantization: ``max_k |values[k]| <= mu``."""
    values = coeffs.values if isinstance(coeffs, GridFunction) else np.asarray(coeffs, dtype=float)
    peak = float(np.abs(values).max())
    return Admissibility(peak <= mu, peak)


def kantorovich_coeffs(f, n, epsabs=1e-10):
    """``values[k] = (n+1) * integral of f over [k/(n+1), (k+1)/(n+1)]``."""
    n = _check_n(n)
    h = 1.0 / (n + 1)
    out = np.empty(n + 1)
    scalar = lambda t: float(f(np.asarray(t)))
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        for k in range(n + 1):
            try:
                val, err = integrate.quad(scalar, k * h, (k + 1) * h, epsabs=epsabs, epsrel=0.0, limit=200)
            except integrate.IntegrationWarning as exc:
                raise QuadratureError(f"quadrature failed on cell {k}: {exc}") from None
            if not err <= epsabs:
                raise QuadratureError(f"cell {k}: error estimate {err:.3g} above {epsabs:.3g}")
            out[k] = val * (n + 1)
    return GridFunction(n, out, {"stage": "kantorovich"})


def _chop(c):
    """Drop the trailing coefficients that sit at rounding level."""
    n = c.size - 1
    tol = 8 * max(n, 16) * np.finfo(float).eps * np.abs(c).max()
    tail = np.maximum.accumulate(np.abs(c)[::-1])[::-1]
    keep = np.flatnonzero(tail > tol)
    return c[: keep[-1] + 1] if keep.size else c[:1]


def _elevate(b):
    """Degree elevation ``m -> m + 1`` of Bernstein coefficients."""
    m = b.size - 1
    w = np.arange(1, m + 1) / (m + 1)
    out = np.empty(m + 2)
    out[0], out[-1] = b[0], b[-1]
    out[1:-1] = w * b[:-1] + (1 - w) * b[1:]
    return out


def _times_shifted_x(b):
    """Coefficients of ``(2x - 1) * sum b_k p_{m,k}`` in degree ``m + 1``."""
    m = b.size - 1
    k = np.arange(m + 1)
    out = np.zeros(m + 2)
    out[1:] += (k + 1) / (m + 1) * b
    out[:-1] -= (m + 1 - k) / (m + 1) * b
    return out


def orthogonal_to_bernstein(coef, n, kind):
    """Bernstein coefficients (degree ``n``) of a Chebyshev or Legendre series on [0, 1].

    Runs the three-term recurrence directly on Bernstein coefficients, so no
    power-basis intermediate is formed.
    """
    coef = np.asarray(coef, dtype=float)
    if coef.size - 1 > n:
        raise DomainError("series degree exceeds the target degree")
    prev, cur = np.array([1.0]), np.array([-1.0, 1.0])
    acc = coef[:1].copy()
    for j in range(1, coef.size):
        if j > 1:
            if kind == "chebyshev":
                nxt = 2 * _times_shifted_x(cur) - _elevate(_elevate(prev))
            else:
                nxt = ((2 * j - 1) * _times_shifted_x(cur) - (j - 1) * _elevate(_elevate(prev))) / j
            prev, cur = cur, nxt
        acc = _elevate(acc) + coef[j] * cur
    while acc.size < n + 1:
        acc = _elevate(acc)
    return acc


def _to_bernstein(series, n, kind, check_x):
    poly = BernsteinPoly(n, orthogonal_to_bernstein(series.coef, n, kind), {"conversion": "recurrence"})
    ref = series(check_x)
    dev = float(np.abs(evaluate(poly, check_x) - ref).max())
    scale = max(1.0, float(np.abs(ref).max()))
    if dev > CONVERSION_TOL * scale:
        raise ConditioningError(
            f"Bernstein conversion at degree {n} lost accuracy (deviation {dev:.3g})"
        )
    return poly, dev


def near_best_proxy(f, n, p=math.inf):
    """Near-best degree-``n`` approximant of ``f`` in Bernstein form.

    ``p = inf`` interpolates at Chebyshev points of the first kind; any finite
    ``p`` uses the L^2 projection onto Legendre polynomials.  Both series are
    chopped at rounding level before conversion to Bernstein form, and the
    conversion is checked against the series itself.
    """
    n = _check_n(n)
    if n > PROXY_MAX_DEGREE:
        raise ConditioningError(f"proxy conversion is capped at degree {PROXY_MAX_DEGREE}, got {n}")
    check_x = np.linspace(0.0, 1.0, 1001)
    if p == math.inf:
        series = Chebyshev.interpolate(lambda t: np.asarray(f(t), dtype=float), n, domain=[0, 1])
        series = Chebyshev(_chop(series.coef), domain=[0, 1])
        # error of the interpolant on a fine grid, as a proxy for the best-approximation error
        est = float(np.abs(series(check_x) - np.asarray(f(check_x), dtype=float)).max())
        kind = "chebyshev"
    else:
        if not p >= 1:
            raise DomainError("norm p must be >= 1")
        nodes, weights = np.polynomial.legendre.leggauss(4 * n + 400)
        t = 0.5 * (nodes + 1.0)
        ft = np.asarray(f(t), dtype=float)
        j = np.arange(n + 1)
        vander = np.polynomial.legendre.legvander(nodes, n)
        coef = (vander * (weights * ft)[:, None]).sum(axis=0) * (2 * j + 1) / 2
        series = Legendre(_chop(coef), domain=[0, 1])
        resid = series(t) - ft
        est = float(np.sqrt(0.5 * np.sum(weights * resid**2)))
        kind = "legendre"
    poly, dev = _to_bernstein(series, n, kind, check_x)
    meta = dict(poly.meta)
    meta.update({"proxy": kind, "norm": "inf" if p == math.inf else p, "error_estimate": est,
                 "conversion_error": dev, "stage": f"proxy:{'inf' if p == math.inf else p}"})
    return BernsteinPoly(n, poly.coeffs, meta)


STAGES = ("bernstein", "kantorovich", "iteru:R", "proxy:P")


def parse_stage(stage):
    """Split ``'iteru:3'`` / ``'proxy:inf'`` into ``(kind, arg)``."""
    kind, _, arg = str(stage).partition(":")
    if kind in ("bernstein", "kantorovich") and not arg:
        return kind, None
    if kind == "iteru" and arg.isdigit() and int(arg) >= 1:
        return kind, int(arg)
    if kind == "proxy" and arg:
        p = math.inf if arg.lower() in ("inf", "infinity", "∞") else float(arg)
        if p >= 1:
            return kind, p
    raise ValueError(f"unknown stage {stage!r}; expected one of {', '.join(STAGES)}")


def stage_coeffs(f, n, stage="bernstein"):
    """Bernstein coefficients produced by a named stage-one approximant."""
    kind, arg = parse_stage(stage)
    if kind == "bernstein":
        g = sample_grid(f, n)
        return BernsteinPoly(g.n, g.values, {"stage": "bernstein"})
    if kind == "kantorovich":
        return kantorovich_coeffs(f, n).to_poly()
    if kind == "iteru":
        return U_poly(f, n, arg)
    return near_best_proxy(f, n, arg)
