"""Bernstein basis evaluation, differences, variations and moments.

The basis of order ``n`` is ``p_{n,k}(x) = C(n,k) x^k (1-x)^(n-k)``, extended by
``p_{n,k} = 0`` for ``k > n``.  For ``n <= 30`` values are computed from exact
integer binomials; above that they are evaluated in log space using the
saddle-point form of the binomial probability (Stirling error terms plus the
deviance ``bd0``), which keeps the relative error near machine precision for
degrees in the thousands.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numba import njit

from .errors import DomainError

SMALL_DEGREE = 30
EXACT_CONVERSION_DEGREE = 20
CONDITIONING_WARN_DEGREE = 64

_LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_STIRLING_TABLE = np.array(
    [0.0]
    + [
        math.log(math.factorial(m)) - (m + 0.5) * math.log(m) + m - _LN_SQRT_2PI
        for m in range(1, 16)
    ]
)


class ConditioningWarning(UserWarning):
    pass


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError("x must lie in [0, 1]")
    return x


def _check_degree(n):
    if int(n) != n or n < 0:
        raise DomainError(f"degree must be a non-negative integer, got {n!r}")
    return int(n)


@njit(cache=True)
def _stirlerr(m):
    """log(m!) - log(sqrt(2 pi m) (m/e)^m) for integer-valued ``m >= 0``."""
    if m <= 15.0:
        return _STIRLING_TABLE[int(m)]
    mm = m * m
    s0, s1, s2, s3, s4 = 1.0 / 12, 1.0 / 360, 1.0 / 1260, 1.0 / 1680, 1.0 / 1188
    if m > 500.0:
        return (s0 - s1 / mm) / m
    if m > 80.0:
        return (s0 - (s1 - s2 / mm) / mm) / m
    if m > 35.0:
        return (s0 - (s1 - (s2 - s3 / mm) / mm) / mm) / m
    return (s0 - (s1 - (s2 - (s3 - s4 / mm) / mm) / mm) / mm) / m


@njit(cache=True)
def _bd0(k, m):
    """Deviance term ``k log(k/m) + m - k``, stable when ``k`` is close to ``m``."""
    diff = k - m
    if abs(diff) < 0.1 * (k + m):
        v = diff / (k + m)
        s = diff * v
        ej = 2.0 * k * v
        v2 = v * v
        for j in range(1, 1000):
            ej *= v2
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                break
            s = s1
        return s
    return k * np.log(k / m) + m - k


@njit(cache=True)
def _loader_pmf(n, k, x):
    """Log-space ``p_{n,k}(x)`` for ``0 < x < 1``."""
    q = 1.0 - x
    if k == 0:
        if x < 0.1:
            return np.exp(-_bd0(n, n * q) - n * x)
        return np.exp(n * np.log1p(-x))
    if k == n:
        if q < 0.1:
            return np.exp(-_bd0(n, n * x) - n * q)
        return np.exp(n * np.log(x))
    lc = _stirlerr(n) - _stirlerr(k) - _stirlerr(n - k) - _bd0(k, n * x) - _bd0(n - k, n * q)
    lf = 2.0 * _LN_SQRT_2PI + np.log(k) + np.log1p(-k / n)
    return np.exp(lc - 0.5 * lf)


@njit(cache=True)
def _loader_rows(n, xs):
    out = np.empty((xs.size, n + 1))
    fn = float(n)
    for i in range(xs.size):
        for k in range(n + 1):
            out[i, k] = _loader_pmf(fn, float(k), xs[i])
    return out


def basis_matrix(n, x):
    """All basis values ``p_{n,0..n}`` at the points ``x``.

    Returns an array of shape ``np.shape(x) + (n + 1,)``.
    """
    n = _check_degree(n)
    x = _check_x(x)
    k = np.arange(n + 1)
    xs = x[..., None]
    out = np.zeros(x.shape + (n + 1,))
    interior = (x > 0.0) & (x < 1.0)
    out[x == 0.0, 0] = 1.0
    out[x == 1.0, n] = 1.0
    if not np.any(interior):
        return out
    xi = xs[interior]
    if n <= SMALL_DEGREE:
        binom = np.array([math.comb(n, j) for j in range(n + 1)], dtype=float)
        out[interior] = binom * xi**k * (1.0 - xi) ** (n - k)
    else:
        out[interior] = _loader_rows(n, np.ascontiguousarray(x[interior]))
    return out


def basis_value(n, k, x):
    """Single basis value ``p_{n,k}(x)``; zero for ``k > n``."""
    n = _check_degree(n)
    if int(k) != k or k < 0:
        raise DomainError(f"index k must be a non-negative integer, got {k!r}")
    x = float(_check_x(x))
    k = int(k)
    if k > n:
        return 0.0
    if x == 0.0:
        return 1.0 if k == 0 else 0.0
    if x == 1.0:
        return 1.0 if k == n else 0.0
    if n <= SMALL_DEGREE:
        return math.comb(n, k) * x**k * (1.0 - x) ** (n - k)
    return float(_loader_pmf(float(n), float(k), x))


@dataclass(frozen=True)
class BernsteinPoly:
    """Polynomial ``sum_k coeffs[k] p_{n,k}`` of degree at most ``n``."""

    degree: int
    coeffs: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        degree = _check_degree(self.degree)
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.ndim != 1 or coeffs.size != degree + 1:
            raise ValueError(
                f"expected {degree + 1} coefficients for degree {degree}, got shape {coeffs.shape}"
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_coeffs(cls, coeffs, **meta):
        coeffs = np.asarray(coeffs, dtype=float)
        return cls(coeffs.size - 1, coeffs, dict(meta))

    def __call__(self, x, method="direct"):
        return evaluate(self, x, method=method)


_EVAL_CHUNK = 1 << 20


def evaluate(poly, x, method="direct"):
    """Evaluate a Bernstein-form polynomial.

    ``method="direct"`` sums coefficients against log-space basis values
    (O(n) per point).  ``method="casteljau"`` runs de Casteljau's recurrence
    (O(n^2) per point) and serves as the reference backend.
    """
    x = _check_x(x)
    if method == "casteljau":
        return de_casteljau(poly.coeffs, x)
    if method != "direct":
        raise ValueError(f"unknown evaluation method {method!r}")
    flat = x.ravel()
    step = max(1, _EVAL_CHUNK // (poly.degree + 1))
    out = np.empty(flat.shape)
    for start in range(0, flat.size, step):
        chunk = flat[start : start + step]
        out[start : start + step] = basis_matrix(poly.degree, chunk) @ poly.coeffs
    return out.reshape(x.shape) if x.ndim else float(out[0])


def de_casteljau(coeffs, x):
    """de Casteljau evaluation of ``sum coeffs[k] p_{n,k}(x)``."""
    x = _check_x(x)
    c = np.asarray(coeffs, dtype=float)
    flat = x.reshape(-1, 1)
    b = np.broadcast_to(c, (flat.shape[0], c.size)).copy()
    t, s = flat, 1.0 - flat
    for m in range(c.size - 1, 0, -1):
        b[:, :m] = s * b[:, :m] + t * b[:, 1 : m + 1]
    out = b[:, 0]
    return out.reshape(x.shape) if x.ndim else float(out[0])


@dataclass(frozen=True)
class DiffSequence:
    """``(D^r p_{n,.}(x))_k`` for ``k = 0..n`` with ``(D u)_k = u_k - u_{k+1}``."""

    order: int
    values: np.ndarray


def _adjoint_diff(values, r):
    v = np.concatenate([values, np.zeros(values.shape[:-1] + (r,))], axis=-1)
    for _ in range(r):
        v = v[..., :-1] - v[..., 1:]
    return v


def basis_diff(n, x, r):
    """r-fold forward differences of the (zero-padded) basis values at ``x``."""
    if int(r) != r or r < 0:
        raise DomainError("difference order must be a non-negative integer")
    return DiffSequence(int(r), _adjoint_diff(basis_matrix(n, x), int(r)))


def variation(n, x, r):
    """rth order variation ``V_{n,r}(x) = sum_k |(D^r p_{n,.}(x))_k|``."""
    out = np.abs(basis_diff(n, x, r).values).sum(axis=-1)
    return out if np.ndim(x) else float(out)


def moment(n, x, s):
    """Central moment ``T_{n,s}(x) = sum_k (k - n x)^s p_{n,k}(x)``."""
    if int(s) != s or s < 0:
        raise DomainError("moment order must be a non-negative integer")
    x = _check_x(x)
    k = np.arange(n + 1)
    dev = k - n * x[..., None]
    out = (dev ** int(s) * basis_matrix(n, x)).sum(axis=-1)
    return out if x.ndim else float(out)


def abs_moment(n, x, r, s):
    """``Y_{n,r,s}(x) = sum_k |k - n x|^s |(D^r p_{n,.}(x))_k|``."""
    if int(s) != s or s < 0:
        raise DomainError("moment order must be a non-negative integer")
    x = _check_x(x)
    diffs = basis_diff(n, x, r).values
    dev = np.abs(np.arange(n + 1) - n * x[..., None])
    out = (dev ** int(s) * np.abs(diffs)).sum(axis=-1)
    return out if x.ndim else float(out)


def _conversion_matrix(n, m):
    """``T[k, j] = C(k, j) / C(n, j)`` for ``j < m`` (zero above the diagonal)."""
    k = np.arange(n + 1, dtype=float)[:, None]
    j = np.arange(m)
    # C(k,j)/C(n,j) = prod_{i<j} (k-i)/(n-i)
    factors = (k - np.arange(max(m - 1, 0))) / (n - np.arange(max(m - 1, 0)))
    factors = np.clip(factors, 0.0, None)
    t = np.ones((n + 1, m))
    if m > 1:
        t[:, 1:] = np.cumprod(factors, axis=1)
    t[k[:, 0][:, None] < j[None, :]] = 0.0
    return t


def power_to_bernstein(power_coeffs, n):
    """Convert ``sum_j a_j x^j`` to Bernstein coefficients of order ``n``.

    Uses ``b_k = sum_{j<=k} C(k,j)/C(n,j) a_j``: exact rational arithmetic up to
    degree 20, floating point above.  The result's ``meta`` holds the method and,
    for ``n <= 512``, the 1-norm condition number of the full transform.
    """
    n = _check_degree(n)
    a = list(np.atleast_1d(np.asarray(power_coeffs, dtype=float)))
    while len(a) > 1 and a[-1] == 0.0:
        a.pop()
    if len(a) - 1 > n:
        raise DomainError(f"polynomial of degree {len(a) - 1} cannot be written in order {n}")
    m = len(a)
    meta = {"conversion": "exact" if n <= EXACT_CONVERSION_DEGREE else "float"}
    if n <= EXACT_CONVERSION_DEGREE:
        fa = [Fraction(v) for v in a]
        b = [
            float(sum(Fraction(math.comb(k, j), math.comb(n, j)) * fa[j] for j in range(min(k + 1, m))))
            for k in range(n + 1)
        ]
        coeffs = np.array(b)
    else:
        if n > CONDITIONING_WARN_DEGREE:
            warnings.warn(
                f"power-to-Bernstein conversion at degree {n} is ill-conditioned",
                ConditioningWarning,
                stacklevel=2,
            )
        coeffs = _conversion_matrix(n, m) @ np.asarray(a)
    if n <= 512:
        meta["cond"] = float(np.linalg.cond(_conversion_matrix(n, n + 1), 1))
    else:
        meta["cond"] = None
    return BernsteinPoly(n, coeffs, meta)
