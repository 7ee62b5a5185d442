"""Coefficient-wise rounding onto the Bernstein lattice and its alpha-scaled family.

In the plain basis ``x^k (1-x)^(n-k)`` the Bernstein polynomial of ``f`` has
coefficients ``f(k/n) C(n,k)``.  ``round_star`` rounds these to integers;
``round_alpha`` rounds them to integer multiples of ``floor(C(n,k)^alpha)``.
All arithmetic is exact (rationals and big integers); ties go to even.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bernstein import BernsteinPoly, evaluate
from .errors import DegreeTooLarge, DomainError

MAX_EXACT_DEGREE = 1024
# alpha is replaced by the nearest rational with this bounded denominator
ALPHA_MAX_DENOMINATOR = 1000


def _check_n(n):
    if int(n) != n or n < 1:
        raise DomainError(f"degree must be a positive integer, got {n!r}")
    if n > MAX_EXACT_DEGREE:
        raise DegreeTooLarge(f"exact lattice rounding is limited to n <= {MAX_EXACT_DEGREE}, got {n}")
    return int(n)


def _grid_values(f, n):
    return [Fraction(float(v)) for v in np.asarray(f(np.arange(n + 1) / n), dtype=float)]


def _iroot(a, q):
    """``floor(a ** (1/q))`` for a non-negative integer ``a`` (integer Newton iteration)."""
    if a < 2 or q == 1:
        return a
    if q == 2:
        return math.isqrt(a)
    x = 1 << -(-a.bit_length() // q)
    while True:
        y = ((q - 1) * x + a // x ** (q - 1)) // q
        if y >= x:
            return x
        x = y


def alpha_fraction(alpha):
    if not 0.0 <= alpha <= 1.0:
        raise DomainError("alpha must lie in [0, 1]")
    return Fraction(alpha).limit_denominator(ALPHA_MAX_DENOMINATOR)


@dataclass(frozen=True)
class LatticeParams:
    alpha: float
    delta: tuple

    @classmethod
    def build(cls, n, alpha):
        """``delta[k] = floor(C(n,k)^alpha)``, computed exactly."""
        n = _check_n(n)
        a = alpha_fraction(alpha)
        p, q = a.numerator, a.denominator
        delta = tuple(_iroot(math.comb(n, k) ** p, q) for k in range(n + 1))
        return cls(float(alpha), delta)


@dataclass(frozen=True)
class LatticePoly:
    """``sum_k multipliers[k] * delta[k] * x^k (1-x)^(n-k)``."""

    n: int
    params: LatticeParams
    multipliers: tuple

    @property
    def coeffs(self):
        """Integer coefficients in the plain basis ``x^k (1-x)^(n-k)``."""
        return tuple(m * d for m, d in zip(self.multipliers, self.params.delta))

    def to_poly(self):
        b = [float(Fraction(c, math.comb(self.n, k))) for k, c in enumerate(self.coeffs)]
        return BernsteinPoly(self.n, b, {"lattice_alpha": self.params.alpha})


def round_alpha(f, n, alpha):
    """``m_k = [f(k/n) C(n,k) / delta_k]`` with half-to-even rounding."""
    params = LatticeParams.build(n, alpha)
    n = int(n)
    vals = _grid_values(f, n)
    mult = tuple(round(v * math.comb(n, k) / params.delta[k]) for k, v in enumerate(vals))
    return LatticePoly(n, params, mult)


def round_star(f, n):
    """Integer coefficients ``[f(k/n) C(n,k)]`` in the plain basis."""
    return list(round_alpha(f, n, 0.0).coeffs)


def round_star_poly(f, n):
    return round_alpha(f, n, 0.0).to_poly()


def lattice_stats(n):
    """``log2 M_n`` with ``M_n = prod_k C(n,k)``, and ``mu_n = log2 M_n / (n+1)``."""
    if int(n) != n or n < 1:
        raise DomainError("degree must be a positive integer")
    n = int(n)
    ln = sum(math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1) for k in range(n + 1))
    log2_m = ln / math.log(2.0)
    return {"log2_M_n": log2_m, "mu_n": log2_m / (n + 1)}


def rounding_error(f, n, alpha, grid_size=2001):
    """``max |B_n(f) - B_n^{*,alpha}(f)|`` on a uniform grid of [0, 1]."""
    lat = round_alpha(f, n, alpha)
    exact = np.asarray(f(np.arange(n + 1) / n), dtype=float)
    diff = BernsteinPoly(n, exact - lat.to_poly().coeffs)
    return float(np.abs(evaluate(diff, np.linspace(0.0, 1.0, grid_size))).max())
