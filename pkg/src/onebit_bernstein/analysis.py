"""Error measurement, L^p norms, pointwise envelopes and log-log rate fits."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import integrate, stats

from .bernstein import evaluate, variation
from .errors import DomainError

DEFAULT_GRID = 2001
DEFAULT_INTERVAL = (0.2, 0.8)
CSV_COLUMNS = ("x", "f", "Q", "abs_error", "envelope")


def uniform_grid(size=DEFAULT_GRID, interval=(0.0, 1.0)):
    if size < 2:
        raise DomainError("grid needs at least 2 points")
    return np.linspace(interval[0], interval[1], int(size))


def lp_norm(errors, p, grid_size=DEFAULT_GRID):
    """L^p norm on [0, 1] of a callable or of samples on a uniform grid of [0, 1].

    Composite Simpson quadrature for finite ``p``, the maximum for ``p = inf``.
    """
    if callable(errors):
        x = uniform_grid(grid_size)
        e = np.abs(np.asarray(errors(x), dtype=float))
    else:
        e = np.abs(np.asarray(errors, dtype=float))
        x = uniform_grid(e.size)
    if p == math.inf:
        return float(e.max())
    if not p >= 1:
        raise DomainError("p must be >= 1")
    # scale by the peak so e**p cannot underflow or overflow
    peak = float(e.max())
    if peak == 0.0:
        return 0.0
    return peak * float(integrate.simpson((e / peak) ** p, x=x) ** (1.0 / p))


_REGIME_ORDER = {"first": 1, "second": 2}


def envelope(n, r, x, regime=None):
    """Unit-constant pointwise envelope of the quantization error.

    ``first``: ``1/(1 + sqrt(nX))``; ``second``: ``1/(1 + nX)``;
    ``general``: ``n^(-r/2) X^(-r)``, with ``X = x(1-x)``.
    """
    if regime is None:
        regime = {1: "first", 2: "second"}.get(r, "general")
    if regime in _REGIME_ORDER and _REGIME_ORDER[regime] != r:
        raise DomainError(f"regime {regime!r} is for order {_REGIME_ORDER[regime]}, got r={r}")
    x = np.asarray(x, dtype=float)
    X = x * (1.0 - x)
    if regime == "first":
        out = 1.0 / (1.0 + np.sqrt(n * X))
    elif regime == "second":
        out = 1.0 / (1.0 + n * X)
    elif regime == "general":
        with np.errstate(divide="ignore"):
            out = n ** (-r / 2) * X ** (-float(r))
    else:
        raise DomainError(f"unknown regime {regime!r}")
    return out if out.ndim else float(out)


class RateFit(NamedTuple):
    slope: float
    r_squared: float


def rate_fit(ns, errors):
    """Least-squares slope of ``log(error)`` against ``log(n)``."""
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if ns.size != errors.size or ns.size < 4:
        raise DomainError("rate_fit needs at least 4 (n, error) pairs")
    if np.any(errors <= 0) or np.any(ns <= 0):
        raise DomainError("errors and degrees must be positive")
    res = stats.linregress(np.log(ns), np.log(errors))
    return RateFit(float(res.slope), float(res.rvalue**2))


def sup_on_interval(f, poly, interval=DEFAULT_INTERVAL, grid_size=DEFAULT_GRID):
    """``max |f - poly|`` over a uniform grid of ``[a, b]``."""
    x = uniform_grid(grid_size, interval)
    return float(np.abs(np.asarray(f(x), dtype=float) - evaluate(poly, x)).max())


@dataclass
class ErrorReport:
    n: int
    grid: np.ndarray
    f_values: np.ndarray
    q_values: np.ndarray
    lp_norms: dict
    interval: tuple
    sup_on_interval: float
    envelope: np.ndarray | None = None
    slope: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def pointwise_error(self):
        return np.abs(self.f_values - self.q_values)

    def to_dict(self):
        return {
            "schema": 1,
            "n": self.n,
            "lp_norms": {("inf" if k == math.inf else str(k)): float(v) for k, v in self.lp_norms.items()},
            "interval": list(self.interval),
            "sup_on_interval": float(self.sup_on_interval),
            "slope": self.slope,
            "meta": self.meta,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv(self, header=None):
        """CSV with a ``# key: value`` header block echoing ``header``."""
        buf = io.StringIO()
        for key, value in (header or {}).items():
            buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        env = self.envelope if self.envelope is not None else np.full(self.grid.size, np.nan)
        for row in zip(self.grid, self.f_values, self.q_values, self.pointwise_error, env):
            writer.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def pointwise_error(f, poly, grid_size=DEFAULT_GRID, interval=DEFAULT_INTERVAL, order=None,
                    ps=(1, 2, math.inf)):
    """Error samples of ``poly`` against ``f`` on a uniform grid of [0, 1].

    ``order`` adds the matching unit-constant envelope column.
    """
    x = uniform_grid(grid_size)
    fx = np.asarray(f(x), dtype=float)
    qx = evaluate(poly, x)
    err = np.abs(fx - qx)
    env = envelope(poly.degree, order, x) if order is not None else None
    return ErrorReport(
        n=poly.degree,
        grid=x,
        f_values=fx,
        q_values=qx,
        lp_norms={p: lp_norm(err, p) for p in ps},
        interval=tuple(interval),
        sup_on_interval=sup_on_interval(f, poly, interval, grid_size),
        envelope=env,
    )


def summation_bound_excess(error_poly, u_max, order, grid_size=DEFAULT_GRID):
    """``max_x (|E^Q(x)| - u_max V_{n,r}(x))`` on a uniform grid of [0, 1].

    Non-positive (up to rounding) whenever ``error_poly`` has coefficients
    ``D^r u`` with ``|u| <= u_max``.
    """
    x = uniform_grid(grid_size)
    eq = np.abs(evaluate(error_poly, x))
    return float((eq - u_max * variation(error_poly.degree, x, order)).max())
