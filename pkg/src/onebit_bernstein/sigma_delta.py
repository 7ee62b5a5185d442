"""rth order sigma-delta quantization of coefficient sequences.

Every rule here produces ``q`` together with a state ``u`` satisfying

    u_k = sum_{j=1}^r (-1)^(j-1) C(r,j) u_{k-j} + y_k - q_k,   u_k = 0 for k < 0,

i.e. ``y - q = D^r u`` with ``(D u)_k = u_k - u_{k-1}``.

Rules
-----
greedy
    ``q_k`` is the alphabet element nearest to the unquantized state update.
    Over the integers ``|u_k| <= 1/2`` for every input; over {-1, +1} it is
    stable for ``r = 1`` and ``|y_k| <= 1`` (``|u_k| <= 1``), but diverges for
    ``r >= 3`` even on small inputs.
stable
    One-bit rule for ``r >= 2``.  The decision variable is the linear state
    feedback ``w_k = y_k + sum_j (c_j + a_j) u_{k-j}`` where ``c_j`` are the
    greedy coefficients and ``1 + a_1 z^-1 + ... + a_r z^-r`` is a Butterworth
    denominator tuned so that the noise transfer function
    ``(1 - z^-1)^r / A(z^-1)`` peaks at ``peak_gain``.  Equivalently the state is
    ``u = e / A`` with ``e = w - q`` the quantizer residual.  Signs are chosen by
    an M-path trellis search minimizing ``sum e_k^2`` with decisions committed
    ``lag`` samples late.  With ``A = 1`` and one path this is the greedy rule,
    which is what ``r = 1`` uses.  Stability is empirical and enforced by the
    ``u_cap`` monitor.
"""

from __future__ import annotations

import enum
import functools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numba import njit
from scipy import signal

from .bernstein import BernsteinPoly
from .errors import PreconditionError, StabilityViolation


class Alphabet(enum.Enum):
    INTEGERS = "int"
    PLUS_MINUS_ONE = "pm1"

    @classmethod
    def coerce(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"int": cls.INTEGERS, "z": cls.INTEGERS, "integers": cls.INTEGERS,
                   "pm1": cls.PLUS_MINUS_ONE, "+-1": cls.PLUS_MINUS_ONE, "sign": cls.PLUS_MINUS_ONE}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown alphabet {value!r}") from None

    def __contains__(self, value):
        if self is Alphabet.PLUS_MINUS_ONE:
            return value in (-1, 1)
        return float(value).is_integer()


def round_to_alphabet(v, alphabet):
    """Nearest alphabet element.  Integer ties go to even; 0 maps to +1 in {-1, +1}."""
    alphabet = Alphabet.coerce(alphabet)
    if alphabet is Alphabet.PLUS_MINUS_ONE:
        return 1 if v >= 0 else -1
    if isinstance(v, Fraction):
        return round(v)
    return int(np.rint(v))


def greedy_coefficients(order):
    """``c_j = (-1)^(j-1) C(r, j)`` for ``j = 1..r``."""
    return np.array([(-1) ** (j - 1) * math.comb(order, j) for j in range(1, order + 1)], dtype=float)


@functools.lru_cache(maxsize=None)
def design_ntf(order, peak_gain=1.5):
    """Denominator ``a`` (``a[0] = 1``) of the noise transfer function.

    The poles are those of an order-``r`` Butterworth high-pass filter whose cutoff
    is bisected so that ``max |(1 - z^-1)^r / A| = peak_gain`` on the unit circle.
    """
    if order < 1 or peak_gain <= 1.0:
        raise ValueError("order must be >= 1 and peak_gain > 1")
    num = np.array([(-1) ** j * math.comb(order, j) for j in range(order + 1)], dtype=float)

    def peak(wc):
        _, a = signal.butter(order, wc, btype="highpass")
        _, h = signal.freqz(num, a, worN=8192)
        return np.abs(h).max(), a

    lo, hi = 1e-6, 0.999
    if peak(hi)[0] <= peak_gain:
        return tuple(peak(hi)[1])
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if peak(mid)[0] > peak_gain:
            hi = mid
        else:
            lo = mid
    return tuple(peak(lo)[1])


@dataclass(frozen=True)
class QuantizerConfig:
    order: int = 1
    alphabet: Alphabet = Alphabet.INTEGERS
    rule: str = "greedy"
    mu: float = 1.0
    u_cap: float = 1e6
    # stable-rule parameters
    peak_gain: float = 1.5
    paths: int = 256
    lag: int = 63

    def __post_init__(self):
        object.__setattr__(self, "alphabet", Alphabet.coerce(self.alphabet))
        if int(self.order) != self.order or self.order < 1:
            raise ValueError("order must be a positive integer")
        object.__setattr__(self, "order", int(self.order))
        if self.rule not in RULES:
            raise ValueError(f"unknown rule {self.rule!r}; known: {sorted(RULES)}")
        if RULES[self.rule].one_bit and self.alphabet is not Alphabet.PLUS_MINUS_ONE:
            raise ValueError(f"rule {self.rule!r} requires the {{-1, +1}} alphabet")
        if not 0.0 < self.mu <= 1.0:
            raise ValueError("mu must lie in (0, 1]")
        if not self.u_cap > 0:
            raise ValueError("u_cap must be positive")
        if self.paths < 1 or not 0 <= self.lag <= 63:
            raise ValueError("need paths >= 1 and 0 <= lag <= 63")


@dataclass(frozen=True)
class QuantizationResult:
    q: np.ndarray
    u: np.ndarray
    u_max: float
    order: int
    alphabet: Alphabet
    rule: str = "greedy"
    meta: dict = field(default_factory=dict, compare=False)

    def to_dict(self):
        return {
            "schema": 1,
            "q": [int(v) for v in self.q],
            "u_max": float(self.u_max),
            "order": self.order,
            "alphabet": self.alphabet.value,
            "rule": self.rule,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


@njit(cache=True)
def _feedback_kernel(y, c, f, integer, u_cap):
    n = y.size
    r = c.size
    q = np.zeros(n)
    u = np.zeros(n)
    for k in range(n):
        acc_c = 0.0
        acc_f = 0.0
        for j in range(r):
            if k - 1 - j >= 0:
                acc_c += c[j] * u[k - 1 - j]
                acc_f += f[j] * u[k - 1 - j]
        w = acc_f + y[k]
        if integer:
            qk = np.rint(w)
        elif w >= 0.0:
            qk = 1.0
        else:
            qk = -1.0
        q[k] = qk
        u[k] = acc_c + y[k] - qk
        if abs(u[k]) > u_cap:
            return q, u, k
    return q, u, -1


@njit(cache=True)
def _trellis_kernel(y, c, f, paths, lag, u_cap):
    n = y.size
    r = c.size
    one = np.uint64(1)
    ulag = np.uint64(lag)
    states = np.zeros((paths, r))
    costs = np.zeros(paths)
    hist = np.zeros(paths, dtype=np.uint64)
    new_states = np.zeros((paths, r))
    new_costs = np.zeros(paths)
    new_hist = np.zeros(paths, dtype=np.uint64)
    cand_cost = np.zeros(2 * paths)
    cand_u = np.zeros(2 * paths)
    q = np.zeros(n)
    live = 1
    for k in range(n):
        ncand = 2 * live
        for m in range(live):
            acc_c = 0.0
            acc_f = 0.0
            for j in range(r):
                acc_c += c[j] * states[m, j]
                acc_f += f[j] * states[m, j]
            w = acc_f + y[k]
            # candidate 2m: q = +1, candidate 2m + 1: q = -1
            e_plus = w - 1.0
            e_minus = w + 1.0
            u_plus = acc_c + y[k] - 1.0
            u_minus = acc_c + y[k] + 1.0
            cand_cost[2 * m] = costs[m] + e_plus * e_plus
            cand_cost[2 * m + 1] = costs[m] + e_minus * e_minus
            cand_u[2 * m] = u_plus
            cand_u[2 * m + 1] = u_minus
        order = np.argsort(cand_cost[:ncand], kind="mergesort")
        keep = min(paths, ncand)
        base = cand_cost[order[0]]
        for i in range(keep):
            idx = order[i]
            m = idx // 2
            bit = np.uint64(1) if idx % 2 == 0 else np.uint64(0)
            new_states[i, 0] = cand_u[idx]
            for j in range(1, r):
                new_states[i, j] = states[m, j - 1]
            new_costs[i] = cand_cost[idx] - base
            new_hist[i] = (hist[m] << one) | bit
        if abs(new_states[0, 0]) > u_cap:
            return q, k
        if k >= lag:
            decided = (new_hist[0] >> ulag) & one
            q[k - lag] = 1.0 if decided == one else -1.0
            live = 0
            for i in range(keep):
                if ((new_hist[i] >> ulag) & one) == decided:
                    states[live, :] = new_states[i, :]
                    costs[live] = new_costs[i]
                    hist[live] = new_hist[i]
                    live += 1
        else:
            for i in range(keep):
                states[i, :] = new_states[i, :]
                costs[i] = new_costs[i]
                hist[i] = new_hist[i]
            live = keep
    for t in range(max(0, n - lag), n):
        shift = np.uint64(n - 1 - t)
        q[t] = 1.0 if ((hist[0] >> shift) & one) == one else -1.0
    return q, -1


@njit(cache=True)
def _state_kernel(y, q, c):
    n = y.size
    r = c.size
    u = np.zeros(n)
    for k in range(n):
        acc_c = 0.0
        for j in range(r):
            if k - 1 - j >= 0:
                acc_c += c[j] * u[k - 1 - j]
        u[k] = acc_c + y[k] - q[k]
    return u


def state_from_output(y, q, order):
    """Solve ``D^r u = y - q`` forward with ``u_k = 0`` for ``k < 0``."""
    y = np.ascontiguousarray(y, dtype=float)
    q = np.ascontiguousarray(q, dtype=float)
    return _state_kernel(y, q, greedy_coefficients(order))


@dataclass(frozen=True)
class Rule:
    func: object
    one_bit: bool = False


RULES = {}


def register_rule(name, func, one_bit=False):
    """Add a quantization rule ``func(y, config) -> (q, u)``.

    ``func`` must raise :class:`StabilityViolation` when ``|u_k|`` exceeds
    ``config.u_cap``.
    """
    RULES[name] = Rule(func, one_bit)


def _greedy(y, config):
    c = greedy_coefficients(config.order)
    q, u, bad = _feedback_kernel(y, c, c, config.alphabet is Alphabet.INTEGERS, float(config.u_cap))
    if bad >= 0:
        raise StabilityViolation(int(bad), float(u[bad]), config.u_cap)
    return q, u


def _stable(y, config):
    c = greedy_coefficients(config.order)
    if config.order == 1:
        f = c
    else:
        a = np.asarray(design_ntf(config.order, config.peak_gain))
        f = c + a[1:]
    q, bad = _trellis_kernel(y, c, f, int(config.paths), int(config.lag), float(config.u_cap))
    if bad >= 0:
        u = _state_kernel(y, q, c)
        raise StabilityViolation(int(bad), float("inf") if not np.isfinite(u).all() else float(np.abs(u).max()), config.u_cap)
    u = _state_kernel(y, q, c)
    over = np.flatnonzero(np.abs(u) > config.u_cap)
    if over.size:
        raise StabilityViolation(int(over[0]), float(u[over[0]]), config.u_cap)
    return q, u


register_rule("greedy", _greedy)
register_rule("stable", _stable, one_bit=True)


def quantize(y, config):
    """Quantize ``y`` sample by sample with the configured rule.

    Raises
    ------
    PreconditionError
        Input exceeds the bound of a conditionally stable one-bit rule
        (``|y_k| <= 1`` for greedy, ``|y_k| <= mu`` for stable).
    StabilityViolation
        ``|u_k|`` exceeded ``config.u_cap``.
    """
    y = np.ascontiguousarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("y must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(y)):
        raise ValueError("y must be finite")
    peak = float(np.abs(y).max())
    if config.alphabet is Alphabet.PLUS_MINUS_ONE:
        bound = config.mu if config.rule == "stable" else 1.0
        if peak > bound:
            raise PreconditionError(f"max |y_k| = {peak:.6g} exceeds the admissible bound {bound:.6g}")
    q, u = RULES[config.rule].func(y, config)
    return QuantizationResult(
        q=q.astype(np.int64),
        u=u,
        u_max=float(np.abs(u).max()),
        order=config.order,
        alphabet=config.alphabet,
        rule=config.rule,
    )


def _signed_binomials(order):
    return [(-1) ** j * math.comb(order, j) for j in range(order + 1)]


def verify_difference_equation(y, result):
    """``max_k |(y - q)_k - (D^r u)_k|`` with ``u`` zero-padded on the left.

    Exact when ``y`` and ``result.u`` hold :class:`fractions.Fraction` entries.
    """
    r = result.order
    q = list(result.q)
    u = list(result.u)
    if len(y) != len(q) or len(u) != len(q):
        raise ValueError("length mismatch between y, q and u")
    d = _signed_binomials(r)
    if any(isinstance(v, Fraction) for v in list(y) + u):
        worst = Fraction(0)
        for k in range(len(q)):
            du = sum(d[j] * u[k - j] for j in range(r + 1) if k - j >= 0)
            worst = max(worst, abs(Fraction(y[k]) - q[k] - du))
        return worst
    ua = np.asarray(u, dtype=float)
    du = np.convolve(ua, np.asarray(d, dtype=float))[: ua.size]
    res = np.asarray(y, dtype=float) - np.asarray(q, dtype=float) - du
    return float(np.abs(res).max())


def quantization_error_poly(y, q, n):
    """Bernstein polynomial with coefficients ``y_k - q_k``."""
    y = np.asarray(y, dtype=float)
    q = np.asarray(q, dtype=float)
    if y.shape != (n + 1,) or q.shape != (n + 1,):
        raise ValueError(f"expected sequences of length {n + 1}")
    return BernsteinPoly(n, y - q)


def empirical_stability(order, mu, samples=10**6, seed=0, rule="stable", **config_kwargs):
    """Largest ``|u_k|`` over ``samples`` i.i.d. uniform inputs in ``[-mu, mu]``.

    Returns ``None`` when the run trips the ``u_cap`` monitor.
    """
    rng = np.random.default_rng(seed)
    y = rng.uniform(-mu, mu, samples)
    config = QuantizerConfig(order=order, alphabet=Alphabet.PLUS_MINUS_ONE, rule=rule,
                             mu=mu, **config_kwargs)
    try:
        return quantize(y, config).u_max
    except StabilityViolation:
        return None


def largest_stable_mu(order, mus=(0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95), samples=10**5,
                      seed=0, rule="stable", **config_kwargs):
    """Largest ``mu`` from ``mus`` (scanned upward) whose random sweep stays bounded."""
    best = None
    for mu in sorted(mus):
        if empirical_stability(order, mu, samples, seed, rule, **config_kwargs) is None:
            break
        best = mu
    return best
