"""Named test functions on [0, 1] used by the CLI and the experiments."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class FunctionSpec:
    """A test function ``func(x, **params)`` with a string identifier."""

    id: str
    func: Callable
    defaults: dict = field(default_factory=dict)
    doc: str = ""
    # params -> {"sup_norm", "lip_seminorm", "c2_norm", ...}; exact or safe upper bounds
    norms: Callable | None = None

    def known_norms(self, params=None):
        if self.norms is None:
            return {}
        kw = dict(self.defaults)
        kw.update(params or {})
        return self.norms(**kw)

    def bind(self, params=None):
        kw = dict(self.defaults)
        kw.update(params or {})
        unknown = set(kw) - set(self.defaults)
        if unknown:
            raise ValueError(f"unknown parameters for {self.id!r}: {sorted(unknown)}")
        return lambda x: np.asarray(self.func(np.asarray(x, dtype=float), **kw), dtype=float)


REGISTRY: dict[str, FunctionSpec] = {}


def register_function(spec):
    REGISTRY[spec.id] = spec
    return spec


def _poly(x, coeffs=(0.0,)):
    return np.polynomial.polynomial.polyval(x, coeffs)


def _sin_norms(a, k, phase):
    w = 2 * np.pi * k
    return {"sup_norm": abs(a), "lip_seminorm": abs(a) * w, "c2_norm": abs(a) * w * w}


def _exp_norms(a):
    m = np.exp(max(a, 0.0))
    return {"sup_norm": float(m), "lip_seminorm": float(abs(a) * m), "c2_norm": float(a * a * m)}


register_function(FunctionSpec(
    "const", lambda x, c=0.5: np.full_like(x, c), {"c": 0.5}, "constant c",
    lambda c: {"sup_norm": abs(c), "lip_seminorm": 0.0, "c2_norm": 0.0}))
register_function(FunctionSpec(
    "linear", lambda x, a=1.0, b=0.0: a * x + b, {"a": 1.0, "b": 0.0}, "a x + b",
    lambda a, b: {"sup_norm": max(abs(b), abs(a + b)), "lip_seminorm": abs(a), "c2_norm": 0.0}))
register_function(FunctionSpec(
    "abs", lambda x, a=1.0, c=0.5: a * np.abs(x - c), {"a": 1.0, "c": 0.5}, "a |x - c|",
    lambda a, c: {"sup_norm": abs(a) * max(abs(c), abs(1 - c)), "lip_seminorm": abs(a)}))
register_function(FunctionSpec(
    "sin", lambda x, a=0.8, k=1.0, phase=0.0: a * np.sin(2 * np.pi * k * x + phase),
    {"a": 0.8, "k": 1.0, "phase": 0.0}, "a sin(2 pi k x + phase)", _sin_norms))
register_function(FunctionSpec("exp", lambda x, a=1.0: np.exp(a * x), {"a": 1.0}, "exp(a x)", _exp_norms))
register_function(FunctionSpec(
    "parabola", lambda x, a=4.0: a * x * (1 - x), {"a": 4.0}, "a x (1 - x)",
    lambda a: {"sup_norm": abs(a) / 4, "lip_seminorm": abs(a), "c2_norm": 2 * abs(a)}))
register_function(FunctionSpec("poly", _poly, {"coeffs": (0.0,)}, "sum coeffs[j] x^j"))


def lookup(fn_id):
    try:
        return REGISTRY[fn_id]
    except KeyError:
        raise ValueError(f"unknown function {fn_id!r}; known: {sorted(REGISTRY)}") from None


def get_function(fn_id, params=None):
    """Resolve ``fn_id`` with optional parameters (dict or JSON string) to a callable."""
    if isinstance(params, str):
        params = json.loads(params) if params.strip() else {}
    return lookup(fn_id).bind(params)
