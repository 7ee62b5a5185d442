"""Command-line front end: ``onebit-bernstein {quantize,rates,lattice,moments,selftest}``.

Settings come from built-in defaults, then an optional ``--config`` file of
``key = <json value>`` lines, then explicit flags.  Every output file starts with
a header echoing the resolved settings, and re-runs are byte-identical.

Exit codes: 0 success, 1 selftest failure, 2 admissibility (input too large for
a one-bit rule), 3 stability monitor tripped, 4 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, bernstein, lattice, operators, sigma_delta
from .errors import DegreeTooLarge, PreconditionError, StabilityViolation
from .functions import get_function

EXIT_OK, EXIT_SELFTEST, EXIT_ADMISSIBILITY, EXIT_STABILITY, EXIT_CONFIG = 0, 1, 2, 3, 4

DEFAULTS = {
    "fn": "abs",
    "params": {},
    "n": [256],
    "order": 1,
    "alphabet": "int",
    "rule": "greedy",
    "mu": 1.0,
    "stage": "bernstein",
    "interval": [0.2, 0.8],
    "grid": analysis.DEFAULT_GRID,
    "out": None,
    "seed": 0,
    "workers": 1,
    "alpha": [0.0, 0.5, 1.0],
    "x": [0.25, 0.5],
    "moment": 4,
    "quantize": True,
}


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _int_list(text):
    return [int(v) for v in str(text).split(",") if v.strip()]


def _float_list(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def read_config_file(path):
    """Parse ``key = <json>`` lines; ``#`` starts a comment line."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key = key.strip().replace("-", "_")
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{lineno}: value is not JSON ({exc.msg})") from None
    return out


def _common(p):
    p.add_argument("--config", help="file of 'key = <json>' lines; flags override it")
    p.add_argument("--fn", help="registry function id (const, linear, abs, sin, exp, parabola, poly)")
    p.add_argument("--params", type=json.loads, help="function parameters as a JSON object")
    p.add_argument("--n", type=_int_list, help="degree or comma-separated degrees")
    p.add_argument("--order", type=int, help="noise-shaping order r")
    p.add_argument("--alphabet", choices=["int", "pm1"])
    p.add_argument("--rule", choices=sorted(sigma_delta.RULES))
    p.add_argument("--mu", type=float, help="admissible input bound for one-bit rules")
    p.add_argument("--stage", help="bernstein | kantorovich | iteru:R | proxy:P")
    p.add_argument("--interval", type=_float_list, help="sup-norm interval a,b")
    p.add_argument("--grid", type=int, help="evaluation grid size")
    p.add_argument("--out", help="output path prefix (.json/.csv are appended)")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, help="processes for sweeps over n")


def build_parser():
    parser = _Parser(prog="onebit-bernstein", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("quantize", help="quantize one approximant and report its errors")
    _common(p)
    p = sub.add_parser("rates", help="error sweep over degrees with fitted log-log slopes")
    _common(p)
    p.add_argument("--no-quantize", dest="quantize", action="store_const", const=False,
                   help="measure the unquantized stage-one approximant")
    p = sub.add_parser("lattice", help="lattice rounding errors and lattice size statistics")
    _common(p)
    p.add_argument("--alpha", type=_float_list, help="comma-separated alpha values in [0,1]")
    p = sub.add_parser("moments", help="central moments, variations and absolute moments")
    _common(p)
    p.add_argument("--x", type=_float_list, help="comma-separated points in [0,1]")
    p.add_argument("--moment", type=int, help="largest moment order s")
    p = sub.add_parser("selftest", help="quick internal consistency checks")
    _common(p)
    return parser


def resolve(args):
    settings = dict(DEFAULTS)
    if args.config:
        settings.update(read_config_file(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    settings["command"] = args.command
    ns = settings["n"] = [int(v) for v in np.atleast_1d(settings["n"])]
    if any(b <= a for a, b in zip(ns, ns[1:])) or ns[0] < 1:
        raise ConfigError("degrees must be positive and strictly increasing")
    a, b = settings["interval"]
    if not 0.0 < a < b < 1.0:
        raise ConfigError("interval must satisfy 0 < a < b < 1")
    if settings["grid"] < 2 or settings["workers"] < 1:
        raise ConfigError("grid must be >= 2 and workers >= 1")
    operators.parse_stage(settings["stage"])
    get_function(settings["fn"], settings["params"])
    if settings["command"] in ("quantize", "rates"):
        quantizer_config(settings)
    return settings


def quantizer_config(settings):
    return sigma_delta.QuantizerConfig(
        order=settings["order"], alphabet=settings["alphabet"], rule=settings["rule"], mu=settings["mu"]
    )


def _header(settings):
    # the worker count does not change any result, so it stays out of the provenance block
    return {k: settings[k] for k in sorted(settings) if k != "workers"}


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _csv(header, columns, rows):
    lines = [f"# {k}: {json.dumps(v, sort_keys=True)}" for k, v in header.items()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def run_one(settings, n):
    """Stage one, admissibility gate, quantization and error report for one degree."""
    f = get_function(settings["fn"], settings["params"])
    stage = operators.stage_coeffs(f, n, settings["stage"])
    if not settings.get("quantize", True):
        rep = analysis.pointwise_error(f, stage, settings["grid"], tuple(settings["interval"]))
        return {"stage": stage, "result": None, "report": rep}
    config = quantizer_config(settings)
    if config.alphabet is sigma_delta.Alphabet.PLUS_MINUS_ONE:
        bound = config.mu if config.rule == "stable" else 1.0
        gate = operators.check_onebit_admissible(stage.coeffs, bound)
        if not gate.ok:
            raise PreconditionError(
                f"n={n}: max |coefficient| = {gate.max_abs:.6g} exceeds the one-bit bound {bound:.6g}")
    result = sigma_delta.quantize(stage.coeffs, config)
    poly = bernstein.BernsteinPoly(n, result.q.astype(float))
    rep = analysis.pointwise_error(f, poly, settings["grid"], tuple(settings["interval"]), order=config.order)
    eq = sigma_delta.quantization_error_poly(stage.coeffs, result.q, n)
    rep.meta["summation_bound_excess"] = analysis.summation_bound_excess(eq, result.u_max, config.order,
                                                                         settings["grid"])
    rep.meta["stage"] = {k: v for k, v in stage.meta.items() if isinstance(v, (int, float, str, type(None)))}
    return {"stage": stage, "result": result, "report": rep}


def _run_star(job):
    settings, n = job
    return run_one(settings, n)


def _map(settings, ns):
    jobs = [(settings, n) for n in ns]
    if settings["workers"] > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(settings["workers"]) as pool:
            return list(pool.map(_run_star, jobs))
    return [_run_star(job) for job in jobs]


def cmd_quantize(settings):
    outs = _map(settings, settings["n"])
    header = _header(settings)
    for n, out in zip(settings["n"], outs):
        doc = {
            "schema": 1,
            "config": header,
            "n": n,
            "quantization": out["result"].to_dict(),
            "report": out["report"].to_dict(),
        }
        text = json.dumps(doc, sort_keys=True) + "\n"
        if settings["out"] is None:
            sys.stdout.write(text)
            continue
        stem = settings["out"] if len(settings["n"]) == 1 else f"{settings['out']}_n{n}"
        _write(f"{stem}.json", text)
        _write(f"{stem}.csv", out["report"].to_csv(header))
    return EXIT_OK


def cmd_rates(settings):
    ns = settings["n"]
    if len(ns) < 4:
        raise ConfigError("rates needs at least 4 degrees")
    outs = _map(settings, ns)
    cols = ["sup", "L1", "L2"]
    rows, table = [], {c: [] for c in cols}
    for n, out in zip(ns, outs):
        rep = out["report"]
        vals = [rep.sup_on_interval, rep.lp_norms[1], rep.lp_norms[2]]
        for c, v in zip(cols, vals):
            table[c].append(v)
        u_max = out["result"].u_max if out["result"] is not None else float("nan")
        rows.append([str(n), *vals, u_max])
    slopes = []
    for c in cols:
        err = np.asarray(table[c])
        slopes.append(analysis.rate_fit(ns, err).slope if np.all(err > 0) else float("nan"))
    rows.append(["slope", *slopes, float("nan")])
    text = _csv(_header(settings), ["n", "sup", "L1", "L2", "u_max"], rows)
    if settings["out"] is None:
        sys.stdout.write(text)
    else:
        _write(f"{settings['out']}.csv", text)
    return EXIT_OK


def cmd_lattice(settings):
    f = get_function(settings["fn"], settings["params"])
    rows, errs = [], {a: [] for a in settings["alpha"]}
    for n in settings["n"]:
        st = lattice.lattice_stats(n)
        for a in settings["alpha"]:
            e = lattice.rounding_error(f, n, a, settings["grid"])
            errs[a].append(e)
            rows.append([str(n), a, st["log2_M_n"], st["mu_n"], e, n ** (-1.0 + a)])
    if len(settings["n"]) >= 4:
        for a, e in errs.items():
            if all(v > 0 for v in e):
                rows.append(["slope", a, float("nan"), float("nan"),
                             analysis.rate_fit(settings["n"], e).slope, -1.0 + a])
    text = _csv(_header(settings), ["n", "alpha", "log2_M_n", "mu_n", "sup_error", "envelope"], rows)
    if settings["out"] is None:
        sys.stdout.write(text)
    else:
        _write(f"{settings['out']}.csv", text)
    return EXIT_OK


def cmd_moments(settings):
    x = np.asarray(settings["x"], dtype=float)
    r = settings["order"]
    rows = []
    for n in settings["n"]:
        v = np.atleast_1d(bernstein.variation(n, x, r))
        for s in range(settings["moment"] + 1):
            t = np.atleast_1d(bernstein.moment(n, x, s))
            y = np.atleast_1d(bernstein.abs_moment(n, x, r, s))
            for i, xi in enumerate(x):
                rows.append([str(n), xi, str(s), t[i], y[i], v[i]])
    text = _csv(_header(settings), ["n", "x", "s", "T_ns", "Y_nrs", "V_nr"], rows)
    if settings["out"] is None:
        sys.stdout.write(text)
    else:
        _write(f"{settings['out']}.csv", text)
    return EXIT_OK


def selftest_checks(seed=0):
    """Fast consistency checks; yields ``(name, passed, detail)``."""
    rng = np.random.default_rng(seed)
    x = np.linspace(0.0, 1.0, 1001)
    err = max(float(np.abs(bernstein.basis_matrix(n, x).sum(axis=-1) - 1).max()) for n in (16, 256, 1024))
    yield "partition of unity", err < 1e-12, f"max deviation {err:.2e}"
    worst = 0.0
    for r in range(1, 7):
        res = sigma_delta.quantize(rng.uniform(-20, 20, 20000), sigma_delta.QuantizerConfig(order=r))
        worst = max(worst, res.u_max)
    yield "greedy integer state bound", worst <= 0.5 + 1e-12, f"max |u| {worst:.6f}"
    y = rng.uniform(-1, 1, 20000)
    res = sigma_delta.quantize(y, sigma_delta.QuantizerConfig(order=1, alphabet="pm1"))
    yield "greedy one-bit state bound", res.u_max <= 1 + 1e-12, f"max |u| {res.u_max:.6f}"
    resid = sigma_delta.verify_difference_equation(y, res)
    yield "difference equation", resid < 1e-9, f"residual {resid:.2e}"
    ok = all(operators.pr_coeffs(r)[1] <= 2 ** (r - 1) + r - 2 for r in range(2, 9))
    yield "P_(r-2) coefficient bound", ok, "r = 2..8"
    u = sigma_delta.empirical_stability(3, 0.8, samples=20000, seed=seed)
    yield "stable one-bit rule, r=3", u is not None, f"max |u| {u}"


def cmd_selftest(settings):
    failed = 0
    for name, ok, detail in selftest_checks(settings["seed"]):
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if not failed else EXIT_SELFTEST


COMMANDS = {
    "quantize": cmd_quantize,
    "rates": cmd_rates,
    "lattice": cmd_lattice,
    "moments": cmd_moments,
    "selftest": cmd_selftest,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = resolve(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](settings)
    except PreconditionError as exc:
        print(f"admissibility: {exc}", file=sys.stderr)
        return EXIT_ADMISSIBILITY
    except StabilityViolation as exc:
        print(f"stability: {exc}", file=sys.stderr)
        return EXIT_STABILITY
    except (ConfigError, DegreeTooLarge, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
