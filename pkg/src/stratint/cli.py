"""Command-line front end: ``stratint {coeffs,validate,converge,catalog}``.

Exit codes: 0 success, 1 numerical or tolerance failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .basis import BasisKind, BasisSpec, Interval
from .catalog import (
    TAG_ORDERS,
    TRIG_TAGS,
    IntegralId,
    catalog_eval,
    catalog_eval_trig,
    catalog_second_moment,
    required_index,
    trig_tail,
)
from .coeffs import (
    QuadratureError,
    WeightSpec,
    coefficient_table,
    half_weight_product_integral,
    trace_sum,
)
from .expansion import sample_pool, strat_truncated_k2
from .io import dumps17, fmt17
from .oracle import IntegralSpec, MCConfig, mc_mean_square_diff
from .sde import SCHEMES, bilinear, gbm, strong_order

DEFAULT_VALIDATE_THRESHOLD = 5e-3


class UsageError(Exception):
    pass


def parse_weight(token, interval):
    """``1`` / ``c:0.5`` constant, ``m:2`` monomial (t - s)^2 based at the interval start."""
    token = str(token)
    if token.startswith("m:"):
        return WeightSpec.monomial(interval.t, int(token[2:]))
    if token.startswith("c:"):
        token = token[2:]
    try:
        return WeightSpec.constant(float(token))
    except ValueError:
        raise UsageError(f"cannot parse weight {token!r}") from None


def parse_step(token):
    token = str(token)
    if token.startswith("2^"):
        return 2.0 ** float(token[2:])
    return float(token)


def _threads():
    raw = os.environ.get("STRATINT_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError("STRATINT_THREADS must be a positive integer") from None
    if n < 1:
        raise UsageError("STRATINT_THREADS must be a positive integer")
    return n


def _resolve(args, defaults):
    """defaults < config file < explicit flags."""
    cfg = dict(defaults)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - set(defaults)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_coeffs(args):
    cfg = _resolve(args, {"k": None, "p": None, "weights": None, "interval": [0.0, 1.0], "basis": "legendre",
                          "quad_points": None, "seed": 0, "out": None})
    if cfg["k"] is None or cfg["p"] is None:
        raise UsageError("coeffs needs --k and --p")
    k = int(cfg["k"])
    if not 1 <= k <= 4:
        raise UsageError("--k must be in 1..4")
    p = [int(v) for v in cfg["p"]]
    weights = cfg["weights"] or ["1"] * k
    if len(p) != k or len(weights) != k:
        raise UsageError(f"--p and --weights need {k} values each")
    iv = Interval(*map(float, cfg["interval"]))
    w = [parse_weight(tok, iv) for tok in weights]
    basis = BasisSpec(BasisKind(cfg["basis"]), iv)
    table = coefficient_table(basis, w, p, quad_points=cfg["quad_points"])
    doc = json.loads(table.to_json())
    doc = {"config": cfg, **doc}
    if k == 2:
        order = min(p)
        doc["trace"] = {"p": order, "partial_sum": trace_sum(table, order),
                        "target": half_weight_product_integral(w, iv)}
    _emit(dumps17(doc) + "\n", cfg["out"])
    if k == 2:
        tr = doc["trace"]
        sys.stderr.write(f"trace p={tr['p']} partial_sum={fmt17(tr['partial_sum'])} target={fmt17(tr['target'])}\n")
    return 0


def cmd_validate(args):
    cfg = _resolve(args, {"tag": None, "weights": None, "i": None, "kind": "stratonovich", "basis": "legendre",
                          "q": 10, "n_paths": 1000, "N": 10000, "seed": 0, "interval": [0.0, 1.0],
                          "threshold": DEFAULT_VALIDATE_THRESHOLD, "out": None})
    iv = Interval(*map(float, cfg["interval"]))
    if cfg["tag"]:
        if cfg["tag"] not in TAG_ORDERS:
            raise UsageError(f"unknown tag {cfg['tag']!r}")
        n_idx = len(TAG_ORDERS[cfg["tag"]])
        i = tuple(cfg["i"] or ([1] if n_idx == 1 else [1, 2]))
        IntegralId(cfg["tag"], i)
        spec = IntegralSpec(i=i, tag=cfg["tag"])
    else:
        weights = cfg["weights"] or ["1"]
        i = tuple(cfg["i"] or [1] * len(weights))
        if len(i) != len(weights):
            raise UsageError("--i and --weights must have the same length")
        spec = IntegralSpec(i=i, weights=tuple(parse_weight(t, iv) for t in weights), kind=cfg["kind"],
                            basis=cfg["basis"])
    if cfg["n_paths"] < 2:
        raise UsageError("--n-paths must be at least 2")
    seeds = range(int(cfg["seed"]), int(cfg["seed"]) + int(cfg["n_paths"]))
    report = mc_mean_square_diff(MCConfig(seeds, int(cfg["N"]), int(cfg["q"]), spec, iv))
    report["config"]["seed"] = int(cfg["seed"])
    report["threshold"] = float(cfg["threshold"])
    report["threads"] = _threads()
    ok = report["mean_sq_diff"] < cfg["threshold"]
    report["passed"] = bool(ok)
    _emit(dumps17(report) + "\n", cfg["out"])
    return 0 if ok else 1


PROBLEMS = {"gbm": gbm, "bilinear": bilinear}


def cmd_converge(args):
    cfg = _resolve(args, {"problem": "gbm", "scheme": "euler", "steps": ["2^-4", "2^-5", "2^-6", "2^-7", "2^-8"],
                          "n_paths": 2000, "seed": 0, "q": None, "refine": None, "expect": None,
                          "interval": [0.0, 1.0], "out": None, "json": None})
    if cfg["problem"] not in PROBLEMS:
        raise UsageError(f"unknown problem {cfg['problem']!r}")
    if cfg["scheme"] not in SCHEMES:
        raise UsageError(f"unknown scheme {cfg['scheme']!r}")
    t0, T = map(float, cfg["interval"])
    if t0 != 0.0:
        raise UsageError("converge runs on [0, T]")
    steps = [parse_step(s) for s in cfg["steps"]]
    problem = PROBLEMS[cfg["problem"]]()
    q = cfg["q"]
    if cfg["scheme"] == "milstein" and problem.m > 1 and q is None:
        raise UsageError("--q is required for Milstein on a multi-noise problem")
    rep = strong_order(problem, cfg["scheme"], steps, int(cfg["n_paths"]), int(cfg["seed"]), q=q,
                       refine=cfg["refine"], T=T)
    header = "# config: " + json.dumps(cfg, sort_keys=True) + "\n"
    _emit(header + rep.to_csv(), cfg["out"])
    if cfg["json"]:
        with open(cfg["json"], "w") as fh:
            fh.write(rep.to_json() + "\n")
    sys.stderr.write(f"slope={rep.slope:.4f} n_paths={rep.n_paths}\n")
    if cfg["expect"]:
        lo, hi = map(float, cfg["expect"])
        if not lo <= rep.slope <= hi:
            sys.stderr.write(f"slope {rep.slope:.4f} outside [{lo}, {hi}]\n")
            return 1
    return 0


def cmd_catalog(args):
    cfg = _resolve(args, {"tag": None, "q": 10, "seed": 0, "i": None, "interval": [0.0, 1.0], "trig": False,
                          "check": False, "out": None})
    tag = cfg["tag"]
    if tag not in TAG_ORDERS:
        raise UsageError(f"unknown tag {tag!r}")
    if cfg["trig"] and tag not in TRIG_TAGS:
        raise UsageError(f"no trigonometric formula for {tag}; available: {TRIG_TAGS}")
    n_idx = len(TAG_ORDERS[tag])
    i = tuple(cfg["i"] or ([1] if n_idx == 1 else [1, 2]))
    ident = IntegralId(tag, i)
    iv = Interval(*map(float, cfg["interval"]))
    q = int(cfg["q"])
    m = max(i)
    seed = int(cfg["seed"])
    if cfg["trig"]:
        pool = sample_pool(seed, m, 2 * q)
        value = catalog_eval_trig(ident, iv, pool, trig_tail(seed, m, q), q)
    else:
        pool = sample_pool(seed, m, required_index(tag, q))
        value = catalog_eval(ident, iv, pool, q)
    doc = {"config": cfg, "value": value, "second_moment": catalog_second_moment(ident, iv, q, trig=cfg["trig"])}
    if cfg["check"]:
        doc["check_residual"] = _catalog_residual(ident, iv, q, seed)
    _emit(dumps17(doc) + "\n", cfg["out"])
    return 0


def _catalog_residual(ident, iv, q, seed):
    """Largest |catalog - generic table sum| over pools supported on indices <= q."""
    weights = [WeightSpec.monomial(iv.t, l) for l in TAG_ORDERS[ident.tag]]
    need = required_index(ident.tag, q)
    order = q if len(weights) == 2 else need
    table = coefficient_table(BasisSpec.legendre(iv.t, iv.T), weights, [order] * len(weights))
    pool = sample_pool(np.arange(seed, seed + 100), max(ident.i), need)
    z = pool.z.copy()
    z[..., order + 1 :] = 0.0
    pool = type(pool).from_array(z)
    cat = catalog_eval(ident, iv, pool, q)
    if len(weights) == 2:
        gen = strat_truncated_k2(table, pool, ident.i).value
    else:
        gen = pool.z[..., ident.i[0] - 1, : order + 1] @ table.values
    return float(np.max(np.abs(np.asarray(cat) - gen)))


def build_parser():
    ap = argparse.ArgumentParser(prog="stratint", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with parameter values (flags override)")
        p.add_argument("--seed", type=int)
        p.add_argument("--interval", type=float, nargs=2, metavar=("t", "T"))
        p.add_argument("--out", help="output file (default stdout)")

    p = sub.add_parser("coeffs", help="Fourier coefficient table as JSON")
    common(p)
    p.add_argument("--k", type=int)
    p.add_argument("--p", type=int, nargs="+")
    p.add_argument("--weights", nargs="+", help="per level: 1, c:<value> or m:<exponent>")
    p.add_argument("--basis", choices=[b.value for b in BasisKind])
    p.add_argument("--quad-points", dest="quad_points", type=int)
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("validate", help="pathwise Monte Carlo check against the discretized integral")
    common(p)
    p.add_argument("--tag")
    p.add_argument("--weights", nargs="+")
    p.add_argument("--i", type=int, nargs="+")
    p.add_argument("--kind", choices=["ito", "stratonovich"])
    p.add_argument("--basis", choices=[b.value for b in BasisKind])
    p.add_argument("--q", type=int)
    p.add_argument("--n-paths", dest="n_paths", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("converge", help="strong convergence study, CSV on stdout")
    common(p)
    p.add_argument("--problem")
    p.add_argument("--scheme")
    p.add_argument("--steps", nargs="+", help="step sizes, e.g. 2^-4 0.03125")
    p.add_argument("--n-paths", dest="n_paths", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--refine", type=int)
    p.add_argument("--expect", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--json", help="also write the report as JSON here")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("catalog", help="sample a catalog integral")
    common(p)
    p.add_argument("--tag")
    p.add_argument("--q", type=int)
    p.add_argument("--i", type=int, nargs="+")
    p.add_argument("--trig", action="store_true", default=None)
    p.add_argument("--check", action="store_true", default=None)
    p.set_defaults(func=cmd_catalog)
    return ap


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _threads()
        return args.func(args)
    except (UsageError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"stratint {args.command}: {exc}\n")
        return 2
    except ValueError as exc:
        sys.stderr.write(f"stratint {args.command}: {exc}\n")
        return 2
    except (QuadratureError, ArithmeticError, FloatingPointError) as exc:
        sys.stderr.write(f"stratint {args.command}: numerical failure: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
