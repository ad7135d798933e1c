"""Command-line front end.

Each subcommand reads a YAML config (``--config``; a bare name such as
``table2`` selects a bundled config) and writes a table, JSON or CSV.

Exit codes: 0 success, 2 config error, 3 computation error, 4 verification failure.
"""

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import allocation, config, estimation, inversion, mcsim, riskmeasures, wishart
from .config import ConfigError
from .exceptions import WishriskError

EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE, EXIT_VERIFY = 0, 2, 3, 4

log = logging.getLogger("wishrisk")


class VerificationFailed(Exception):
    pass


# ---------------------------------------------------------------------------
# output


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        # adding 0.0 turns a rounded -0.0 into 0.0
        return "nan" if math.isnan(v) else f"{round(float(v), 4) + 0.0:.4f}"
    return "" if v is None else str(v)


def _plain(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def render(rows, fmt, meta=None):
    """Rows (list of dicts sharing keys) as aligned text, JSON or CSV."""
    rows = [{k: _plain(v) for k, v in r.items()} for r in rows]
    if fmt == "json":
        doc = {"rows": rows}
        if meta:
            doc["meta"] = {k: _plain(v) for k, v in meta.items()}
        return json.dumps(doc, indent=2) + "\n"
    cols = list(rows[0]) if rows else []
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else _fmt(v) for v in r.values()])
        return buf.getvalue()
    cells = [[_fmt(r[c]) for c in cols] for r in rows]
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(cols)]
    lines = []
    if meta:
        lines += [f"# {k}: {_fmt(v)}" for k, v in meta.items()]
    if cols:
        lines.append("  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip())
        lines.append("  ".join("-" * w for w in widths))
        for row in cells:
            lines.append("  ".join(v.rjust(w) if i else v.ljust(w)
                                   for i, (v, w) in enumerate(zip(row, widths))).rstrip())
    return "\n".join(lines) + "\n"


def _emit(args, raw, rows, meta=None, default="table"):
    fmt = args.format or raw.get("format", default)
    text = render(rows, fmt, meta)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def _setup(args):
    path = args.config
    if not Path(path).exists() and not path.endswith((".yaml", ".yml")):
        path = config.bundled(path)
    raw = config.load(path)
    params = config.build_params(raw)
    return raw, params, config.build_inversion(raw)


def cmd_measure(args):
    raw, params, cfg = _setup(args)
    queries = config.build_queries(raw, params.n, args.two_dates)
    conv = raw.get("convention", "tower")
    failed = False
    rows = []
    if args.compare_zero_dependence:
        tilde = wishart.zero_dependence_equivalent(params)
        mode = raw.get("diff_mode", "relative")
        base = riskmeasures.evaluate_batch(params, queries, cfg, conv)
        alt = riskmeasures.evaluate_batch(tilde, queries, cfg, conv)
        for q, r0, r1 in zip(queries, base, alt):
            row = {"measure": q.label, "value": math.nan, "zero_dependence": math.nan,
                   "diff_pct": math.nan, "error": ""}
            bad = [r for r in (r0, r1) if isinstance(r, Exception)]
            if bad:
                failed = True
                row["error"] = f"{type(bad[0]).__name__}: {bad[0]}"
            else:
                row.update(value=r0.value, zero_dependence=r1.value,
                           diff_pct=riskmeasures.percent_diff(r1.value, r0.value, mode))
            rows.append(row)
    else:
        for q, r in zip(queries, riskmeasures.evaluate_batch(params, queries, cfg, conv)):
            if isinstance(r, Exception):
                failed = True
                rows.append({"measure": q.label, "value": math.nan,
                             "error": f"{type(r).__name__}: {r}"})
            else:
                rows.append({"measure": q.label, "value": r.value, "error": ""})
    if rows and not failed:
        for r in rows:
            del r["error"]
    _emit(args, raw, rows)
    return EXIT_COMPUTE if failed else EXIT_OK


def cmd_quantile(args):
    raw, params, cfg = _setup(args)
    pay = config.payoff(args.payoff, params.n)
    prov = riskmeasures.WishartProvider(params, pay.theta, args.t)
    x = inversion.quantile(prov, args.level, cfg)
    tail = inversion.tail_probability(prov, x, cfg).value
    _emit(args, raw, [{"payoff": pay.label, "t": args.t, "level": args.level,
                       "quantile": x, "tail_probability": tail}])
    return EXIT_OK


def figure_series(raw, params, cfg):
    """``(abscissa, value)`` pairs of the configured figure."""
    spec = raw["figure"]
    n = params.n
    cond = config.payoff(spec["conditioner"], n)
    target = config.payoff(spec.get("target", spec["conditioner"]), n)
    order = spec.get("order", 1)
    t = spec.get("t", 1.0)
    conv = raw.get("convention", "tower")
    out = []
    for v in config.grid(spec["values"]):
        if spec["axis"] == "threshold":
            q = riskmeasures.TailQuery(cond, float(v), ((target, order),),
                                       riskmeasures.OneDate(t))
        else:
            if "threshold" not in spec:
                raise ConfigError("figure: axis t1 needs a threshold")
            dates = (riskmeasures.OneDate(t) if math.isclose(v, t)
                     else riskmeasures.TwoDates(t, float(v)))
            q = riskmeasures.TailQuery(cond, spec["threshold"], ((target, order),), dates)
        out.append((float(v), riskmeasures.conditional_moment(params, q, cfg, conv).value))
    return out


def cmd_figure(args):
    raw, params, cfg = _setup(args)
    if "figure" not in raw:
        raise ConfigError("config has no figure section")
    axis = "threshold" if raw["figure"]["axis"] == "threshold" else "t1"
    rows = [{axis: a, "value": v} for a, v in figure_series(raw, params, cfg)]
    _emit(args, raw, rows, default="csv")
    return EXIT_OK


def _allocation_problem(raw, n):
    spec = raw["allocation"]
    losses = [config.payoff(p, n) for p in spec.get("losses", ["x11", "x22"])]
    cond = config.payoff(spec.get("conditioner", "x12"), n)
    level = spec.get("quantile_level")
    if level is None and "z_star" not in spec:
        level = 0.95
    return allocation.AllocationProblem(losses=losses, conditioner=cond, budget=spec["budget"],
                                        gamma=spec.get("gamma", 1.0), z_star=spec.get("z_star"),
                                        quantile_level=level, t=spec.get("t", 1.0))


def cmd_allocate(args):
    raw, params, cfg = _setup(args)
    if "allocation" not in raw:
        raise ConfigError("config has no allocation section")
    problem = _allocation_problem(raw, params.n)
    spec = raw["allocation"]
    models = [("original", params)]
    if args.compare_zero_dependence:
        models.append(("zero_dependence", wishart.zero_dependence_equivalent(params)))
    rows = []
    for name, prm in models:
        sol = allocation.solve(prm, problem, cfg, starts=spec.get("starts", 8),
                               seed=args.seed if args.seed is not None else spec.get("seed", 0))
        gap = allocation.grid_certificate(sol, problem.budget, problem.gamma) \
            if len(problem.losses) == 2 else math.nan
        row = {"model": name, "z_star": sol.diagnostics["z_star"]}
        row.update({f"p{i + 1}": v for i, v in enumerate(sol.p)})
        row.update(ratio=sol.ratio, objective=sol.objective_value, grid_gap=gap)
        rows.append(row)
    _emit(args, raw, rows)
    return EXIT_OK


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _panel(raw, args):
    spec = raw.get("estimate", {})
    path = args.csv or spec.get("csv")
    if path is None:
        if not spec.get("synthetic", False):
            raise ConfigError("estimate: give --csv, estimate/csv or estimate/synthetic: true")
        path = estimation.fixture_path()
        spec = {"line_columns": ["Building", "Contents"], "date_column": "Date"}
    elif "sha256" in spec and _sha256(path) != spec["sha256"]:
        raise ConfigError(f"estimate: checksum mismatch for {path}")
    lines = spec.get("line_columns", ["Building", "Contents"])
    records = estimation.ingest_csv(path, lines, spec.get("date_column", "Date"),
                                    spec.get("delimiter", ","), spec.get("date_format"))
    return estimation.aggregate_weekly(records, lines), str(path)


def cmd_estimate(args):
    raw = config.load(args.config if Path(args.config).exists()
                      else config.bundled(args.config))
    spec = raw.get("estimate", {})
    panel, source = _panel(raw, args)
    est = estimation.estimate_mom(panel, spec.get("min_obs", 30), spec.get("ddof", 1))
    report = estimation.matrix_gamma_risk_report(est, panel, spec.get("quantile_level", 0.95))
    vs = est.varsigma_inf_hat
    meta = {"source": source, "weeks": est.n_obs, "beta_hat": est.beta_hat,
            "varsigma_inf_11": vs[0, 0], "varsigma_inf_12": vs[0, 1] if vs.shape[0] > 1 else 0.0,
            "varsigma_inf_22": vs[1, 1] if vs.shape[0] > 1 else math.nan,
            "implied_correlation": est.implied_correlation,
            "sample_correlation": est.sample_correlation}
    rows = [{"measure": r.label, "model": r.model, "empirical": r.empirical,
             "model_var": r.model_threshold, "empirical_quantile": r.empirical_threshold}
            for r in report]
    _emit(args, raw, rows, meta)
    return EXIT_OK


def _sim_config(raw, args, **over):
    spec = dict(raw.get("simulation", {}))
    spec.pop("dump", None)
    spec.pop("n_se", None)
    if args.seed is not None:
        spec["seed"] = args.seed
    spec.update(over)
    return mcsim.SimConfig(**spec)


def _simulate(params, queries, sim):
    """Monte Carlo estimates per query, sharing draws across equal dates."""
    cache = {}
    out = []
    for q in queries:
        d = q.dates
        key = (d.t,) if isinstance(d, riskmeasures.OneDate) else (d.t0, d.t1)
        if key not in cache:
            cache[key] = mcsim.sample_xt(params, key[0], sim,
                                         t1=key[1] if len(key) > 1 else None)
        out.append(mcsim.estimate_conditional_moment(cache[key], q))
    return out, cache


def cmd_simulate(args):
    raw, params, _ = _setup(args)
    queries = config.build_queries(raw, params.n, args.two_dates)
    sim = _sim_config(raw, args)
    res, cache = _simulate(params, queries, sim)
    dump = raw.get("simulation", {}).get("dump")
    if dump and cache:
        draws = next(iter(cache.values()))
        mcsim.dump_draws(dump, draws[0] if isinstance(draws, tuple) else draws)
    rows = [{"measure": q.label, "estimate": e, "std_error": s}
            for q, (e, s) in zip(queries, res)]
    _emit(args, raw, rows, {"paths": sim.paths, "seed": sim.seed, "scheme": sim.scheme})
    return EXIT_OK


def cmd_verify(args):
    raw, params, cfg = _setup(args)
    queries = config.build_queries(raw, params.n, args.two_dates)
    conv = raw.get("convention", "tower")
    n_se = raw.get("simulation", {}).get("n_se", 3.0)
    sim = _sim_config(raw, args)
    mc, _ = _simulate(params, queries, sim)
    rows = []
    ok = True
    for q, (est, se) in zip(queries, mc):
        val = riskmeasures.conditional_moment(params, q, cfg, conv).value
        z = (val - est) / se
        passed = abs(z) <= n_se
        ok &= passed
        rows.append({"measure": q.label, "analytic": val, "monte_carlo": est,
                     "std_error": se, "z": z, "status": "PASS" if passed else "FAIL"})
    _emit(args, raw, rows, {"paths": sim.paths, "seed": sim.seed, "n_se": n_se})
    if not ok:
        raise VerificationFailed(f"{sum(r['status'] == 'FAIL' for r in rows)} checks failed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser():
    parser = argparse.ArgumentParser(prog="wishrisk",
                                     description="Wishart conditional tail risk measures.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True,
                        help="YAML config path, or the name of a bundled config")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=["table", "json", "csv"])
    common.add_argument("--seed", type=int)
    common.add_argument("--compare-zero-dependence", action="store_true",
                        help="add the zero-dependence model and percent differences")
    common.add_argument("--two-dates", nargs=2, type=float, metavar=("T0", "T1"),
                        help="condition at T0 and measure at T1 for every query")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("measure", parents=[common], help="evaluate the query list")
    q = sub.add_parser("quantile", parents=[common], help="value at risk of a payoff")
    q.add_argument("--payoff", default="s", help="x11, x22, x12, s, ...")
    q.add_argument("--level", type=float, default=0.95)
    q.add_argument("--t", type=float, default=1.0)
    sub.add_parser("figure", parents=[common], help="plot-ready series of a figure")
    sub.add_parser("allocate", parents=[common], help="tail mean-variance allocation")
    e = sub.add_parser("estimate", parents=[common], help="method-of-moments fit and report")
    e.add_argument("--csv", help="claims CSV (overrides the config)")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo estimates of the queries")
    sub.add_parser("verify", parents=[common], help="analytic values against Monte Carlo")
    return parser


COMMANDS = {"measure": cmd_measure, "quantile": cmd_quantile, "figure": cmd_figure,
            "allocate": cmd_allocate, "estimate": cmd_estimate, "simulate": cmd_simulate,
            "verify": cmd_verify}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except VerificationFailed as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (WishriskError, ArithmeticError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
