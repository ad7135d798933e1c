"""Acceptance criteria; one PASS/FAIL line per criterion is printed in the run summary."""

import os
import time

import numpy as np
import pytest

from wishrisk import allocation, config, estimation, ghdist, matcore, mcsim, wishart
from wishrisk import riskmeasures as rm
from wishrisk.inversion import InversionConfig, tail_probability
from wishrisk.riskmeasures import (MatrixGammaProvider, SpectralPayoff, TailQuery, TwoDates,
                                   WishartProvider)

import _reference as ref
from _acceptance import record
from _fd import stepped_derivative
from _models import mgf_and_first_derivative, random_config
from test_inversion import CROSS_CASES, cross_moment_pair

CFG = InversionConfig(tol=1e-10)


def bundled_queries(name, **kw):
    raw = config.load(config.bundled(name))
    return config.build_params(raw), config.build_queries(raw, 2, **kw), raw


def rel(a, b):
    return abs(a - b) / abs(b)


def test_c01_stationary_mean(params):
    m, s2, beta = params.m, params.sigma2, params.beta
    matcore.lyapunov_solve(m, beta * s2)
    reps = 200
    t0 = time.perf_counter()
    for _ in range(reps):
        x0 = matcore.lyapunov_solve(m, beta * s2)
    elapsed = (time.perf_counter() - t0) / reps
    err = np.abs(x0 - np.array(ref.X0)).max()
    ok = err <= 5e-3 and elapsed < 1e-3
    record(1, "x0 from the Lyapunov equation", ok,
           f"max err {err:.1e} (tol 5e-3), {elapsed * 1e6:.0f} us (limit 1 ms)")
    assert ok


def test_c02_tail_probabilities(params, payoffs):
    t0 = time.perf_counter()
    errs = {}
    for name, (y, p_ref) in ref.TAIL_PROBABILITIES.items():
        prov = WishartProvider(params, payoffs[name].theta, 1.0)
        errs[name] = abs(tail_probability(prov, y, CFG).value - p_ref)
    elapsed = time.perf_counter() - t0
    ok = max(errs.values()) <= 5e-4 and elapsed < 1.0
    record(2, "tail probabilities", ok,
           ", ".join(f"{k} err {v:.1e}" for k, v in errs.items())
           + f" (tol 5e-4), {elapsed:.2f} s (limit 1 s)")
    assert ok


def test_c03_table2():
    params, queries, _ = bundled_queries("table2")
    t0 = time.perf_counter()
    res = rm.evaluate_batch(params, queries, CFG)
    elapsed = time.perf_counter() - t0
    worst = max(rel(r.value, v) for r, v in zip(res, ref.TABLE2))
    ok = len(res) == 11 and worst <= 1e-3 and elapsed < 10
    record(3, "one-date risk measures (11 rows)", ok,
           f"worst rel err {worst:.1e} (tol 1e-3), {elapsed:.2f} s (limit 10 s)")
    assert ok


def test_c04_zero_dependence_table():
    params, queries, raw = bundled_queries("table3")
    rep = rm.dependence_report(params, queries, CFG, diff_mode=raw.get("diff_mode"))
    v_err = max(rel(r.zero_dependence_value, v) for r, (v, _) in zip(rep.rows, ref.TABLE3))
    d_err = max(abs(r.pct_diff - d) for r, (_, d) in zip(rep.rows, ref.TABLE3))
    exact = abs(rep.rows[0].pct_diff) < 5e-3 and abs(rep.rows[1].pct_diff) < 5e-3
    ok = len(rep.rows) == 9 and v_err <= 1e-3 and d_err <= 0.05 and exact
    record(4, "zero-dependence values and differences (9 rows)", ok,
           f"worst rel err {v_err:.1e} (tol 1e-3), worst diff err {d_err:.3f} pts "
           f"(tol 0.05), E[s~^2|x~11>1] diff {rep.rows[7].pct_diff:.2f}")
    assert ok


def test_c05_two_date_table():
    params, queries, raw = bundled_queries("table4")
    res = rm.evaluate_batch(params, queries, CFG, convention=raw["convention"])
    vals = [r.value for r in res]
    v_err = max(rel(v, r) for v, (r, _) in zip(vals, ref.TABLE4))
    # the printed differences use the two-date value as base in rows 1-4 and the
    # one-date value in rows 5-8
    one = [ref.TABLE2[k] for k in (0, 1, 2, 3, 4, 5, 6, 7)]
    diffs = [100 * (v - b) / (v if k < 4 else b) for k, (v, b) in enumerate(zip(vals, one))]
    d_err = max(abs(d - r) for d, (_, r) in zip(diffs, ref.TABLE4))
    ok = v_err <= 1e-3 and d_err <= 0.05
    record(5, "two-date risk measures (8 rows)", ok,
           f"worst rel err {v_err:.1e} (tol 1e-3), E[s_t1|s_t0>1.3] = {vals[2]:.4f}, "
           f"diff {diffs[2]:.2f}% (printed -2.41), worst diff err {d_err:.3f}")
    assert ok


def test_c06_two_date_mean_reversion(params, payoffs):
    x11 = payoffs["x11"]
    vals = [rm.tce(params, x11, 1.0, t=1.0, t1=t1, cfg=CFG) for t1 in ref.FIGURE3_T1]
    decreasing = bool(np.all(np.diff(vals) < 0))
    gap = abs(vals[-1] - 0.84)
    ok = decreasing and gap <= 0.02
    record(6, "E[x11,t1 | x11,1 > 1] decreasing in t1", ok,
           f"values {', '.join(f'{v:.4f}' for v in vals)}; |value(200) - 0.84| = {gap:.4f}")
    assert ok


def test_c07_allocation(params, params_zero):
    prob = allocation.default_problem()
    parts = []
    ok = True
    for key, p in (("dependent", params), ("zero_dependence", params_zero)):
        sol = allocation.solve(p, prob, CFG)
        r = ref.ALLOCATION[key]
        gap = allocation.grid_certificate(sol, prob.budget, prob.gamma)
        ratio = sol.p[0] / sol.p[1]
        ok &= (abs(sol.diagnostics["z_star"] - r["z_star"]) <= 5e-3
               and np.all(np.abs(sol.p - r["p"]) <= 5e-3)
               and abs(ratio - r["ratio"]) <= 0.02 and gap <= 1e-8)
        parts.append(f"{key}: VaR {sol.diagnostics['z_star']:.4f}, p ({sol.p[0]:.4f}, "
                     f"{sol.p[1]:.4f}), ratio {ratio:.4f}, gap {max(gap, 0):.1e}")
    record(7, "tail mean-variance allocation", ok, "; ".join(parts))
    assert ok


@pytest.mark.slow
def test_c08_route_equivalence(params, payoffs):
    errs = []
    for cond, target, p, q in CROSS_CASES:
        one, two = cross_moment_pair(params, payoffs, cond, target, p, q)
        errs.append(rel(two, one))
    ok = len(errs) >= 10 and max(errs) <= 1e-4
    record(8, "1-D vs 2-D inversion routes", ok,
           f"{len(errs)} (p, q) cases, worst rel diff {max(errs):.1e} (tol 1e-4)")
    assert ok


@pytest.mark.slow
def test_c09_monte_carlo(params):
    sim = mcsim.SimConfig(paths=1_000_000, seed=20240601)
    t0 = time.perf_counter()
    x1 = mcsim.sample_xt(params, 1.0, sim)
    pair = mcsim.sample_xt(params, 1.0, sim, t1=1.5)
    _, q2, _ = bundled_queries("table2")
    _, q4, _ = bundled_queries("table4")
    worst, lines = 0.0, []
    printed_z = []
    for queries, draws, printed in ((q2, x1, None), (q4, pair, ref.TABLE4)):
        for k, q in enumerate(queries):
            est, se = mcsim.estimate_conditional_moment(draws, q)
            val = rm.conditional_moment(params, q, CFG).value
            z = (val - est) / se
            worst = max(worst, abs(z))
            if printed is not None:
                printed_z.append((printed[k][0] - est) / se)
    elapsed = time.perf_counter() - t0
    ok = worst <= 3 and elapsed < 120
    record(9, "analytic values vs exact-scheme Monte Carlo (10^6 paths)", ok,
           f"19 values, worst |z| {worst:.2f} (limit 3), {elapsed:.0f} s (limit 120 s); "
           f"printed two-date values: worst |z| {max(map(abs, printed_z)):.1f}")
    assert ok


def test_c10_derivatives():
    rng = np.random.default_rng(2024)
    worst_fd, worst_cf = 0.0, 0.0
    for _ in range(20):
        p, t, th0, th1 = random_config(rng)
        jet = wishart.mgf_jet(p, t, th0, th1, 4)
        _, d1 = mgf_and_first_derivative(p, t, th0, th1)
        worst_cf = max(worst_cf, rel(jet.derivative((1,)).real, d1))
        f = lambda h: wishart.mgf(p, t, th0 + h * th1).value.real  # noqa: E731
        for k in range(1, 5):
            worst_fd = max(worst_fd, rel(jet.derivative((k,)).real, stepped_derivative(f, k)))
    ok = worst_fd <= 1e-5 and worst_cf <= 1e-10
    record(10, "MGF jets vs finite differences and closed form", ok,
           f"orders 1-4 worst rel err {worst_fd:.1e} (tol 1e-5); order 1 vs closed form "
           f"{worst_cf:.1e} (tol 1e-10)")
    assert ok


def test_c11_gh_cross_method():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(20):
        p = ghdist.random_params(rng)
        m = ghdist.gh_tail_measures_mgf_route(p, 0.95, CFG)
        worst = max(worst, rel(m.tce, ghdist.gh_tce_density_route(p, 0.95, m.y_star)),
                    rel(m.tv, ghdist.gh_tv_density_route(p, 0.95, m.y_star)))
    ok = worst <= 1e-5
    record(11, "GH density route vs MGF route (20 parameter sets)", ok,
           f"worst rel diff {worst:.1e} (tol 1e-5)")
    assert ok


def test_c11b_gh_reference_fixture():
    fx = ghdist.load_fixture(os.environ.get("GH_FIXTURE"))
    if fx["params"] is None:
        record("11b", "GH reference portfolio", True, "parameters not supplied", soft=True,
               status="SKIP")
        pytest.skip("GH fixture parameters are not populated")
    m = ghdist.gh_tail_measures_mgf_route(fx["params"], fx["q_level"], CFG)
    exp = fx["expected"]
    errs = {k: abs(getattr(m, k) - exp[k]) for k in ("tce", "tv", "ts")}
    ok = max(errs.values()) <= 1e-3
    record("11b", "GH reference portfolio", ok,
           ", ".join(f"{k} {getattr(m, k):.4f} (ref {exp[k]})" for k in errs), soft=True)
    assert ok


def test_c12a_estimation_closure():
    truth_vs = np.array(estimation.FIXTURE_TRUTH["varsigma_inf"])
    draws = mcsim.sample_stationary(4.0, truth_vs, 20_000, seed=0)
    x = np.stack([draws[:, 0, 0], draws[:, 1, 1]], axis=1)
    e = estimation.estimate_mom(x)
    ci = estimation.bootstrap_mom(x, n_boot=200, seed=1)
    lo, hi = ci["varsigma_inf"]
    covered = (ci["beta"][0] <= 4.0 <= ci["beta"][1]
               and np.all((lo <= truth_vs) & (truth_vs <= hi)))
    rows = estimation.matrix_gamma_risk_report(e, x)
    worst = max(rel(r.model, r.empirical) for r in rows)
    ok = covered and worst <= 0.02
    record("12a", "method-of-moments closure on simulated matrix gamma data", ok,
           f"beta {e.beta_hat:.3f} in [{ci['beta'][0]:.3f}, {ci['beta'][1]:.3f}], "
           f"truth inside all 95% intervals: {covered}; model vs empirical worst rel "
           f"diff {worst:.3f}")
    assert ok


def test_c12b_reference_model_column():
    """Tail moments of the matrix gamma law at the published parameter estimates."""
    beta, vs = ref.DANISH["beta"], np.array(ref.DANISH["varsigma_inf"])
    cfg = InversionConfig(tol=1e-6)
    got = []
    for theta in (np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), np.eye(2)):
        _, m1, m2 = estimation._tail_moments_model(beta, vs, theta, 0.95, cfg)
        got += [m1, m2]
    errs = [rel(g, r) for g, r in zip(got, ref.DANISH["model"])]
    ok = max(errs) <= 0.01
    corr = estimation.implied_correlation(vs)
    record("12b", "matrix gamma model column at the published estimates", ok,
           ", ".join(f"{g:.2f} vs {r} ({e:.1%})" for g, r, e in
                     zip(got, ref.DANISH["model"], errs))
           + f"; implied correlation {corr:.3f} vs {ref.DANISH['implied_correlation']}",
           soft=True)
    assert ok


def test_c12c_danish_fire():
    path = os.environ.get("DANISH_FIRE_CSV")
    if not path:
        record("12c", "Danish fire fit", True, "set DANISH_FIRE_CSV to run", soft=True,
               status="SKIP")
        pytest.skip("DANISH_FIRE_CSV not set")
    lines = ["Building", "Contents"]
    recs = estimation.ingest_csv(path, lines, os.environ.get("DANISH_FIRE_DATE_COLUMN", "Date"),
                                 date_format=os.environ.get("DANISH_FIRE_DATE_FORMAT"))
    e = estimation.estimate_mom(estimation.aggregate_weekly(recs, lines))
    vs_ref = np.array(ref.DANISH["varsigma_inf"])
    ok = (abs(e.beta_hat - ref.DANISH["beta"]) <= 0.05
          and np.all(np.abs(e.varsigma_inf_hat - vs_ref) <= 0.2)
          and abs(e.implied_correlation - ref.DANISH["implied_correlation"]) <= 0.02)
    record("12c", "Danish fire fit", ok,
           f"beta {e.beta_hat:.3f}, vs {np.round(e.varsigma_inf_hat, 2).tolist()}, "
           f"implied correlation {e.implied_correlation:.3f}", soft=True)
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
