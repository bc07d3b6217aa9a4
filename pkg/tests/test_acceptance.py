"""Acceptance criteria, one test each.

Run with ``pytest tests/test_acceptance.py`` or ``python tests/test_acceptance.py``;
either prints a PASS/FAIL line per criterion at the end.  DETAILS collects the
measured numbers behind each verdict.
"""
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import af_grid_oracle_m2, df_grid_oracle_m2  # noqa: E402
from relaybeam import conic  # noqa: E402
from relaybeam.af import (af_achievable, af_secrecy_rate, optimize_af, signal_matrices,  # noqa: E402
                          t1_max_total, t2_max_total)
from relaybeam.channel import ChannelState, PowerConstraint, derive_af, make_rng, sample_channel  # noqa: E402
from relaybeam.conic import (BisectionSpec, ConicProgram, NormBound, Objective, Status,  # noqa: E402
                             TraceIneq)
from relaybeam.df import (DfChannel, Statistical, WorstCase, df_secrecy_rate,  # noqa: E402
                          df_total_power_closed_form, optimize_df_perfect, optimize_df_statistical,
                          optimize_df_worstcase, sample_y, verify_outage)
from relaybeam.experiment import ExperimentConfig, af_channel, df_estimates  # noqa: E402
from relaybeam.linalg import cholesky, gen_eig_max, hermitian_eig  # noqa: E402

DETAILS = {}

# allowance for "never below the oracle": the solver's own tolerances
# (t1 grid of N = 1000 steps, 1e-6 bisection) against a 200-step grid
GRID_RES = 1e-3


def note(name, text):
    DETAILS[name] = text


def af_m2(seed):
    ch = sample_channel(1000 + seed, 2, 10.0, 2.0, 2.0)
    p = make_rng(1000 + seed, 7).uniform(0.2, 5.0, 2)
    return ch, p


def robust_estimates(seed, M=5):
    return DfChannel.from_state(sample_channel(seed, M, 1.0, 1.0, 2.0))


# --- 1 ------------------------------------------------------------------------

def test_c01_af_oracle_equivalence():
    start = time.perf_counter()
    worst_rel, worst_below = 0.0, 0.0
    for seed in range(25):
        ch, p = af_m2(seed)
        sol = optimize_af(derive_af(ch), ch, PowerConstraint.individual(p))
        grid = af_grid_oracle_m2(ch.g, ch.h, ch.z, ch.Ps, ch.Nm, ch.N0, p)
        rel = abs(sol.secrecy_rate - grid) / max(grid, 1e-9)
        worst_rel = max(worst_rel, rel)
        worst_below = max(worst_below, grid - sol.secrecy_rate)
        assert rel <= 0.02, (seed, sol.secrecy_rate, grid)
        assert sol.secrecy_rate >= grid - GRID_RES, (seed, sol.secrecy_rate, grid)
    elapsed = time.perf_counter() - start
    note("test_c01_af_oracle_equivalence",
         f"max rel diff {worst_rel:.2e}, max shortfall {worst_below:.2e} bits, {elapsed:.0f} s")
    assert elapsed < 600


# --- 2 ------------------------------------------------------------------------

def test_c02_df_perfect_oracle_equivalence():
    start = time.perf_counter()
    worst_grid = 0.0
    for seed in range(25):
        ch = robust_estimates(2000 + seed, 2)
        p = make_rng(2000 + seed, 7).uniform(0.5, 20.0, 2)
        sol = optimize_df_perfect(ch, PowerConstraint.individual(p))
        grid = df_grid_oracle_m2(ch.h, ch.z, ch.N0, p)
        rel = abs(sol.secrecy_rate - grid) / max(grid, 1e-9)
        worst_grid = max(worst_grid, rel)
        assert rel <= 0.02, (seed, sol.secrecy_rate, grid)
    worst_closed = 0.0
    for seed in range(50):
        M = 2 + seed % 7
        ch = robust_estimates(3000 + seed, M)
        PT = float(10 ** make_rng(3000 + seed, 7).uniform(-1, 2))
        sol = optimize_df_perfect(ch, PowerConstraint.total_power(PT))
        expect = max(df_total_power_closed_form(ch, PT), 1.0)
        rel = abs(sol.diagnostics["t_star"] - expect) / expect
        worst_closed = max(worst_closed, rel)
        assert rel <= 1e-4, (seed, M, PT, sol.diagnostics["t_star"], expect)
    elapsed = time.perf_counter() - start
    note("test_c02_df_perfect_oracle_equivalence",
         f"grid max rel {worst_grid:.2e}, closed form max rel {worst_closed:.2e}, {elapsed:.0f} s")
    assert elapsed < 120


# --- 3 ------------------------------------------------------------------------

def test_c03_closed_form_vs_sdp_bisection():
    worst = {"t1": 0.0, "t2": 0.0}
    for seed in range(50):
        M = 2 + seed % 5
        ch = sample_channel(4000 + seed, M, 10.0, 2.0, 2.0)
        d = derive_af(ch)
        PT = float(10 ** make_rng(4000 + seed, 7).uniform(-1, 2))
        for which in ("t1", "t2"):
            closed = t1_max_total if which == "t1" else t2_max_total
            A, B = signal_matrices(d, ch) if which == "t1" else (d.Dz, d.Dh)
            expect = max(closed(d, ch, PT)[0], 1.0)
            oracle = conic.feasibility_oracle(lambda t: ConicProgram(
                dim=M, trace_ineqs=[TraceIneq(A - t * B, ch.N0 * (t - 1.0))], trace_upper=PT))
            got, _ = conic.bisect(BisectionSpec(1.0, 2.0 * expect, oracle, 1e-9 * expect))
            rel = abs(got - expect) / expect
            worst[which] = max(worst[which], rel)
            assert rel <= 1e-4, (seed, which, got, expect)
    note("test_c03_closed_form_vs_sdp_bisection",
         f"max rel diff t1 {worst['t1']:.2e}, t2 {worst['t2']:.2e}")


# --- 4 and 10 (AF) ---------------------------------------------------------------

@pytest.fixture(scope="module")
def af_sweep():
    cfg = ExperimentConfig.from_dict({"mode": "af_sweep", "seed": 0})
    ch = af_channel(cfg)
    d = derive_af(ch)
    curves = {k: [] for k in ("opt_total", "opt_indiv", "ach_total", "ach_indiv")}
    times = []
    for ratio in cfg.grid:
        PT = ratio * cfg.Ps
        for c, tag in ((PowerConstraint.total_power(PT), "total"),
                       (PowerConstraint.equal_split(PT, cfg.M), "indiv")):
            t0 = time.perf_counter()
            curves[f"opt_{tag}"].append(optimize_af(d, ch, c).secrecy_rate)
            times.append(time.perf_counter() - t0)
            curves[f"ach_{tag}"].append(af_achievable(d, ch, c).secrecy_rate)
    return cfg.grid, {k: np.array(v) for k, v in curves.items()}, times


def test_c04_af_sweep_shape(af_sweep):
    grid, cv, _ = af_sweep
    tol = 1e-6
    assert len(grid) == 20 and np.all(np.diff(grid) > 0)
    for name, y in cv.items():
        assert np.all(np.diff(y) >= -tol), name
    assert np.all(cv["ach_total"] <= cv["opt_total"] + tol)
    assert np.all(cv["ach_indiv"] <= cv["opt_indiv"] + tol)
    assert np.all(cv["opt_indiv"] <= cv["opt_total"] + tol)
    assert np.all(cv["ach_indiv"] <= cv["ach_total"] + tol)
    note("test_c04_af_sweep_shape",
         "at PT/Ps=100: optimal total {:.3f}, individual {:.3f}; achievable total {:.3f}, individual {:.3f}"
         .format(cv["opt_total"][-1], cv["opt_indiv"][-1], cv["ach_total"][-1], cv["ach_indiv"][-1]))


# --- 5 and 10 (DF) ---------------------------------------------------------------

@pytest.fixture(scope="module")
def df_sweep():
    cfg = ExperimentConfig.from_dict({"mode": "df_robust_sweep", "seed": 0})
    est = df_estimates(cfg)
    rates = np.zeros((len(cfg.grid), len(cfg.eps)))
    times = []
    for i, PT in enumerate(cfg.grid):
        var_h, var_z = cfg.variances(PT)
        c = PowerConstraint.equal_split(PT, cfg.M)
        for j, e in enumerate(cfg.eps):
            t0 = time.perf_counter()
            rates[i, j] = optimize_df_statistical(est.H(), est.Z(), Statistical(var_h, var_z, e),
                                                  c, cfg.N0).secrecy_rate
            times.append(time.perf_counter() - t0)
    return cfg, rates, times


def test_c05_df_sweep_shape(df_sweep):
    cfg, rates, _ = df_sweep
    tol = 1e-6
    assert cfg.eps == [0.7, 0.8, 0.9, 0.95] and cfg.M == 5 and cfg.grid[-1] == 100.0
    assert np.all(np.diff(rates, axis=0) >= -tol)
    assert np.all(rates[-1] > rates[0])
    assert np.all(np.diff(rates, axis=1) <= tol)
    gap = rates[-1, 0] - rates[-1, -1]
    assert gap > 0
    note("test_c05_df_sweep_shape",
         f"at PT=100: eps=0.7 {rates[-1, 0]:.3f}, eps=0.95 {rates[-1, -1]:.3f}, gap {gap:.3f} bits")


# --- 6 ------------------------------------------------------------------------

def test_c06_chance_constraint_soundness():
    trials, eps = 100_000, 0.9
    bound = eps - 3 * math.sqrt(eps * (1 - eps) / trials)
    seen = []
    for k in range(10):
        PT = [5.0, 10.0, 20.0, 50.0, 100.0][k % 5]
        est = robust_estimates(5000 + k)
        params = Statistical(0.1 / PT, 0.2 / PT, eps)
        sol = optimize_df_statistical(est.H(), est.Z(), params, PowerConstraint.equal_split(PT, 5), est.N0)
        rate = verify_outage(sol.w, est.h, est.z, params, sol.t1, trials=trials, seed=k, N0=est.N0)
        seen.append(rate)
        assert rate >= bound, (k, PT, rate)
    note("test_c06_chance_constraint_soundness",
         f"non-outage min {min(seen):.4f}, max {max(seen):.4f}, bound {bound:.4f}")


# --- 7 ------------------------------------------------------------------------

def test_c07_distribution_of_y():
    n = 100_000
    worst = 0.0
    for k in range(6):
        PT = [10.0, 50.0, 100.0][k % 3]
        est = robust_estimates(6000 + k)
        var_h, var_z = 0.1 / PT, 0.2 / PT
        sol = optimize_df_statistical(est.H(), est.Z(), Statistical(var_h, var_z, 0.9),
                                      PowerConstraint.equal_split(PT, 5), est.N0)
        X = sol.X if k % 2 else np.outer(sol.w, sol.w.conj())
        t = sol.t1
        y = sample_y(X, est.H(), est.Z(), var_h, var_z, t, trials=n, seed=k)
        mu = np.trace((est.H() - t * est.Z()) @ X).real
        var = (var_h + t * t * var_z) * np.trace(X @ X.conj().T).real
        z_mean = abs(y.mean() - mu) / math.sqrt(var / n)
        z_var = abs(y.var(ddof=1) - var) / (var * math.sqrt(2.0 / (n - 1)))
        worst = max(worst, z_mean, z_var)
        assert z_mean <= 3 and z_var <= 3, (k, z_mean, z_var)
    note("test_c07_distribution_of_y", f"largest deviation {worst:.2f} standard errors")


# --- 8 ------------------------------------------------------------------------

def _rand_herm(rng, m):
    A = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return 0.5 * (A + A.conj().T)


def test_c08_solver_suite():
    rng = np.random.default_rng(8)
    worst = {"chol": 0.0, "eig": 0.0, "geneig": 0.0, "gap": 0.0, "psd": 0.0, "viol": 0.0, "bisect": 0.0}
    for k in range(20):
        m = 1 + k % 8
        G = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        B = G @ G.conj().T + 0.1 * np.eye(m)
        L = cholesky(B)
        worst["chol"] = max(worst["chol"], np.linalg.norm(L @ L.conj().T - B) / np.linalg.norm(B))
        A = _rand_herm(rng, m)
        lam, U = hermitian_eig(A)
        worst["eig"] = max(worst["eig"], np.linalg.norm(U @ np.diag(lam) @ U.conj().T - A) / np.linalg.norm(A))
        res = gen_eig_max(A, B)
        v = res.eigvec
        worst["geneig"] = max(worst["geneig"], np.linalg.norm(A @ v - res.lambda_max * B @ v)
                              / (np.linalg.norm(A) * np.linalg.norm(v)))
    for k in range(16):
        m = 2 + k % 5
        C = _rand_herm(rng, m)
        p = rng.uniform(0.5, 2.0, m)
        progs = [
            ConicProgram(dim=m, objective=Objective.MAX_LINEAR, C=C, trace_upper=float(p.sum())),
            ConicProgram(dim=m, objective=Objective.MAX_LINEAR, C=C, diag_upper=p),
            ConicProgram(dim=m, objective=Objective.MIN_TRACE, diag_upper=p,
                         trace_ineqs=[TraceIneq(np.diag(rng.uniform(0.5, 2.0, m)), 0.5)]),
            ConicProgram(dim=m, diag_upper=p, norm_bound=NormBound(np.diag(p), 0.1, 0.05)),
        ]
        for prog in progs:
            out = conic.solve(prog)
            assert out.ok, (k, prog.objective, out.status)
            X = out.X
            tr = max(np.trace(X).real, 1e-300)
            worst["psd"] = max(worst["psd"], -conic.psd_min_eig(X) / tr)
            worst["viol"] = max(worst["viol"], max(prog.violations(X).values(), default=0.0))
            if out.status is Status.OPTIMAL:
                worst["gap"] = max(worst["gap"], out.gap / (1 + abs(out.objective_value)))
    for k in range(20):
        thr = rng.uniform(1.0, 50.0)
        tol = 10.0 ** -rng.integers(3, 10)
        t, _ = conic.bisect(BisectionSpec(1.0, 60.0, lambda t: (t <= thr, t), tol))
        worst["bisect"] = max(worst["bisect"], abs(t - thr) / tol)
        assert t <= thr
    assert worst["chol"] <= 1e-10 and worst["eig"] <= 1e-10 and worst["geneig"] <= 1e-10
    assert worst["gap"] <= 1e-6 and worst["psd"] <= 1e-8 and worst["viol"] <= 1e-7
    assert worst["bisect"] <= 1.0
    note("test_c08_solver_suite", ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


# --- 9 ------------------------------------------------------------------------

def test_c09_degenerate_and_limits():
    parts = []
    # eps -> 1/2: the statistical rate approaches the perfect-CSI rate
    for PT in (1.0, 10.0, 100.0):
        est = robust_estimates(9)
        c = PowerConstraint.equal_split(PT, 5)
        perfect = optimize_df_perfect(est, c).secrecy_rate
        gaps = []
        for e in (0.51, 0.501, 0.5001, 0.50001):
            s = optimize_df_statistical(est.H(), est.Z(), Statistical(0.1 / PT, 0.2 / PT, e), c, est.N0)
            gaps.append(perfect - s.secrecy_rate)
        assert all(g >= -1e-6 for g in gaps)
        assert all(b <= a + 1e-9 for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] <= 1e-3
        parts.append(f"PT={PT:g} gap@0.5001 {gaps[2]:.1e} gap@0.50001 {gaps[3]:.1e}")
    # zero radii: worst case equals perfect CSI
    for seed in range(5):
        est = robust_estimates(900 + seed, 4)
        c = PowerConstraint.equal_split(20.0, 4)
        perfect = optimize_df_perfect(est, c).secrecy_rate
        robust = optimize_df_worstcase(est.H(), est.Z(), WorstCase(0.0, 0.0), c, est.N0).secrecy_rate
        assert robust == pytest.approx(perfect, abs=1e-5)
    # h = z gives zero secrecy in both schemes
    base = sample_channel(9, 3, 10.0, 2.0, 2.0)
    twin = ChannelState(g=base.g, h=base.h, z=base.h, Ps=1.0, Nm=1.0, N0=1.0)
    d = derive_af(twin)
    for c in (PowerConstraint.total_power(5.0), PowerConstraint.equal_split(5.0, 3)):
        assert optimize_af(d, twin, c).secrecy_rate == pytest.approx(0.0, abs=1e-9)
        assert af_achievable(d, twin, c).secrecy_rate == pytest.approx(0.0, abs=1e-9)
        assert optimize_df_perfect(DfChannel(h=base.h, z=base.h), c).secrecy_rate == pytest.approx(0.0, abs=1e-9)
    # w = 0 gives zero rate
    assert af_secrecy_rate(np.zeros(3), derive_af(base), base) == 0.0
    assert df_secrecy_rate(np.zeros(3), DfChannel(h=base.h, z=base.z)) == 0.0
    note("test_c09_degenerate_and_limits", "; ".join(parts))


# --- 10 -------------------------------------------------------------------------

def test_c10_performance(af_sweep, df_sweep):
    af_times, df_times = af_sweep[2], df_sweep[2]
    note("test_c10_performance",
         f"slowest M=10 optimize_af {max(af_times):.1f} s over {len(af_times)} calls, "
         f"slowest DF solve {max(df_times):.2f} s over {len(df_times)} calls")
    assert max(af_times) < 30
    assert max(df_times) < 5


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
