"""Acceptance criteria at desk scale (M=30, alpha=4, nu=0.39, T=1000, N=300, 100 replications).

Each test records one PASS/FAIL line, printed in the terminal summary.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from coopnet.cli import main
from coopnet.dense import (DenseParams, RingModel, balance_optimize, mean_and_variance,
                           min_total_assignment, minimal_total_energy, q_min, uniform_distribution)
from coopnet.engine import SimConfig
from coopnet.geometry import Architecture
from coopnet.experiments import (DEFAULT_GRID, Runner, argmin, cooperation_dynamics,
                                 minimal_prediction, run_table, sweep_initial_cooperator, sweep_nu)
from test_dense import grid_variance_n3

pytestmark = pytest.mark.slow

DESK = SimConfig(m=30, alpha=4.0, nu=0.39, slots=1000, iters=300, reps=100, seed=2024)
CENTRAL = replace(DESK, architecture=Architecture.CENTRAL)


@pytest.fixture(scope="module")
def runner():
    return Runner()


@pytest.fixture(scope="module")
def table1(runner):
    return {r.strategy.name: r for r in run_table("adhoc", ["def", "coop", "tft", "wsls"], DESK,
                                                   runner=runner)}


@pytest.fixture(scope="module")
def table2(runner):
    rows = run_table("central", ["def", "coop", "minimal", "tft", "wsls"], CENTRAL,
                     r0_grid=DEFAULT_GRID, runner=runner)
    return {r.strategy.name: r for r in rows}


def record(log, n, ok, detail):
    log[n] = (bool(ok), detail)
    assert ok, detail


def within(v, centre, tol):
    return abs(v - centre) <= tol


def test_01_def_normalization(table1, table2, acceptance_log):
    rows = [table1["DEF"], table2["DEF"]]
    ok = all(r.mean_energy == 1.0 and r.std_energy > 0 for r in rows)
    record(acceptance_log, 1, ok, "DEF mean " + ", ".join(
        f"{r.mean_energy!r} (std {r.std_energy:.4f})" for r in rows))


def test_02_table1_adhoc(table1, acceptance_log):
    m = {k: v.mean_energy for k, v in table1.items()}
    s = {k: v.std_energy for k, v in table1.items()}
    means_ok = m["COOP"] < m["TFT"] < m["WSLS"] < m["DEF"]
    stds_ok = s["WSLS"] < s["TFT"] < s["COOP"] < s["DEF"]
    soft = {"COOP": within(m["COOP"], 0.40, 0.10), "TFT": within(m["TFT"], 0.49, 0.12),
            "WSLS": within(m["WSLS"], 0.61, 0.12)}
    detail = (f"means COOP {m['COOP']:.4f} TFT {m['TFT']:.4f} WSLS {m['WSLS']:.4f} "
              f"(ordered: {means_ok}); stds WSLS {s['WSLS']:.4f} TFT {s['TFT']:.4f} "
              f"COOP {s['COOP']:.4f} DEF {s['DEF']:.4f} (ordered: {stds_ok}); "
              f"magnitudes (soft) " + " ".join(f"{k}={'ok' if v else 'off'}" for k, v in soft.items()))
    record(acceptance_log, 2, means_ok and stds_ok, detail)


def test_03_coop_reduction(table1, acceptance_log):
    cut = 1.0 - table1["COOP"].mean_energy
    record(acceptance_log, 3, 0.50 <= cut <= 0.70, f"COOP ad hoc reduction {cut:.1%}, need 50%..70%")


def test_04_nu_optimum(acceptance_log):
    start = time.perf_counter()
    rows = sweep_nu("adhoc", "coop", DEFAULT_GRID, DESK, runner=Runner())
    elapsed = time.perf_counter() - start
    best = argmin(rows)
    record(acceptance_log, 4, 0.30 <= best <= 0.50 and elapsed < 180,
           f"argmin nu {best:g} (need 0.30..0.50), sweep took {elapsed:.0f} s (need < 180)")


def test_05_table2_central(table2, acceptance_log):
    m = {k: v.mean_energy for k, v in table2.items()}
    pred = minimal_prediction(DESK.alpha)
    checks = {
        "COOP 0.29+-0.10": within(m["COOP"], 0.29, 0.10),
        "WSLS within 0.05 of DEF": abs(m["WSLS"] - m["DEF"]) <= 0.05,
        "MINIMAL 0.11+-0.06": within(m["MINIMAL"], 0.11, 0.06),
        "MINIMAL within 25% of dense prediction": abs(m["MINIMAL"] - pred) <= 0.25 * pred,
        "TFT (best r0) 0.46+-0.12": within(m["TFT"], 0.46, 0.12),
    }
    detail = (f"COOP {m['COOP']:.4f} WSLS {m['WSLS']:.4f} MINIMAL {m['MINIMAL']:.4f} "
              f"(prediction {pred:.4f}) TFT {m['TFT']:.4f} [{table2['TFT'].note}]; failing: "
              + (", ".join(k for k, v in checks.items() if not v) or "none"))
    record(acceptance_log, 5, all(checks.values()), detail)


def test_06_cooperation_dynamics(runner, acceptance_log):
    med = {}
    for strategy, arch in [("tft", "adhoc"), ("tft", "central"), ("wsls", "adhoc"), ("wsls", "central")]:
        res = cooperation_dynamics(strategy, arch, DESK, runner=runner)
        med[(strategy, arch)] = float(np.median(res.final_fraction))
    checks = {
        "TFT ad hoc > 0.2": med[("tft", "adhoc")] > 0.2,
        "TFT central > 0.2": med[("tft", "central")] > 0.2,
        "WSLS central < 0.1": med[("wsls", "central")] < 0.1,
        "WSLS ad hoc > 0.2": med[("wsls", "adhoc")] > 0.2,
    }
    detail = ("median final fractions " + " ".join(f"{s}/{a}={v:.3f}" for (s, a), v in med.items())
              + "; failing: " + (", ".join(k for k, v in checks.items() if not v) or "none"))
    record(acceptance_log, 6, all(checks.values()), detail)


def test_07_r0_optimum(runner, acceptance_log):
    rows = sweep_initial_cooperator(DEFAULT_GRID, CENTRAL, runner=runner)
    best = argmin(rows)
    vals = [v for _, v in rows]
    record(acceptance_log, 7, 0.15 <= best <= 0.40,
           f"argmin r0 {best:g} (need 0.15..0.40); energy range {min(vals):.4f}..{max(vals):.4f}")


def test_08_dense_closed_forms(acceptance_log):
    y, q = q_min(1.0, 2.0)
    e = minimal_total_energy(DenseParams(1.0, 2.0, 1.0))
    rng = np.random.default_rng(8)
    worst_h = 0.0
    for lam in rng.uniform(0.05, 20.0, 50):
        for x in (0.3, 1.0):
            q1, q2 = q_min(x, 4.0)[1], q_min(lam * x, 4.0)[1]
            worst_h = max(worst_h, abs(q2 - lam ** 4 * q1) / (lam ** 4 * q1))
    ys = np.linspace(0.0, 1.0, 1_000_001)
    grid = ((1 - ys) ** 4 + ys ** 3).min()
    gap = abs(q_min(1.0, 4.0)[1] - grid)
    ok = (abs(y - 0.5) <= 1e-8 and abs(q - 0.75) <= 1e-8 and abs(e - 0.25) <= 1e-7
          and worst_h <= 1e-8 and gap <= 1e-6)
    record(acceptance_log, 8, ok, f"q_min(1,2)=({y:.12g}, {q:.12g}) E_min={e:.12g} "
           f"homogeneity rel err {worst_h:.1e} grid gap {gap:.1e}")


def test_09_balance_optimizer(acceptance_log):
    small = balance_optimize(RingModel(3), 2.0)
    oracle = grid_variance_n3(2.0, 1e-3)
    model = RingModel(50)
    big = balance_optimize(model, 2.0)
    resid = float(np.abs(big.p.sum(axis=1) - 1).max())
    neg = float(max(0.0, -big.p.min()))
    base_u = mean_and_variance(model, uniform_distribution(50), 2.0)[1]
    base_m = mean_and_variance(model, min_total_assignment(model, 2.0), 2.0)[1]
    monotone = bool(np.all(np.diff(big.history) <= 0))
    ok = (abs(small.variance - oracle) <= 1e-3 and max(resid, neg) <= 1e-8
          and big.variance <= base_u and big.variance <= base_m and monotone)
    record(acceptance_log, 9, ok,
           f"N=3 variance {small.variance:.2e} vs grid {oracle:.2e}; N=50 variance {big.variance:.4g} "
           f"(uniform {base_u:.4g}, min-total {base_m:.4g}), residual {max(resid, neg):.1e}, "
           f"monotone {monotone}, converged {big.converged} after {big.iterations}")


def test_10_discrete_continuous(acceptance_log):
    model = RingModel(400, 1 / 400)
    mean = mean_and_variance(model, min_total_assignment(model, 4.0), 4.0)[0]
    cont = minimal_total_energy(DenseParams(1.0, 4.0))
    gap = abs(mean - cont) / cont
    record(acceptance_log, 10, gap < 0.02, f"discrete {mean:.6f} vs continuous {cont:.6f}, gap {gap:.2%}")


def test_11_determinism(tmp_path, acceptance_log):
    argv = ["table1", "--m", "30", "--slots", "1000", "--iters", "300", "--reps", "100",
            "--seed", str(DESK.seed)]
    outs = []
    for k, workers in enumerate(["1", "1", "2"]):
        d = tmp_path / str(k)
        assert main([*argv, "--workers", workers, "--out", str(d)]) == 0
        outs.append({p.name: p.read_bytes() for p in sorted(d.glob("*.csv"))})
    same = bool(outs[0]) and outs[0] == outs[1] == outs[2]
    record(acceptance_log, 11, same, f"{len(outs[0])} CSVs byte-identical over 2 runs and workers 1/2: {same}")
