"""End-to-end acceptance checks.

Each test prints one PASS line with its measured numbers; run with
``pytest -v`` to get one line per criterion.
"""

import math
import time
from dataclasses import replace

import numpy as np

from polariphase.analysis import phase_from_extrema_mixed, run_pipeline
from polariphase.beamline import (
    BeamlineConfig,
    ScanPlan,
    analytic_extrema,
    mixed_intensity,
    propagate,
    pure_intensity,
)
from polariphase.cli import main
from polariphase.counting import CountingPlan, expectation_scan, simulate_scan
from polariphase.data import data_path
from polariphase.spincore import Su2Params, mixed_state_phase

SET_A = (Su2Params(1.71, 0.38, -1.46), 0.976)
SET_B = (Su2Params(1.06, 0.17, -1.40), 0.981)


def _setup(params, r0, eps=0.0, beta_max=0.0, counts_scale=2000.0, seed=0):
    cfg = BeamlineConfig(r0=r0, su2=params, contamination_eps=eps,
                         inhomogeneity_beta_max=beta_max)
    plan = CountingPlan(scan=ScanPlan.default(cfg, 41),
                        counts_scale=counts_scale, seed=seed)
    return cfg, plan


def _noise_free_phase(params, r0, r_targets=()):
    cfg, plan = _setup(params, r0)
    records = expectation_scan(cfg, plan)
    return run_pipeline(records, records, plan, cfg, list(r_targets),
                        expectation=True)


def test_criterion_1_set_a_theory_value():
    t0 = time.perf_counter()
    res = _noise_free_phase(*SET_A)[0]
    elapsed = time.perf_counter() - t0
    assert abs(res.phi - 0.37) <= 0.005
    assert elapsed < 1.0
    print(f"criterion 1 PASS: set A phase {res.phi:.4f} rad "
          f"(target 0.37 +- 0.005) in {elapsed * 1e3:.0f} ms")


def test_criterion_2_set_b_theory_value():
    res = _noise_free_phase(*SET_B)[0]
    assert abs(res.phi - 0.17) <= 0.005
    print(f"criterion 2 PASS: set B phase {res.phi:.4f} rad (target 0.17 +- 0.005)")


def test_criterion_3_purity_sweep_table():
    expected = {
        "A": (SET_A, [0.31, 0.24, 0.12]),
        "B": (SET_B, [0.14, 0.10, 0.05]),
    }
    lines = []
    for name, ((params, r0), table) in expected.items():
        results = _noise_free_phase(params, r0, (0.8, 0.6, 0.3))[1:]
        for res, target in zip(results, table):
            assert abs(res.phi - target) <= 0.01, (name, res.r, res.phi, target)
        lines.append(name + ": " + ", ".join(f"{res.phi:.3f}" for res in results))
    print("criterion 3 PASS: " + "; ".join(lines)
          + " vs {0.31,0.24,0.12}/{0.14,0.10,0.05} within 0.01")


def test_criterion_4_noisy_recovery_coverage():
    t0 = time.perf_counter()
    coverages = {}
    for name, (params, r0) in (("A", SET_A), ("B", SET_B)):
        cfg, plan = _setup(params, r0, eps=0.072, beta_max=0.004)
        covered = 0
        n = 500
        for seed in range(n):
            records = simulate_scan(cfg, replace(plan, seed=seed))
            res = run_pipeline(records, records, plan, cfg, [],
                               fit_mode="corrected")[0]
            if abs(res.phi - res.phi_theory) <= 3.0 * res.sigma_phi_total:
                covered += 1
        coverages[name] = covered / n
        assert coverages[name] >= 0.95, (name, coverages[name])
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    print(f"criterion 4 PASS: 3-sigma coverage A={coverages['A']:.3f}, "
          f"B={coverages['B']:.3f} (>= 0.95) in {elapsed:.1f} s")


def test_criterion_5_matrix_chain_matches_closed_form():
    rng = np.random.default_rng(55)
    worst = 0.0
    for _ in range(1000):
        params = Su2Params(rng.uniform(0, math.pi),
                           rng.uniform(-math.pi, math.pi),
                           rng.uniform(-math.pi, math.pi))
        r0 = rng.uniform(0.0, 1.0)
        cfg = BeamlineConfig(r0=r0, su2=params, contamination_eps=0.0)
        eta = rng.uniform(0, 4 * math.pi)
        worst = max(worst, abs(propagate(cfg, eta)
                               - mixed_intensity(r0, params, eta)))
        pure_cfg = BeamlineConfig(r0=1.0, su2=params, contamination_eps=0.0)
        worst = max(worst, abs(propagate(pure_cfg, eta)
                               - pure_intensity(params, eta)))
    assert worst < 1e-12
    print(f"criterion 5 PASS: worst |chain - closed form| = {worst:.2e} (< 1e-12)")


def test_criterion_6_extrema_formula_identity():
    rng = np.random.default_rng(66)
    worst = 0.0
    for _ in range(10_000):
        xi = rng.uniform(0, math.pi)
        while abs(xi - math.pi / 2) < 0.1:
            xi = rng.uniform(0, math.pi)
        delta = rng.uniform(0.05, 1.2) * (1.0 if rng.random() < 0.5 else -1.0)
        r = rng.uniform(1e-6, 1.0)
        p = Su2Params(xi, delta, rng.uniform(-math.pi, math.pi))
        lo, hi = analytic_extrema(r, p)
        phi = phase_from_extrema_mixed(lo, hi, r).phi
        worst = max(worst, abs(phi - math.atan(r * abs(math.tan(delta)))))
    # exact pure-state reduction at r = 1
    from polariphase.analysis import phase_from_extrema_pure
    for p in (Su2Params(1.1, 0.4, -0.7), Su2Params(0.6, -0.9, 1.3)):
        lo, hi = analytic_extrema(1.0, p)
        assert phase_from_extrema_mixed(lo, hi, 1.0).phi == \
            phase_from_extrema_pure(lo, hi).phi
    assert worst < 1e-12
    print(f"criterion 6 PASS: worst identity deviation = {worst:.2e} (< 1e-12)")


def test_criterion_7_half_wavelength_signature():
    params, r0 = SET_A
    from polariphase.analysis import fit_harmonic, normalize_counts
    # noise-free curve with contamination, judged against nominal
    # counting errors: the single-frequency amplitude is a strong detection
    cfg, plan = _setup(params, r0, eps=0.072, counts_scale=20000.0)
    records = expectation_scan(cfg, plan)
    off, _ = normalize_counts(records, plan)
    fit_eps = fit_harmonic(off)
    assert fit_eps.second_order_amplitude > 5.0 * fit_eps.second_order_sigma
    # clean noisy data: amplitude consistent with zero
    cfg0, plan0 = _setup(params, r0, eps=0.0, counts_scale=20000.0, seed=3)
    noisy = simulate_scan(cfg0, plan0)
    off0, _ = normalize_counts(noisy, plan0)
    fit0 = fit_harmonic(off0)
    assert fit0.second_order_amplitude < 2.0 * fit0.second_order_sigma
    # contamination bias curve, agnostic mode, must not decrease
    biases = []
    for eps in (0.0, 0.03, 0.072):
        cfg_e, plan_e = _setup(params, r0, eps=eps)
        recs = expectation_scan(cfg_e, plan_e)
        res = run_pipeline(recs, recs, plan_e, cfg_e, [],
                           fit_mode="agnostic", expectation=True)[0]
        biases.append(abs(res.phi - res.phi_theory))
    assert all(b >= a - 1e-12 for a, b in zip(biases, biases[1:]))
    curve = ", ".join(f"eps={e}: {b:.4f}" for e, b in zip((0.0, 0.03, 0.072), biases))
    print(f"criterion 7 PASS: contaminated amplitude "
          f"{fit_eps.second_order_amplitude / fit_eps.second_order_sigma:.1f} sigma, "
          f"clean {fit0.second_order_amplitude / fit0.second_order_sigma:.1f} sigma; "
          f"bias curve nondecreasing [{curve}]")


def test_criterion_8_pull_calibration():
    stds = {}
    for name, (params, r0) in (("A", SET_A), ("B", SET_B)):
        cfg, plan = _setup(params, r0, eps=0.0)
        pulls = []
        for seed in range(500):
            records = simulate_scan(cfg, replace(plan, seed=seed))
            res = run_pipeline(records, records, plan, cfg, [])[0]
            if res.sigma_phi > 0.0 and math.isfinite(res.phi):
                pulls.append((res.phi - res.phi_theory) / res.sigma_phi)
        stds[name] = float(np.std(pulls, ddof=1))
        assert 0.8 <= stds[name] <= 1.2, (name, stds[name])
    print(f"criterion 8 PASS: pull std A={stds['A']:.3f}, B={stds['B']:.3f} "
          f"(within [0.8, 1.2])")


def test_criterion_9_full_pipeline_is_deterministic(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("POLARIPHASE_NO_COLOR", "1")
    import shutil
    for name in ("setA.cfg", "setA_reference.json"):
        shutil.copy(data_path(name), tmp_path / name)
    assert main(["full", "--config", "setA.cfg"]) == 0
    first = [(tmp_path / n).read_bytes() for n in ("setA_scan.csv", "setA_report.json")]
    assert main(["full", "--config", "setA.cfg"]) == 0
    second = [(tmp_path / n).read_bytes() for n in ("setA_scan.csv", "setA_report.json")]
    assert first == second
    print("criterion 9 PASS: repeated full runs produced byte-identical "
          "scan CSV and report JSON")
