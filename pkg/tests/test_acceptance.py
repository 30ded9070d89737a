"""Acceptance suite: one test per release criterion, each printing a verdict line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Every tolerance is pinned here; nothing is deferred to calibration.
"""

import csv
import hashlib
import json
import time

import numpy as np
import pytest
from scipy import integrate, optimize, stats

from fewnet.arnn import ArnnForecaster, _flat_loss_and_grad
from fewnet.comparisons import ErrorMatrix, gr_fluctuation_test, mcb_test
from fewnet.conformal import ConformalConfig, conformalize, windowed_quantile
from fewnet.econ_filters import cf_filter, cf_weight_matrix, hp_filter
from fewnet.ensemble import FewnetForecaster
from fewnet.experiment import run_experiment, validate_config
from fewnet.metrics import compute_metrics, empirical_risk
from fewnet.series import Month
from fewnet.wavelets import filter_coefficients, max_level, modwt, mra

ALL_FILTERS = ("haar", "d8", "la8", "c6", "bl14")


def _verdict(number: int, description: str, passed: bool, detail: str = ""):
    flag = "PASS" if passed else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{flag}] criterion {number:2d}: {description}{suffix}")
    assert passed, f"criterion {number} failed: {description}{suffix}"


# -- 1. MODWT pyramid vs brute force ------------------------------------------------


def test_criterion_01_modwt_brute_force():
    from oracles import brute_force_modwt

    start = time.perf_counter()
    worst = 0.0
    rng = np.random.default_rng(101)
    for name in ALL_FILTERS:
        filt = filter_coefficients(name)
        for n in range(filt.length, 33):
            for levels in range(1, min(3, max_level(n, filt.length)) + 1):
                x = rng.standard_normal(n)
                dec = modwt(x, filt, levels)
                w_oracle, v_oracle = brute_force_modwt(x, filt, levels)
                worst = max(
                    worst,
                    np.abs(dec.wavelet_coeffs - w_oracle).max(),
                    np.abs(dec.scaling_coeffs - v_oracle).max(),
                )
    elapsed = time.perf_counter() - start
    _verdict(
        1,
        "MODWT pyramid equals brute-force convolution (5 filters, K<=3, N<=32)",
        worst < 1e-10 and elapsed < 1.0,
        f"max err {worst:.2e}, {elapsed:.2f}s",
    )


# -- 2. MRA identity and energy preservation ------------------------------------------


def test_criterion_02_mra_and_energy():
    rng = np.random.default_rng(202)
    worst_add = worst_energy = 0.0
    for trial in range(1000):
        n = int(rng.integers(64, 257))
        x = rng.standard_normal(n)
        filt = filter_coefficients(ALL_FILTERS[trial % len(ALL_FILTERS)])
        levels = min(5, max_level(n, filt.length))
        dec = modwt(x, filt, levels)
        analysis = mra(dec)
        worst_add = max(worst_add, np.abs(analysis.smooth + analysis.details.sum(axis=0) - x).max())
        energy = (dec.wavelet_coeffs**2).sum() + (dec.scaling_coeffs**2).sum()
        worst_energy = max(worst_energy, abs(energy - (x**2).sum()))
    _verdict(
        2,
        "MRA additivity and MODWT energy preservation on 1000 random series",
        worst_add < 1e-8 and worst_energy < 1e-8,
        f"additivity {worst_add:.2e}, energy {worst_energy:.2e}",
    )


# -- 3. HP filter ------------------------------------------------------------------------


def test_criterion_03_hp_filter():
    y5 = np.array([1.0, 3.0, 2.0, 5.0, 4.0])
    ok_zero = np.array_equal(hp_filter(y5, 0.0).trend, y5)

    linear = 2.0 + 0.5 * np.arange(60.0)
    ok_linear = all(
        np.abs(hp_filter(linear, lam).cycle).max() < 1e-10 for lam in (10.0, 1600.0, 129600.0)
    )

    lam = 10.0
    d = np.zeros((3, 5))
    for i in range(3):
        d[i, i : i + 3] = (1.0, -2.0, 1.0)
    oracle = np.linalg.solve(np.eye(5) + lam * d.T @ d, y5)
    ok_dense = np.abs(hp_filter(y5, lam).trend - oracle).max() < 1e-10

    rng = np.random.default_rng(303)
    t = np.arange(200.0)
    noisy_line = 1.0 + 0.03 * t + rng.uniform(-0.5, 0.5, 200)
    design = np.column_stack([np.ones(200), t])
    beta, *_ = np.linalg.lstsq(design, noisy_line, rcond=None)
    ok_limit = np.abs(hp_filter(noisy_line, 1e12).trend - design @ beta).max() < 1e-4

    _verdict(
        3,
        "HP filter: lambda=0 identity, linear zero-cycle, dense oracle, OLS limit",
        ok_zero and ok_linear and ok_dense and ok_limit,
    )


# -- 4. CF filter ---------------------------------------------------------------------------


def test_criterion_04_cf_filter():
    ok_dc = np.abs(cf_weight_matrix(80, 18, 96).sum(axis=1)).max() < 1e-8
    n = 480
    t = np.arange(float(n))

    def mid_amplitude(period):
        x = np.cos(2 * np.pi * t / period)
        cycle = cf_filter(x, 18, 96).cycle
        mid = slice(n // 3, 2 * n // 3)
        basis = np.column_stack(
            [np.cos(2 * np.pi * t[mid] / period), np.sin(2 * np.pi * t[mid] / period)]
        )
        coef, *_ = np.linalg.lstsq(basis, cycle[mid], rcond=None)
        return float(np.hypot(*coef))

    in_band = mid_amplitude(24.0)
    out_band = mid_amplitude(4.0)
    _verdict(
        4,
        "CF filter: zero DC gain, period-24 retained within 5%, period-4 below 10%",
        ok_dc and abs(in_band - 1.0) < 0.05 and out_band < 0.10,
        f"gain(24)={in_band:.4f}, gain(4)={out_band:.4f}",
    )


# -- 5. ARNN gradient and AR(1) oracle ------------------------------------------------------


def test_criterion_05_arnn_gradient_and_ar1():
    rng = np.random.default_rng(404)
    worst_rel = 0.0
    for _ in range(20):
        n = int(rng.integers(5, 20))
        p = int(rng.integers(1, 5))
        q = int(rng.integers(1, 4))
        x = rng.standard_normal((n, p))
        y = rng.standard_normal(n)
        params = rng.uniform(-0.5, 0.5, size=p * q + 2 * q + 1)
        _, grad = _flat_loss_and_grad(params, x, y, q)
        fd = np.empty_like(params)
        for i in range(len(params)):
            up, down = params.copy(), params.copy()
            up[i] += 1e-5
            down[i] -= 1e-5
            fd[i] = (
                _flat_loss_and_grad(up, x, y, q)[0] - _flat_loss_and_grad(down, x, y, q)[0]
            ) / 2e-5
        worst_rel = max(worst_rel, float(np.max(np.abs(grad - fd) / np.maximum(np.abs(fd), 1e-8))))

    y_ar = np.zeros(500)
    noise_rng = np.random.default_rng(505)
    for t in range(1, 500):
        y_ar[t] = 0.7 * y_ar[t - 1] + noise_rng.standard_normal()
    model = ArnnForecaster(lags=1, hidden=1, epochs=2000, learning_rate=0.1, restarts=5, seed=7)
    model.fit(y_ar)
    net_mse = float(np.mean(model.insample_residuals() ** 2))
    design = np.column_stack([np.ones(499), y_ar[:-1]])
    beta, *_ = np.linalg.lstsq(design, y_ar[1:], rcond=None)
    ols_mse = float(np.mean((y_ar[1:] - design @ beta) ** 2))
    _verdict(
        5,
        "ARNN analytic gradient vs finite differences; AR(1) MSE within 1.1x OLS",
        worst_rel < 1e-4 and net_mse <= 1.1 * ols_mse,
        f"grad rel err {worst_rel:.2e}, MSE ratio {net_mse / ols_mse:.4f}",
    )


# -- 6. Ensemble structural numbers ----------------------------------------------------------


def test_criterion_06_ensemble_structure():
    rng = np.random.default_rng(606)
    n = 203
    t = np.arange(float(n))
    y = 5.0 + 0.02 * t + np.sin(2 * np.pi * t / 24.0) + 0.2 * rng.standard_normal(n)
    x = np.column_stack([
        2.0 + 0.1 * np.sin(2 * np.pi * t / 36.0),
        0.5 + 0.05 * np.cos(2 * np.pi * t / 48.0),
    ])
    model = FewnetForecaster(p_grid=[8], epochs=30, restarts=2, seed=1).fit(y, x)
    components = model.predict_components(12)
    additive = np.array_equal(model.predict(12), components.sum(axis=0))
    _verdict(
        6,
        "N=203 gives K=5 and 6 component models; forecast equals component sum",
        model.level_ == 5 and len(model.components_) == 6 and additive,
    )


# -- 7. Decomposed vs raw empirical risk --------------------------------------------------------


def test_criterion_07_decomposed_risk_majority():
    start = time.perf_counter()
    wins = 0
    n_seeds = 20
    n = 120
    t = np.arange(float(n))
    for seed in range(n_seeds):
        rng = np.random.default_rng(9000 + seed)
        # nonstationary fixture: drifting trend, cycle, and a level break
        y = (
            0.04 * t
            + 1.2 * np.sin(2 * np.pi * t / 18.0)
            + np.where(t > 60, 1.5, 0.0)
            + 0.4 * rng.standard_normal(n)
        )
        shared = dict(epochs=150, learning_rate=0.05, restarts=3)
        ensemble = FewnetForecaster(
            use_econ_filters=False, p_grid=[4], **shared, seed=seed
        ).fit(y)
        raw = ArnnForecaster(lags=4, hidden=ensemble.q_, **shared, seed=seed).fit(y)
        risk_w = ensemble.empirical_risk_w()
        risk_raw = empirical_risk(raw.fitted_values(), raw.design_.labels)
        wins += risk_w <= risk_raw
    elapsed = time.perf_counter() - start
    _verdict(
        7,
        "decomposed-model risk <= raw-model risk on >= 70% of 20 seeds",
        wins >= 14 and elapsed < 300.0,
        f"{wins}/20 seeds, {elapsed:.1f}s",
    )


# -- 8. Metrics -------------------------------------------------------------------------------


def test_criterion_08_metrics():
    train = np.array([1.0, 2.0, 1.5, 3.0, 2.5, 4.0])
    actual = np.array([2.0, 4.5, 3.0])
    perfect = compute_metrics(actual, actual.copy(), train)
    zeros_ok = (
        perfect.rmse == 0.0
        and perfect.mase == 0.0
        and perfect.smape_percent == 0.0
        and perfect.theils_u1 == 0.0
        and perfect.mdape == 0.0
    )

    two_point = compute_metrics(np.array([2.0, 4.0]), np.array([1.0, 5.0]), train)
    hand_ok = (
        abs(two_point.rmse - 1.0) < 1e-6
        and abs(two_point.smape_percent - 100.0 * (1 / 1.5 + 1 / 4.5) / 2) < 1e-6
        and abs(two_point.theils_u1 - 1.0 / np.sqrt(130.0)) < 1e-6
        and abs(two_point.theils_u1 - 0.0877) < 5e-5
    )

    rng = np.random.default_rng(808)
    a = rng.uniform(2.0, 6.0, 10)
    f = a + rng.uniform(-1.0, 1.0, 10)
    c = 3.7
    base = compute_metrics(a, f, train)
    scaled = compute_metrics(c * a, c * f, c * train)
    scale_ok = (
        np.isclose(scaled.smape_percent, base.smape_percent)
        and np.isclose(scaled.mase, base.mase)
        and np.isclose(scaled.mdrae, base.mdrae)
        and np.isclose(scaled.mdape, base.mdape)
        and np.isclose(scaled.rmse, c * base.rmse)
    )
    _verdict(
        8,
        "metrics: perfect-forecast zeros, two-point hand values to 1e-6, scale suite",
        zeros_ok and hand_ok and scale_ok,
    )


# -- 9. MCB -------------------------------------------------------------------------------------


def test_criterion_09_mcb():
    def oracle_quantile(alpha, k):
        def cdf(q):
            f = lambda u: stats.norm.pdf(u) * (stats.norm.cdf(u + q) - stats.norm.cdf(u)) ** (k - 1)
            return k * integrate.quad(f, -9, 9, limit=200)[0]

        return optimize.brentq(lambda q: cdf(q) - (1 - alpha), 0.05, 12.0, xtol=1e-9)

    cd_ok = True
    details = []
    for m, d, alpha in [(16, 8, 0.05), (5, 10, 0.05)]:
        rng = np.random.default_rng(m * d)
        losses = rng.uniform(size=(m, d))
        result = mcb_test(
            ErrorMatrix(losses, tuple(f"m{i}" for i in range(m)), tuple(f"d{j}" for j in range(d))),
            alpha,
        )
        oracle_cd = oracle_quantile(alpha, m) * np.sqrt(m * (m + 1) / (6.0 * d))
        rel = abs(result.critical_distance - oracle_cd) / oracle_cd
        details.append(f"M={m},D={d}: rel {rel:.1e}")
        cd_ok = cd_ok and rel < 5e-4  # 4 significant figures

    dominant = mcb_test(
        ErrorMatrix(np.array([[1.0] * 4, [2.0] * 4]), ("a", "b"), tuple(f"d{j}" for j in range(4)))
    )
    ranks_ok = np.allclose(dominant.mean_ranks, [1.0, 2.0])
    _verdict(9, "MCB critical distance matches quantile oracle; dominant ranks (1, 2)",
             cd_ok and ranks_ok, "; ".join(details))


# -- 10. Fluctuation test --------------------------------------------------------------------------


def test_criterion_10_fluctuation():
    rng = np.random.default_rng(1010)
    a = rng.uniform(1.0, 3.0, 80)
    b = rng.uniform(1.0, 3.0, 80)
    fwd = gr_fluctuation_test(a, b, mu=0.3)
    rev = gr_fluctuation_test(b, a, mu=0.3)
    finite = np.isfinite(fwd.statistic)
    antisym = np.array_equal(fwd.statistic[finite], -rev.statistic[finite]) and np.array_equal(
        np.isnan(fwd.statistic), np.isnan(rev.statistic)
    )

    detected = 0
    draws = 500
    for _ in range(draws):
        loss_b = 1.0 + 0.02 * rng.standard_normal(60)
        loss_a = loss_b + 1.0 + 0.02 * rng.standard_normal(60)
        result = gr_fluctuation_test(loss_a, loss_b, mu=0.3, alpha=0.05)
        detected += bool(np.all(result.statistic > result.critical_value))
    _verdict(
        10,
        "fluctuation test: exact antisymmetry; separated losses detected in >= 95% of draws",
        antisym and detected >= 0.95 * draws,
        f"{detected}/{draws} detections",
    )


# -- 11. Conformal coverage --------------------------------------------------------------------------


def test_criterion_11_conformal():
    rng = np.random.default_rng(1111)
    coverage_ok = True
    details = []
    for alpha in (0.05, 0.1):
        config = ConformalConfig(kappa=40, alpha=alpha)
        hits = total = 0
        for _ in range(1000):
            level = rng.uniform(-1.0, 1.0)
            cal_actual = level + rng.standard_normal(60)
            bands = conformalize(
                np.full(1, level), cal_actual, np.full(60, level), config
            )
            hits += int(bands.covers([level + rng.standard_normal()]).sum())
            total += 1
        coverage = hits / total
        details.append(f"alpha={alpha}: {coverage:.3f}")
        coverage_ok = coverage_ok and coverage >= 1 - alpha - 0.05

    def brute(scores, t, kappa, alpha):
        window = [scores[i] for i in range(len(scores)) if t - kappa <= i + 1 <= t - 1]
        denom = min(kappa, t - 1) + 1
        for q in sorted(window):
            if sum(1 for s in window if s <= q) / denom >= 1 - alpha:
                return q
        return float("inf")

    scores = rng.uniform(0.0, 5.0, 10)
    quantile_ok = all(
        windowed_quantile(scores, t, kappa, alpha) == brute(list(scores), t, kappa, alpha)
        for kappa in range(1, 7)
        for t in range(2, 12)
        for alpha in (0.05, 0.1, 0.3, 0.5)
    )
    _verdict(
        11,
        "conformal: Gaussian coverage >= 1 - alpha - 0.05; quantile matches brute force",
        coverage_ok and quantile_ok,
        "; ".join(details),
    )


# -- 12. End-to-end determinism ------------------------------------------------------------------------


def test_criterion_12_determinism(tmp_path):
    rng = np.random.default_rng(1212)
    n = 80
    start = Month(2003, 1)
    files = {}
    series = {
        "cpi_inflation": 5.0 + np.sin(np.arange(n) / 5.0) + 0.1 * rng.standard_normal(n),
        "epu": 100.0 + 10.0 * np.cos(np.arange(n) / 7.0) + rng.standard_normal(n),
        "gprc": 0.5 + 0.05 * np.sin(np.arange(n) / 9.0),
    }
    for name, values in series.items():
        path = tmp_path / f"{name}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["date", "value"])
            for i, v in enumerate(values):
                writer.writerow([str(start + i), v])
        files[name] = str(path)
    config = {
        "config_version": 1,
        "seed": 42,
        "data": files,
        "split": {"train_end": str(start + (n - 13)), "horizon": 12},
        "models": [
            {"type": "fewnet", "params": {"p_grid": [8], "levels": 2, "epochs": 15, "restarts": 2}},
            {"type": "rw"},
        ],
    }
    digests = []
    for tag, threads in (("r1", 1), ("r2", 1), ("r4", 4)):
        out = tmp_path / tag
        run_experiment(validate_config(config), output_dir=out, threads=threads)
        digests.append(hashlib.sha256((out / "report.json").read_bytes()).hexdigest())
    _verdict(
        12,
        "byte-identical report JSON across repeated runs and thread counts 1 vs 4",
        digests[0] == digests[1] == digests[2],
        digests[0][:12],
    )


# -- 13. Split arithmetic --------------------------------------------------------------------------------


def test_criterion_13_split_windows():
    from fewnet.series import SplitSpec, TimeSeries, split

    series = TimeSeries(Month(2003, 1), np.linspace(1.0, 2.0, 227))
    train_a, test_a = split(series, SplitSpec(Month(2020, 11), 12))
    train_b, test_b = split(series, SplitSpec(Month(2019, 11), 24))
    _verdict(
        13,
        "227-month input reproduces the (215, 12) and (203, 24) train/test windows",
        (len(train_a), len(test_a)) == (215, 12) and (len(train_b), len(test_b)) == (203, 24),
    )
