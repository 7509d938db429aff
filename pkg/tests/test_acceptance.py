"""Acceptance gate: one test per criterion, each printing a pass/fail line.

The Monte Carlo experiments are shared across criteria through module-scoped
fixtures; every tolerance is pinned here, not computed from the data.
"""
import numpy as np
import pytest
from scipy import stats

from fbsheet import (
    CovModelConfig,
    ExperimentConfig,
    daubechies_filter,
    detail_grid,
    embedding_eigenvalues,
    fgn_autocovariance,
    model_covariance,
    octave_box,
    run_experiment,
    synth_fbs_pair,
    synth_fgn_pair,
)
from fbsheet.estimator import build_system
from fbsheet.field import Field
from fbsheet.wavelet import available_count

THREADS = 2


def report_line(num, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {num:2d} {status}: {detail}")
    assert ok, f"criterion {num}: {detail}"


def experiment(hurst, dims, replicates, seed, **kw):
    config = ExperimentConfig(
        hurst=hurst, dims=dims, replicates=replicates, seed=seed, **kw
    )
    return run_experiment(config, threads=THREADS)


@pytest.fixture(scope="module")
def exp_08():
    return experiment((0.8, 0.8), (512, 512), 200, seed=108)


@pytest.fixture(scope="module")
def exp_038():
    return experiment((0.3, 0.8), (512, 512), 200, seed=2038)


@pytest.fixture(scope="module")
def exp_05():
    return experiment((0.5, 0.5), (512, 512), 300, seed=505)


@pytest.fixture(scope="module")
def exp_03():
    return experiment((0.3, 0.3), (512, 512), 100, seed=303)


@pytest.fixture(scope="module")
def exp_3d():
    return experiment((0.6, 0.7, 0.8), (128, 128, 128), 100, seed=3999)


@pytest.fixture(scope="module")
def exp_rate():
    # Same octave box {2,3} at both lattice sizes.  Low octaves keep the
    # coefficient counts proportional to the lattice volume; at the top
    # octaves the interior-support deduction distorts the counts for 256^2
    # (e.g. 3 vs 11 per axis at level 5) and with it the idealized rate.
    big = experiment(
        (0.5, 0.5), (512, 512), 200, seed=9050, j_low=2, j_high=3, estimators=("ols",)
    )
    small = experiment(
        (0.5, 0.5), (256, 256), 300, seed=9051, j_low=2, j_high=3, estimators=("ols",)
    )
    return big, small


def column_stats(result, name):
    est = result.estimates[name]
    est = est[~np.isnan(est).any(axis=1)]
    return est.mean(axis=0), est.std(axis=0, ddof=1), est


def test_criterion_01_table_isotropic_08(exp_08):
    mean, std, _ = column_stats(exp_08, "two_step")
    ok = bool(
        np.all(np.abs(mean - 0.8) <= 0.015)
        and np.all((std >= 0.010) & (std <= 0.030))
    )
    report_line(
        1, ok,
        f"2D H=(0.8,0.8) 512^2 x{exp_08.summary.replicates}: two-step mean="
        f"{np.round(mean, 4)} (|bias|<=0.015), std={np.round(std, 4)} in [0.010,0.030]",
    )


def test_criterion_02_table_anisotropic(exp_038):
    mean, _, _ = column_stats(exp_038, "two_step")
    target = np.array([0.2719, 0.7980])
    truth = np.array([0.3, 0.8])
    ok = bool(np.all(np.abs(mean - target) <= 0.02) and np.all(mean < truth))
    report_line(
        2, ok,
        f"2D H=(0.3,0.8) 512^2 x{exp_038.summary.replicates}: two-step mean="
        f"{np.round(mean, 4)} vs {target} (+-0.02), bias negative on both axes",
    )


def test_criterion_03_3d_desk_scale(exp_3d):
    mean, _, _ = column_stats(exp_3d, "two_step")
    truth = np.array([0.6, 0.7, 0.8])
    ok = bool(
        np.all(np.abs(mean - truth) <= 0.04)
        and mean[0] < mean[1] < mean[2]
    )
    report_line(
        3, ok,
        f"3D H=(0.6,0.7,0.8) 128^3 x{exp_3d.summary.replicates}: two-step mean="
        f"{np.round(mean, 4)} (+-0.04, ordered)",
    )


def test_criterion_04_variance_dominance(exp_08, exp_038, exp_05, exp_03, exp_3d):
    dominated = []
    for result in (exp_08, exp_038, exp_05, exp_03, exp_3d):
        _, std_ts, _ = column_stats(result, "two_step")
        _, std_o, _ = column_stats(result, "ols")
        dominated.append(bool(np.all(std_ts <= std_o)))
    _, std_ts, _ = column_stats(exp_05, "two_step")
    _, std_o, _ = column_stats(exp_05, "ols")
    ratio = std_ts / std_o
    ok = all(dominated) and bool(np.all(ratio <= 0.75))
    report_line(
        4, ok,
        f"two-step std <= ols std at every tested H ({dominated}); "
        f"H=(0.5,0.5) x300 ratio={np.round(ratio, 3)} <= 0.75",
    )


def test_table_bias_sign_isotropic_03(exp_03):
    # Companion check: at H=(0.3,0.3) both estimators sit below the truth
    # on both axes.
    for name in ("ols", "two_step"):
        mean, _, _ = column_stats(exp_03, name)
        assert np.all(mean < 0.3), f"{name} mean {mean} not below truth"


def test_table_ols_row_isotropic_05(exp_05):
    # Frozen OLS operating point at H=(0.5,0.5): means 0.4897/0.4855.  The
    # spread depends on the octave box (the top octave carries 3 vs 8
    # coefficients per axis depending on the boundary handling), so only a
    # broad band is asserted for it.
    mean, std, _ = column_stats(exp_05, "ols")
    assert np.all(np.abs(mean - [0.4897, 0.4855]) <= 0.02)
    assert np.all((std >= 0.015) & (std <= 0.055))


def test_criterion_05_scaling_law_slopes(exp_03, exp_05, exp_08):
    details = []
    ok = True
    for truth, result in ((0.3, exp_03), (0.5, exp_05), (0.8, exp_08)):
        mean, _, _ = column_stats(result, "ols")
        slopes = 2.0 * mean + 1.0
        ok = ok and bool(np.all(np.abs(slopes - (2 * truth + 1)) <= 0.15))
        details.append(f"H={truth}: slopes={np.round(slopes, 3)}")
    report_line(5, ok, "per-axis log-variance slopes vs 2H+1 (+-0.15): " + "; ".join(details))


def test_criterion_06_squared_covariance_identity():
    rng = np.random.default_rng(606)
    details = []
    ok = True
    for rho in (-0.8, 0.0, 0.5):
        cov = np.array([[1.0, rho], [rho, 1.0]])
        chol = np.linalg.cholesky(cov)
        draws = rng.standard_normal((1_000_000, 2)) @ chol.T
        x2 = draws[:, 0] ** 2
        y2 = draws[:, 1] ** 2
        prods = (x2 - x2.mean()) * (y2 - y2.mean())
        batches = prods.reshape(100, -1).mean(axis=1)
        stderr = batches.std(ddof=1) / np.sqrt(len(batches))
        gap = abs(prods.mean() - 2.0 * rho**2)
        ok = ok and gap <= 4 * stderr
        details.append(f"rho={rho}: |cov(X^2,Y^2)-2cov^2|={gap:.2e} (4se={4*stderr:.2e})")
    report_line(6, ok, "; ".join(details))


def test_criterion_07_synthesis_exactness_1d():
    ok = True
    details = []
    for hurst in (0.3, 0.5, 0.8):
        assert embedding_eigenvalues(hurst, 4096).min() >= 0.0
        acc = np.zeros((500, 9))
        for pair in range(250):
            for side, field in enumerate(synth_fgn_pair((hurst,), (4096,), 700 + pair)):
                x = field.data
                for lag in range(9):
                    n = len(x) - lag
                    acc[2 * pair + side, lag] = np.dot(x[: n], x[lag : lag + n]) / n
        worst = 0.0
        for lag in range(9):
            stderr = acc[:, lag].std(ddof=1) / np.sqrt(acc.shape[0])
            gap = abs(acc[:, lag].mean() - fgn_autocovariance(hurst, lag))
            worst = max(worst, gap / (4 * stderr))
        ok = ok and worst <= 1.0
        details.append(f"H={hurst}: max|gap|/4se={worst:.2f}")
    report_line(7, ok, "fGn autocovariance lags 0..8, 500 reps, eigenvalues >= 0; " + "; ".join(details))


def test_criterion_08_wavelet_correctness():
    ok = True
    details = []
    for n in (1, 2, 3):
        filt = daubechies_filter(n)
        h = filt.lowpass_array
        g = filt.highpass_array
        ortho = max(
            [abs(np.dot(h, h) - 1.0)]
            + [abs(np.dot(h[2 * m :], h[: len(h) - 2 * m])) for m in range(1, n)]
        )
        k = np.arange(2 * n, dtype=float)
        moments = max(abs(np.dot(k**p, g)) for p in range(n))
        ok = ok and ortho < 1e-10 and moments < 1e-8
        details.append(f"N={n}: ortho={ortho:.1e} moments={moments:.1e}")
    # polynomial fields of per-axis degree < N give all-zero grids
    x = np.arange(128, dtype=float)
    y = np.arange(96, dtype=float)
    poly_checks = []
    for n in (1, 2, 3):
        filt = daubechies_filter(n)
        data = np.outer(x ** (n - 1), 2.0 + y ** (n - 1) / 50.0)
        grid = detail_grid(Field(data), filt, (2, 2))
        rel = np.abs(grid.coeffs).max() / max(np.abs(data).max(), 1.0)
        poly_checks.append(rel)
        ok = ok and rel < 1e-8
    report_line(
        8, ok,
        "; ".join(details) + f"; poly residuals={[f'{v:.1e}' for v in poly_checks]}",
    )


def test_criterion_09_convergence_rate(exp_rate):
    big, small = exp_rate
    _, std_big, _ = column_stats(big, "ols")
    _, std_small, _ = column_stats(small, "ols")
    ratio = std_big / std_small
    ok = bool(np.all((ratio >= 0.4) & (ratio <= 0.72)))
    report_line(
        9, ok,
        f"ols std ratio 512^2/256^2 (box {{2,3}}) = {np.round(ratio, 3)} in [0.4, 0.72]",
    )


def test_criterion_10_normality(exp_05):
    _, _, est_ts = column_stats(exp_05, "two_step")
    _, _, est_o = column_stats(exp_05, "ols")
    p_ts = stats.normaltest(est_ts[:, 0]).pvalue
    p_o = stats.normaltest(est_o[:, 0]).pvalue
    ok = bool(p_ts >= 0.01 and p_o >= 0.01)
    report_line(
        10, ok,
        f"skew+kurtosis normality of axis-1 estimates over {est_ts.shape[0]} reps: "
        f"p(two_step)={p_ts:.3f}, p(ols)={p_o:.3f} >= 0.01",
    )


def _model_for(depth, lag_cap, octaves, counts, hurst, filt):
    config = CovModelConfig(
        octaves=tuple(octaves), axis_counts=tuple(counts),
        cascade_depth=depth, lag_cap=lag_cap,
    )
    return model_covariance(hurst, config, filt)


def test_criterion_11_covariance_model_stability():
    # Default quadrature settings (depth 10, lag cap 128) against a finer
    # grid and a doubled cap; drift is measured against the largest entry.
    filt3 = daubechies_filter(3)
    octaves = octave_box((3, 3), (6, 6))
    counts = [
        tuple(available_count(512, j, filt3) for j in octave) for octave in octaves
    ]
    base = _model_for(10, 128, octaves, counts, (0.5, 0.5), filt3)
    deeper = _model_for(12, 128, octaves, counts, (0.5, 0.5), filt3)
    wider = _model_for(10, 256, octaves, counts, (0.5, 0.5), filt3)
    depth_drift = np.abs(deeper - base).max() / np.abs(base).max()
    lag_drift = np.abs(wider - base).max() / np.abs(base).max()

    # 1-d Brownian check against a Monte Carlo oracle for the diagonal.
    haar = daubechies_filter(1)
    octaves1 = [(3,), (4,), (5,)]
    counts1 = [(available_count(4096, j, haar),) for j in (3, 4, 5)]
    model = _model_for(10, 16, octaves1, counts1, (0.5,), haar)
    logvars = np.empty((2000, 3))
    for pair in range(1000):
        for side, field in enumerate(synth_fbs_pair((0.5,), (4097,), 1100 + pair)):
            system = build_system(field, haar, octaves1)
            logvars[2 * pair + side] = system.logvars
    mc_var = logvars.var(axis=0, ddof=1)
    diag_gap = np.abs(np.diag(model) / mc_var - 1.0).max()
    ok = depth_drift < 0.01 and lag_drift < 0.01 and diag_gap < 0.25
    report_line(
        11, ok,
        f"model drift: depth+2 {depth_drift:.2%}, lag x2 {lag_drift:.2%} (<1%); "
        f"Brownian diagonal vs MC within {diag_gap:.1%} (<25%)",
    )
