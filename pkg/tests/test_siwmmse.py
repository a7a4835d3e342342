import numpy as np
import pytest

from fdd_precoding import (
    AwamseOptions,
    EstimationResult,
    SiwmmseOptions,
    SystemConfig,
    beta_scale,
    bisection_precoder_oracle,
    draw_error_samples,
    instantaneous_rates,
    mmse_precoder,
    per_sample_statistics,
    solve_awamse,
    solve_iwmmse_naive,
    solve_siwmmse,
    update_precoder_siwmmse,
    update_precoder_unconstrained,
    update_receive_filters,
    update_weights,
)
from fdd_precoding.siwmmse import (
    SampleStats,
    average_sample_statistics,
    sample_average_rate,
    stats_from_filters,
    wmmse_filters,
)

from helpers import (
    crandn,
    feasible_precoder,
    pipeline_instance,
    rel_diff,
    scalar_search_precoder,
    siwmmse_subproblem,
    synthetic_est,
)


def test_samples_collapse_with_zero_error():
    rng = np.random.default_rng(0)
    est = EstimationResult.perfect(crandn(rng, 4, 2))
    samples = draw_error_samples(est, 7, seed=3)
    for n in range(7):
        np.testing.assert_array_equal(samples[n], est.H_hat)


def test_sample_error_covariance_monte_carlo():
    rng = np.random.default_rng(1)
    est = synthetic_est(rng, 4, 2)
    samples = draw_error_samples(est, 100_000, seed=5)
    err = samples - est.H_hat[None]
    for k in range(2):
        emp = np.einsum("nm,nl->ml", err[:, :, k], err[:, :, k].conj()) / samples.shape[0]
        assert rel_diff(emp, est.C_err[k]) <= 0.05


def test_sample_mean_scalar():
    est = EstimationResult(
        H_hat=np.array([[1.0 + 0j]]), C_err=np.array([[[4.0 + 0j]]])
    )
    samples = draw_error_samples(est, 50_000, seed=9)
    mean = samples.mean()
    # samples are 1 + 2*e with e ~ CN(0, 1): three-sigma band on the mean
    assert abs(mean - 1.0) <= 3 * 2.0 / np.sqrt(50_000)


def test_samples_deterministic_per_seed():
    est = synthetic_est(np.random.default_rng(2), 4, 3)
    np.testing.assert_array_equal(
        draw_error_samples(est, 10, seed=4), draw_error_samples(est, 10, seed=4)
    )


def test_stats_from_filters_unit_case():
    t, v, f, psi = stats_from_filters(
        np.array([1.0 + 0j]), np.array([1.0]), np.array([[1.0 + 0j]])
    )
    np.testing.assert_allclose(t, [1.0])
    np.testing.assert_allclose(v, [0.0])
    np.testing.assert_allclose(f, [[1.0]])
    np.testing.assert_allclose(psi, [[[1.0]]])


def test_per_sample_statistics_zero_channel():
    config = SystemConfig(3, 2, 2, 1.0)
    H = np.zeros((3, 2), dtype=complex)
    P = crandn(np.random.default_rng(3), 3, 2)
    t, v, f, psi, u, g = per_sample_statistics(H, P, config)
    np.testing.assert_array_equal(g, np.zeros(2))
    np.testing.assert_allclose(u, np.ones(2))
    np.testing.assert_array_equal(t, np.zeros(2))
    np.testing.assert_array_equal(v, np.zeros(2))
    np.testing.assert_array_equal(f, np.zeros((3, 2)))
    np.testing.assert_array_equal(psi, np.zeros((2, 3, 3)))


def test_psi_trace_identity():
    rng = np.random.default_rng(4)
    config = SystemConfig(5, 3, 2, 10.0)
    H = crandn(rng, 5, 3)
    P = crandn(rng, 5, 3)
    t, _, _, psi, _, _ = per_sample_statistics(H, P, config)
    for k in range(3):
        assert np.real(np.trace(psi[k])) == pytest.approx(
            t[k] * np.linalg.norm(H[:, k]) ** 2, rel=1e-12
        )


def test_precoder_update_scalar():
    stats = SampleStats(
        t_bar=np.array([1.0]),
        v_bar=np.array([0.0]),
        f_bar=np.array([[1.0 + 0j]]),
        psi_bar=np.array([[[1.0 + 0j]]]),
        u_bar=np.array([1.0]),
    )
    config = SystemConfig(1, 1, 1, 1.0)
    np.testing.assert_allclose(update_precoder_siwmmse(stats, config), [[0.5]])


def test_precoder_update_rejects_all_zero_stats():
    stats = SampleStats(
        t_bar=np.zeros(2),
        v_bar=np.zeros(2),
        f_bar=np.zeros((3, 2), complex),
        psi_bar=np.zeros((2, 3, 3), complex),
        u_bar=np.ones(2),
    )
    with pytest.raises(ValueError):
        update_precoder_siwmmse(stats, SystemConfig(3, 2, 2, 1.0))


def test_update_collapses_to_naive_with_zero_error():
    # With Cerr = 0 every sample equals Hhat, and the SIWMMSE update at a
    # feasible precoder equals the scaled-formulation precoder update.
    rng = np.random.default_rng(5)
    config = SystemConfig(6, 3, 2, 10.0)
    est = EstimationResult.perfect(crandn(rng, 6, 3))
    P = feasible_precoder(rng, config)
    samples = draw_error_samples(est, 4, seed=1)
    stats = average_sample_statistics(samples, P, config)
    P_siw = update_precoder_siwmmse(stats, config)
    g = update_receive_filters(est, P, config)
    u = update_weights(est, P, config)
    P_naive = update_precoder_unconstrained(est, g, u, config)
    np.testing.assert_allclose(P_siw, P_naive, atol=1e-12)


def test_precoder_update_matches_scalar_search_oracle():
    rng = np.random.default_rng(6)
    config = SystemConfig(8, 4, 2, 10.0)
    for _ in range(5):
        est = synthetic_est(rng, 8, 4)
        P0 = feasible_precoder(rng, config)
        samples = draw_error_samples(est, 40, seed=int(rng.integers(1 << 30)))
        stats = average_sample_statistics(samples, P0, config)
        closed, _ = beta_scale(update_precoder_siwmmse(stats, config), config)
        X, R, c = siwmmse_subproblem(stats)
        oracle, _ = scalar_search_precoder(X, R, c, config.P_dl)
        assert rel_diff(closed, oracle) <= 1e-6


def test_bisection_oracle_interior_solution():
    # Huge power budget: the unconstrained minimizer is feasible, lambda = 0.
    rng = np.random.default_rng(7)
    config = SystemConfig(4, 2, 2, 1e9)
    est = synthetic_est(rng, 4, 2)
    samples = draw_error_samples(est, 20, seed=2)
    stats = average_sample_statistics(samples, feasible_precoder(rng, config), config)
    P = bisection_precoder_oracle(stats, config)
    S = stats.psi_bar.sum(axis=0)
    np.testing.assert_allclose(S @ P, stats.f_bar, atol=1e-8)
    assert np.linalg.norm(P) ** 2 <= config.P_dl


def test_bisection_oracle_scalar_binding_case():
    # S = s, fbar = f: lambda solves |f/(s+lambda)|^2 = P_dl in closed form.
    s, f, P_dl = 2.0, 3.0, 1.0
    stats = SampleStats(
        t_bar=np.array([1.0]),
        v_bar=np.array([0.0]),
        f_bar=np.array([[f + 0j]]),
        psi_bar=np.array([[[s + 0j]]]),
        u_bar=np.array([1.0]),
    )
    config = SystemConfig(1, 1, 1, P_dl)
    P = bisection_precoder_oracle(stats, config, tol=1e-12)
    lam_expected = f / np.sqrt(P_dl) - s
    np.testing.assert_allclose(P, [[f / (s + lam_expected)]], rtol=1e-9)
    assert np.linalg.norm(P) ** 2 == pytest.approx(P_dl, rel=1e-9)


def test_bisection_oracle_agrees_with_closed_form_at_fixed_point():
    # At a converged iterate the closed-form update is automatically
    # power-tight and coincides with the classical line-search solution.
    config, _, _, est = pipeline_instance(11, M=6, K=3, T_dl=2, p_db=15.0)
    opts = SiwmmseOptions(N=30, max_iters=4000, rel_tol=1e-14, seed=3)
    report = solve_siwmmse(est, config, mmse_precoder(est, config), opts)
    samples = draw_error_samples(est, opts.N, opts.seed)
    stats = average_sample_statistics(samples, report.P_final, config)
    closed_unscaled = update_precoder_siwmmse(stats, config)
    assert np.linalg.norm(closed_unscaled) ** 2 == pytest.approx(config.P_dl, rel=1e-5)
    closed, _ = beta_scale(closed_unscaled, config)
    oracle = bisection_precoder_oracle(stats, config, tol=1e-12)
    assert rel_diff(closed, oracle) <= 1e-6


def test_solver_trajectory_matches_naive_with_zero_error():
    rng = np.random.default_rng(8)
    config = SystemConfig(6, 3, 2, 10.0)
    est = EstimationResult.perfect(crandn(rng, 6, 3))
    init = mmse_precoder(est, config)
    for N in (1, 5):
        siw = solve_siwmmse(est, config, init, SiwmmseOptions(N=N, seed=4))
        naive = solve_iwmmse_naive(est.H_hat, config, init)
        np.testing.assert_allclose(siw.bound_trace, naive.bound_trace, atol=1e-9)
        np.testing.assert_allclose(siw.P_final, naive.P_final, atol=1e-9)


def test_monitored_rate_monotone_sweep():
    for seed in range(10):
        config, _, _, est = pipeline_instance(seed, M=8, K=4, T_dl=2, p_db=20.0)
        report = solve_siwmmse(
            est, config, mmse_precoder(est, config), SiwmmseOptions(N=50, seed=seed)
        )
        trace = report.bound_trace
        slack = 1e-9 * np.maximum(1.0, np.abs(trace[:-1]))
        assert np.all(np.diff(trace) >= -slack)


def test_sample_set_frozen_and_reproducible():
    config, _, _, est = pipeline_instance(13, M=6, K=3, T_dl=2, p_db=20.0)
    init = mmse_precoder(est, config)
    opts = SiwmmseOptions(N=25, seed=42)
    a = solve_siwmmse(est, config, init, opts)
    b = solve_siwmmse(est, config, init, opts)
    np.testing.assert_array_equal(a.P_final, b.P_final)
    np.testing.assert_array_equal(a.bound_trace, b.bound_trace)


def test_final_true_rate_variance_decreases_with_n():
    # SAA noise shrinks with the sample count: the spread of the final
    # true-channel sum rate across sample seeds decreases in N.
    variances = {}
    trials = 20
    seeds = range(5)
    for N in (10, 100, 1000):
        per_trial = []
        for trial in range(trials):
            config, _, H, est = pipeline_instance(100 + trial, M=6, K=3, T_dl=2, p_db=15.0)
            init = mmse_precoder(est, config)
            finals = [
                instantaneous_rates(
                    H,
                    solve_siwmmse(
                        est, config, init, SiwmmseOptions(N=N, seed=s, max_iters=50)
                    ).P_final,
                ).sum
                for s in seeds
            ]
            per_trial.append(np.var(finals))
        variances[N] = float(np.mean(per_trial))
    assert variances[10] >= variances[100] >= variances[1000]


def test_runtime_grows_with_sample_count():
    config, _, _, est = pipeline_instance(17, M=16, K=8, T_dl=4, p_db=30.0)
    init = mmse_precoder(est, config)

    def best_time(N: int) -> float:
        times = []
        for _ in range(3):
            # fixed iteration count so only the per-iteration cost differs
            rep = solve_siwmmse(
                est, config, init, SiwmmseOptions(N=N, max_iters=30, rel_tol=1e-30, seed=1)
            )
            times.append(rep.runtime_s)
        return min(times)

    assert best_time(200) >= best_time(50)


def test_naive_equals_awamse_with_zero_error_iterate_for_iterate():
    rng = np.random.default_rng(9)
    config = SystemConfig(6, 3, 2, 10.0)
    H = crandn(rng, 6, 3)
    est0 = EstimationResult.perfect(H)
    init = mmse_precoder(est0, config)
    a = solve_iwmmse_naive(H, config, init)
    b = solve_awamse(est0, config, init)
    np.testing.assert_array_equal(a.bound_trace, b.bound_trace)
    np.testing.assert_array_equal(a.P_final, b.P_final)


def test_naive_single_user_matched_filter():
    rng = np.random.default_rng(10)
    config = SystemConfig(5, 1, 2, 4.0)
    h = crandn(rng, 5, 1)
    report = solve_iwmmse_naive(
        h, config, feasible_precoder(rng, config), AwamseOptions(max_iters=300, rel_tol=1e-12)
    )
    p = report.P_final[:, 0]
    assert np.linalg.norm(p) ** 2 == pytest.approx(config.P_dl, rel=1e-9)
    alignment = np.abs(h[:, 0].conj() @ p) / (np.linalg.norm(h) * np.linalg.norm(p))
    assert alignment == pytest.approx(1.0, abs=1e-6)


def test_naive_on_true_channel_is_perfect_csi_reference():
    # est and true channel coincide, so all three sum-rate flavors agree.
    rng = np.random.default_rng(11)
    config = SystemConfig(6, 3, 2, 10.0)
    H = crandn(rng, 6, 3)
    report = solve_iwmmse_naive(H, config, mmse_precoder(EstimationResult.perfect(H), config))
    assert report.bound_trace[-1] == pytest.approx(
        instantaneous_rates(H, report.P_final).sum, abs=1e-9
    )


def test_monitored_quantity_is_sample_average_rate():
    config, _, _, est = pipeline_instance(19, M=6, K=3, T_dl=2, p_db=15.0)
    opts = SiwmmseOptions(N=20, seed=6)
    report = solve_siwmmse(est, config, mmse_precoder(est, config), opts)
    samples = draw_error_samples(est, opts.N, opts.seed)
    assert report.bound_trace[-1] == pytest.approx(
        sample_average_rate(samples, report.P_final), abs=1e-9
    )


def test_wmmse_filters_match_per_user_formula():
    rng = np.random.default_rng(12)
    H = crandn(rng, 5, 3)
    P = crandn(rng, 5, 3)
    g, u = wmmse_filters(H, P)
    gains = H.conj().T @ P
    for k in range(3):
        T_k = np.sum(np.abs(gains[k]) ** 2) + 1.0
        np.testing.assert_allclose(g[k], P[:, k].conj() @ H[:, k] / T_k)
        np.testing.assert_allclose(u[k], 1.0 / (1.0 - np.abs(gains[k, k]) ** 2 / T_k))


def test_options_validation():
    with pytest.raises(ValueError):
        SiwmmseOptions(N=0)
    with pytest.raises(ValueError):
        SiwmmseOptions(max_iters=0)
    with pytest.raises(ValueError):
        SiwmmseOptions(rel_tol=-1.0)
