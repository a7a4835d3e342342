"""Stochastic iterative WMMSE with a closed-form precoder update.

The algorithm fixes a set of N channel samples drawn around the estimate,

    h_k^(n) = hhat_k + Cerr_k^(1/2) e_k^(n),     e_k^(n) ~ CN(0, I),

computes per-sample WMMSE statistics for the current (feasible) precoder,

    t_k = u_k |g_k|^2,   v_k = log2(u_k),
    f_k = u_k g_k^* h_k^(n),   Psi_k = t_k h_k^(n) h_k^(n)H,

averages them over the samples, and updates the precoder in closed form,

    P = (sum_j Psibar_j + (sum_j tbar_j / P_dl) I)^-1 Fbar,

avoiding the per-iteration Lagrangian line search of the classical method.
The line-search (bisection) solver is kept as ``bisection_precoder_oracle``
for cross-checking.  The monitored quantity is the sample-average sum rate of
the rescaled iterate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .awamse import AwamseOptions, AwamseReport, beta_scale, solve_awamse
from .config import SystemConfig
from .estimation import EstimationResult
from .rng import complex_normal, substream

LAMBDA_MAX = 1e12


@dataclass(frozen=True)
class SiwmmseOptions:
    N: int = 100
    max_iters: int = 100
    rel_tol: float = 1e-6
    seed: int = 0

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValueError("sample count N must be at least 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")


@dataclass
class SampleStats:
    """Sample averages of the per-realization WMMSE variables."""

    t_bar: np.ndarray    # (K,)
    v_bar: np.ndarray    # (K,)
    f_bar: np.ndarray    # (M, K), column k is fbar_k
    psi_bar: np.ndarray  # (K, M, M), Hermitian PSD
    u_bar: np.ndarray    # (K,)


def draw_error_samples(est: EstimationResult, N: int, seed: int) -> np.ndarray:
    """N channel realizations (N, M, K) drawn around the estimate.

    The matrix square root of Cerr_k uses a Hermitian eigendecomposition with
    negative eigenvalues clamped to zero.  Deterministic per seed.
    """
    rng = substream(seed, "error-samples")
    w, V = np.linalg.eigh(est.C_err)  # batched over users
    scale = np.sqrt(np.clip(w, 0.0, None))
    noise = complex_normal(rng, N, est.H_hat.shape[1], est.H_hat.shape[0])
    coeff = scale[None] * np.einsum("kml,nkm->nkl", V.conj(), noise)
    return est.H_hat[None, :, :] + np.einsum("kml,nkl->nmk", V, coeff)


def wmmse_filters(H: np.ndarray, P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-realization MMSE filters and weights for a fixed precoder.

    g_k = p_k^H h_k / T_k with T_k = sum_j |h_k^H p_j|^2 + 1 and
    u_k = (1 - |h_k^H p_k|^2 / T_k)^-1.
    """
    gains = H.conj().T @ P
    T = (np.abs(gains) ** 2).sum(axis=1) + 1.0
    direct = np.diagonal(gains)
    g = direct.conj() / T
    u = 1.0 / (1.0 - np.minimum(np.abs(direct) ** 2 / T, 1.0 - 1e-15))
    return g, u


def stats_from_filters(
    g: np.ndarray, u: np.ndarray, H: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(t, v, f, Psi) for one realization given its filters and weights."""
    t = u * np.abs(g) ** 2
    v = np.log2(u)
    f = H * (u * g.conj())
    psi = np.einsum("k,mk,lk->kml", t, H, H.conj())
    return t, v, f, psi


def per_sample_statistics(
    H_sample: np.ndarray, P: np.ndarray, config: SystemConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """All per-realization variables (t, v, f, Psi, u, g) for one sample."""
    g, u = wmmse_filters(H_sample, P)
    t, v, f, psi = stats_from_filters(g, u, H_sample)
    return t, v, f, psi, u, g


def average_sample_statistics(
    samples: np.ndarray, P: np.ndarray, config: SystemConfig
) -> SampleStats:
    """Average the per-sample variables over the whole fixed sample set."""
    gains = np.einsum("nmk,mj->nkj", samples.conj(), P)
    T = (np.abs(gains) ** 2).sum(axis=2) + 1.0          # (N, K)
    direct = np.einsum("nkk->nk", gains)
    g = direct.conj() / T
    u = 1.0 / (1.0 - np.minimum(np.abs(direct) ** 2 / T, 1.0 - 1e-15))
    t = u * np.abs(g) ** 2
    psi_bar = np.einsum("nk,nmk,nlk->kml", t, samples, samples.conj()) / samples.shape[0]
    f_bar = np.mean(samples * (u * g.conj())[:, None, :], axis=0)
    return SampleStats(
        t_bar=t.mean(axis=0),
        v_bar=np.log2(u).mean(axis=0),
        f_bar=f_bar,
        psi_bar=psi_bar,
        u_bar=u.mean(axis=0),
    )


def update_precoder_siwmmse(stats: SampleStats, config: SystemConfig) -> np.ndarray:
    """Closed-form update P = (sum_j Psibar_j + (sum_j tbar_j / P_dl) I)^-1 Fbar."""
    total_t = float(stats.t_bar.sum())
    if total_t <= 0:
        raise ValueError("degenerate sample statistics: all tbar_k are zero")
    system = stats.psi_bar.sum(axis=0) + (total_t / config.P_dl) * np.eye(config.M)
    try:
        return cho_solve(cho_factor(system, lower=True), stats.f_bar)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("singular SIWMMSE precoder system") from exc


def bisection_precoder_oracle(
    stats: SampleStats, config: SystemConfig, tol: float = 1e-10
) -> np.ndarray:
    """Classical constrained precoder update via a Lagrangian line search.

    Searches the multiplier lambda of the power constraint so that
    ||(sum_j Psibar_j + lambda I)^-1 Fbar||_F^2 = P_dl, returning the interior
    (lambda = 0) solution when it is already feasible.
    """
    S = stats.psi_bar.sum(axis=0)
    eye = np.eye(config.M)

    def solution(lam: float) -> np.ndarray:
        return np.linalg.solve(S + lam * eye, stats.f_bar)

    try:
        P0 = solution(0.0)
        if np.linalg.norm(P0) ** 2 <= config.P_dl:
            return P0
    except np.linalg.LinAlgError:
        pass  # singular at lambda = 0: the constraint must bind

    lo, hi = 0.0, 1.0
    while np.linalg.norm(solution(hi)) ** 2 > config.P_dl:
        hi *= 2.0
        if hi > LAMBDA_MAX:
            raise RuntimeError("bisection bracket for the power multiplier failed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        power = np.linalg.norm(solution(mid)) ** 2
        if abs(power - config.P_dl) <= tol * config.P_dl:
            return solution(mid)
        if power > config.P_dl:
            lo = mid
        else:
            hi = mid
    return solution(0.5 * (lo + hi))


def sample_average_rate(samples: np.ndarray, P: np.ndarray) -> float:
    """Sample-average approximation (1/N) sum_n sum_k R_k(H^(n), P)."""
    gains2 = np.abs(np.einsum("nmk,mj->nkj", samples.conj(), P)) ** 2
    signal = np.einsum("nkk->nk", gains2)
    interference = gains2.sum(axis=2) - signal
    return float(np.log2(1.0 + signal / (interference + 1.0)).sum(axis=1).mean())


def solve_siwmmse(
    est: EstimationResult,
    config: SystemConfig,
    init: np.ndarray,
    opts: SiwmmseOptions = SiwmmseOptions(),
) -> AwamseReport:
    """Run the accelerated SIWMMSE iteration on a frozen sample set.

    The N samples are drawn once up front and reused every iteration, so a
    given seed makes the whole solve reproducible.  Per-sample statistics are
    evaluated on the rescaled (feasible) copy of the running iterate; the
    report mirrors the AWAMSE one, with the sample-average rate as the trace.
    """
    t0 = time.perf_counter()
    samples = draw_error_samples(est, opts.N, opts.seed)
    P = np.array(init, dtype=complex, copy=True)
    trace = [sample_average_rate(samples, P)]
    best_val = trace[0]
    best_P = P.copy()
    degenerate = False
    iterations = 0

    for iterations in range(1, opts.max_iters + 1):
        if not np.any(np.abs(P) > 0):
            degenerate = True
            break
        P_feasible, _ = beta_scale(P, config)
        stats = average_sample_statistics(samples, P_feasible, config)
        try:
            P = update_precoder_siwmmse(stats, config)
        except (ValueError, np.linalg.LinAlgError):
            degenerate = True
            break
        P_next, _ = beta_scale(P, config)
        value = sample_average_rate(samples, P_next)
        trace.append(value)
        if value >= best_val:
            best_val = value
            best_P = P_next
        if abs(trace[-1] - trace[-2]) <= opts.rel_tol * max(1.0, abs(trace[-2])):
            break

    if degenerate and not np.any(np.abs(best_P) > 0):
        P_final = np.zeros_like(P)
    elif not np.any(np.abs(best_P) > 0):
        P_final = np.zeros_like(P)
        degenerate = True
    else:
        P_final, _ = beta_scale(best_P, config)

    return AwamseReport(
        P_final=P_final,
        iterations=iterations,
        bound_trace=np.asarray(trace),
        runtime_s=time.perf_counter() - t0,
        state_final=None,
        degenerate=degenerate,
    )


def solve_iwmmse_naive(
    H_assumed: np.ndarray,
    config: SystemConfig,
    init: np.ndarray,
    opts: AwamseOptions = AwamseOptions(),
) -> AwamseReport:
    """Standard IWMMSE that trusts ``H_assumed`` as the true channel.

    Structurally this is the AWAMSE machinery with all error covariances set
    to zero, in which case the monitored lower bound coincides with the
    instantaneous sum rate on ``H_assumed``.  Run it on the true channel to
    get the perfect-CSI reference curve.
    """
    return solve_awamse(EstimationResult.perfect(H_assumed), config, init, opts)
