"""Shared builders and independent oracles for the test suite.

The scalar-search oracle solves the power-constrained precoder subproblem
(with the common receive/transmit scaling that makes the constraint implicit)
by numerically minimizing the reduced objective over the Tikhonov shift of
the Lagrangian solution family, never using the closed-form shift under test.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize_scalar

from fdd_precoding import CovarianceModel, EstimationResult, SystemConfig
from fdd_precoding.channel import (
    Scenario,
    build_covariances,
    build_pilot_matrix,
    observe_downlink,
    sample_channel,
)
from fdd_precoding.estimation import lmmse_estimate
from fdd_precoding.siwmmse import SampleStats


def crandn(rng: np.random.Generator, *shape: int) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_psd(rng: np.random.Generator, M: int, trace: float | None = None) -> np.ndarray:
    G = crandn(rng, M, M)
    C = G @ G.conj().T
    if trace is not None:
        C *= trace / np.real(np.trace(C))
    return 0.5 * (C + C.conj().T)


def synthetic_est(
    rng: np.random.Generator, M: int, K: int, err_scale: float = 0.3
) -> EstimationResult:
    """Random estimate/error-covariance pair, no channel pipeline involved."""
    C_err = np.stack([random_psd(rng, M, trace=err_scale * M) for _ in range(K)])
    return EstimationResult(H_hat=crandn(rng, M, K), C_err=C_err)


def feasible_precoder(rng: np.random.Generator, config: SystemConfig) -> np.ndarray:
    P = crandn(rng, config.M, config.K)
    return P * np.sqrt(config.P_dl / np.linalg.norm(P) ** 2)


def pipeline_instance(
    seed: int,
    M: int = 8,
    K: int = 4,
    T_dl: int = 2,
    p_db: float = 20.0,
    model: CovarianceModel | None = None,
) -> tuple[SystemConfig, Scenario, np.ndarray, EstimationResult]:
    """Covariances -> channel -> observations -> LMMSE estimate."""
    config = SystemConfig(M, K, T_dl, 10.0 ** (p_db / 10.0))
    model = model or CovarianceModel.exponential(0.9, seed=seed)
    scenario = build_covariances(model, config)
    H = sample_channel(scenario, seed + 1)
    pilots = build_pilot_matrix(config)
    obs = observe_downlink(pilots, H, config, seed + 2)
    return config, scenario, H, lmmse_estimate(scenario, pilots, obs, config)


# ---------------------------------------------------------------------------
# constrained-subproblem oracles


def awamse_subproblem(
    est: EstimationResult, g: np.ndarray, u: np.ndarray
) -> tuple[np.ndarray, np.ndarray, float]:
    """Quadratic/linear/shift data (X, R, c) of the AWAMSE precoder subproblem.

    X = Z + Hhat G* U G Hhat^H, R = Hhat G* U, c = tr(U G G*).
    """
    w = u * np.abs(g) ** 2
    X = np.einsum("k,kmn->mn", w, est.C_err) + (est.H_hat * w) @ est.H_hat.conj().T
    R = est.H_hat * (u * g.conj())
    return X, R, float(w.sum())


def siwmmse_subproblem(stats: SampleStats) -> tuple[np.ndarray, np.ndarray, float]:
    """(X, R, c) of the sample-average precoder subproblem."""
    return stats.psi_bar.sum(axis=0), stats.f_bar, float(stats.t_bar.sum())


def reduced_objective(
    X: np.ndarray, R: np.ndarray, c: float, P_dl: float, delta: float
) -> float:
    """Variable part of the power-implicit objective on the Lagrangian family
    Q(delta) = (X + delta I)^-1 R:

        tr(Q^H X Q) - 2 Re tr(R^H Q) + (c / P_dl) ||Q||_F^2.
    """
    Q = np.linalg.solve(X + delta * np.eye(X.shape[0]), R)
    return float(
        np.real(np.einsum("mj,mn,nj->", Q.conj(), X, Q))
        - 2.0 * np.real(np.einsum("mk,mk->", R.conj(), Q))
        + (c / P_dl) * np.linalg.norm(Q) ** 2
    )


def scalar_search_precoder(
    X: np.ndarray, R: np.ndarray, c: float, P_dl: float
) -> tuple[np.ndarray, float]:
    """Solve the constrained subproblem via numerical search over the shift.

    Coarse log-grid scan to bracket the minimum, Brent refinement, then the
    feasibility scaling.  Returns (feasible precoder, delta found).
    """
    scale = max(np.real(np.trace(X)) / X.shape[0], c / P_dl, 1e-300)
    grid = scale * np.logspace(-9.0, 9.0, 121)
    values = [reduced_objective(X, R, c, P_dl, d) for d in grid]
    i = int(np.argmin(values))
    i = min(max(i, 1), len(grid) - 2)

    res = minimize_scalar(
        lambda t: reduced_objective(X, R, c, P_dl, float(np.exp(t))),
        bracket=(np.log(grid[i - 1]), np.log(grid[i]), np.log(grid[i + 1])),
        method="brent",
        options={"xtol": 1e-14, "maxiter": 300},
    )
    delta = float(np.exp(res.x))
    Q = np.linalg.solve(X + delta * np.eye(X.shape[0]), R)
    return Q * np.sqrt(P_dl / np.linalg.norm(Q) ** 2), delta


def rel_diff(A: np.ndarray, B: np.ndarray) -> float:
    return float(np.linalg.norm(A - B) / np.linalg.norm(B))
