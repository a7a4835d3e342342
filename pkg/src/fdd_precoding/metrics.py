"""Rates, the effective-SINR lower bound, average MSEs and the AWAMSE objective.

All rates are in bits per channel use (base-2 logs throughout).  The chain
that ties the pieces together, for a feasible precoder P:

    gk_mmse   = p_k^H hhat_k / T_k,
    T_k       = sum_j (|hhat_k^H p_j|^2 + p_j^H Cerr_k p_j) + 1,
    eps_k     = 1 - |hhat_k^H p_k|^2 / T_k        (MMSE of the data symbol),
    Rbar_k    = log2(1 + SINRbar_k) = -log2(eps_k),
    xi_k      = u_k * epsbar_k - log2(u_k),        with u_k = 1/eps_k,
    sum_k xi_k = K - sum_k Rbar_k.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .estimation import EstimationResult

# Guard for 1/eps weights on near-perfect single-user channels at huge power.
WEIGHT_EPS_FLOOR = 1e-15


@dataclass(frozen=True)
class RateReport:
    """Per-user rates (bpcu) and their sum."""

    per_user: np.ndarray
    sum: float


@dataclass
class SolverState:
    """Diagonal receive filters, weights and the scalar solver variables."""

    g: np.ndarray  # (K,) complex receive filters (diagonal of G)
    u: np.ndarray  # (K,) positive weights (diagonal of U)
    delta: float = 0.0
    beta: float = 1.0
    objective_trace: list[float] = field(default_factory=list)


def _cross_gains(H: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Matrix of h_k^H p_j values, row k, column j."""
    return H.conj().T @ P


def error_interference(est: EstimationResult, P: np.ndarray) -> np.ndarray:
    """Per-user estimation-error power sum_j p_j^H Cerr_k p_j."""
    return np.real(np.einsum("mj,kmn,nj->k", P.conj(), est.C_err, P))


def instantaneous_rates(H: np.ndarray, P: np.ndarray) -> RateReport:
    """R_k = log2(1 + |h_k^H p_k|^2 / (sum_{j != k} |h_k^H p_j|^2 + 1))."""
    gains = np.abs(_cross_gains(H, P)) ** 2
    signal = np.diagonal(gains).copy()
    interference = gains.sum(axis=1) - signal
    per_user = np.log2(1.0 + signal / (interference + 1.0))
    return RateReport(per_user=per_user, sum=float(per_user.sum()))


def effective_sinr(est: EstimationResult, P: np.ndarray) -> np.ndarray:
    """Training-aware SINR: error energy is charged as extra interference."""
    gains = np.abs(_cross_gains(est.H_hat, P)) ** 2
    signal = np.diagonal(gains).copy()
    interference = gains.sum(axis=1) - signal
    return signal / (error_interference(est, P) + interference + 1.0)


def sum_rate_lower_bound(est: EstimationResult, P: np.ndarray) -> RateReport:
    """log2(1 + effective SINR), a lower bound on each user's ergodic rate."""
    per_user = np.log2(1.0 + effective_sinr(est, P))
    return RateReport(per_user=per_user, sum=float(per_user.sum()))


def average_mse(g_k: complex, k: int, est: EstimationResult, P: np.ndarray) -> float:
    """Average (over the error distribution) MSE of user k's data symbol."""
    row = est.H_hat[:, k].conj() @ P  # hhat_k^H p_j for all j
    err = np.real(np.einsum("mj,mn,nj->", P.conj(), est.C_err[k], P))
    mag2 = float(np.abs(g_k) ** 2)
    return float(
        mag2 * np.sum(np.abs(row) ** 2)
        + mag2 * err
        - 2.0 * np.real(g_k * row[k])
        + mag2
        + 1.0
    )


def mmse_receive_filter(k: int, est: EstimationResult, P: np.ndarray) -> complex:
    """The scalar filter minimizing user k's average MSE."""
    row = est.H_hat[:, k].conj() @ P
    err = np.real(np.einsum("mj,mn,nj->", P.conj(), est.C_err[k], P))
    T_k = np.sum(np.abs(row) ** 2) + err + 1.0
    return complex(P[:, k].conj() @ est.H_hat[:, k] / T_k)


def mmse_filters(est: EstimationResult, P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All users' MMSE filters and the resulting MSEs eps_k = 1 - |.|^2/T_k."""
    gains = _cross_gains(est.H_hat, P)
    T = (np.abs(gains) ** 2).sum(axis=1) + error_interference(est, P) + 1.0
    direct = np.diagonal(gains)
    g = direct.conj() / T
    eps = 1.0 - np.abs(direct) ** 2 / T
    return g, eps


def mmse_weights(eps: np.ndarray) -> np.ndarray:
    """u_k = 1/eps_k with the floor guarding degenerate (near-zero-MSE) users."""
    return 1.0 / np.maximum(eps, WEIGHT_EPS_FLOOR)


def awamse_objective(state: SolverState, est: EstimationResult, P: np.ndarray) -> float:
    """Compact matrix-trace form of sum_k (u_k epsbar_k - log2 u_k).

        tr(U) - 2 Re tr(U G Hhat^H P) + tr(U G Hhat^H P P^H Hhat G*)
        + tr(P P^H Z) + tr(U G G*) - log2 det(U),
    with Z = sum_k u_k |g_k|^2 Cerr_k.
    """
    g, u = np.asarray(state.g), np.asarray(state.u)
    if np.any(u <= 0):
        raise ValueError("AWAMSE weights must be positive")
    gains = _cross_gains(est.H_hat, P)      # (K, K): hhat_k^H p_j
    w = u * np.abs(g) ** 2
    Z_term = float(w @ error_interference(est, P))  # tr(P P^H Z)
    lin = -2.0 * np.real(np.sum(u * g * np.diagonal(gains)))
    quad = float(w @ (np.abs(gains) ** 2).sum(axis=1))
    return float(u.sum() + lin + quad + Z_term + w.sum() - np.sum(np.log2(u)))
