"""LMMSE channel estimation and its closed-form error covariance.

For user k with prior covariance C_k and observation y_k = Phi^H h_k + z_k,

    hhat_k  = C_k Phi (Phi^H C_k Phi + sigma^2 I)^-1 y_k,
    Cerr_k  = C_k - C_k Phi (Phi^H C_k Phi + sigma^2 I)^-1 Phi^H C_k,

with sigma^2 = 1/P_dl matching the normalized training noise.  By the
orthogonality principle the error h_k - hhat_k is uncorrelated with hhat_k,
which is what the downstream SINR bound relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .channel import Scenario
from .config import SystemConfig


@dataclass(frozen=True)
class EstimationResult:
    """Per-user channel estimates and error covariances."""

    H_hat: np.ndarray  # (M, K), column k is hhat_k
    C_err: np.ndarray  # (K, M, M), Hermitian PSD

    @classmethod
    def perfect(cls, H: np.ndarray) -> "EstimationResult":
        """Error-free CSI: estimates equal the true channels."""
        M, K = H.shape
        return cls(H_hat=H.copy(), C_err=np.zeros((K, M, M), dtype=complex))


def _gram_solve(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve the Hermitian system A X = B, adding a small jitter if the
    factorization fails on a rank-deficient prior."""
    try:
        return cho_solve(cho_factor(A, lower=True), B)
    except np.linalg.LinAlgError:
        jitter = 1e-12 * np.real(np.trace(A)) / A.shape[0]
        if jitter <= 0:
            raise np.linalg.LinAlgError(
                "numerical singularity: zero observation Gram matrix with no noise"
            )
        return cho_solve(cho_factor(A + jitter * np.eye(A.shape[0]), lower=True), B)


def error_covariance(
    C: np.ndarray,
    pilots: np.ndarray,
    config: SystemConfig,
    noiseless: bool = False,
) -> np.ndarray:
    """Posterior error covariance of the LMMSE estimate; independent of y."""
    sigma2 = 0.0 if noiseless else 1.0 / config.P_dl
    A = pilots.conj().T @ C @ pilots + sigma2 * np.eye(pilots.shape[1])
    CPhi = C @ pilots
    Cerr = C - CPhi @ _gram_solve(A, CPhi.conj().T)
    return 0.5 * (Cerr + Cerr.conj().T)


def lmmse_estimate(
    scenario: Scenario,
    pilots: np.ndarray,
    obs: np.ndarray,
    config: SystemConfig,
    noiseless: bool = False,
) -> EstimationResult:
    """Estimate all users' channels from their training observations.

    Users are processed independently (observations are fed back
    interference-free).
    """
    M, K = config.M, config.K
    sigma2 = 0.0 if noiseless else 1.0 / config.P_dl
    H_hat = np.empty((M, K), dtype=complex)
    C_err = np.empty((K, M, M), dtype=complex)
    eye = np.eye(pilots.shape[1])
    for k in range(K):
        C = scenario.covariances[k]
        A = pilots.conj().T @ C @ pilots + sigma2 * eye
        CPhi = C @ pilots
        H_hat[:, k] = CPhi @ _gram_solve(A, obs[:, k])
        Cerr = C - CPhi @ _gram_solve(A, CPhi.conj().T)
        C_err[k] = 0.5 * (Cerr + Cerr.conj().T)
    return EstimationResult(H_hat=H_hat, C_err=C_err)
