"""Synthetic channel statistics, channel realizations, pilots and observations.

Channels are zero-mean circularly-symmetric complex Gaussian, h_k ~ CN(0, C_k).
During training, user k observes y_k = Phi^H h_k + z_k with normalized noise
z_k ~ CN(0, (1/P_dl) I) and Phi the M x T_dl pilot matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .config import CovarianceModel, SystemConfig
from .rng import complex_normal, substream


@dataclass(frozen=True)
class Scenario:
    """One setup: system dimensions plus the K per-user covariance matrices."""

    config: SystemConfig
    covariances: np.ndarray  # (K, M, M), Hermitian PSD, trace M each


def hermitian_sqrt(C: np.ndarray) -> np.ndarray:
    """Hermitian square root with negative eigenvalues clamped to zero."""
    w, V = np.linalg.eigh(C)
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.conj().T


def build_covariances(model: CovarianceModel, config: SystemConfig) -> Scenario:
    """Generate K trace-M Hermitian PSD covariance matrices, one per user.

    Deterministic for a fixed model seed.  Invalid model parameters raise
    ValueError.
    """
    M, K = config.M, config.K
    rng = substream(model.seed, "covariances")

    if model.kind == "exponential":
        if not 0.0 <= model.rho < 1.0:
            raise ValueError(f"exponential correlation needs 0 <= rho < 1, got {model.rho}")
        base = toeplitz(model.rho ** np.arange(M)).astype(complex)
        thetas = rng.uniform(0.0, 2.0 * np.pi, size=K)
        cov = np.empty((K, M, M), dtype=complex)
        for k in range(K):
            ramp = np.exp(1j * np.arange(M) * thetas[k])
            cov[k] = base * np.outer(ramp, ramp.conj())
    elif model.kind == "scaled_identity":
        if not model.sigma2 > 0:
            raise ValueError(f"scaled_identity needs sigma2 > 0, got {model.sigma2}")
        cov = np.broadcast_to(model.sigma2 * np.eye(M, dtype=complex), (K, M, M)).copy()
    elif model.kind == "random_psd":
        if not 1 <= model.rank <= M:
            raise ValueError(f"random_psd rank must be in [1, M], got {model.rank}")
        if not model.loading > 0:
            raise ValueError(f"random_psd loading must be positive, got {model.loading}")
        cov = np.empty((K, M, M), dtype=complex)
        for k in range(K):
            G = complex_normal(rng, M, model.rank)
            cov[k] = G @ G.conj().T + model.loading * np.eye(M)
    else:
        raise ValueError(f"unknown covariance model kind: {model.kind!r}")

    for k in range(K):
        cov[k] = 0.5 * (cov[k] + cov[k].conj().T)
        cov[k] *= M / np.real(np.trace(cov[k]))
    cov.flags.writeable = False
    return Scenario(config=config, covariances=cov)


def sample_channel(scenario: Scenario, seed: int) -> np.ndarray:
    """Draw one channel matrix H (M x K) with column k ~ CN(0, C_k).

    Deterministic per seed; users are independent.
    """
    config = scenario.config
    rng = substream(seed, "channels")
    w, V = np.linalg.eigh(scenario.covariances)  # batched over users
    scale = np.sqrt(np.clip(w, 0.0, None))
    noise = complex_normal(rng, config.K, config.M)
    coeff = scale * np.einsum("kml,km->kl", V.conj(), noise)
    return np.einsum("kml,kl->mk", V, coeff)


def build_pilot_matrix(config: SystemConfig) -> np.ndarray:
    """First T_dl columns of the unitary M x M DFT matrix.

    Columns have unit norm and are mutually orthogonal.  Requires T_dl <= M.
    """
    if config.T_dl > config.M:
        raise ValueError(
            f"unsupported configuration: T_dl={config.T_dl} pilots exceed M={config.M} antennas"
        )
    dft = np.fft.fft(np.eye(config.M)) / np.sqrt(config.M)
    return dft[:, : config.T_dl]


def observe_downlink(
    pilots: np.ndarray,
    H: np.ndarray,
    config: SystemConfig,
    seed: int,
    noiseless: bool = False,
) -> np.ndarray:
    """Training observations Y (T_dl x K): column k is Phi^H h_k + z_k.

    Noise is CN(0, (1/P_dl) I) per user; ``noiseless`` gives the infinite-power
    limit Y = Phi^H H exactly.  Deterministic per seed, and the same seed
    reuses the same underlying noise across different P_dl values (only the
    1/sqrt(P_dl) scale changes).
    """
    Y = pilots.conj().T @ H
    if not noiseless:
        rng = substream(seed, "training-noise")
        Y = Y + complex_normal(rng, config.T_dl, config.K) / np.sqrt(config.P_dl)
    return Y
