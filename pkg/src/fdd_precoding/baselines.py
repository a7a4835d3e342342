"""Regularized MMSE transmit precoder, used as initializer and baseline.

    P = beta (Hhat Hhat^H + sum_k Cerr_k + (M / P_dl) I)^-1 Hhat,

with beta chosen so the power constraint holds with equality.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .config import SystemConfig
from .estimation import EstimationResult


def mmse_precoder(est: EstimationResult, config: SystemConfig) -> np.ndarray:
    """Feasible MMSE precoder with ||P||_F^2 = P_dl.

    A zero estimate makes the scaling degenerate; the zero precoder is
    returned in that case so Monte-Carlo sweeps never abort.
    """
    system = (
        est.H_hat @ est.H_hat.conj().T
        + est.C_err.sum(axis=0)
        + (config.M / config.P_dl) * np.eye(config.M)
    )
    P = cho_solve(cho_factor(system, lower=True), est.H_hat)
    power = np.linalg.norm(P) ** 2
    if power == 0:
        return np.zeros_like(P)
    return P * np.sqrt(config.P_dl / power)
