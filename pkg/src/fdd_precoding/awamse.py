"""Closed-form alternating minimization of the augmented weighted average MSE.

Each outer iteration updates, in closed form,

    g_k = p_k^H hhat_k / Ttilde_k,
    u_k = (1 - |hhat_k^H p_k|^2 / Ttilde_k)^-1,
    P   = (Z + Hhat G* U G Hhat^H + delta I)^-1 Hhat G* U,

with Ttilde_k = sum_j (|hhat_k^H p_j|^2 + p_j^H Cerr_k p_j + ||p_j||^2 / P_dl),
Z = sum_k u_k |g_k|^2 Cerr_k and the analytically optimal Tikhonov shift
delta = tr(U G G*) / P_dl.  A common receive/transmit scaling makes the power
constraint implicit, so no per-iteration line search is needed; a single
rescale to ||P||_F^2 = P_dl is applied at the end.  The monitored sum-rate
lower bound is evaluated on a rescaled (feasible) copy of each iterate and is
non-decreasing across iterations.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .config import SystemConfig
from .estimation import EstimationResult
from .metrics import SolverState, awamse_objective, error_interference, sum_rate_lower_bound


@dataclass(frozen=True)
class AwamseOptions:
    max_iters: int = 100
    rel_tol: float = 1e-6
    record_trace: bool = True

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")


@dataclass
class AwamseReport:
    """Outcome of one solve: feasible precoder, traces and final state."""

    P_final: np.ndarray
    iterations: int
    bound_trace: np.ndarray
    runtime_s: float
    state_final: SolverState | None
    degenerate: bool = False


def _scaled_denominators(est: EstimationResult, P: np.ndarray, config: SystemConfig) -> np.ndarray:
    gains2 = np.abs(est.H_hat.conj().T @ P) ** 2
    return gains2.sum(axis=1) + error_interference(est, P) + np.sum(np.abs(P) ** 2) / config.P_dl


def update_receive_filters(
    est: EstimationResult, P: np.ndarray, config: SystemConfig
) -> np.ndarray:
    """Scaled-formulation receive filters; the noise term is ||P||_F^2 / P_dl.

    A zero precoder gives zero denominators; the division is guarded and the
    filters are zero there.
    """
    denom = _scaled_denominators(est, P, config)
    direct = np.einsum("mk,mk->k", est.H_hat.conj(), P)  # hhat_k^H p_k
    safe = np.where(denom > 0, denom, 1.0)
    return np.where(denom > 0, direct.conj() / safe, 0.0)


def update_weights(est: EstimationResult, P: np.ndarray, config: SystemConfig) -> np.ndarray:
    """Weights u_k = (1 - |hhat_k^H p_k|^2 / Ttilde_k)^-1, always >= 1."""
    denom = _scaled_denominators(est, P, config)
    direct2 = np.abs(np.einsum("mk,mk->k", est.H_hat.conj(), P)) ** 2
    ratio = np.where(denom > 0, direct2 / np.where(denom > 0, denom, 1.0), 0.0)
    # |hhat_k^H p_k|^2 < Ttilde_k holds analytically at finite power; the clamp
    # only absorbs floating-point roundoff.
    return 1.0 / (1.0 - np.minimum(ratio, 1.0 - 1e-15))


def delta_opt(u: np.ndarray, g: np.ndarray, config: SystemConfig) -> float:
    """Optimal regularizer tr(U G G*) / P_dl of the unconstrained problem."""
    return float(np.sum(u * np.abs(g) ** 2) / config.P_dl)


def update_precoder_unconstrained(
    est: EstimationResult, g: np.ndarray, u: np.ndarray, config: SystemConfig
) -> np.ndarray:
    """Solve (Z + Hhat G* U G Hhat^H + delta I) P = Hhat G* U for P.

    The system matrix is Hermitian positive definite whenever some g_k is
    nonzero; with all filters zero the right-hand side vanishes and the zero
    precoder is returned.
    """
    M = config.M
    w = u * np.abs(g) ** 2
    rhs = est.H_hat * (u * g.conj())
    if not np.any(w > 0):
        return np.zeros_like(rhs)
    Z = np.einsum("k,kmn->mn", w, est.C_err)
    system = Z + (est.H_hat * w) @ est.H_hat.conj().T
    delta = delta_opt(u, g, config)
    # Floor keeps the factorization well posed in pathological states.
    delta = max(delta, 1e-15 * np.real(np.trace(system)) / M)
    system += delta * np.eye(M)
    try:
        return cho_solve(cho_factor(system, lower=True), rhs)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            "singular precoder system in a degenerate solver state"
        ) from exc


def beta_scale(P: np.ndarray, config: SystemConfig) -> tuple[np.ndarray, float]:
    """Scale P to satisfy the power constraint with equality.

    Returns (beta * P, beta) with beta = sqrt(P_dl / ||P||_F^2).
    """
    power = np.linalg.norm(P) ** 2
    if power == 0:
        raise ValueError("cannot scale an all-zero precoder to the power constraint")
    beta = float(np.sqrt(config.P_dl / power))
    return beta * P, beta


def solve_awamse(
    est: EstimationResult,
    config: SystemConfig,
    init: np.ndarray,
    opts: AwamseOptions = AwamseOptions(),
) -> AwamseReport:
    """Alternate the three closed-form updates until the monitored sum-rate
    lower bound stalls, then rescale once.

    ``bound_trace[0]`` is the initializer's bound; one entry is appended per
    iteration, evaluated on a feasible (rescaled) copy of the running iterate.
    The best iterate seen is returned.  Degenerate states (all-zero estimates
    or filters) return the zero precoder with the ``degenerate`` flag instead
    of raising, so Monte-Carlo sweeps never abort.
    """
    t0 = time.perf_counter()
    P = np.array(init, dtype=complex, copy=True)
    trace = [sum_rate_lower_bound(est, P).sum]
    objective_trace: list[float] = []
    best_bound = trace[0]
    best_P = P.copy()
    best_beta = 1.0
    state = SolverState(g=np.zeros(config.K, complex), u=np.ones(config.K),
                        objective_trace=objective_trace)
    degenerate = False
    iterations = 0

    for iterations in range(1, opts.max_iters + 1):
        g = update_receive_filters(est, P, config)
        u = update_weights(est, P, config)
        if opts.record_trace:
            cur_power = np.linalg.norm(P) ** 2
            if cur_power > 0:
                b = np.sqrt(config.P_dl / cur_power)
                probe = SolverState(g=g / b, u=u)
                objective_trace.append(awamse_objective(probe, est, b * P))
        if not np.any(np.abs(g) > 0):
            degenerate = True
            P = np.zeros_like(P)
            trace.append(0.0)
            break
        state = SolverState(g=g, u=u, delta=delta_opt(u, g, config),
                            objective_trace=objective_trace)
        P = update_precoder_unconstrained(est, g, u, config)
        P_feasible, state.beta = beta_scale(P, config)
        bound = sum_rate_lower_bound(est, P_feasible).sum
        trace.append(bound)
        if bound >= best_bound:
            best_bound = bound
            best_P = P_feasible
            best_beta = state.beta
        if abs(trace[-1] - trace[-2]) <= opts.rel_tol * max(1.0, abs(trace[-2])):
            break

    if degenerate or not np.any(np.abs(best_P) > 0):
        P_final = np.zeros_like(P)
        degenerate = True
    else:
        P_final = best_P
        state.beta = best_beta

    return AwamseReport(
        P_final=P_final,
        iterations=iterations,
        bound_trace=np.asarray(trace if opts.record_trace else trace[-1:]),
        runtime_s=time.perf_counter() - t0,
        state_final=state,
        degenerate=degenerate,
    )
