"""System dimensions and synthetic covariance model parameters."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SystemConfig:
    """Dimensions and transmit power of one downlink setup.

    M antennas at the base station, K single-antenna users, T_dl downlink
    pilots, and total transmit power P_dl on a linear scale.  T_dl < M is the
    interesting (incomplete-CSI) regime and the default in experiments.
    """

    M: int
    K: int
    T_dl: int
    P_dl: float

    def __post_init__(self) -> None:
        if self.M < 1 or self.K < 1 or self.T_dl < 1:
            raise ValueError("M, K and T_dl must be positive integers")
        if not self.P_dl > 0:
            raise ValueError("P_dl must be positive")


@dataclass(frozen=True)
class CovarianceModel:
    """Parametric generator for per-user spatial covariance matrices.

    kind is one of:
      * ``"exponential"``: |C(i, j)| = rho^|i-j| with a random per-user phase
        progression (users sit at distinct angles); rho in [0, 1).
      * ``"scaled_identity"``: sigma2 * I before trace normalization, i.e.
        the identity after it.
      * ``"random_psd"``: G G^H + loading * I with G an M x rank complex
        Gaussian matrix, drawn independently per user.

    All generated matrices are Hermitian PSD and trace-normalized to M so the
    average per-antenna gain is one.
    """

    kind: str
    rho: float = 0.0
    sigma2: float = 1.0
    rank: int = 1
    loading: float = 0.01
    seed: int = 0

    @classmethod
    def exponential(cls, rho: float, seed: int = 0) -> "CovarianceModel":
        return cls(kind="exponential", rho=rho, seed=seed)

    @classmethod
    def scaled_identity(cls, sigma2: float = 1.0, seed: int = 0) -> "CovarianceModel":
        return cls(kind="scaled_identity", sigma2=sigma2, seed=seed)

    @classmethod
    def random_psd(cls, rank: int, loading: float, seed: int = 0) -> "CovarianceModel":
        return cls(kind="random_psd", rank=rank, loading=loading, seed=seed)
