"""Runtime-checkable convergence certificates for the reweighting loop.

All functions here are pure: they recompute certificate quantities from
beamformers, weights and traces, independent of how the iterates were
produced, so a persisted trace can be re-certified offline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CertificateParams:
    """Constants entering the residual and rate bounds."""

    kappa: float  # max over the rho group weights
    p: float
    beta: float

    def __post_init__(self):
        if self.kappa <= 0 or self.p <= 0 or self.beta <= 0:
            raise ValueError("certificate constants must be positive")

    @property
    def residual_coeff(self) -> float:
        """sqrt(beta^2 + 2*beta*kappa*p^2 + kappa^2*p^4)."""
        b, k, p = self.beta, self.kappa, self.p
        return np.sqrt(b * b + 2.0 * b * k * p * p + k * k * p ** 4)

    @property
    def rate_constant(self) -> float:
        """(2/beta) * (beta^2 + 2*beta*kappa*p^2 + kappa^2*p^4)."""
        return 2.0 / self.beta * self.residual_coeff ** 2


def group_norms(v: np.ndarray) -> np.ndarray:
    return np.linalg.norm(v, axis=-1)


def log_sum_objective(v: np.ndarray, rho: np.ndarray, p: float) -> float:
    """sum_g rho_g * log(1 + p ||v_g||)."""
    if p <= 0:
        raise ValueError("p must be positive")
    return float(np.sum(rho * np.log1p(p * group_norms(v))))


def surrogate_G(v: np.ndarray, weights: np.ndarray, v_prev: np.ndarray,
                beta: float) -> float:
    """sum_g w_g ||v_g|| + (beta/2) ||v - v_prev||^2, for feasible v."""
    norm_term = float(np.sum(weights * group_norms(v)))
    prox = 0.5 * beta * float(np.linalg.norm((v - v_prev).ravel()) ** 2)
    return norm_term + prox


def model_reduction(v_prev: np.ndarray, v_next: np.ndarray,
                    weights: np.ndarray, beta: float) -> float:
    """Surrogate decrease G(v_prev; v_prev) - G(v_next; v_prev)."""
    return (surrogate_G(v_prev, weights, v_prev, beta)
            - surrogate_G(v_next, weights, v_prev, beta))


def residual_bound(v_prev: np.ndarray, v_next: np.ndarray,
                   params: CertificateParams) -> float:
    """Certified upper bound on the stationarity residual after one step.

    Scales linearly with the iterate displacement; zero displacement
    certifies a first-order stationary point.
    """
    disp = float(np.linalg.norm((v_prev - v_next).ravel()))
    return params.residual_coeff * disp


@dataclass(frozen=True)
class RateCertificate:
    """Per-t comparison of the best squared residual bound against the
    theoretical C*(J0 - J_best)/t envelope."""

    running_min_sq: np.ndarray  # min over i <= t of residual_bound_i^2
    envelope: np.ndarray        # C * (J(v^0) - J_final) / t
    holds: bool

    @property
    def iterations(self) -> int:
        return len(self.running_min_sq)


def rate_certificate(trace, params: CertificateParams) -> RateCertificate:
    """Certify the ergodic 1/t decay of the squared residual bound.

    J(v*) is replaced by the run's final objective value, which only
    loosens the certified inequality.
    """
    bounds = np.asarray(trace.residual_bound, dtype=float)
    running_min_sq = np.minimum.accumulate(bounds ** 2)
    j0 = trace.omega[0]
    j_final = trace.omega[-1]
    t = np.arange(1, len(bounds) + 1, dtype=float)
    envelope = params.rate_constant * (j0 - j_final) / t
    holds = bool(np.all(running_min_sq <= envelope + 1e-12))
    return RateCertificate(running_min_sq=running_min_sq, envelope=envelope,
                           holds=holds)
