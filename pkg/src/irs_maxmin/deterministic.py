"""Deterministic equivalent of the optimal per-UE SINR.

Solves the coupled fixed point
    delta_k = (1/M) tr(R_k T_k),
    T_k = [ sum_{i != k} b_i R_i / (1 + b_i M delta_i)
          + kappa_bs sum_i (p_i/M) I o R_i + sigma^2 I ]^{-1},
    b_i = (1 + kappa_ue) p_i / M,
by damped Picard iteration, then maps to the asymptotic SINR
    gamma_bar_k = p_k delta_k / (1 + kappa_ue p_k delta_k).

The resolvent denominators carry the full effective per-UE signal
weight b_i M delta_i = (1+kappa_ue) p_i delta_i: the interference
covariances entering the random quadratic form are b_i R_i, so their
own deterministic quadratic forms (not bare delta_i) appear in the
standard-fixed-point denominators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ConvergenceError


@dataclass
class DEState:
    """Converged fixed point for one (power, phase) operating point."""

    delta: np.ndarray       # (K,) positive
    T: np.ndarray           # (K, M, M) per-UE resolvents
    gamma_bar: np.ndarray   # (K,) DE SINRs
    iterations: int
    residual: float


def _hpd_inverse(A: np.ndarray) -> np.ndarray:
    cho = cho_factor(A, lower=True)
    return cho_solve(cho, np.eye(A.shape[0], dtype=complex))


def _resolvents(R_agg, p, delta, kappa_ue, kappa_bs, sigma2, want_T):
    """One Picard sweep: per-UE traces (and optionally the T_k matrices).

    The K resolvents share one base matrix (full interference sum plus the
    receive-distortion diagonal and noise); UE k's own term is removed by
    a matrix-level downdate before each factorization.
    """
    K, M, _ = R_agg.shape
    b = p * (1.0 + kappa_ue) / M
    a = b / (1.0 + b * M * delta)
    base = np.tensordot(a, R_agg, axes=1)
    diag_hi = kappa_bs * np.einsum("k,kmm->m", p / M, R_agg).real
    base += np.diag(diag_hi + sigma2)

    delta_new = np.empty(K)
    T = np.empty((K, M, M), dtype=complex) if want_T else None
    for k in range(K):
        Ak = base - a[k] * R_agg[k]
        Tk = _hpd_inverse(Ak)
        delta_new[k] = np.einsum("ij,ji->", R_agg[k], Tk).real / M
        if want_T:
            T[k] = Tk
    return delta_new, T


def solve_de(stats, p, cfg, delta0=None) -> DEState:
    """Solve the DE fixed point for powers p at the statistics' phases.

    `delta0` warm-starts the iteration (defaults to 1/sigma^2).  Residual
    is the maximum relative change of delta between sweeps; damping kicks
    in only if the residual oscillates.
    """
    p = np.asarray(p, dtype=float)
    K = stats.K
    if np.any(p <= 0):
        raise ValueError("powers must be positive")
    delta = (np.full(K, 1.0 / cfg.sigma2) if delta0 is None
             else np.asarray(delta0, dtype=float).copy())

    residuals = []
    damping = 0.0
    for it in range(1, cfg.de_max_iter + 1):
        delta_new, _ = _resolvents(stats.R_agg, p, delta, cfg.kappa_ue,
                                   cfg.kappa_bs, cfg.sigma2, want_T=False)
        if np.any(delta_new <= 0):
            raise ConvergenceError("DE iteration produced nonpositive delta", residuals)
        res = float(np.max(np.abs(delta_new - delta) / delta))
        residuals.append(res)
        if damping > 0.0:
            delta = damping * delta + (1.0 - damping) * delta_new
        else:
            delta = delta_new
        if res <= cfg.de_tol:
            break
        if len(residuals) >= 3 and residuals[-1] > residuals[-2] > residuals[-3]:
            damping = 0.5
    else:
        raise ConvergenceError(
            f"DE fixed point did not reach tol {cfg.de_tol:g} in "
            f"{cfg.de_max_iter} iterations (residual {residuals[-1]:.3e})",
            residuals)

    _, T = _resolvents(stats.R_agg, p, delta, cfg.kappa_ue,
                       cfg.kappa_bs, cfg.sigma2, want_T=True)
    gamma_bar = p * delta / (1.0 + cfg.kappa_ue * p * delta)
    return DEState(delta=delta, T=T, gamma_bar=gamma_bar,
                   iterations=it, residual=residuals[-1])


def de_rate(state: DEState) -> np.ndarray:
    """Per-UE asymptotic rate log2(1 + gamma_bar)."""
    return np.log2(1.0 + state.gamma_bar)


def min_weighted_rate(state: DEState, eta) -> float:
    """Rate of the worst weighted SINR, log2(1 + min_k gamma_bar_k/eta_k)."""
    return float(np.log2(1.0 + np.min(state.gamma_bar / np.asarray(eta))))
