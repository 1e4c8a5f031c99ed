"""Max-min weighted-SINR power allocation under a weighted sum constraint.

Alternates the DE update with the normalized fixed-point power map
    p_k <- eta_k (1 + kappa_ue p_k delta_k) / delta_k,
rescaled onto the budget surface (1/M) beta_w^T p = p_max, until all
weighted DE SINRs agree.  The common value is the max-min optimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .deterministic import DEState, solve_de
from .errors import ConvergenceError


@dataclass
class PowerSolution:
    """Equalized power allocation and its DE operating point."""

    p: np.ndarray            # (K,) positive, budget-saturating
    tau_bar: float           # common weighted DE SINR
    de: DEState
    iterations: int
    residual: float          # final weighted-SINR spread
    residual_history: list = field(default_factory=list)
    de_iterations: int = 0   # total inner DE sweeps


def uniform_power(cfg) -> np.ndarray:
    """Equal powers saturating the weighted budget."""
    return np.full(cfg.K, cfg.M * cfg.p_max / float(np.sum(cfg.beta_w)))


def budget_scale(p, cfg) -> float:
    return cfg.M * cfg.p_max / float(cfg.beta_w @ p)


def solve_power(stats, cfg, initial_p=None, delta0=None) -> PowerSolution:
    """Solve the joint (power, DE) fixed point at the statistics' phases.

    Convergence is declared on the weighted-SINR spread
    (max_k w_k - min_k w_k) / min_k w_k <= power_tol with w_k the weighted
    DE SINRs, so every |w_k - tau_bar| / tau_bar is within tolerance of
    the reported common value tau_bar = min_k w_k.  The budget holds
    exactly after every rescale.
    """
    p = (uniform_power(cfg) if initial_p is None
         else np.asarray(initial_p, dtype=float).copy())
    if np.any(p <= 0):
        raise ValueError("initial powers must be positive")
    p *= budget_scale(p, cfg)

    delta = delta0
    history = []
    de_iters = 0
    for it in range(1, cfg.power_max_iter + 1):
        de = solve_de(stats, p, cfg, delta0=delta)
        de_iters += de.iterations
        delta = de.delta
        if np.any(delta <= 0):
            raise ValueError("degenerate scenario: zero DE trace")
        weighted = de.gamma_bar / cfg.eta
        tau = float(weighted.min())
        spread = float((weighted.max() - tau) / tau)
        history.append(spread)
        if spread <= cfg.power_tol:
            return PowerSolution(p=p, tau_bar=tau, de=de,
                                 iterations=it, residual=spread,
                                 residual_history=history, de_iterations=de_iters)
        p = cfg.eta * (1.0 + cfg.kappa_ue * p * delta) / delta
        p *= budget_scale(p, cfg)

    raise ConvergenceError(
        f"power fixed point did not reach tol {cfg.power_tol:g} in "
        f"{cfg.power_max_iter} iterations (spread {history[-1]:.3e})",
        history)
