"""Hardware-impairment statistics.

Covers the IRS phase-noise side (characteristic function, effective IRS
correlation, aggregate covariance) and the additive transceiver
distortion covariances, in both instantaneous and statistical form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import i0e, i1e


@dataclass(frozen=True)
class PhaseNoiseModel:
    """Circular distribution of the per-element IRS phase errors."""

    kind: str = "von_mises"       # "von_mises" | "uniform"
    kappa_theta: float = math.inf

    def __post_init__(self):
        if self.kind not in ("von_mises", "uniform"):
            raise ValueError(f"unknown phase noise kind {self.kind!r}")
        if self.kind == "von_mises" and self.kappa_theta < 0:
            raise ValueError("kappa_theta must be >= 0")

    @classmethod
    def from_config(cls, cfg) -> "PhaseNoiseModel":
        return cls(kind=cfg.phase_noise, kappa_theta=cfg.kappa_theta)

    def characteristic_value(self) -> float:
        return characteristic_function(self)


def characteristic_function(model: PhaseNoiseModel) -> float:
    """E[exp(j*theta)] of the phase-error distribution, in [0, 1].

    Uniform errors average to 0; Von Mises gives the Bessel ratio
    I1(kappa)/I0(kappa), evaluated with exponentially scaled Bessel
    functions so large concentrations cannot overflow.
    """
    if model.kind == "uniform":
        return 0.0
    kappa = model.kappa_theta
    if math.isinf(kappa):
        return 1.0
    if kappa == 0.0:
        return 0.0
    return float(i1e(kappa) / i0e(kappa))


def effective_irs_correlation(R_irs: np.ndarray, m: float) -> np.ndarray:
    """Phase-noise-averaged IRS correlation m^2 * R + (1 - m^2) * I."""
    if not 0.0 <= m <= 1.0:
        raise ValueError(f"characteristic function must lie in [0, 1], got {m}")
    N = R_irs.shape[0]
    if m == 0.0:
        return np.eye(N, dtype=complex)
    if m == 1.0:
        return R_irs.copy()
    return m * m * R_irs + (1.0 - m * m) * np.eye(N)


def aggregate_covariance(stats, phases: np.ndarray, k: int) -> np.ndarray:
    """Aggregate covariance of UE k's composite channel at the given phases.

    R_k = beta_d * R_bs + beta_2 * (H1 Phi) R_tilde (H1 Phi)^H with
    Phi = alpha * diag(phases).  For m = 0 the effective correlation is
    the identity and the IRS term collapses to alpha^2 * H1 H1^H exactly,
    independent of the phases.
    """
    cfg = stats.cfg
    direct = stats.beta_d[k] * stats.R_bs[k]
    if stats.N == 0:
        return direct.copy()
    if stats.m_cf == 0.0:
        return direct + (cfg.alpha ** 2 * stats.beta_2[k]) * stats.H1H1H
    phases = np.asarray(phases, dtype=complex).reshape(stats.N)
    F = stats.H1 * (cfg.alpha * phases)[None, :]
    W = F @ stats.R_tilde[k]
    R = direct + stats.beta_2[k] * (W @ F.conj().T)
    return 0.5 * (R + R.conj().T)


def aggregate_covariances(stats, phases: np.ndarray) -> np.ndarray:
    """All K aggregate covariances, stacked (K, M, M)."""
    return np.stack([aggregate_covariance(stats, phases, k) for k in range(stats.K)])


@dataclass
class DistortionCovariances:
    """Transmit / receive additive-distortion covariances (both PSD)."""

    C_t: np.ndarray   # (M, M)
    C_r: np.ndarray   # (M, M), diagonal


def distortion_covariances(h: np.ndarray, p: np.ndarray,
                           kappa_ue: float, kappa_bs: float) -> DistortionCovariances:
    """Instantaneous distortion covariances from sampled channels.

    C_t = kappa_ue * sum_i (p_i/M) h_i h_i^H,
    C_r = kappa_bs * sum_i (p_i/M) I o h_i h_i^H (diagonal).
    """
    h = np.asarray(h)
    K, M = h.shape
    p = np.asarray(p, dtype=float)
    S = (h.T * (p / M)[None, :]) @ h.conj()
    C_t = kappa_ue * S
    C_r = kappa_bs * np.diag(np.diag(S).real).astype(complex)
    return DistortionCovariances(C_t=C_t, C_r=C_r)


def statistical_distortion_covariances(R_agg: np.ndarray, p: np.ndarray,
                                       kappa_ue: float, kappa_bs: float) -> DistortionCovariances:
    """Statistical counterparts with R_i in place of h_i h_i^H."""
    K, M, _ = R_agg.shape
    p = np.asarray(p, dtype=float)
    S = np.tensordot(p / M, R_agg, axes=1)
    C_t = kappa_ue * S
    C_r = kappa_bs * np.diag(np.diag(S).real).astype(complex)
    return DistortionCovariances(C_t=C_t, C_r=C_r)
