"""Deterministic channel statistics: path losses, correlations, LoS matrix.

Everything here is a pure function of the configuration (plus the angle
draw frozen from the scenario seed), so statistics can be shared
read-only across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import impairments
from .config import SystemConfig
from .errors import ConfigurationError


def attenuation_linear(c_db: float, nu: float, distance: float) -> float:
    """Linear path gain for the model beta[dB] = -(C + 10*nu*log10(d))."""
    if distance <= 0:
        raise ConfigurationError(f"distance must be positive, got {distance}")
    return 10.0 ** (-c_db / 10.0) * distance ** (-nu)


def path_losses(cfg: SystemConfig):
    """Linear path losses (beta_1, beta_2 per UE, beta_d per UE).

    BS-IRS uses the LoS constants (C1, nu1); IRS-UE and the direct BS-UE
    link use the NLoS constants (C2, nu2), the direct link carrying the
    additional penetration loss.
    """
    d_bs_irs = float(np.linalg.norm(cfg.irs_position - cfg.bs_position))
    beta_1 = attenuation_linear(cfg.pathloss_c1_db, cfg.pathloss_nu1, d_bs_irs)
    beta_2 = np.empty(cfg.K)
    beta_d = np.empty(cfg.K)
    pen = 10.0 ** (-cfg.penetration_loss_db / 10.0)
    for k in range(cfg.K):
        d_irs_ue = float(np.linalg.norm(cfg.ue_positions[k] - cfg.irs_position))
        d_bs_ue = float(np.linalg.norm(cfg.ue_positions[k] - cfg.bs_position))
        beta_2[k] = attenuation_linear(cfg.pathloss_c2_db, cfg.pathloss_nu2, d_irs_ue)
        beta_d[k] = pen * attenuation_linear(cfg.pathloss_c2_db, cfg.pathloss_nu2, d_bs_ue)
    return beta_1, beta_2, beta_d


def draw_los_angles(cfg: SystemConfig, rng=None):
    """Elevation/azimuth AoD pairs, frozen once per scenario seed.

    Index i runs over max(M, N): the first factor of the LoS phase uses
    the IRS-element index, the second the BS-antenna index with the
    mirrored angles theta2 = pi - theta1, psi2 = pi + psi1.
    """
    if rng is None:
        rng = np.random.default_rng([cfg.seed, 0xA27])
    n_angles = max(cfg.M, cfg.N)
    theta1 = rng.uniform(0.0, np.pi, n_angles)
    psi1 = rng.uniform(0.0, 2.0 * np.pi, n_angles)
    return theta1, psi1


def build_los_matrix(cfg: SystemConfig, angles) -> np.ndarray:
    """LoS BS-IRS matrix from per-element departure/arrival angles.

    Entry (m, n) = sqrt(beta_1) * exp(j*(2*pi/lambda) * (
        (m-1)*d_bs*sin(theta1[n])*sin(psi1[n])
      + (n-1)*d_irs*sin(theta2[m])*sin(psi2[m])))
    with theta2 = pi - theta1 and psi2 = pi + psi1.
    """
    theta1, psi1 = (np.asarray(a, dtype=float) for a in angles)
    if theta1.shape[0] < max(cfg.M, cfg.N) or psi1.shape[0] < max(cfg.M, cfg.N):
        raise ConfigurationError("need max(M, N) angle pairs")
    beta_1, _, _ = path_losses(cfg)
    if cfg.wavelength <= 0 or beta_1 < 0:
        raise ConfigurationError("invalid wavelength or path loss")

    theta2 = np.pi - theta1
    psi2 = np.pi + psi1
    m_idx = np.arange(cfg.M)[:, None]
    n_idx = np.arange(cfg.N)[None, :]
    wave = 2.0 * np.pi / cfg.wavelength
    phase = wave * (
        m_idx * cfg.d_bs * np.sin(theta1[None, : cfg.N]) * np.sin(psi1[None, : cfg.N])
        + n_idx * cfg.d_irs * np.sin(theta2[: cfg.M, None]) * np.sin(psi2[: cfg.M, None])
    )
    return np.sqrt(beta_1) * np.exp(1j * phase)


def _psd_repair(R: np.ndarray, trace_target: float) -> np.ndarray:
    """Symmetrize, clip negative eigenvalues, renormalize the trace."""
    R = 0.5 * (R + R.conj().T)
    w, V = np.linalg.eigh(R)
    if w.min() < -1e-8 * max(w.max(), 1.0):
        raise RuntimeError(f"correlation matrix far from PSD (min eig {w.min():.3e})")
    w = np.clip(w, 0.0, None)
    R = (V * w) @ V.conj().T
    R = 0.5 * (R + R.conj().T)
    tr = np.trace(R).real
    if tr <= 0:
        raise RuntimeError("correlation matrix has nonpositive trace")
    return R * (trace_target / tr)


def upa_positions(N: int, pitch: float) -> np.ndarray:
    """IRS element coordinates on a near-square planar grid (row-major)."""
    if N == 0:
        return np.zeros((0, 2))
    cols = int(np.ceil(np.sqrt(N)))
    idx = np.arange(N)
    return pitch * np.stack([idx % cols, idx // cols], axis=1).astype(float)


def irs_sinc_correlation(N: int, pitch: float, wavelength: float) -> np.ndarray:
    """Isotropic-scattering correlation sinc(2*d_mn/lambda) over the UPA."""
    pos = upa_positions(N, pitch)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    return np.sinc(2.0 * dist / wavelength)


def bs_exponential_correlation(M: int, rho: float) -> np.ndarray:
    """ULA exponential correlation rho^|m-n| (identity for rho = 0)."""
    idx = np.arange(M)
    return (rho ** np.abs(idx[:, None] - idx[None, :])).astype(float)


def build_correlation_matrices(cfg: SystemConfig):
    """Per-UE BS and IRS correlation matrices, trace-normalized to M and N."""
    R_bs = _psd_repair(bs_exponential_correlation(cfg.M, cfg.bs_corr_rho).astype(complex), cfg.M)
    if cfg.N > 0:
        if cfg.irs_correlated:
            R_irs = _psd_repair(irs_sinc_correlation(cfg.N, cfg.irs_element_dim,
                                                     cfg.wavelength).astype(complex), cfg.N)
        else:
            R_irs = np.eye(cfg.N, dtype=complex)
    else:
        R_irs = np.zeros((0, 0), dtype=complex)
    R_bs_list = np.broadcast_to(R_bs, (cfg.K, cfg.M, cfg.M)).copy()
    R_irs_list = np.broadcast_to(R_irs, (cfg.K, cfg.N, cfg.N)).copy()
    return R_bs_list, R_irs_list


def _psd_sqrt(R: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(R)
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.conj().T


@dataclass
class ChannelStatistics:
    """All deterministic statistics of one scenario at a given phase vector.

    `R_agg[k]` is the aggregate covariance of UE k's composite channel for
    the current `phases`; `with_phases` rebuilds only the phase-dependent
    pieces.  Arrays are treated as immutable once built.
    """

    cfg: SystemConfig
    H1: np.ndarray                 # (M, N) LoS BS-IRS matrix
    R_bs: np.ndarray               # (K, M, M)
    R_irs: np.ndarray              # (K, N, N)
    beta_1: float
    beta_2: np.ndarray             # (K,)
    beta_d: np.ndarray             # (K,)
    m_cf: float                    # phase-noise characteristic function
    phases: np.ndarray             # (N,) unit-modulus
    R_tilde: np.ndarray            # (K, N, N) effective IRS correlations
    R_agg: np.ndarray              # (K, M, M) aggregate covariances
    sqrt_R_bs: np.ndarray          # (K, M, M) PSD square roots
    sqrt_R_irs: np.ndarray         # (K, N, N)
    H1H1H: np.ndarray              # (M, M) H1 @ H1^H, for the m = 0 shortcut

    @property
    def M(self) -> int:
        return self.H1.shape[0]

    @property
    def N(self) -> int:
        return self.H1.shape[1]

    @property
    def K(self) -> int:
        return self.R_agg.shape[0]

    def with_phases(self, phases: np.ndarray) -> "ChannelStatistics":
        """Same scenario, new IRS phase vector (aggregate covariances rebuilt)."""
        phases = np.asarray(phases, dtype=complex).reshape(self.N)
        R_agg = impairments.aggregate_covariances(self, phases)
        return replace(self, phases=phases, R_agg=R_agg)


def build_statistics(cfg: SystemConfig, phases=None, angles=None) -> ChannelStatistics:
    """Assemble every deterministic statistic for a scenario.

    Angles default to the frozen per-seed draw; phases default to all-ones.
    """
    if angles is None:
        angles = draw_los_angles(cfg)
    H1 = build_los_matrix(cfg, angles)
    R_bs, R_irs = build_correlation_matrices(cfg)
    beta_1, beta_2, beta_d = path_losses(cfg)
    model = impairments.PhaseNoiseModel.from_config(cfg)
    m_cf = model.characteristic_value()
    R_tilde = np.stack([impairments.effective_irs_correlation(R_irs[k], m_cf)
                        for k in range(cfg.K)]) if cfg.N > 0 else R_irs.copy()
    if phases is None:
        phases = np.ones(cfg.N, dtype=complex)
    else:
        phases = np.asarray(phases, dtype=complex).reshape(cfg.N)

    stats = ChannelStatistics(
        cfg=cfg, H1=H1, R_bs=R_bs, R_irs=R_irs,
        beta_1=beta_1, beta_2=beta_2, beta_d=beta_d,
        m_cf=m_cf, phases=phases,
        R_tilde=R_tilde, R_agg=np.empty((cfg.K, cfg.M, cfg.M), dtype=complex),
        sqrt_R_bs=np.stack([_psd_sqrt(R_bs[k]) for k in range(cfg.K)]),
        sqrt_R_irs=(np.stack([_psd_sqrt(R_irs[k]) for k in range(cfg.K)])
                    if cfg.N > 0 else R_irs.copy()),
        H1H1H=H1 @ H1.conj().T,
    )
    stats.R_agg = impairments.aggregate_covariances(stats, phases)
    return stats
