"""Instantaneous SINR, HI-aware LMMSE combining, and Monte Carlo rates.

This is the ground-truth oracle the deterministic equivalents are
validated against.  All solves go through Cholesky factorizations of the
Hermitian positive-definite interference-plus-noise matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .impairments import distortion_covariances
from .sampler import draw_sample, trial_rng


def _hi_matrix(sample, p, cfg):
    """sum_i (p_i/M) h_i h_i^H + C_t + C_r + sigma^2 I (full HI-aware matrix)."""
    h = sample.h
    M = h.shape[1]
    S = (h.T * (np.asarray(p, dtype=float) / M)[None, :]) @ h.conj()
    dist = distortion_covariances(h, p, cfg.kappa_ue, cfg.kappa_bs)
    return S + dist.C_t + dist.C_r + cfg.sigma2 * np.eye(M)


def instantaneous_sinr(sample, v: np.ndarray, p, cfg) -> np.ndarray:
    """Per-UE uplink SINR for combining vectors v (rows), any nonzero scale.

    gamma_k = (p_k/M) |v_k^H h_k|^2 /
              (v_k^H [sum_{i != k} (p_i/M) h_i h_i^H + C_t + C_r + sigma^2 I] v_k)
    """
    h = sample.h
    K, M = h.shape
    p = np.asarray(p, dtype=float)
    A = _hi_matrix(sample, p, cfg)
    gamma = np.empty(K)
    for k in range(K):
        vk = v[k]
        sig = (p[k] / M) * np.abs(vk.conj() @ h[k]) ** 2
        quad = np.real(vk.conj() @ (A @ vk)) - sig
        gamma[k] = sig / quad
    return gamma


def lmmse_receiver(sample, p, cfg) -> np.ndarray:
    """HI-aware LMMSE combining vectors, unit-norm rows (K, M)."""
    A = _hi_matrix(sample, p, cfg)
    cho = cho_factor(A, lower=True)
    v = cho_solve(cho, sample.h.T).T
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def optimal_sinr(sample, p, cfg) -> np.ndarray:
    """SINR achieved by the LMMSE receiver, via the matrix-inversion lemma.

    gamma_k = c_k q_k / (1 - c_k q_k) with q_k = h_k^H A^{-1} h_k and
    c_k = p_k/M, where A keeps every UE's distortion terms and only UE k's
    signal term is removed by the rank-one downdate.
    """
    h = sample.h
    K, M = h.shape
    p = np.asarray(p, dtype=float)
    A = _hi_matrix(sample, p, cfg)
    cho = cho_factor(A, lower=True)
    X = cho_solve(cho, h.T)                       # (M, K), columns A^{-1} h_k
    q = np.real(np.einsum("km,mk->k", h.conj(), X))
    c = p / M
    return c * q / (1.0 - c * q)


@dataclass
class MCResult:
    """Monte Carlo averages of the per-UE optimal SINR and rate."""

    rate: np.ndarray          # (K,) mean log2(1 + gamma)
    rate_stderr: np.ndarray   # (K,)
    sinr: np.ndarray          # (K,) mean gamma
    sinr_stderr: np.ndarray   # (K,)
    trials: int


def mc_rate(stats, noise_model, p, cfg, trials: int, seed: int | None = None,
            workers: int = 1) -> MCResult:
    """Average achievable rate over fresh channel draws.

    Each trial uses its own substream of (seed, trial) and lands in a
    preallocated slot, so the result is reproducible for any `workers`.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if seed is None:
        seed = cfg.seed
    K = stats.K
    gammas = np.empty((trials, K))

    def one_trial(t):
        sample = draw_sample(stats, noise_model, trial_rng(seed, t))
        gammas[t] = optimal_sinr(sample, p, cfg)

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(one_trial, range(trials)))
    else:
        for t in range(trials):
            one_trial(t)
    rates = np.log2(1.0 + gammas)
    denom = np.sqrt(trials)
    return MCResult(
        rate=rates.mean(axis=0),
        rate_stderr=rates.std(axis=0, ddof=1) / denom if trials > 1 else np.zeros(K),
        sinr=gammas.mean(axis=0),
        sinr_stderr=gammas.std(axis=0, ddof=1) / denom if trials > 1 else np.zeros(K),
        trials=trials,
    )
