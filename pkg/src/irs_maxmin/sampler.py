"""Instantaneous channel realizations for Monte Carlo validation.

Draws correlated Rayleigh fading vectors and random IRS phase errors.
Trials use independent substreams derived from (master seed, trial index)
so results are reproducible regardless of execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .impairments import PhaseNoiseModel

_MC_STREAM = 0x5A11


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent generator for one Monte Carlo trial."""
    return np.random.default_rng([seed, _MC_STREAM, trial])


@dataclass
class ChannelSample:
    """One realization of every instantaneous channel."""

    h_d: np.ndarray           # (K, M) direct channels
    h_2: np.ndarray           # (K, N) IRS-UE channels
    phase_errors: np.ndarray  # (N,) angles in [-pi, pi)
    h: np.ndarray             # (K, M) composite channels


def _complex_gaussian(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def draw_phase_errors(model: PhaseNoiseModel, N: int, rng) -> np.ndarray:
    if model.kind == "uniform":
        return rng.uniform(-np.pi, np.pi, N)
    if math.isinf(model.kappa_theta):
        return np.zeros(N)
    if model.kappa_theta == 0.0:
        return rng.uniform(-np.pi, np.pi, N)
    return rng.vonmises(0.0, model.kappa_theta, N)


def draw_sample(stats, noise_model: PhaseNoiseModel, rng) -> ChannelSample:
    """Draw one composite-channel realization h_k = h_d + H1 Phi Phi~ h_2."""
    cfg = stats.cfg
    K, M, N = stats.K, stats.M, stats.N
    z_d = _complex_gaussian(rng, (K, M))
    z_2 = _complex_gaussian(rng, (K, N))
    theta = draw_phase_errors(noise_model, N, rng)

    h_d = np.sqrt(stats.beta_d)[:, None] * np.einsum("kij,kj->ki", stats.sqrt_R_bs, z_d)
    if N > 0:
        h_2 = np.sqrt(stats.beta_2)[:, None] * np.einsum("kij,kj->ki", stats.sqrt_R_irs, z_2)
        reflect = cfg.alpha * stats.phases * np.exp(1j * theta)     # diag(Phi Phi~)
        h = h_d + (h_2 * reflect[None, :]) @ stats.H1.T
    else:
        h_2 = z_2
        h = h_d.copy()
    return ChannelSample(h_d=h_d, h_2=h_2, phase_errors=theta, h=h)
