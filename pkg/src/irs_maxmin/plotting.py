"""Figure rendering for the experiment harness (files only, Agg backend)."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_AXIS_LABELS = {
    "N": "IRS elements N",
    "M": "BS antennas M",
    "p_max": r"$p_\mathrm{max}$ [dB]",
    "kappa": r"$\kappa_\mathrm{BS}=\kappa_\mathrm{UE}$",
    "kappa_theta": r"$\kappa_{\tilde\theta}$",
}


def _style(ax):
    ax.grid(True, alpha=0.4)
    ax.tick_params(labelsize=9)


def save_sweep_figure(rows, axis: str, path, title: str = ""):
    """Min-rate curve over the sweep axis, with MC error bars when present."""
    xs = [r.sweep_value for r in rows]
    ys = [r.min_rate for r in rows]
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.plot(xs, ys, "o-", lw=1.4, ms=4, label="deterministic equivalent")
    mc = [(r.sweep_value, r.mc_rate, r.mc_stderr) for r in rows
          if not math.isnan(r.mc_rate)]
    if mc:
        ax.errorbar([v for v, _, _ in mc], [m for _, m, _ in mc],
                    yerr=[2 * s for _, _, s in mc], fmt="x", ms=6,
                    capsize=3, color="C3", ls="none", label="Monte Carlo (2 s.e.)")
        ax.legend(fontsize=8)
    ax.set_xlabel(_AXIS_LABELS.get(axis, axis), fontsize=10)
    ax.set_ylabel(r"min user rate [bit/s/Hz]", fontsize=10)
    if title:
        ax.set_title(title, fontsize=10)
    _style(ax)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_convergence_figure(tau_history, path, title: str = ""):
    """Objective trajectory of one alternating solve."""
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.plot(range(1, len(tau_history) + 1), tau_history, "-", lw=1.2)
    ax.set_xlabel("accepted step", fontsize=10)
    ax.set_ylabel(r"common weighted SINR $\bar\tau$", fontsize=10)
    if title:
        ax.set_title(title, fontsize=10)
    _style(ax)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
