"""Experiment harness: single solves, sweeps, Monte Carlo validation,
gradient checks, and the flat-file outputs behind the CLI.

Each sweep writes one CSV (fixed column set, provenance header), one
gnuplot-style two-column plot-data file per curve, a rendered PNG figure,
and a JSON summary carrying powers, diagnostics, and timing.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, plotting
from .config import SystemConfig, db_to_linear
from .deterministic import solve_de
from .errors import ConfigurationError, ConvergenceError
from .impairments import PhaseNoiseModel
from .instantaneous import mc_rate
from .rbm import alternating_solve, grad_delta, grad_tau
from .scenario import build_statistics

SWEEP_AXES = ("N", "M", "p_max", "kappa", "kappa_theta")
MODES = ("run", "sweep", "validate", "gradcheck")

CSV_COLUMNS = ["sweep_value", "tau_bar", "min_rate", "mc_rate", "mc_stderr",
               "iters_outer", "iters_power", "iters_pga", "wall_ms"]


@dataclass
class ExperimentSpec:
    """One experiment: a base configuration plus sweep/validation choices."""

    cfg: SystemConfig
    mode: str = "run"
    axis: str | None = None
    values: list | None = None
    trials: int = 500
    outdir: Path = Path("results")
    threads: int = 1
    label: str = "experiment"

    def __post_init__(self):
        self.outdir = Path(self.outdir)
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.mode in ("sweep", "validate") and self.axis is not None:
            if self.axis not in SWEEP_AXES:
                raise ConfigurationError(f"unknown sweep axis {self.axis!r}")
            if not self.values:
                raise ConfigurationError("sweep requires a value list")
            if list(self.values) != sorted(self.values) or \
                    len(set(self.values)) != len(self.values):
                raise ConfigurationError("sweep values must be strictly increasing")
        if self.mode == "validate" and self.trials < 1:
            raise ConfigurationError("validate mode needs trials >= 1")


@dataclass
class ResultRow:
    """One solved operating point of a sweep."""

    sweep_value: float
    tau_bar: float = math.nan
    min_rate: float = math.nan
    mc_rate: float = math.nan
    mc_stderr: float = math.nan
    iters_outer: int = 0
    iters_power: int = 0
    iters_pga: int = 0
    wall_ms: float = math.nan
    p: list = field(default_factory=list)
    gamma_bar: list = field(default_factory=list)
    mc_sinr: list = field(default_factory=list)
    de_vs_mc: float = math.nan       # max per-UE relative SINR gap
    tau_history: list = field(default_factory=list)
    error: str | None = None


def apply_axis(cfg: SystemConfig, axis: str, value) -> SystemConfig:
    """Base configuration moved to one sweep point (p_max values are dB)."""
    if axis == "N":
        return cfg.replace(N=int(value))
    if axis == "M":
        return cfg.replace(M=int(value))
    if axis == "p_max":
        return cfg.replace(p_max=db_to_linear(float(value)))
    if axis == "kappa":
        return cfg.replace(kappa_bs=float(value), kappa_ue=float(value))
    if axis == "kappa_theta":
        return cfg.replace(kappa_theta=float(value), phase_noise="von_mises")
    raise ConfigurationError(f"unknown sweep axis {axis!r}")


def solve_point(cfg: SystemConfig, sweep_value: float = math.nan,
                validate: bool = False, trials: int = 500,
                workers: int = 1) -> ResultRow:
    """Build statistics, run the alternating solver, optionally validate."""
    t0 = time.perf_counter()
    row = ResultRow(sweep_value=sweep_value)
    try:
        stats = build_statistics(cfg)
        res = alternating_solve(stats, cfg)
        row.tau_bar = res.tau_bar
        row.min_rate = res.min_rate
        row.iters_outer = res.outer_iterations
        row.iters_power = res.power_iterations
        row.iters_pga = res.pga_steps
        row.p = [float(x) for x in res.p]
        row.gamma_bar = [float(x) for x in res.gamma_bar]
        if validate:
            model = PhaseNoiseModel.from_config(cfg)
            mc = mc_rate(stats.with_phases(res.phases), model, res.p, cfg,
                         trials=trials, workers=workers)
            worst = int(np.argmin(mc.rate))
            row.mc_rate = float(mc.rate[worst])
            row.mc_stderr = float(mc.rate_stderr[worst])
            row.mc_sinr = [float(x) for x in mc.sinr]
            row.de_vs_mc = float(np.max(np.abs(res.gamma_bar - mc.sinr) / mc.sinr))
    except ConvergenceError as exc:
        row.error = f"{type(exc).__name__}: {exc}"
    row.wall_ms = 1e3 * (time.perf_counter() - t0)
    return row


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else "nan"
    return str(value)


def provenance_lines(spec: ExperimentSpec) -> list[str]:
    cfg = spec.cfg
    return [
        f"# irs-maxmin v{__version__}",
        f"# config_hash: {cfg.digest()}",
        f"# seed: {cfg.seed}",
        "# tolerances: de_tol=%g power_tol=%g outer_tol=%g pga(mu0=%g shrink=%g "
        "c=%g mu_min=%g) polish=%s" % (
            cfg.de_tol, cfg.power_tol, cfg.outer_tol, cfg.pga_mu0,
            cfg.pga_shrink, cfg.pga_armijo_c, cfg.pga_mu_min, cfg.polish),
        f"# mode: {spec.mode} axis: {spec.axis} trials: {spec.trials}",
    ]


def write_csv(path: Path, rows: list[ResultRow], spec: ExperimentSpec):
    lines = provenance_lines(spec)
    lines.append(",".join(CSV_COLUMNS))
    for r in rows:
        lines.append(",".join(_format_cell(getattr(r, c)) for c in CSV_COLUMNS))
    path.write_text("\n".join(lines) + "\n")


def write_plot_data(path: Path, rows: list[ResultRow]):
    """Two-column (sweep value, min rate) text file, gnuplot-consumable."""
    lines = ["# sweep_value  min_rate"]
    for r in rows:
        lines.append(f"{_format_cell(r.sweep_value)}  {_format_cell(r.min_rate)}")
    path.write_text("\n".join(lines) + "\n")


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    rows: list[ResultRow]
    files: dict
    failed: int


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Execute a run/sweep/validate experiment and persist its outputs."""
    spec.outdir.mkdir(parents=True, exist_ok=True)
    validate = spec.mode == "validate"
    if spec.axis is not None:
        points = [(float(v), apply_axis(spec.cfg, spec.axis, v)) for v in spec.values]
    else:
        points = [(math.nan, spec.cfg)]

    def solve_one(item):
        value, cfg = item
        return solve_point(cfg, sweep_value=value, validate=validate,
                           trials=spec.trials, workers=1)

    if spec.threads > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            rows = list(pool.map(solve_one, points))
    else:
        rows = [solve_point(cfg, sweep_value=value, validate=validate,
                            trials=spec.trials, workers=spec.threads)
                for value, cfg in points]

    base = spec.outdir / spec.label
    files = {"csv": base.with_suffix(".csv"),
             "plot_data": base.with_suffix(".dat"),
             "figure": base.with_suffix(".png"),
             "summary": base.with_suffix(".json")}
    write_csv(files["csv"], rows, spec)
    write_plot_data(files["plot_data"], rows)
    if spec.axis is not None:
        plotting.save_sweep_figure(rows, spec.axis, files["figure"], title=spec.label)

    failed = sum(1 for r in rows if r.error is not None)
    summary = {
        "label": spec.label,
        "mode": spec.mode,
        "axis": spec.axis,
        "config_hash": spec.cfg.digest(),
        "seed": spec.cfg.seed,
        "failed_rows": failed,
        "rows": [
            {c: getattr(r, c) for c in CSV_COLUMNS}
            | {"p": r.p, "gamma_bar": r.gamma_bar, "mc_sinr": r.mc_sinr,
               "de_vs_mc": r.de_vs_mc, "error": r.error}
            for r in rows
        ],
    }
    files["summary"].write_text(json.dumps(summary, indent=2, default=str) + "\n")
    return ExperimentResult(spec=spec, rows=rows, files=files, failed=failed)


# ---------------------------------------------------------------------------
# gradient check

@dataclass
class GradcheckReport:
    max_rel_error: float
    worst_ue: int
    worst_element: int
    tolerance: float
    passed: bool
    zero_gradient: bool


def gradcheck(cfg: SystemConfig, step: float = 1e-6, tolerance: float = 1e-4,
              n_phase_draws: int = 2, _corrupt_scale: float = 1.0) -> GradcheckReport:
    """Analytic trace derivatives against central finite differences.

    Perturbs the real and imaginary parts of each phase entry by `step`
    around seeded random phase vectors and compares the Wirtinger
    combination with grad_tau for every UE.  `_corrupt_scale` deliberately
    mis-scales the analytic prefactor (negative-control test fixture).
    """
    cfg = cfg.replace(de_tol=min(cfg.de_tol, 1e-12))
    stats = build_statistics(cfg)
    p = np.full(cfg.K, cfg.M * cfg.p_max / float(np.sum(cfg.beta_w)))
    rng = np.random.default_rng([cfg.seed, 0x6C])

    worst = (0.0, 0, 0)
    all_zero = True
    for _ in range(n_phase_draws):
        s0 = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, cfg.N))
        stats0 = stats.with_phases(s0)
        de0 = solve_de(stats0, p, cfg)
        d_delta = grad_delta(stats0, de0, p)
        analytic = np.stack([
            _corrupt_scale * grad_tau(stats0, de0, p, k, d_delta)
            for k in range(cfg.K)])

        def weighted(s):
            de = solve_de(stats.with_phases(s), p, cfg, delta0=de0.delta)
            return de.gamma_bar / cfg.eta

        fd = np.zeros((cfg.K, cfg.N), dtype=complex)
        for n in range(cfg.N):
            e = np.zeros(cfg.N)
            e[n] = 1.0
            d_re = (weighted(s0 + step * e) - weighted(s0 - step * e)) / (2 * step)
            d_im = (weighted(s0 + 1j * step * e) - weighted(s0 - 1j * step * e)) / (2 * step)
            fd[:, n] = 0.5 * (d_re + 1j * d_im)

        if np.any(np.abs(fd) > 0) or np.any(np.abs(analytic) > 0):
            all_zero = False
            scale = np.maximum(np.abs(fd), 1e-12 * np.max(np.abs(fd)) + 1e-300)
            rel = np.abs(analytic - fd) / scale
            k_bad, n_bad = np.unravel_index(int(np.argmax(rel)), rel.shape)
            if rel[k_bad, n_bad] > worst[0]:
                worst = (float(rel[k_bad, n_bad]), int(k_bad), int(n_bad))

    return GradcheckReport(max_rel_error=worst[0], worst_ue=worst[1],
                           worst_element=worst[2], tolerance=tolerance,
                           passed=worst[0] <= tolerance, zero_gradient=all_zero)
