"""IRS phase optimization by projected gradient ascent on the DE SINR.

The ascent direction is the analytic Wirtinger gradient of the common
weighted DE SINR with respect to the conjugate phase variables.  The
per-UE trace derivatives are coupled through the resolvents, so each
gradient evaluation solves a K x K linear system shared by all N
right-hand sides.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .deterministic import DEState, solve_de
from .power import PowerSolution, solve_power


def _coupling_system(stats, de: DEState, p):
    """Shared pieces of every trace-derivative computation.

    Returns (X, tr_XR, B) with X_k = T_k R_k T_k, tr_XR[k, i] =
    tr(X_k R_i), and B the UE-coupling matrix of the implicit systems
    (I - B) d = c (zero diagonal).
    """
    cfg = stats.cfg
    K, M = stats.K, stats.M
    g = (1.0 + cfg.kappa_ue) * p * de.delta
    X = np.stack([de.T[k] @ stats.R_agg[k] @ de.T[k] for k in range(K)])
    tr_XR = np.einsum("kab,iba->ki", X, stats.R_agg).real
    B = ((1.0 + cfg.kappa_ue) * p[None, :]) ** 2 * tr_XR \
        / (M * M * (1.0 + g[None, :]) ** 2)
    np.fill_diagonal(B, 0.0)
    return X, tr_XR, B


def grad_delta(stats, de: DEState, p) -> np.ndarray:
    """Wirtinger derivatives d delta_k / d phi_n^*, shape (K, N).

    Assembles the explicit trace terms (LoS-bracket contractions of the
    phase derivative of each aggregate covariance) and resolves the
    coupling between UEs by solving (I - B) d(n) = c(n) with one shared
    factorization.  For uniform phase noise the covariances carry no
    phase dependence and the gradient is identically zero.
    """
    cfg = stats.cfg
    K, M, N = stats.K, stats.M, stats.N
    if N == 0 or stats.m_cf == 0.0:
        return np.zeros((K, N), dtype=complex)

    p = np.asarray(p, dtype=float)
    g = (1.0 + cfg.kappa_ue) * p * de.delta
    G = stats.H1
    F = G * (cfg.alpha * stats.phases)[None, :]
    W = np.stack([F @ stats.R_tilde[i] for i in range(K)])      # (K, M, N)

    w_bs = p * stats.beta_2 / M
    w_int = (1.0 + cfg.kappa_ue) * p * stats.beta_2 / (M * (1.0 + g))
    W_bs = np.tensordot(w_bs, W, axes=1)
    W_int = np.tensordot(w_int, W, axes=1)

    X, _, B = _coupling_system(stats, de, p)
    C = np.empty((K, N), dtype=complex)
    for k in range(K):
        Tk = de.T[k]
        Xk = X[k]
        t1 = stats.beta_2[k] * np.sum(G.conj() * (Tk @ W[k]), axis=0)
        t2 = cfg.kappa_bs * np.sum(
            G.conj() * (np.diagonal(Xk).real[:, None] * W_bs), axis=0)
        t3 = np.sum(G.conj() * (Xk @ (W_int - w_int[k] * W[k])), axis=0)
        C[k] = (cfg.alpha / M) * (t1 - t2 - t3)

    return np.linalg.solve(np.eye(K) - B, C)


def grad_delta_power(stats, de: DEState, p) -> np.ndarray:
    """Derivatives d delta_k / d p_j of the DE fixed point, shape (K, K)."""
    cfg = stats.cfg
    K, M = stats.K, stats.M
    p = np.asarray(p, dtype=float)
    g = (1.0 + cfg.kappa_ue) * p * de.delta
    X, tr_XR, B = _coupling_system(stats, de, p)
    diag_X = np.stack([np.diagonal(X[k]).real for k in range(K)])
    diag_R = np.stack([np.diagonal(stats.R_agg[j]).real for j in range(K)])
    C = (-(1.0 + cfg.kappa_ue) / (M * M * (1.0 + g[None, :]) ** 2)) * tr_XR \
        - (cfg.kappa_bs / (M * M)) * (diag_X @ diag_R.T)
    for k in range(K):
        C[k, k] = -(cfg.kappa_bs / (M * M)) * (diag_X[k] @ diag_R[k])
    return np.linalg.solve(np.eye(K) - B, C)


def grad_tau(stats, de: DEState, p, k: int, d_delta=None) -> np.ndarray:
    """Gradient of the weighted DE SINR of UE k at fixed powers, shape (N,).

    Chain rule through gamma_bar_k = p_k delta_k / (1 + kappa_ue p_k delta_k):
    the prefactor is p_k / (eta_k (1 + kappa_ue p_k delta_k)^2).
    """
    cfg = stats.cfg
    if d_delta is None:
        d_delta = grad_delta(stats, de, p)
    p = np.asarray(p, dtype=float)
    pref = p[k] / (cfg.eta[k] * (1.0 + cfg.kappa_ue * p[k] * de.delta[k]) ** 2)
    return pref * d_delta[k]


def ascent_direction(stats, de: DEState, p) -> np.ndarray:
    """Ascent direction per the configured UE rule ('min' or 'mean')."""
    cfg = stats.cfg
    d_delta = grad_delta(stats, de, p)
    if cfg.grad_ue_rule == "mean":
        qs = [grad_tau(stats, de, p, k, d_delta) for k in range(stats.K)]
        return np.mean(qs, axis=0)
    k_min = int(np.argmin(de.gamma_bar / cfg.eta))
    return grad_tau(stats, de, p, k_min, d_delta)


def grad_tau_equalized(stats, de: DEState, p) -> np.ndarray:
    """Gradient of the power-equalized objective tau*(s), shape (N,).

    Differentiates the equalization system {gamma_bar_k/eta_k = tau,
    beta_w^T p = M p_max} implicitly, so the power vector's dependence on
    the phases is accounted for exactly.  Requires the DE state of an
    equalized power solution.
    """
    cfg = stats.cfg
    K, N = stats.K, stats.N
    if N == 0 or stats.m_cf == 0.0:
        return np.zeros(N, dtype=complex)
    p = np.asarray(p, dtype=float)
    delta = de.delta
    denom = 1.0 + cfg.kappa_ue * p * delta

    d_dp = grad_delta_power(stats, de, p)                     # (K, K)
    d_ds = grad_delta(stats, de, p)                           # (K, N)
    J_w = (np.eye(K) * delta[:, None] + p[:, None] * d_dp) \
        / (cfg.eta[:, None] * denom[:, None] ** 2)
    d_tau_s = (p[:, None] * d_ds) / (cfg.eta[:, None] * denom[:, None] ** 2)

    A = np.zeros((K + 1, K + 1))
    A[:K, :K] = J_w
    A[:K, K] = -1.0
    A[K, :K] = cfg.beta_w
    rhs = np.zeros((K + 1, N), dtype=complex)
    rhs[:K] = -d_tau_s
    return np.linalg.solve(A.astype(complex), rhs)[K]


def project_unit_modulus(s_tilde: np.ndarray, fallback: np.ndarray) -> np.ndarray:
    """Closest unit-modulus vector exp(j arg(.)); zero entries keep fallback."""
    out = np.exp(1j * np.angle(s_tilde))
    zero = s_tilde == 0
    if np.any(zero):
        out = np.where(zero, fallback, out)
    return out


@dataclass
class OptimizationState:
    """State of the phase optimizer at fixed powers."""

    stats: object                 # ChannelStatistics at `phases`
    phases: np.ndarray
    power: PowerSolution          # power solution whose p is held fixed
    de: DEState                   # DE at (power.p, phases)
    tau: float                    # min weighted DE SINR at this point
    mu: float
    gradient: np.ndarray | None = None
    tau_history: list = field(default_factory=list)
    converged: bool = False       # stationary point reached
    steps: int = 0
    accepted: int = 0
    backtracked: bool = False     # last accepted step needed a shrink
    full_accept_streak: int = 0


def start_pga(stats, power: PowerSolution, cfg) -> OptimizationState:
    weighted = power.de.gamma_bar / cfg.eta
    return OptimizationState(stats=stats, phases=stats.phases, power=power,
                             de=power.de, tau=float(weighted.min()), mu=cfg.pga_mu0)


def _tau_eval(stats, phases, p, cfg, delta0):
    stats_new = stats.with_phases(phases)
    de = solve_de(stats_new, p, cfg, delta0=delta0)
    tau = float(np.min(de.gamma_bar / cfg.eta))
    return stats_new, de, tau


def pga_step(state: OptimizationState, cfg) -> OptimizationState:
    """One backtracked projected-gradient step on the phases.

    Accepts the candidate only if it clears the sufficient-ascent bound
    tau(s') >= tau(s) + c * mu * ||q||^2; otherwise shrinks mu until it
    underruns mu_min, which signals a stationary point (not an error).
    """
    q = ascent_direction(state.stats, state.de, state.power.p)
    state.gradient = q
    qnorm2 = float(np.real(np.vdot(q, q)))
    if qnorm2 == 0.0:
        state.converged = True
        return state

    mu = state.mu
    first_try = True
    while mu >= cfg.pga_mu_min:
        candidate = project_unit_modulus(state.phases + mu * q, state.phases)
        if np.max(np.abs(candidate - state.phases)) < 1e-10:
            break                # step below phase resolution: stationary
        stats_new, de_new, tau_new = _tau_eval(
            state.stats, candidate, state.power.p, cfg, state.de.delta)
        if tau_new >= state.tau + cfg.pga_armijo_c * mu * qnorm2:
            state.stats = stats_new
            state.phases = candidate
            state.de = de_new
            state.tau_history.append(tau_new)
            state.tau = tau_new
            state.steps += 1
            state.accepted += 1
            state.backtracked = not first_try
            if first_try:
                state.full_accept_streak += 1
                if state.full_accept_streak >= 2:
                    mu *= 2.0
                    state.full_accept_streak = 0
            else:
                state.full_accept_streak = 0
            state.mu = mu
            return state
        mu *= cfg.pga_shrink
        first_try = False

    state.converged = True          # line search exhausted: stationary
    state.steps += 1
    return state


_PGA_WINDOW = 8


def optimize_phases(stats, power: PowerSolution, cfg) -> OptimizationState:
    """Run projected gradient ascent to stationarity at fixed powers.

    Stops on line-search exhaustion, on a backtracked step whose gain is
    below pga_tol, or when the trailing window of accepted steps gained
    less than pga_tol in total (the step-size ramp makes single-step
    gains uninformative early on).
    """
    state = start_pga(stats, power, cfg)
    for _ in range(cfg.pga_max_steps):
        tau_before = state.tau
        state = pga_step(state, cfg)
        if state.converged:
            break
        floor = cfg.pga_tol * max(abs(tau_before), 1e-300)
        if state.backtracked and state.tau - tau_before <= floor:
            state.converged = True
            break
        hist = state.tau_history
        if len(hist) >= _PGA_WINDOW and hist[-1] - hist[-_PGA_WINDOW] <= floor:
            state.converged = True
            break
    return state


def polish_phases(stats, power: PowerSolution, cfg, phases0=None):
    """Joint quasi-Newton refinement of the equalized objective.

    The two-stage alternation stalls at the equalization kink: with the
    powers frozen, the min weighted SINR is nonsmooth at the tied point,
    so projected gradient steps get rejected while coupled (phase, power)
    moves can still gain.  This stage ascends tau*(s) directly, with the
    exact implicit-power gradient, on the angle parametrization.

    Returns (phases, PowerSolution, iterations) for the best point seen.
    """
    from scipy.optimize import minimize

    s0 = stats.phases if phases0 is None else np.asarray(phases0, dtype=complex)
    if stats.N == 0 or stats.m_cf == 0.0 or not cfg.polish:
        return s0, power, 0

    cfg_t = cfg.replace(power_tol=min(cfg.power_tol, cfg.polish_power_tol))
    state = {"p": power.p, "delta": power.de.delta, "best": None}

    def objective(theta):
        s = np.exp(1j * theta)
        stats_s = stats.with_phases(s)
        pw = solve_power(stats_s, cfg_t, initial_p=state["p"], delta0=state["delta"])
        state["p"], state["delta"] = pw.p, pw.de.delta
        if state["best"] is None or pw.tau_bar > state["best"][1].tau_bar:
            state["best"] = (s, pw)
        q = grad_tau_equalized(stats_s, pw.de, pw.p)
        g = -2.0 * np.imag(np.conj(q) * s)        # d tau / d theta
        return -pw.tau_bar, -g

    result = minimize(objective, np.angle(s0), jac=True, method="L-BFGS-B",
                      options={"maxiter": cfg.polish_max_iter,
                               "ftol": 1e-16, "gtol": cfg.polish_gtol})
    s_best, pw_best = state["best"]
    if pw_best.tau_bar <= power.tau_bar:
        return s0, power, int(result.nit)
    return s_best, pw_best, int(result.nit)


@dataclass
class SolveResult:
    """Converged output of the alternating max-min optimization."""

    p: np.ndarray             # (K,) optimal powers
    phases: np.ndarray        # (N,) optimal unit-modulus phases
    tau_bar: float            # common weighted DE SINR
    gamma_bar: np.ndarray     # (K,) per-UE DE SINRs
    rates: np.ndarray         # (K,) log2(1 + gamma_bar)
    min_rate: float
    de: DEState
    tau_history: list
    converged: bool
    outer_iterations: int
    power_iterations: int     # cumulative power-map iterations
    pga_steps: int            # cumulative accepted PGA steps
    de_iterations: int        # cumulative DE sweeps inside power solves
    polish_iterations: int = 0


def initial_phases(cfg, rng=None) -> np.ndarray:
    """Arbitrary unit-modulus starting phases drawn from the scenario seed."""
    if rng is None:
        rng = np.random.default_rng([cfg.seed, 0xF0A5])
    return np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, cfg.N))


def alternating_solve(stats, cfg, phases0=None) -> SolveResult:
    """Two-stage alternation: equalize powers, then ascend on the phases.

    Stops when the equalized objective improves by less than outer_tol
    (relative) between consecutive power stages, when the phase optimizer
    is already stationary, or at the outer iteration cap.  The recorded
    tau history is nondecreasing: a power stage that fails to improve the
    previous one (possible only through solver noise) rolls back to the
    previous equalized point.
    """
    s = initial_phases(cfg) if phases0 is None else np.asarray(phases0, dtype=complex)
    stats_s = stats.with_phases(s)

    tau_history: list[float] = []
    p_warm = None
    delta_warm = None
    best = None
    prev_tau = -np.inf
    converged = False
    power_iters = 0
    pga_steps = 0
    de_iters = 0

    outer = 0
    for outer in range(1, cfg.outer_max_iter + 1):
        power = solve_power(stats_s, cfg, initial_p=p_warm, delta0=delta_warm)
        power_iters += power.iterations
        de_iters += power.de_iterations
        improvement = power.tau_bar - prev_tau
        if outer > 1 and improvement <= 0.0:
            power, s, stats_s = best       # solver-noise dip: keep previous point
            converged = True
            break
        tau_history.append(power.tau_bar)
        best = (power, s, stats_s)
        if outer > 1 and improvement <= cfg.outer_tol * max(abs(prev_tau), 1e-300):
            converged = True
            break
        prev_tau = power.tau_bar
        if outer == cfg.outer_max_iter:
            converged = False
            break

        pga = optimize_phases(stats_s, power, cfg)
        pga_steps += pga.accepted
        tau_history.extend(pga.tau_history)
        if pga.accepted == 0:
            converged = True               # stationary phases: joint fixed point
            break
        s = pga.phases
        stats_s = pga.stats
        p_warm = power.p
        delta_warm = pga.de.delta

    s, power, polish_iters = polish_phases(stats_s, power, cfg)
    if tau_history and power.tau_bar > tau_history[-1]:
        tau_history.append(power.tau_bar)

    gamma_bar = power.de.gamma_bar
    rates = np.log2(1.0 + gamma_bar)
    return SolveResult(
        p=power.p, phases=s, tau_bar=power.tau_bar, gamma_bar=gamma_bar,
        rates=rates, min_rate=float(np.log2(1.0 + power.tau_bar)),
        de=power.de, tau_history=tau_history, converged=converged,
        outer_iterations=outer, power_iterations=power_iters,
        pga_steps=pga_steps, de_iterations=de_iters,
        polish_iterations=polish_iters)
