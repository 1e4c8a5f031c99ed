import numpy as np
import pytest

from irs_maxmin.deterministic import solve_de
from irs_maxmin.power import solve_power, uniform_power
from irs_maxmin.rbm import (alternating_solve, ascent_direction, grad_delta,
                            grad_delta_power, grad_tau, grad_tau_equalized,
                            initial_phases, optimize_phases, pga_step,
                            polish_phases, project_unit_modulus, start_pga)
from irs_maxmin.scenario import build_statistics

from conftest import make_cfg

FD_STEP = 1e-6


def wirtinger_fd(f, s0, N, step=FD_STEP):
    """Central differences on Re/Im parts, combined per the s* convention."""
    probe = f(s0)
    out = np.zeros(np.shape(probe) + (N,), dtype=complex)
    for n in range(N):
        e = np.zeros(N)
        e[n] = 1.0
        d_re = (f(s0 + step * e) - f(s0 - step * e)) / (2 * step)
        d_im = (f(s0 + 1j * step * e) - f(s0 - 1j * step * e)) / (2 * step)
        out[..., n] = 0.5 * (d_re + 1j * d_im)
    return out


@pytest.fixture
def tight_cfg():
    return make_cfg(de_tol=1e-13)


def solved_point(cfg, seed=5):
    stats = build_statistics(cfg)
    rng = np.random.default_rng(seed)
    s0 = np.exp(1j * rng.uniform(0, 2 * np.pi, cfg.N))
    stats0 = stats.with_phases(s0)
    p = uniform_power(cfg)
    de0 = solve_de(stats0, p, cfg)
    return stats, stats0, s0, p, de0


class TestGradDelta:
    def test_uniform_noise_gradient_is_zero(self):
        cfg = make_cfg(phase_noise="uniform")
        stats = build_statistics(cfg)
        p = uniform_power(cfg)
        de = solve_de(stats, p, cfg)
        assert not grad_delta(stats, de, p).any()
        assert not grad_tau(stats, de, p, 0).any()

    def test_matches_finite_differences(self, tight_cfg):
        cfg = tight_cfg
        stats, stats0, s0, p, de0 = solved_point(cfg)
        analytic = grad_delta(stats0, de0, p)

        def delta_of(s):
            return solve_de(stats.with_phases(s), p, cfg, delta0=de0.delta).delta

        fd = wirtinger_fd(delta_of, s0, cfg.N)
        rel = np.abs(analytic - fd) / np.maximum(np.abs(fd), 1e-300)
        assert rel.max() <= 1e-4

    def test_single_ue_no_coupling(self):
        cfg = make_cfg(K=1, kappa_bs=0.0, kappa_ue=0.0, de_tol=1e-13)
        stats, stats0, s0, p, de0 = solved_point(cfg)
        analytic = grad_delta(stats0, de0, p)

        def delta_of(s):
            return solve_de(stats.with_phases(s), p, cfg, delta0=de0.delta).delta

        fd = wirtinger_fd(delta_of, s0, cfg.N)
        rel = np.abs(analytic - fd) / np.maximum(np.abs(fd), 1e-300)
        assert rel.max() <= 1e-4


class TestGradTau:
    def test_prefactor_collapses_without_transmit_distortion(self, tight_cfg):
        cfg = tight_cfg.replace(kappa_ue=0.0)
        stats, stats0, s0, p, de0 = solved_point(cfg)
        d = grad_delta(stats0, de0, p)
        for k in range(cfg.K):
            q = grad_tau(stats0, de0, p, k, d)
            assert np.array_equal(q, (p[k] / cfg.eta[k]) * d[k])

    def test_matches_finite_differences(self, tight_cfg):
        cfg = tight_cfg
        stats, stats0, s0, p, de0 = solved_point(cfg)
        for k in range(cfg.K):
            analytic = grad_tau(stats0, de0, p, k)

            def tau_of(s, k=k):
                de = solve_de(stats.with_phases(s), p, cfg, delta0=de0.delta)
                return de.gamma_bar[k] / cfg.eta[k]

            fd = wirtinger_fd(tau_of, s0, cfg.N)
            rel = np.abs(analytic - fd) / np.maximum(np.abs(fd), 1e-300)
            assert rel.max() <= 1e-4

    def test_gauge_orthogonality(self, tight_cfg):
        # common rotation leaves tau unchanged: gradient has no gauge component
        cfg = tight_cfg
        stats, stats0, s0, p, de0 = solved_point(cfg)
        q = ascent_direction(stats0, de0, p)
        directional = 2.0 * np.sum(np.real(np.conj(q) * (1j * s0)))
        assert abs(directional) <= 1e-8 * np.linalg.norm(q) * np.sqrt(cfg.N)


class TestGradPower:
    def test_matches_finite_differences(self, tight_cfg):
        cfg = tight_cfg
        stats, stats0, s0, p, de0 = solved_point(cfg)
        analytic = grad_delta_power(stats0, de0, p)
        step = 1e-4 * p.min()
        fd = np.zeros((cfg.K, cfg.K))
        for j in range(cfg.K):
            dp = np.zeros(cfg.K)
            dp[j] = step
            hi = solve_de(stats0, p + dp, cfg, delta0=de0.delta).delta
            lo = solve_de(stats0, p - dp, cfg, delta0=de0.delta).delta
            fd[:, j] = (hi - lo) / (2 * step)
        rel = np.abs(analytic - fd) / np.maximum(np.abs(fd), 1e-300)
        assert rel.max() <= 1e-3


class TestGradTauEqualized:
    def test_matches_finite_differences(self):
        cfg = make_cfg(de_tol=1e-13, power_tol=1e-13)
        stats = build_statistics(cfg)
        rng = np.random.default_rng(5)
        s0 = np.exp(1j * rng.uniform(0, 2 * np.pi, cfg.N))
        pw = solve_power(stats.with_phases(s0), cfg)
        analytic = grad_tau_equalized(stats.with_phases(s0), pw.de, pw.p)

        def tau_eq(s):
            return solve_power(stats.with_phases(s), cfg,
                               initial_p=pw.p, delta0=pw.de.delta).tau_bar

        fd = wirtinger_fd(tau_eq, s0, cfg.N)
        rel = np.abs(analytic - fd) / np.maximum(np.abs(fd), 1e-300)
        assert rel.max() <= 1e-4


class TestPgaStep:
    def test_projection_example(self):
        out = project_unit_modulus(np.array([2.0 + 0j, 2j]), np.ones(2, dtype=complex))
        assert np.allclose(out, np.array([1.0, 1j]), rtol=0, atol=1e-15)

    def test_projection_keeps_fallback_on_zero(self):
        fallback = np.exp(1j * np.array([0.4, 1.3]))
        out = project_unit_modulus(np.array([0.0 + 0j, 2.0]), fallback)
        assert out[0] == fallback[0] and out[1] == 1.0 + 0j

    def test_zero_gradient_is_stationary(self):
        cfg = make_cfg(phase_noise="uniform")
        stats = build_statistics(cfg)
        power = solve_power(stats, cfg)
        state = start_pga(stats, power, cfg)
        phases_before = state.phases.copy()
        state = pga_step(state, cfg)
        assert state.converged
        assert np.array_equal(state.phases, phases_before)

    def test_accepted_steps_strictly_improve(self):
        cfg = make_cfg(M=16, N=8, K=2)
        stats = build_statistics(cfg)
        power = solve_power(stats, cfg)
        state = optimize_phases(stats, power, cfg)
        assert state.accepted > 0
        hist = np.array([float(np.min(power.de.gamma_bar / cfg.eta))] + state.tau_history)
        assert np.all(np.diff(hist) > 0)
        assert np.allclose(np.abs(state.phases), 1.0, rtol=0, atol=1e-14)


class TestAlternatingSolve:
    def test_uniform_noise_reduces_to_power_control(self):
        cfg = make_cfg(phase_noise="uniform")
        stats = build_statistics(cfg)
        res = alternating_solve(stats, cfg)
        ref = solve_power(stats, cfg)
        assert res.tau_bar == ref.tau_bar
        assert res.pga_steps == 0 and res.polish_iterations == 0

    def test_uniform_noise_bit_identical_across_inits(self):
        cfg = make_cfg(phase_noise="uniform")
        stats = build_statistics(cfg)
        rng = np.random.default_rng(17)
        taus = set()
        for _ in range(3):
            s0 = np.exp(1j * rng.uniform(0, 2 * np.pi, cfg.N))
            taus.add(alternating_solve(stats, cfg, phases0=s0).tau_bar)
        assert len(taus) == 1

    def test_no_irs_elements(self):
        cfg = make_cfg(N=0)
        stats = build_statistics(cfg)
        res = alternating_solve(stats, cfg)
        ref = solve_power(stats, cfg)
        assert res.tau_bar == ref.tau_bar
        assert res.phases.size == 0

    def test_history_nondecreasing_and_phases_unit(self, mid_cfg):
        stats = build_statistics(mid_cfg)
        res = alternating_solve(stats, mid_cfg)
        hist = np.array(res.tau_history)
        assert np.all(np.diff(hist) >= 0)
        assert np.allclose(np.abs(res.phases), 1.0, rtol=0, atol=1e-14)
        assert res.converged

    def test_beats_random_phases(self, mid_cfg):
        stats = build_statistics(mid_cfg)
        res = alternating_solve(stats, mid_cfg)
        rng = np.random.default_rng(2)
        for _ in range(5):
            s = np.exp(1j * rng.uniform(0, 2 * np.pi, mid_cfg.N))
            ref = solve_power(stats.with_phases(s), mid_cfg)
            assert res.tau_bar >= ref.tau_bar - 1e-9

    def test_local_perturbation_probe(self, mid_cfg):
        stats = build_statistics(mid_cfg)
        res = alternating_solve(stats, mid_cfg)
        rng = np.random.default_rng(99)
        for _ in range(20):
            u = rng.uniform(-0.01, 0.01, mid_cfg.N)
            st = stats.with_phases(res.phases * np.exp(1j * u))
            pw = solve_power(st, mid_cfg, initial_p=res.p, delta0=res.de.delta)
            assert (pw.tau_bar - res.tau_bar) / res.tau_bar <= 1e-6

    def test_polish_disabled_still_converges(self, mid_cfg):
        cfg = mid_cfg.replace(polish=False)
        stats = build_statistics(cfg)
        res = alternating_solve(stats, cfg)
        assert res.polish_iterations == 0
        assert res.converged

    def test_initial_phases_deterministic(self, mid_cfg):
        assert np.array_equal(initial_phases(mid_cfg), initial_phases(mid_cfg))
