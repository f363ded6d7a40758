"""Tests for the single-site mean-field generator and sweep.

The central oracle: for a product state of two neighboring sites, the
exact partial trace of the two-site phase-lock dissipator must equal
the single-site generator evaluated with the moment coefficients of the
traced-out neighbor.  This pins every coefficient of the nonlinear
generator against an independent dense computation.
"""

import math

import numpy as np
import pytest

from bosetraj.gutzwiller import (
    GwConfig,
    SingleSiteDM,
    SiteOperators,
    coherent_dm,
    default_initial_dm,
    evolve,
    liouvillian_dp,
    liouvillian_pl,
    meanfield_rhs,
    order_parameter_consistency,
    order_parameter_sweep,
)


def random_dm(n_max, support, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(support, support)) + 1j * rng.normal(size=(support, support))
    rho = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    rho[:support, :support] = X @ X.conj().T
    return rho / np.trace(rho)


def exact_two_site_trace(rho1, rho2, n_max):
    """Partial traces of D[d](rho1 x rho2) over either neighbor, summed:
    the exact mean-field drive on one site from both of its bonds."""
    d1 = n_max + 1
    ops = SiteOperators(n_max)
    eye = np.eye(d1, dtype=complex)
    a1, a2 = np.kron(ops.a, eye), np.kron(eye, ops.a)
    d_op = (a1.conj().T + a2.conj().T) @ (a1 - a2)
    dtd = d_op.conj().T @ d_op
    R = np.kron(rho1, rho2)
    out = d_op @ R @ d_op.conj().T - 0.5 * (dtd @ R + R @ dtd)
    out4 = out.reshape(d1, d1, d1, d1)
    left = np.trace(out4, axis1=1, axis2=3)   # site is the left bond member
    right = np.trace(out4, axis1=0, axis2=2)  # site is the right bond member
    return left + right


class TestGeneratorOracle:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_exact_partial_trace(self, seed):
        # Support kept well below the cutoff so truncation cannot bite.
        n_max = 6
        rho = random_dm(n_max, support=4, seed=seed)
        ops = SiteOperators(n_max)
        filling = np.trace(rho @ ops.n).real
        exact = exact_two_site_trace(rho, rho, n_max)
        model = 2.0 * liouvillian_pl(rho, ops, filling)
        np.testing.assert_allclose(model, exact, atol=1e-12)

    def test_fixed_unit_filling_differs_off_filling(self):
        # At <n> != 1 the filling coefficient matters; the oracle resolves
        # which convention is exact.
        n_max = 6
        rho = random_dm(n_max, support=4, seed=3)
        ops = SiteOperators(n_max)
        exact = exact_two_site_trace(rho, rho, n_max)
        model_fixed = 2.0 * liouvillian_pl(rho, ops, 1.0)
        assert np.linalg.norm(model_fixed - exact) > 0.1

    def test_trace_and_hermiticity_preserved(self):
        n_max = 8
        rho = random_dm(n_max, support=5, seed=4)
        ops = SiteOperators(n_max)
        cfg = GwConfig(rate_phaselock=1.0, rate_dephase=0.7, n_max=n_max)
        rhs = meanfield_rhs(rho, ops, cfg)
        assert abs(np.trace(rhs)) < 1e-12
        np.testing.assert_allclose(rhs, rhs.conj().T, atol=1e-12)

    def test_number_conserved_at_self_consistent_filling(self):
        n_max = 8
        rho = random_dm(n_max, support=5, seed=5)
        ops = SiteOperators(n_max)
        filling = np.trace(rho @ ops.n).real
        rhs = (2.0 * liouvillian_pl(rho, ops, filling)
               + 0.9 * liouvillian_dp(rho, ops))
        assert abs(np.trace(ops.n @ rhs)) < 1e-10

    def test_u1_covariance(self):
        # a -> a e^{i theta} maps alpha-moments consistently, so the
        # generator commutes with number-phase rotations.
        n_max = 6
        rho = random_dm(n_max, support=4, seed=6)
        ops = SiteOperators(n_max)
        theta = 0.7321
        U = np.diag(np.exp(1j * theta * np.arange(n_max + 1)))
        lhs = liouvillian_pl(U @ rho @ U.conj().T, ops, 1.0)
        rhs = U @ liouvillian_pl(rho, ops, 1.0) @ U.conj().T
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_fock_state_kills_moment_part(self):
        # On a Fock state every anomalous moment vanishes, so the
        # generator reduces to its diagonal dissipator part.
        n_max = 6
        ops = SiteOperators(n_max)
        rho = np.zeros((n_max + 1, n_max + 1), dtype=complex)
        rho[1, 1] = 1.0
        full = liouvillian_pl(rho, ops, 1.0)
        from bosetraj.gutzwiller import _dissipator
        diag_only = (_dissipator(ops.ad, rho) + 2.0 * _dissipator(ops.a, rho)
                     + _dissipator(ops.n, rho))
        np.testing.assert_allclose(full, diag_only, atol=1e-12)


class TestCoherentDarkState:
    def test_residual_shrinks_with_cutoff(self):
        # The unit coherent state is dark for the untruncated generator;
        # the residual is a pure truncation artifact and must fall fast
        # with n_max.
        res = {}
        for n_max in (8, 12):
            ops = SiteOperators(n_max)
            rho = coherent_dm(1.0, n_max)
            res[n_max] = np.linalg.norm(liouvillian_pl(rho, ops, 1.0))
        assert res[12] < 1e-3
        assert res[12] < 0.1 * res[8]

    def test_far_from_dark_for_fock(self):
        ops = SiteOperators(12)
        rho = np.zeros((13, 13), dtype=complex)
        rho[1, 1] = 1.0
        assert np.linalg.norm(liouvillian_pl(rho, ops, 1.0)) > 0.5


class TestDephasing:
    def test_coherence_decay_rates(self):
        # rho_nm(t) = rho_nm(0) exp(-Gamma (n-m)^2 t / 2), populations fixed.
        n_max = 4
        ops = SiteOperators(n_max)
        rho0 = random_dm(n_max, support=4, seed=7)
        gam, t = 1.3, 0.8
        cfg = GwConfig(rate_phaselock=0.0, rate_dephase=gam,
                       n_max=n_max, dt=1e-3, t_max=t)
        ev = evolve(cfg, SingleSiteDM(n_max, rho0), stop_when_steady=False)
        n = np.arange(n_max + 1)
        decay = np.exp(-0.5 * gam * (n[:, None] - n[None, :]) ** 2 * t)
        np.testing.assert_allclose(ev.final.matrix, rho0 * decay, atol=1e-6)

    def test_alpha_decays_at_half_gamma(self):
        n_max = 6
        rho0 = coherent_dm(0.6, n_max)
        gam, t = 2.0, 1.0
        cfg = GwConfig(rate_phaselock=0.0, rate_dephase=gam,
                       n_max=n_max, dt=1e-3, t_max=t)
        ev = evolve(cfg, SingleSiteDM(n_max, rho0), stop_when_steady=False)
        a0 = abs(ev.alphas[0])
        assert abs(ev.alphas[-1]) == pytest.approx(
            a0 * math.exp(-0.5 * gam * t), rel=1e-4)


class TestEvolve:
    def test_pure_phaselock_flows_to_unit_coherent(self):
        cfg = GwConfig(rate_phaselock=1.0, rate_dephase=0.0,
                       n_max=10, dt=0.005, t_max=100.0)
        ev = evolve(cfg, SingleSiteDM(10, coherent_dm(0.4, 10)))
        assert abs(ev.alphas[-1]) == pytest.approx(1.0, abs=5e-3)

    def test_step_halving_agreement(self):
        n_max = 8
        rho0 = SingleSiteDM(n_max, coherent_dm(0.8, n_max))
        finals = []
        for dt in (0.01, 0.005):
            cfg = GwConfig(rate_phaselock=1.0, rate_dephase=1.5,
                           n_max=n_max, dt=dt, t_max=2.0)
            ev = evolve(cfg, rho0, stop_when_steady=False)
            finals.append(ev.final.matrix)
        assert np.linalg.norm(finals[0] - finals[1]) < 1e-6

    def test_trace_guard_trips_on_absurd_step(self):
        cfg = GwConfig(rate_phaselock=1.0, rate_dephase=0.0,
                       n_max=8, dt=0.8, t_max=8.0)
        with pytest.raises(RuntimeError):
            evolve(cfg, stop_when_steady=False)

    def test_order_parameter_consistency(self):
        # Closed alpha ODE against Tr[a rhs(rho)] on a state supported
        # away from the cutoff.
        cfg = GwConfig(rate_phaselock=1.0, rate_dephase=0.8, n_max=12)
        rho = random_dm(12, support=6, seed=8)
        assert order_parameter_consistency(rho, cfg) < 1e-10

    def test_default_seed_is_symmetry_broken(self):
        cfg = GwConfig(filling=1.0, n_max=8)
        rho0 = default_initial_dm(cfg)
        ops = SiteOperators(8)
        assert abs(np.trace(rho0.matrix @ ops.a)) > 0.9


class TestSweep:
    def test_sweep_brackets_and_orders(self):
        # Cheap sweep at low cutoff/time: deep ordered and deep
        # disordered points plus a monotone trend and a bracketed
        # critical point.
        template = GwConfig(n_max=8, dt=0.01, t_max=150.0)
        res = order_parameter_sweep([0.5, 3.0, 6.0], template=template,
                                    bisection_steps=2)
        amps = {p.gamma: p.alpha_abs for p in res.points}
        assert amps[0.5] > 0.8
        assert amps[6.0] < 1e-3
        assert amps[0.5] > amps[3.0] > amps[6.0]
        assert 3.0 <= res.gamma_c <= 6.0

    def test_no_transition_means_nan(self):
        template = GwConfig(n_max=6, dt=0.01, t_max=20.0)
        res = order_parameter_sweep([0.1, 0.2], template=template)
        assert math.isnan(res.gamma_c)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            GwConfig(dt=0.0)
        with pytest.raises(ValueError):
            GwConfig(filling=9.0, n_max=4)
