import numpy as np
import pytest

from sspc.errors import DimensionMismatchError
from sspc.nlp import PrimalDualPoint, residual
from sspc.problems import double_integrator
from sspc.runtime import (ideal_control, init_compensator, suboptimality_error,
                          update)
from sspc.solver import SspcConfig, solve_to_convergence
from sspc.transcription import transcribe

from test_transcription import scalar_integrator


@pytest.fixture(scope="module")
def di():
    return double_integrator()


def make_comp(bundle, ell=2, x0=None, z0=None, **cfg_kwargs):
    cfg = SspcConfig(ell=ell, **cfg_kwargs)
    x0 = bundle.default_x0 if x0 is None else x0
    return init_compensator(bundle.nlp, bundle.layout, cfg, z0, x0)


class TestInit:
    def test_holds_zeros_without_solving(self, di):
        comp = make_comp(di)
        assert np.all(comp.z.to_vector() == 0.0)
        assert comp.last_diagnostics is None
        np.testing.assert_array_equal(comp.p_prev, di.default_x0)

    def test_converged_start_stays_converged(self, di):
        x0 = np.array([0.3, 0.0])
        z_star, _ = solve_to_convergence(di.nlp, SspcConfig(),
                                         PrimalDualPoint.zeros(di.nlp), x0)
        comp = make_comp(di, ell=1, x0=x0, z0=z_star)
        state = comp
        for _ in range(5):
            _, state = update(state, x0)
            assert state.last_diagnostics.final_residual <= 1e-8

    def test_mismatched_z0(self, di):
        bad = PrimalDualPoint(np.zeros(3), np.zeros(1), np.zeros(1))
        with pytest.raises(DimensionMismatchError):
            init_compensator(di.nlp, di.layout, SspcConfig(), bad, di.default_x0)


class TestUpdate:
    def test_fixed_point_matches_ideal(self, di):
        x = np.array([0.4, -0.1])
        z_star, _ = solve_to_convergence(di.nlp, SspcConfig(),
                                         PrimalDualPoint.zeros(di.nlp), x)
        comp = make_comp(di, ell=1, x0=x, z0=z_star)
        u, _ = update(comp, x)
        u_ideal, _ = ideal_control(di.nlp, di.layout, SspcConfig(), x, z_star)
        assert np.max(np.abs(u - u_ideal)) <= 1e-8

    def test_single_stage_analytic_law(self):
        # x+ = x + u, l = x^2 + u^2, V_f = x^2, N = 1:
        # J(u) = p^2 + u^2 + (p + u)^2 so u*(p) = -p/2.
        ocp = scalar_integrator(N=1)
        nlp, lay = transcribe(ocp)
        p = np.array([0.8])
        comp = init_compensator(nlp, lay, SspcConfig(ell=1), None, p)
        state = comp
        for _ in range(2):
            u, state = update(state, p)
        assert u[0] == pytest.approx(-0.4, abs=1e-9)

    def test_functional_update_preserves_input_state(self, di):
        comp = make_comp(di)
        before = comp.z.to_vector().copy()
        p_before = comp.p_prev.copy()
        update(comp, np.array([0.9, 0.0]))
        np.testing.assert_array_equal(comp.z.to_vector(), before)
        np.testing.assert_array_equal(comp.p_prev, p_before)

    def test_determinism_bitwise(self, di):
        x1 = np.array([0.7, 0.05])
        outs = []
        for _ in range(2):
            comp = make_comp(di, ell=2)
            u, state = update(comp, x1)
            u2, state = update(state, np.array([0.6, -0.02]))
            outs.append((u.tobytes(), u2.tobytes(), state.z.to_vector().tobytes()))
        assert outs[0] == outs[1]

    def test_wrong_dimension(self, di):
        comp = make_comp(di)
        with pytest.raises(DimensionMismatchError):
            update(comp, np.zeros(3))


class TestIdealControl:
    def test_origin_gives_zero(self, di):
        u, z = ideal_control(di.nlp, di.layout, SspcConfig(), np.zeros(2),
                             PrimalDualPoint.zeros(di.nlp))
        assert np.max(np.abs(u)) <= 1e-10
        assert np.max(np.abs(z.to_vector())) <= 1e-8

    def test_matches_many_updates_at_frozen_state(self, di):
        x = np.array([0.5, 0.1])
        comp = make_comp(di, ell=1, x0=x)
        state = comp
        for _ in range(20):
            u, state = update(state, x)
        u_ideal, _ = ideal_control(di.nlp, di.layout, SspcConfig(), x,
                                   PrimalDualPoint.zeros(di.nlp))
        assert np.max(np.abs(u - u_ideal)) <= 1e-7


class TestSuboptimalityError:
    def test_zero_at_convergence(self, di):
        x = np.array([0.3, -0.05])
        z_star, _ = solve_to_convergence(di.nlp, SspcConfig(),
                                         PrimalDualPoint.zeros(di.nlp), x)
        comp = make_comp(di, x0=x, z0=z_star)
        assert suboptimality_error(comp, di.nlp, di.layout, SspcConfig(), x) <= 1e-8

    def test_perturbed_u0_slot_reads_back_exactly(self, di):
        x = np.array([0.3, -0.05])
        z_star, _ = solve_to_convergence(di.nlp, SspcConfig(),
                                         PrimalDualPoint.zeros(di.nlp), x)
        delta = 1e-4
        w = z_star.w.copy()
        w[di.layout.u_slice(0)] += delta
        z_pert = PrimalDualPoint(w, z_star.lam, z_star.v)
        comp = make_comp(di, x0=x, z0=z_pert)
        err = suboptimality_error(comp, di.nlp, di.layout, SspcConfig(), x)
        assert err == pytest.approx(delta, rel=1e-4)


class TestErrorContraction:
    def test_one_step_contraction_near_solution(self, di):
        # small estimate error + small parameter move => update contracts
        rng = np.random.default_rng(8)
        x = np.array([0.4, 0.0])
        z_star, _ = solve_to_convergence(di.nlp, SspcConfig(),
                                         PrimalDualPoint.zeros(di.nlp), x)
        for _ in range(5):
            z_vec = z_star.to_vector() + 1e-4 * rng.standard_normal(di.nlp.n_z)
            z = PrimalDualPoint.from_vector(z_vec, di.nlp)
            x_new = x + 1e-3 * rng.standard_normal(2)
            r_before = residual(di.nlp, z, x_new).norm2
            comp = init_compensator(di.nlp, di.layout, SspcConfig(ell=1), z, x)
            _, state = update(comp, x_new)
            assert state.last_diagnostics.final_residual < r_before
