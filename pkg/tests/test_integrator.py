"""Integrator tests: accuracy, positivity, convergence order, dense output."""

import math

import numpy as np
import pytest

from conftest import (
    SHOWCASE_IC_SETTLING,
    draw_box_admissible,
    showcase_params,
    relative_distance,
)
from hematodyn import (
    CellState,
    IntegrationConfig,
    IntegrationError,
    ModelParameters,
    REFERENCE_PARAMETERS,
    Trajectory,
    integrate,
    invariant_box,
    nondimensionalize,
    steady_state_E2,
)


class TestConfigValidation:
    def test_rel_tol_range(self):
        with pytest.raises(ValueError):
            IntegrationConfig(t_end=1.0, rel_tol=1e-2)
        with pytest.raises(ValueError):
            IntegrationConfig(t_end=1.0, rel_tol=1e-13)

    def test_positive_quantities(self):
        with pytest.raises(ValueError):
            IntegrationConfig(t_end=0.0)
        with pytest.raises(ValueError):
            IntegrationConfig(t_end=1.0, abs_tol=0.0)
        with pytest.raises(ValueError):
            IntegrationConfig(t_end=1.0, output_stride=-0.5)

    def test_default_stride_is_two_thousandth(self):
        config = IntegrationConfig(t_end=100.0)
        assert config.stride == pytest.approx(0.05)


class TestTrajectoryShape:
    def test_times_and_bounds(self):
        params = showcase_params(p2=0.5)
        traj = integrate(params, SHOWCASE_IC_SETTLING, IntegrationConfig(t_end=20.0, output_stride=0.5))
        assert traj.times[0] == 0.0
        assert traj.times[-1] == 20.0
        assert np.all(np.diff(traj.times) > 0.0)
        assert np.all(traj.states >= 0.0)
        assert len(traj) == 41
        # interior samples sit exactly on the stride grid
        assert np.allclose(traj.times, np.arange(41) * 0.5, rtol=0, atol=1e-9)

    def test_final_state_accessor(self):
        params = showcase_params(p2=0.5)
        traj = integrate(params, SHOWCASE_IC_SETTLING, IntegrationConfig(t_end=5.0))
        assert traj.final.as_tuple() == tuple(traj.states[-1])
        assert traj.state_at(0).as_tuple() == SHOWCASE_IC_SETTLING.as_tuple()

    def test_zero_initial_state_stays_zero(self):
        traj = integrate(
            REFERENCE_PARAMETERS, CellState(0.0, 0.0, 0.0), IntegrationConfig(t_end=50.0)
        )
        assert np.all(traj.states == 0.0)


class TestAccuracy:
    def test_converges_to_positive_equilibrium(self):
        # stable regime: p2 above the critical value
        params = showcase_params(p2=0.5)
        e2 = steady_state_E2(params).state
        traj = integrate(params, SHOWCASE_IC_SETTLING, IntegrationConfig(t_end=1500.0))
        assert relative_distance(traj.final, e2) < 1e-3

    def test_extinction_when_renewal_weak(self):
        params = ModelParameters(a1=0.3, a2=0.4, p1=1.0, p2=0.8, d3=0.5, k=1e-8)
        initial = CellState(1e3, 1e3, 1e3)
        traj = integrate(params, initial, IntegrationConfig(t_end=200.0))
        assert np.all(traj.states >= 0.0)
        assert np.linalg.norm(traj.final.as_tuple()) < 1.0

    def test_self_convergence_under_tolerance_halving(self):
        params = showcase_params(p2=0.5)
        coarse = IntegrationConfig(t_end=100.0, rel_tol=1e-6, abs_tol=1.0)
        fine = IntegrationConfig(t_end=100.0, rel_tol=5e-7, abs_tol=0.5)
        a = np.array(integrate(params, SHOWCASE_IC_SETTLING, coarse).final.as_tuple())
        b = np.array(integrate(params, SHOWCASE_IC_SETTLING, fine).final.as_tuple())
        allowance = coarse.abs_tol + coarse.rel_tol * np.linalg.norm(a, np.inf)
        # global error accumulates over many steps; stay within a modest
        # multiple of the per-step allowance
        assert np.linalg.norm(a - b, np.inf) < 100.0 * allowance

    def test_fifth_order_convergence(self):
        """Fixed-step error against a tight reference scales like h^5."""
        params = showcase_params(p2=0.5)
        t_end = 8.0
        ref = integrate(
            params, SHOWCASE_IC_SETTLING, IntegrationConfig(t_end=t_end, rel_tol=1e-12, abs_tol=1e-6)
        ).final
        ref = np.array(ref.as_tuple())
        errors = []
        for h in (0.5, 0.25, 0.125):
            # enormous abs_tol parks the controller at max_step, turning the
            # adaptive scheme into a fixed-step one for the order measurement
            config = IntegrationConfig(
                t_end=t_end, rel_tol=1e-3, abs_tol=1e15, max_step=h,
                initial_step=h, output_stride=t_end,
            )
            final = np.array(integrate(params, SHOWCASE_IC_SETTLING, config).final.as_tuple())
            errors.append(np.linalg.norm(final - ref) / np.linalg.norm(ref))
        order1 = math.log2(errors[0] / errors[1])
        order2 = math.log2(errors[1] / errors[2])
        assert 4.0 < order1 < 6.5
        assert 4.0 < order2 < 6.5

    def test_dense_samples_match_tight_reference(self):
        params = showcase_params(p2=0.5)
        loose = integrate(
            params, SHOWCASE_IC_SETTLING,
            IntegrationConfig(t_end=50.0, rel_tol=1e-8, abs_tol=1e-3, output_stride=0.25),
        )
        tight = integrate(
            params, SHOWCASE_IC_SETTLING,
            IntegrationConfig(t_end=50.0, rel_tol=1e-12, abs_tol=1e-6, output_stride=0.25),
        )
        assert np.allclose(loose.times, tight.times, rtol=0, atol=1e-9)
        scale = np.abs(tight.states).max()
        assert np.abs(loose.states - tight.states).max() < 1e-6 * scale

    def test_rescaled_run_matches_original_timebase(self):
        params = REFERENCE_PARAMETERS  # p1 = 0.1
        initial = CellState(1e6, 1e7, 1e8)
        t_end = 80.0
        original = integrate(
            params, initial,
            IntegrationConfig(t_end=t_end, rel_tol=1e-10, output_stride=1.0),
        )
        rescaled = integrate(
            nondimensionalize(params), initial,
            IntegrationConfig(t_end=0.1 * t_end, rel_tol=1e-10, output_stride=0.1),
        )
        assert np.allclose(rescaled.times, 0.1 * original.times, rtol=0, atol=1e-9)
        scale = np.abs(original.states).max()
        assert np.abs(original.states - rescaled.states).max() < 1e-6 * scale


class TestPositivityAndBounds:
    def test_random_draws_stay_nonnegative_and_boxed(self):
        rng = np.random.default_rng(31)
        for i in range(120):
            params, initial = draw_box_admissible(rng, extended=bool(i % 2))
            box = invariant_box(params, initial)
            traj = integrate(
                params, initial, IntegrationConfig(t_end=150.0 / params.p1)
            )
            assert np.all(traj.states >= 0.0)
            bounds = np.array([box.c1, box.c2, box.c3])
            assert np.all(traj.states <= bounds[None, :])

    def test_decay_through_noise_floor_does_not_abort(self):
        # components hovering near zero wobble within the error allowance;
        # the band policy must retry, not raise
        params = ModelParameters(a1=0.55, a2=0.3, p1=0.9, p2=0.2, d3=0.4, k=1e-8, d1=0.5, d2=1.0)
        initial = CellState(2e3, 5e2, 1e4)
        traj = integrate(params, initial, IntegrationConfig(t_end=400.0, abs_tol=1e-3))
        assert np.all(traj.states >= 0.0)


class TestFailureModes:
    def test_blowup_reported_with_partial_trajectory(self):
        # feedback too weak to matter before overflow; growth hits the float
        # ceiling and the error carries what was integrated up to that point
        params = ModelParameters(a1=0.99, a2=0.2, p1=3.0, p2=0.1, d3=0.1, k=1e-320)
        with pytest.raises(IntegrationError) as info:
            integrate(params, CellState(1e300, 1e300, 1e300), IntegrationConfig(t_end=50.0))
        err = info.value
        assert isinstance(err.trajectory, Trajectory)
        assert len(err.trajectory) > 1
        assert 0.0 < err.time < 50.0
        assert err.trajectory.times[-1] <= err.time

    def test_initial_state_type_checked(self):
        with pytest.raises(TypeError):
            integrate(REFERENCE_PARAMETERS, (1.0, 2.0, 3.0), IntegrationConfig(t_end=1.0))
