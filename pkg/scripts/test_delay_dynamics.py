import math

import numpy as np
import pytest

from ring_dynamics.analytic_solution import series_trajectory
from ring_dynamics.delay_dynamics import delay_spec, feedback_ladder, solve_dde
from ring_dynamics.errors import GridIncommensurate, InvalidValue
from ring_dynamics.exact_dynamics import evolve_modespace
from ring_dynamics.lattice_bath import LatticeParams, band_structure, feedback_rates
from ring_dynamics.trajectory import max_deviation


def test_pure_decay_before_the_first_return(blockade_rates):
    rates = blockade_rates
    trajectory = solve_dde(delay_spec(rates, 0.9 * rates.T_minus), 0.9 * rates.T_minus)
    expected = np.exp(-0.5 * rates.gamma0 * trajectory.t_grid)
    assert np.allclose(trajectory.epsilon, expected, rtol=1e-12, atol=0.0)
    assert np.all(np.diff(np.abs(trajectory.epsilon)) <= 0.0)


def test_first_plateau_height(blockade_rates):
    rates = blockade_rates
    t = 1.5 * rates.T_minus
    trajectory = solve_dde(delay_spec(rates, 2 * rates.T_minus), 2 * rates.T_minus)
    plateau = 1.0 - 0.5 * rates.gamma0 * rates.T_minus
    assert abs(trajectory.at(t) - plateau) < (rates.gamma0 * t) ** 2 / 4


def test_first_return_bends_without_a_jump(blockade_rates):
    rates = blockade_rates
    spec = delay_spec(rates, 2.5 * rates.T_minus)
    h = spec.default_dt()
    trajectory = solve_dde(spec, 2.5 * rates.T_minus)
    eps = trajectory.epsilon

    for n in (1, 2):
        m = n * 2000
        assert abs(eps[m + 1] - eps[m]) < 2 * rates.gamma0 * h
        kink = (eps[m + 1] - eps[m]) / h - (eps[m] - eps[m - 1]) / h
        expected = -rates.gamma_n(n, "-") * eps[m - 2000 * n]
        assert kink == pytest.approx(expected, rel=1e-3)


def test_matches_closed_form_before_the_slow_loop(blockade_rates):
    rates = blockade_rates
    t_max = 5.5 * rates.T_minus
    trajectory = solve_dde(delay_spec(rates, t_max), t_max, stride=10)
    series = series_trajectory(rates, trajectory.t_grid)
    assert max_deviation(trajectory, series) < 1e-8


def test_incommensurate_step_is_rejected(blockade_rates):
    rates = blockade_rates
    spec = delay_spec(rates, 2 * rates.T_minus)
    with pytest.raises(GridIncommensurate):
        solve_dde(spec, 2 * rates.T_minus, dt=rates.T_minus / 2000.5)
    with pytest.raises(InvalidValue):
        solve_dde(spec, 2 * rates.T_minus, dt=0.0)


def test_ladder_lists_every_active_loop():
    rates = feedback_rates(LatticeParams(N=501, alpha=0.05))
    spec = delay_spec(rates, 6.5 * rates.T_minus)
    ladder = feedback_ladder(spec)
    assert spec.n_max("-") == 7 and spec.n_max("+") == 2
    assert len(ladder) == 9
    fast = [entry for entry in ladder if entry["band"] == "-"]
    assert [entry["n"] for entry in fast] == list(range(1, 8))
    assert all(math.hypot(entry["re"], entry["im"]) == pytest.approx(rates.gamma0_minus) for entry in fast)
    assert fast[0]["im"] == pytest.approx(-rates.gamma0_minus)
    assert fast[2]["delay"] == pytest.approx(3 * rates.T_minus)


def test_detuning_rotates_the_amplitude(blockade_rates):
    rates = blockade_rates
    t_max = 0.5 * rates.T_minus
    trajectory = solve_dde(delay_spec(rates, t_max, omega_e=0.2), t_max)
    expected = np.exp(-(0.2j + 0.5 * rates.gamma0) * trajectory.t_grid)
    assert np.max(np.abs(trajectory.epsilon - expected)) < 1e-10


@pytest.mark.slow
def test_tracks_exact_revivals():
    params = LatticeParams(N=502, alpha=0.25)
    rates = feedback_rates(params)
    t_max = 3 * rates.T_minus
    exact = evolve_modespace(params, band_structure(params), t_max, dt=0.01, stride=10)
    delayed = solve_dde(delay_spec(rates, t_max), t_max, stride=10)
    assert max_deviation(delayed, exact, t_max) < 0.1
