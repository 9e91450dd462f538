import math

import numpy as np
import pytest
from scipy.special import hyp1f1

from ring_dynamics.analytic_solution import (
    Branch,
    DensitySnapshot,
    density_map,
    evaluate_staircase,
    invert_laplace,
    kummer_polynomial,
    laplace_amplitude,
    plateau_flatness,
    random_density_check,
    series_amplitude,
    staircase_pieces,
    validity_horizon,
)
from ring_dynamics.errors import DomainError, InvalidState, InvalidValue, PoleProximity, WrongParity
from ring_dynamics.lattice_bath import LatticeParams, feedback_rates


@pytest.fixture
def odd_rates():
    return feedback_rates(LatticeParams(N=501, alpha=0.01))


@pytest.mark.parametrize("n", [1, 2, 3, 4, 6])
@pytest.mark.parametrize("y", [0.1, 1.0, 3.0])
def test_kummer_polynomial_matches_scipy(n, y):
    assert kummer_polynomial(n, y) == pytest.approx(hyp1f1(1 - n, 2, y), rel=1e-10, abs=1e-14)
    # Kummer's transformation
    assert math.exp(-y) * kummer_polynomial(n, y) == pytest.approx(hyp1f1(n + 1, 2, -y), rel=1e-8, abs=1e-14)


def test_series_is_pure_decay_before_the_first_return(blockade_rates):
    rates = blockade_rates
    for t in (0.0, 10.0, 0.99 * rates.T_minus):
        assert series_amplitude(rates, t) == pytest.approx(math.exp(-0.5 * rates.gamma0 * t), rel=1e-15)


def test_first_loop_term(blockade_rates):
    rates = blockade_rates
    u = 0.4 * rates.T_minus
    t = rates.T_minus + u
    revival = series_amplitude(rates, t) - math.exp(-0.5 * rates.gamma0 * t)
    assert revival.real == pytest.approx(rates.gamma0_minus * u * math.exp(-0.5 * rates.gamma0 * u), rel=1e-12)


def test_series_domain(blockade_rates, odd_rates):
    with pytest.raises(DomainError):
        series_amplitude(blockade_rates, -1.0)
    with pytest.raises(DomainError):
        series_amplitude(blockade_rates, blockade_rates.T_plus)
    with pytest.raises(WrongParity):
        series_amplitude(odd_rates, 1.0)


def test_laplace_limits(blockade_rates):
    rates = blockade_rates
    assert 1e6 * laplace_amplitude(rates, 1e6) == pytest.approx(1.0, rel=1e-9)
    assert laplace_amplitude(rates, 0.0) == pytest.approx(2.0 / rates.gamma0_plus, rel=1e-12)
    with pytest.raises(PoleProximity):
        laplace_amplitude(rates, 1j * math.pi / rates.T_minus)


def test_bromwich_inversion_reproduces_the_series(blockade_rates):
    rates = blockade_rates
    for loops in (0.5, 1.7, 2.3):
        t = loops * rates.T_minus
        assert abs(invert_laplace(rates, t) - series_amplitude(rates, t)) < 1e-6


def test_even_staircase_plateaus(blockade_rates):
    rates = blockade_rates
    pieces = staircase_pieces(rates)
    assert pieces[0].branch == Branch.EVEN_CLASS
    assert pieces[0].eps_R == pytest.approx((1.0, -0.5 * rates.gamma0))
    for n, piece in ((1, pieces[1]), (2, pieces[3]), (3, pieces[5])):
        assert abs(piece.eps_R[1]) < 1e-15
        assert piece.value(piece.t_lo) == pytest.approx(1.0 - 0.5 * n * rates.gamma0 * rates.T_minus, abs=1e-12)
    assert all(piece.eps_I == (0.0, 0.0) for piece in pieces)


def test_staircase_tiles_up_to_the_slow_loop(blockade_rates):
    rates = blockade_rates
    pieces = staircase_pieces(rates)
    assert len(pieces) == 6
    assert pieces[-1].t_hi == pytest.approx(rates.T_plus)
    for left, right in zip(pieces, pieces[1:]):
        assert left.t_hi == right.t_lo
        assert left.value(left.t_hi) == pytest.approx(right.value(right.t_lo), abs=1e-14)
    assert pieces[2].interval_in_loops(rates.T_minus) == pytest.approx((2.0, 3.0))


@pytest.mark.parametrize("N, branch, sign", [(501, Branch.ODD_PLUS, 1.0), (503, Branch.ODD_MINUS, -1.0)])
def test_odd_staircase_imaginary_slopes(N, branch, sign):
    rates = feedback_rates(LatticeParams(N=N, alpha=0.01))
    pieces = staircase_pieces(rates)
    assert pieces[0].branch == branch
    slopes = [piece.eps_I[1] for piece in pieces]
    for j in (1, 2, 5):
        assert slopes[j] == pytest.approx(sign * rates.gamma0_minus, rel=1e-12)
    for j in (3, 4):
        assert abs(slopes[j]) < 1e-15


def test_no_staircase_for_quiet_rings():
    with pytest.raises(WrongParity):
        staircase_pieces(feedback_rates(LatticeParams(N=504, alpha=0.01)))


def test_staircase_follows_the_series_to_second_order(blockade_rates):
    rates = blockade_rates
    pieces = staircase_pieces(rates)
    t = np.linspace(0.0, 0.999 * rates.T_plus, 1201)
    approximant = evaluate_staircase(pieces, t)
    series = np.array([series_amplitude(rates, ti) for ti in t])
    assert np.all(np.abs(approximant - series) <= 3.0 * (rates.gamma0 * t) ** 2 + 1e-15)

    horizon = validity_horizon(rates, pieces)
    assert 2 * rates.T_minus <= horizon <= rates.T_plus


def test_evaluate_staircase_outside_pieces(blockade_rates):
    values = evaluate_staircase(staircase_pieces(blockade_rates, n_pieces=2), [-1.0, 1.0, 3 * blockade_rates.T_minus])
    assert np.isnan(values[0].real) and np.isnan(values[0].imag)
    assert values[1] == pytest.approx(1.0 - 0.5 * blockade_rates.gamma0)
    assert np.isnan(values[2].real)


def test_plateau_flatness():
    t = np.linspace(0.0, 10.0, 101)
    values = np.where(t < 5.0, 1.0, 1.0 - 0.01 * (t - 5.0))
    assert plateau_flatness(t, values, 0.0, 5.0) == 0.0
    assert plateau_flatness(t, values, 5.0, 10.0, margin=0.95) == pytest.approx(0.03)


def test_density_map_keeps_a_valid_state():
    check = random_density_check(np.random.default_rng(7))
    assert check["samples"] == 1000
    assert check["max_trace_error"] < 1e-14
    assert check["min_eigenvalue"] >= -1e-12

    again = random_density_check(np.random.default_rng(7))
    assert again == check
    with pytest.raises(InvalidValue):
        random_density_check(np.random.default_rng(7), samples=0)


def test_density_map_limits():
    rho0 = DensitySnapshot(rho_ee=0.5, rho_eg=0.5, rho_ge=0.5, rho_gg=0.5)
    assert density_map(1.0, rho0).matrix() == pytest.approx(rho0.matrix())
    decayed = density_map(0.0, rho0, t=3.0)
    assert decayed.rho_ee == 0.0 and decayed.rho_eg == 0.0 and decayed.rho_gg == pytest.approx(1.0)
    assert decayed.t == 3.0

    half = density_map(1j * math.sqrt(0.5), rho0)
    assert half.rho_ee == pytest.approx(0.25)
    assert half.rho_eg == pytest.approx(0.5j * math.sqrt(0.5))
    assert half.rho_gg == pytest.approx(0.75)


@pytest.mark.parametrize("matrix, eps", [
    ([[0.5, 0.4], [0.1, 0.5]], 0.5),
    ([[1.0, 0.0], [0.0, 1.0]], 0.5),
    ([[1.5, 0.0], [0.0, -0.5]], 0.5),
    ([[1.0, 0.0], [0.0, 0.0]], 1.2),
])
def test_density_map_rejects_invalid_input(matrix, eps):
    with pytest.raises(InvalidState):
        density_map(eps, DensitySnapshot.from_matrix(np.array(matrix, dtype=complex)))
