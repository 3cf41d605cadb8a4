import math

import numpy as np
import pytest

from core.epidemic_model import (
    alpha_at,
    apply_impulse,
    daily_rates,
    gamma_at,
    impulse_transfer,
    rho_at,
    rhs,
)
from core.errors import ConfigError
from core.models import CompartmentState, InterventionSchedule, ParameterSet


def test_alpha_switches_after_change_point():
    sched = InterventionSchedule(alpha_days=(12, 35), gamma_days=(35,))
    params = ParameterSet(alpha=[1.0, 2.0, 3.0], beta=0.1, beta_star=0.0, gamma=[0.1, 0.2], zeta=0.01)
    assert alpha_at(0, params, sched) == 1.0
    assert alpha_at(12, params, sched) == 1.0
    assert alpha_at(12.5, params, sched) == 2.0
    assert alpha_at(35, params, sched) == 2.0
    assert alpha_at(36, params, sched) == 3.0
    assert gamma_at(35, params, sched) == 0.1
    assert gamma_at(35.01, params, sched) == 0.2


def test_rho_only_from_vaccine_day():
    sched = InterventionSchedule(T_V=420)
    params = ParameterSet(alpha=[1e-7], beta=0.05, beta_star=0.0, gamma=[0.02], zeta=1e-4, rho=0.009)
    assert rho_at(419.9, params, sched) == 0.0
    assert rho_at(420, params, sched) == pytest.approx(0.009)
    assert rho_at(10_000, params, InterventionSchedule()) == 0.0


def test_rhs_sums_to_zero(toy_params, toy_schedule):
    rng = np.random.default_rng(7)
    for _ in range(200):
        state = CompartmentState.from_array(rng.uniform(0, 1e6, size=7))
        t = rng.uniform(0, 40)
        derivatives = rhs(t, state, toy_params, toy_schedule)
        assert abs(derivatives.sum()) <= 1e-12 * max(1.0, np.abs(derivatives).max())


def test_rhs_matches_hand_computation():
    params = ParameterSet(alpha=[1e-3], beta=0.2, beta_star=0.0, gamma=[0.1], zeta=0.05, rho=0.01)
    sched = InterventionSchedule(T_V=0)
    state = CompartmentState(S=100, E=10, I=5, R_E=2, R_I=1, D=0, V=3)
    expected = np.array([
        -1e-3 * 100 * 10 - 0.01 * 100,
        1e-3 * 100 * 10 - (0.2 + 0.1 + 0.01) * 10,
        0.2 * 10 - (0.1 + 0.05) * 5,
        0.1 * 10 - 0.01 * 2,
        0.1 * 5,
        0.05 * 5,
        0.01 * (100 + 10 + 2),
    ])
    np.testing.assert_allclose(rhs(1.0, state, params, sched), expected)


def test_daily_rates_use_interval_regime(reference_params, reference_schedule):
    alpha, gamma, rho = daily_rates(reference_params, reference_schedule, 430)
    assert alpha.shape == gamma.shape == rho.shape == (430,)
    # interval (12, 13) is the first one after the day-12 change point
    assert alpha[11] == reference_params.alpha[0]
    assert alpha[12] == reference_params.alpha[1]
    assert np.all(rho[:420] == 0.0)
    assert np.all(rho[420:] == reference_params.rho)


def test_frozen_schedule_holds_pre_vaccine_regimes(reference_schedule):
    frozen = reference_schedule.counterfactual()
    assert frozen.T_V is None
    assert frozen.alpha_index(500.0) == reference_schedule.alpha_index(420.0)
    assert frozen.gamma_index(500.0) == reference_schedule.gamma_index(420.0)
    assert not frozen.vaccine_on(500.0)


def test_impulse_moves_exposed_to_infected():
    state = CompartmentState(S=1000, E=200, I=10)
    after = apply_impulse(state, 0.7888)
    moved = 200 * (1 - math.exp(-0.7888))
    assert after.E == pytest.approx(200 - moved)
    assert after.I == pytest.approx(10 + moved)
    assert after.total == pytest.approx(state.total)
    assert impulse_transfer(200.0, 0.0) == 0.0


def _smeared_impulse(E: float, I: float, beta_star: float, width: float = 1e-3, h: float = 1e-5):
    """RK4 through a box kernel of the given width standing in for the delta at tau"""
    k = beta_star / width
    y = np.array([E, I])

    def f(y):
        return np.array([-k * y[0], k * y[0]])

    for _ in range(int(round(width / h))):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


@pytest.mark.parametrize("beta_star", [0.1, 0.7888, 4.65])
def test_impulse_matches_narrow_pulse_limit(beta_star):
    state = CompartmentState(S=1000, E=200, I=10)
    E, I = _smeared_impulse(state.E, state.I, beta_star)
    after = apply_impulse(state, beta_star)
    assert after.E == pytest.approx(E, rel=1e-3)
    assert after.I == pytest.approx(I, rel=1e-3)


def test_large_impulse_never_empties_below_zero():
    after = apply_impulse(CompartmentState(E=50), 40.0)
    assert after.E >= 0.0
    assert after.I == pytest.approx(50.0)


def test_negative_impulse_rejected():
    with pytest.raises(ValueError):
        apply_impulse(CompartmentState(E=1), -0.1)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"alpha_days": (10, 10)},
        {"alpha_days": (20, 10)},
        {"alpha_days": (1.5,)},
        {"alpha_days": (10,), "gamma_days": (5, 8)},
        {"tau": -1},
    ],
)
def test_invalid_schedules(kwargs):
    with pytest.raises(ConfigError):
        InterventionSchedule(**kwargs)


def test_parameter_count_must_match_schedule(toy_schedule):
    params = ParameterSet(alpha=[1.0], beta=0.1, beta_star=0.0, gamma=[0.1, 0.2], zeta=0.01)
    with pytest.raises(ConfigError):
        toy_schedule.check_parameters(params)
