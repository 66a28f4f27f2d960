from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renewalctl.functionals import (FunctionalError, cost, income, profit,
                                    quadratic_J_term)
from renewalctl.rates import Profile
from renewalctl.scenario import ControlSchedule, EconomicData, InitialData, ValuePolynomial
from renewalctl.solver import solve

from conftest import gen_setup, simple_scenario


def test_zero_economics_gives_zero_profit():
    sc, layout, _ = gen_setup()
    traj = solve(sc, layout.schedule(np.array([0.5, 0.5])))
    assert profit(traj, EconomicData.linear(0.0, (0.0,) * sc.n_sell)) == 0.0


def test_full_retention_earns_no_sale_income():
    sc = simple_scenario(horizon=1.0, sell_ages=(1.25, 1.75),
                         econ=EconomicData.linear(0.0, (5.0, 5.0)))
    traj = solve(sc, ControlSchedule.constant(1.0, (1.0, 1.0), sc.horizon,
                                              theta_N_zero=False))
    assert income(traj, sc.econ) == 0.0


def test_constant_trace_income():
    # S enters at abar = 1 with unit density, reaches a_1 = 1 + 0 instantly when the
    # initial S already fills [1, 1.5]; with price q the income is q * s0 * T
    sc = simple_scenario(horizon=0.5, sell_ages=(1.5,), econ=EconomicData.linear(0.0, (3.0,)))
    sc = replace(sc, initial=InitialData(J=Profile.constant(1.0),
                                         S=Profile.constant(2.0, 1.0, 1.5)))
    # eta = 1 keeps S fed at density 1 from the boundary; initial S supplies 2 until t = 0.5
    traj = solve(sc, ControlSchedule.constant(1.0, (), sc.horizon))
    assert income(traj, sc.econ) == pytest.approx(3.0 * 2.0 * 0.5, rel=1e-12)


def test_quadratic_term_zero_on_target():
    sc = simple_scenario(horizon=1.0)
    traj = solve(sc, ControlSchedule.constant(0.0, (), sc.horizon))
    # J is 1 above the diagonal a = t and 0 below it; squaring the diagonal node,
    # which holds the one-sided mean, costs O(dt)
    assert quadratic_J_term(traj, 1.0) == pytest.approx(0.5, abs=5 * traj.dt)
    assert quadratic_J_term(traj, 0.0) == pytest.approx(0.5, abs=5 * traj.dt)
    sc_flat = replace(sc, w=replace(sc.w, scale=0.0),
                      initial=InitialData(J=Profile.constant(0.0)))
    flat = solve(sc_flat, ControlSchedule.constant(0.0, (), sc.horizon))
    assert quadratic_J_term(flat, 0.0) == 0.0


def test_quadratic_sign_conventions():
    sc = simple_scenario(horizon=1.0)
    traj = solve(sc, ControlSchedule.constant(0.0, (), sc.horizon))
    quad = quadratic_J_term(traj, 0.25)
    printed = EconomicData.linear(0.0, (0.0,), quadratic_J=True, J_target=0.25)
    stab = replace(printed, quadratic_sign="stabilizing")
    assert cost(traj, printed) == pytest.approx(-quad)
    assert cost(traj, stab) == pytest.approx(quad)


def test_running_cost_of_constant_population():
    sc = simple_scenario(horizon=0.5, econ=EconomicData.linear(
        0.0, (0.0,), running_costs={"J": 2.0}))
    traj = solve(sc, ControlSchedule.constant(1.0, (), sc.horizon))
    # int_0^0.5 int_0^1 J = int_0^0.5 (1 - t) dt = 0.375
    assert cost(traj, sc.econ) == pytest.approx(2.0 * 0.375, rel=1e-6)


def test_nonlinear_value_polynomial():
    poly = ValuePolynomial((0.0, 1.0, -0.5))
    assert poly(np.array([2.0])) == pytest.approx(0.0)
    sc = simple_scenario(horizon=0.5, econ=EconomicData(terminal=poly))
    traj = solve(sc, ControlSchedule.constant(1.0, (), sc.horizon))
    # J(T) = 1 on ages above 0.5: (1 - 0.5) * 0.5
    assert income(traj, sc.econ) == pytest.approx(0.25, abs=1e-3)


def test_sale_count_mismatch():
    sc = simple_scenario()
    traj = solve(sc, ControlSchedule.constant(1.0, (), sc.horizon))
    with pytest.raises(FunctionalError):
        income(traj, EconomicData.linear(0.0, (1.0, 1.0)))


@settings(max_examples=10, deadline=None)
@given(scale=st.floats(0.1, 10))
def test_profit_linear_in_initial_scale(scale):
    sc, layout, ev = gen_setup()
    schedule = layout.schedule(np.array([0.2, 0.6]))
    dt = sc.horizon / 400
    base = profit(solve(sc, schedule, dt), sc.econ)
    scaled_sc = sc.with_initial(InitialData(J=Profile.constant(scale * sc.initial.J(0.0))))
    assert profit(solve(scaled_sc, schedule, dt), sc.econ) == pytest.approx(
        scale * base, rel=1e-10, abs=1e-12)


def test_income_monotone_in_sale_price():
    sc, layout, _ = gen_setup()
    traj = solve(sc, layout.schedule(np.array([1.0, 1.0])))
    prices = [income(traj, EconomicData.linear(0.0, (p,) * sc.n_sell)) for p in (1, 2, 4)]
    assert prices[0] <= prices[1] <= prices[2]
