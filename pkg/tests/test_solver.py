from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renewalctl.rates import Fertility, Profile, RateField
from renewalctl.scenario import (ControlSchedule, InitialData, PiecewiseConstant, Scenario,
                                 ScenarioError, constant_rates)
from renewalctl.solver import (GridAlignmentError, aligned_step_count, boundary_trace, solve,
                               trapezoid_weights)

from conftest import gen_setup, periodic_setup, simple_scenario


def test_zero_data_gives_zero_solution():
    sc = simple_scenario(J0=0.0, w_scale=3.0)
    traj = solve(sc, ControlSchedule.constant(0.5, (), sc.horizon))
    assert not traj.J.any() and not traj.S.any() and not traj.R.any()


def test_zero_fertility_and_full_selection_keeps_R_empty():
    sc = simple_scenario(horizon=2.0, dJ=0.3)
    traj = solve(sc, ControlSchedule.constant(1.0, (), sc.horizon))
    assert np.all(traj.R == 0.0)
    assert traj.S.max() > 0


def test_pure_transport_shifts_profile():
    # no deaths, no births: J(t, a) = J_o(a - t) for a >= t
    prof = Profile.table([0.0, 0.5, 1.0], [0.0, 1.0, 0.0])
    sc = replace(simple_scenario(horizon=0.5), initial=InitialData(J=prof))
    traj = solve(sc, ControlSchedule.constant(1.0, (), sc.horizon), dt=0.5 / 200)
    ages = traj.age_J
    expected = prof(np.clip(ages - 0.5, 0.0, None)) * (ages >= 0.5)
    np.testing.assert_allclose(traj.J[-1], expected, atol=1e-12)


def test_mortality_decay_along_characteristic():
    sc = simple_scenario(horizon=0.8, dJ=0.7)
    traj = solve(sc, ControlSchedule.constant(1.0, (), sc.horizon))
    older = traj.age_J > 0.8 + 1e-12  # the diagonal node itself holds the one-sided mean
    np.testing.assert_allclose(traj.J[-1][older], np.exp(-0.7 * 0.8), rtol=1e-12)


def test_mass_balance_without_births():
    # total J + S + R with sales switched off and no deaths is conserved
    sc = simple_scenario(horizon=0.6, sell_ages=(5.0,))
    traj = solve(sc, ControlSchedule.constant(0.4, (1.0,), sc.horizon, theta_N_zero=False))
    totals = traj.totals()
    total = totals["J"] + totals["S"] + totals["R"]
    np.testing.assert_allclose(total, total[0], rtol=1e-10)


def test_sell_age_jump():
    sc = simple_scenario(horizon=1.0, sell_ages=(1.25, 1.75))
    schedule = ControlSchedule.constant(1.0, (0.4,), sc.horizon)
    traj = solve(sc, schedule)
    left, right = traj.sell_columns[0], traj.sell_columns[0] + 1
    live = traj.S[:, left] > 0
    np.testing.assert_allclose(traj.S[live, right], 0.4 * traj.S[live, left], rtol=1e-12)
    np.testing.assert_allclose(boundary_trace(traj, 0), traj.traces[0])


def test_boundary_trace_full_retention_is_continuous():
    sc = simple_scenario(horizon=1.0, sell_ages=(1.25, 1.75))
    traj = solve(sc, ControlSchedule.constant(1.0, (1.0,), sc.horizon))
    col = traj.sell_columns[0]
    np.testing.assert_allclose(traj.S[:, col + 1], traj.S[:, col])
    # S at age 1.25 was J at the boundary 0.25 time units earlier
    t = traj.times
    expected = np.where(t >= 0.25 - 1e-12, 1.0, 0.0)
    np.testing.assert_allclose(boundary_trace(traj, 0)[t > 0.26], expected[t > 0.26])


def test_boundary_trace_index_error():
    sc = simple_scenario()
    traj = solve(sc, ControlSchedule.constant(1.0, (), sc.horizon))
    with pytest.raises(IndexError):
        boundary_trace(traj, 1)


def test_arrays_are_read_only():
    sc = simple_scenario()
    traj = solve(sc, ControlSchedule.constant(1.0, (), sc.horizon))
    with pytest.raises(ValueError):
        traj.J[0, 0] = 1.0


@settings(max_examples=15, deadline=None)
@given(eta=st.floats(0, 1), w=st.floats(0, 20), dJ=st.floats(0, 2), dS=st.floats(0, 2))
def test_positivity(eta, w, dJ, dS):
    sc = simple_scenario(horizon=1.5, w_scale=w, dJ=dJ, dS=dS)
    traj = solve(sc, ControlSchedule.constant(eta, (), sc.horizon), dt=1.5 / 300)
    assert traj.minimum() >= 0.0


@settings(max_examples=10, deadline=None)
@given(a=st.floats(0.1, 5), b=st.floats(0.1, 5))
def test_linearity_in_initial_data(a, b):
    sc, layout, _ = gen_setup()
    schedule = layout.schedule(np.array([0.3, 0.7]))
    p1 = Profile.table([0.0, 0.5, 1.0], [1.0, 2.0, 0.5])
    p2 = Profile.table([0.0, 0.5, 1.0], [0.0, 1.0, 3.0])
    mix = Profile.table([0.0, 0.5, 1.0], [a * 1.0 + b * 0.0, a * 2.0 + b * 1.0,
                                          a * 0.5 + b * 3.0])
    dt = sc.horizon / 400
    u1 = solve(sc.with_initial(InitialData(J=p1)), schedule, dt)
    u2 = solve(sc.with_initial(InitialData(J=p2)), schedule, dt)
    um = solve(sc.with_initial(InitialData(J=mix)), schedule, dt)
    for u in ("J", "S", "R"):
        combo = a * u1.values(u) + b * u2.values(u)
        scale = max(np.abs(combo).max(), 1e-300)
        assert np.abs(um.values(u) - combo).max() / scale <= 1e-10


def test_multiaffine_in_eta_at_sample_point():
    sc, layout, ev = gen_setup()
    rng = np.random.default_rng(0)
    for _ in range(3):
        x = rng.uniform(size=2)
        bilinear = sum(ev(np.array(v, float)) * np.prod([xi if vi else 1 - xi
                                                         for xi, vi in zip(x, v)])
                       for v in [(0, 0), (1, 0), (0, 1), (1, 1)])
        assert ev(x) == pytest.approx(bilinear, rel=1e-10)


def test_profit_continuous_in_controls():
    sc, layout, ev = periodic_setup()
    x = np.array([0.4, 0.6])
    assert abs(ev(x + 1e-7) - ev(x)) < 1e-5


def test_explicit_step_must_align():
    sc = simple_scenario(horizon=1.0)
    schedule = ControlSchedule(PiecewiseConstant((0.0, 1 / 3, 1.0), (0.2, 0.9)))
    traj = solve(sc, schedule)
    assert np.any(np.isclose(traj.times, 1 / 3, atol=1e-12))
    with pytest.raises(GridAlignmentError):
        aligned_step_count(1.0, [np.pi / 10], 10, max_steps=1000)


def test_aligned_step_count_rational():
    assert aligned_step_count(2.0, [0.5, 1.0, 2.0], 7) % 4 == 0


def test_trapezoid_weights():
    x = np.array([0.0, 0.5, 2.0])
    np.testing.assert_allclose(trapezoid_weights(x), [0.25, 1.0, 0.75])
    f = x ** 1
    assert trapezoid_weights(x) @ f == pytest.approx(2.0)


def test_variable_speed_matches_oracle():
    from renewalctl.oracle import solve_upwind_oracle
    from renewalctl.functionals import profit
    from renewalctl.scenario import EconomicData
    g = RateField.from_function(lambda t, a: 1.0 + 0.2 * t + 0 * a, np.linspace(0, 1, 11),
                                np.array([0.0, 10.0]), lower_bound=1.0)
    base = simple_scenario(horizon=1.0, w_scale=2.0, dJ=0.2, sell_ages=(1.5,))
    sc = replace(base, g={**base.g, "J": g}, amax=None,
                 econ=EconomicData.linear(1.0, (1.0,)))
    schedule = ControlSchedule.constant(0.5, (), sc.horizon)
    fine = profit(solve(sc, schedule, dt=1 / 2000), sc.econ)
    oracle = profit(solve_upwind_oracle(sc, schedule, 1 / 400), sc.econ)
    assert fine == pytest.approx(oracle, abs=5e-3)


def test_scenario_validation():
    with pytest.raises(ScenarioError):
        simple_scenario(sell_ages=(0.5,))
    with pytest.raises(ScenarioError):
        replace(simple_scenario(), rate_convention="bogus")
    with pytest.raises(ScenarioError):
        replace(simple_scenario(), amax=1.0)
    with pytest.raises(ScenarioError):
        PiecewiseConstant((0.0, 1.0), (1.5,))


def test_everything_sold_empties_downstream():
    sc = simple_scenario(horizon=1.0, sell_ages=(1.25, 1.75))
    traj = solve(sc, ControlSchedule.constant(1.0, (0.0,), sc.horizon))
    right = traj.sell_columns[0] + 1
    assert not traj.S[:, right:].any()
    assert traj.traces[0].max() > 0
