"""Built-in scenarios: the two worked examples and a small synthetic one.

The example parameter blocks are also shipped as scenario files under
``renewalctl/presets/``; the constructors here build the same objects
directly and are what the tests use.
"""

from __future__ import annotations

from .characteristics import generation_times
from .controls import GenerationalLayout, PeriodicLayout, StabilizingLayout
from .rates import Fertility, Profile
from .scenario import EconomicData, InitialData, Scenario, constant_rates


def generational_example(horizon: float = 2.0) -> Scenario:
    """Generational-control example: linear economics, N = 1, T = T_2."""
    return Scenario(
        abar=1.0,
        sell_ages=(1.5,),
        g=constant_rates(J=1.0, S=1.0, R=1.0),
        d=constant_rates(J=1.5, S=0.5, R=0.75),
        w=Fertility.indicator(120.0, 1.0, 4.0),
        initial=InitialData(J=Profile.constant(1.0)),
        horizon=horizon,
        econ=EconomicData.linear(terminal_price=0.0, sale_prices=(8.0,),
                                 running_costs={"J": 0.25, "S": 0.0, "R": 0.0}),
        rate_convention="mortality",
    )


def generational_layout(scenario: Scenario, n: int = 2) -> GenerationalLayout:
    return GenerationalLayout.from_clock(generation_times(scenario), n)


def periodic_example(horizon: float = 2.0) -> Scenario:
    """Periodic-control example: linear economics with terminal value, N = 1."""
    return Scenario(
        abar=1.0,
        sell_ages=(1.5,),
        g=constant_rates(J=1.0, S=1.0, R=1.0),
        d=constant_rates(J=0.5, S=1.0, R=1.5),
        w=Fertility.indicator(10.0, 1.0, 4.0),
        initial=InitialData(J=Profile.constant(1.0)),
        horizon=horizon,
        econ=EconomicData.linear(terminal_price=1.0, sale_prices=(8.2,),
                                 running_costs={"J": 0.25, "S": 0.25, "R": 0.25}),
        rate_convention="mortality",
    )


def periodic_layout(scenario: Scenario, taus=(0.0, 0.5, 1.0)) -> PeriodicLayout:
    return PeriodicLayout(tuple(taus), scenario.horizon)


def stabilizing_example(horizon: float = 2.0, J_target: float = 0.5) -> Scenario:
    """Synthetic n = 2, N = 2 scenario with the quadratic juvenile cost."""
    base = EconomicData.linear(terminal_price=0.5, sale_prices=(3.0, 6.0),
                               running_costs={"S": 0.1, "R": 0.2},
                               quadratic_J=True, J_target=J_target)
    return Scenario(
        abar=1.0,
        sell_ages=(1.25, 1.75),
        g=constant_rates(J=1.0, S=1.0, R=1.0),
        d=constant_rates(J=0.5, S=0.3, R=0.6),
        w=Fertility.indicator(4.0, 1.0, 3.0),
        initial=InitialData(J=Profile.constant(1.0)),
        horizon=horizon,
        econ=base,
        rate_convention="mortality",
    )


def stabilizing_layout(scenario: Scenario, n: int = 2) -> StabilizingLayout:
    return StabilizingLayout.from_clock(generation_times(scenario), n, scenario.n_sell)
