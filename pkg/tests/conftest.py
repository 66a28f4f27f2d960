import functools

import numpy as np
import pytest

from renewalctl import (ControlSchedule, EconomicData, Fertility, InitialData, Profile,
                        Scenario, constant_rates)
from renewalctl.pipeline import ProfitEvaluator
from renewalctl.presets import (generational_example, generational_layout, periodic_example,
                                periodic_layout, stabilizing_example, stabilizing_layout)

ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    """Log one acceptance line for the terminal summary."""
    ACCEPTANCE_LINES.append(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def simple_scenario(horizon=1.0, w_scale=0.0, J0=1.0, econ=None, **rates):
    """Unit-speed scenario with mortality-style rates; everything overridable."""
    g = constant_rates(J=1.0, S=1.0, R=1.0)
    d = constant_rates(J=rates.get("dJ", 0.0), S=rates.get("dS", 0.0), R=rates.get("dR", 0.0))
    return Scenario(abar=1.0, sell_ages=rates.get("sell_ages", (1.5,)), g=g, d=d,
                    w=Fertility.indicator(w_scale, 1.0, 3.0),
                    initial=InitialData(J=Profile.constant(J0)), horizon=horizon,
                    econ=econ or EconomicData.linear(0.0, (1.0,) * len(rates.get("sell_ages", (1.5,)))),
                    rate_convention="mortality")


@functools.lru_cache(maxsize=None)
def gen_setup():
    sc = generational_example()
    return sc, generational_layout(sc), ProfitEvaluator(sc, generational_layout(sc))


@functools.lru_cache(maxsize=None)
def periodic_setup():
    sc = periodic_example()
    return sc, periodic_layout(sc), ProfitEvaluator(sc, periodic_layout(sc))


@functools.lru_cache(maxsize=None)
def stabilizing_setup():
    sc = stabilizing_example()
    return sc, stabilizing_layout(sc), ProfitEvaluator(sc, stabilizing_layout(sc))


@functools.lru_cache(maxsize=None)
def gen_vertex_profits():
    _, _, ev = gen_setup()
    return {v: ev(np.array(v, dtype=float)) for v in [(0, 0), (1, 0), (0, 1), (1, 1)]}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def constant_eta():
    return lambda eta, horizon, theta=(): ControlSchedule.constant(eta, theta, horizon)
