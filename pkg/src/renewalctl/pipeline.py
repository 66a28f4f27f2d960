"""Glue between scenarios, control layouts, the solver and the fitters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .functionals import cost, income
from .solver import Trajectory, solve


@dataclass(frozen=True)
class ProfitBreakdown:
    income: float
    cost: float

    @property
    def profit(self) -> float:
        return self.income - self.cost


def run(scenario, schedule, dt: float | None = None) -> tuple[Trajectory, ProfitBreakdown]:
    traj = solve(scenario, schedule, dt)
    return traj, ProfitBreakdown(income(traj, scenario.econ), cost(traj, scenario.econ))


@dataclass(frozen=True, eq=False)
class ProfitEvaluator:
    """Control vector -> profit for a scenario and a control layout; thread safe."""

    scenario: object
    layout: object
    dt: float | None = None

    @property
    def n(self) -> int:
        return self.layout.n

    @property
    def variables(self) -> tuple[str, ...]:
        return self.layout.variables

    def trajectory(self, x) -> Trajectory:
        return solve(self.scenario, self.layout.schedule(np.asarray(x, dtype=float)), self.dt)

    def __call__(self, x) -> float:
        traj = self.trajectory(x)
        return income(traj, self.scenario.econ) - cost(traj, self.scenario.econ)
