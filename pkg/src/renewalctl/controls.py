"""Control layouts: maps from a vector of control parameters to a ControlSchedule."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .scenario import ControlSchedule, PiecewiseConstant, ScenarioError


def _pc(breakpoints, values):
    return PiecewiseConstant(tuple(breakpoints), tuple(float(v) for v in values))


def _check_point(x, n):
    x = np.asarray(x, dtype=float).ravel()
    if x.shape != (n,):
        raise ScenarioError(f"expected {n} control values, got {x.size}")
    if np.any((x < 0) | (x > 1)):
        raise ScenarioError(f"control values must lie in [0, 1]: {x}")
    return x


@dataclass(frozen=True)
class ExplicitLayout:
    """eta constant on each [breakpoints[k], breakpoints[k+1]); thetas fixed."""

    breakpoints: tuple[float, ...]
    theta: tuple[float, ...] = ()
    kind = "explicit"

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(f"eta{k + 1}" for k in range(len(self.breakpoints) - 1))

    @property
    def n(self) -> int:
        return len(self.variables)

    def schedule(self, x: Sequence[float]) -> ControlSchedule:
        x = _check_point(x, self.n)
        end = self.breakpoints[-1]
        return ControlSchedule(_pc(self.breakpoints, x),
                               tuple(PiecewiseConstant.constant(v, end) for v in self.theta))


@dataclass(frozen=True)
class GenerationalLayout(ExplicitLayout):
    """eta constant on each generation [T_{l-1}, T_l), l = 1..n."""

    kind = "generational"

    @classmethod
    def from_clock(cls, clock, n: int, theta: Sequence[float] = ()) -> "GenerationalLayout":
        times = clock.times[: n + 1]
        if len(times) < n + 1:
            raise ScenarioError(f"clock has fewer than {n} generations")
        return cls(tuple(times), tuple(theta))


@dataclass(frozen=True)
class PeriodicLayout:
    """eta with values x_1..x_m on [tau_{h-1}, tau_h) inside [0, period), repeated."""

    taus: tuple[float, ...]
    horizon: float
    theta: tuple[float, ...] = ()
    kind = "periodic"

    def __post_init__(self):
        if self.taus[0] != 0.0 or any(b <= a for a, b in zip(self.taus, self.taus[1:])):
            raise ScenarioError(f"periodic breakpoints must start at 0 and increase: {self.taus}")

    @property
    def period(self) -> float:
        return self.taus[-1]

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(f"eta{k + 1}" for k in range(len(self.taus) - 1))

    @property
    def n(self) -> int:
        return len(self.variables)

    def schedule(self, x: Sequence[float]) -> ControlSchedule:
        x = _check_point(x, self.n)
        bps, vals = [0.0], []
        start = 0.0
        while start < self.horizon - 1e-12:
            for k in range(self.n):
                right = start + self.taus[k + 1]
                bps.append(round(right, 12))
                vals.append(x[k])
                if right >= self.horizon - 1e-12:
                    break
            start += self.period
        return ControlSchedule(_pc(bps, vals),
                               tuple(PiecewiseConstant.constant(v, bps[-1]) for v in self.theta))


@dataclass(frozen=True)
class StabilizingLayout:
    """Generational eta_1..eta_n and theta_i^l, i = 1..N-1, constant on generations."""

    gen_times: tuple[float, ...]
    n_sell: int
    kind = "stabilizing"

    @classmethod
    def from_clock(cls, clock, n: int, n_sell: int) -> "StabilizingLayout":
        return cls(tuple(clock.times[: n + 1]), n_sell)

    @property
    def generations(self) -> int:
        return len(self.gen_times) - 1

    @property
    def variables(self) -> tuple[str, ...]:
        n = self.generations
        names = [f"eta{l + 1}" for l in range(n)]
        names += [f"theta{i + 1}_{l + 1}" for i in range(self.n_sell - 1) for l in range(n)]
        return tuple(names)

    @property
    def n(self) -> int:
        return len(self.variables)

    def schedule(self, x: Sequence[float]) -> ControlSchedule:
        x = _check_point(x, self.n)
        n = self.generations
        eta = _pc(self.gen_times, x[:n])
        thetas = tuple(_pc(self.gen_times, x[n + i * n: n + (i + 1) * n])
                       for i in range(self.n_sell - 1))
        return ControlSchedule(eta, thetas)


@dataclass(frozen=True)
class FixedLayout:
    """No free variables: always the same schedule."""

    fixed: ControlSchedule
    kind = "fixed"
    variables = ()
    n = 0

    def schedule(self, x=()) -> ControlSchedule:
        return self.fixed
