"""Model data: scenario, economics and piecewise-constant controls."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .rates import Fertility, Profile, RateError, RateField

POPULATIONS = ("J", "S", "R")
RATE_CONVENTIONS = {"printed": 1.0, "mortality": -1.0}
QUADRATIC_SIGNS = ("printed", "stabilizing")

Coefficient = Union[float, Callable[..., np.ndarray]]


class ScenarioError(ValueError):
    """Raised when model data violate their admissibility conditions."""


@dataclass(frozen=True)
class PiecewiseConstant:
    """sum_k values[k] * indicator[breakpoints[k], breakpoints[k+1])."""

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        bp = tuple(float(x) for x in self.breakpoints)
        vals = tuple(float(x) for x in self.values)
        if len(bp) != len(vals) + 1 or not vals:
            raise ScenarioError(
                f"need len(breakpoints) == len(values) + 1 >= 2, got {len(bp)} and {len(vals)}")
        if bp[0] != 0.0:
            raise ScenarioError(f"first breakpoint must be 0, got {bp[0]}")
        if any(b <= a for a, b in zip(bp, bp[1:])):
            raise ScenarioError(f"breakpoints must be strictly increasing: {bp}")
        if any(not (0.0 <= v <= 1.0) for v in vals):
            raise ScenarioError(f"control values must lie in [0, 1]: {vals}")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, value: float, horizon: float) -> "PiecewiseConstant":
        return cls((0.0, float(horizon)), (value,))

    def __call__(self, t: float) -> float:
        k = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        return self.values[min(max(k, 0), len(self.values) - 1)]

    def on_step(self, t0: float, t1: float) -> float:
        """Value in force during the time step [t0, t1)."""
        return self(0.5 * (t0 + t1))

    def at_node(self, t: float, dt: float) -> float:
        """Mean of the values in force on the two steps adjacent to grid time t.

        Equal to the control value away from breakpoints and to the average of
        the one-sided values at a breakpoint.
        """
        lo = self.on_step(t - dt, t) if t - dt >= -1e-12 else self.on_step(t, t + dt)
        hi = self.on_step(t, t + dt)
        return 0.5 * (lo + hi)

    @property
    def end(self) -> float:
        return self.breakpoints[-1]


@dataclass(frozen=True)
class ControlSchedule:
    """Selection fraction eta(t) and kept fractions theta_i(t), i = 1..N."""

    eta: PiecewiseConstant
    theta: tuple[PiecewiseConstant, ...] = ()
    theta_N_zero: bool = True

    def __post_init__(self):
        object.__setattr__(self, "theta", tuple(self.theta))

    @classmethod
    def constant(cls, eta: float, theta: Sequence[float] = (), horizon: float = 1.0,
                 theta_N_zero: bool = True) -> "ControlSchedule":
        return cls(PiecewiseConstant.constant(eta, horizon),
                   tuple(PiecewiseConstant.constant(v, horizon) for v in theta),
                   theta_N_zero)

    def thetas(self, n_sell: int, horizon: float) -> tuple[PiecewiseConstant, ...]:
        """All N theta controls, filling theta_N = 0 when that convention is on."""
        theta = list(self.theta)
        if self.theta_N_zero:
            if len(theta) == n_sell:
                if any(theta[-1].values):
                    raise ScenarioError("theta_N must vanish when theta_N_zero is set")
            elif len(theta) == n_sell - 1:
                theta.append(PiecewiseConstant.constant(0.0, horizon))
        if len(theta) != n_sell:
            raise ScenarioError(f"expected {n_sell} theta controls, got {len(self.theta)}")
        return tuple(theta)

    def breakpoints(self, horizon: float) -> tuple[float, ...]:
        pts = set(self.eta.breakpoints)
        for th in self.theta:
            pts.update(th.breakpoints)
        return tuple(sorted(x for x in pts if x <= horizon + 1e-12))

    def validate(self, horizon: float, n_sell: int) -> None:
        for name, pc in [("eta", self.eta)] + [(f"theta{i + 1}", th)
                                               for i, th in enumerate(self.theta)]:
            if pc.end < horizon - 1e-12:
                raise ScenarioError(
                    f"{name}: last breakpoint {pc.end} does not reach the horizon {horizon}")
        self.thetas(n_sell, horizon)


def _coef(c: Coefficient, *args):
    return c(*args) if callable(c) else c


@dataclass(frozen=True)
class ValuePolynomial:
    """v -> sum_k coeffs[k](args) * v**k; coefficients are floats or callables."""

    coeffs: tuple = (0.0,)

    def __post_init__(self):
        coeffs = tuple(self.coeffs) or (0.0,)
        for c in coeffs:
            if not callable(c) and not np.isfinite(c):
                raise ScenarioError(f"non-finite polynomial coefficient {c!r}")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def linear(cls, price: Coefficient) -> "ValuePolynomial":
        return cls((0.0, price))

    @property
    def degree(self) -> int:
        for k in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[k]
            if callable(c) or c != 0.0:
                return k
        return 0

    @property
    def is_zero(self) -> bool:
        return all(not callable(c) and c == 0.0 for c in self.coeffs)

    @property
    def is_constant_coefficient(self) -> bool:
        return not any(callable(c) for c in self.coeffs)

    def __call__(self, v, *args):
        v = np.asarray(v, dtype=float)
        out = np.zeros(v.shape)
        power = np.ones(v.shape)
        for k, c in enumerate(self.coeffs):
            if k:
                power = power * v
            if callable(c) or c != 0.0:
                out = out + _coef(c, *args) * power
        return out


@dataclass(frozen=True)
class EconomicData:
    """Terminal value P(a, j), sale values P_i(t, s), running costs C_u(t, a, v).

    With ``quadratic_J`` the J running cost is replaced by the quadratic
    term -int int (J - J_target)^2 ("printed" sign) or its negative
    ("stabilizing").
    """

    terminal: ValuePolynomial = field(default_factory=ValuePolynomial)
    sale: tuple[ValuePolynomial, ...] = ()
    running: Mapping[str, ValuePolynomial] = field(default_factory=dict)
    quadratic_J: bool = False
    J_target: float = 0.0
    quadratic_sign: str = "printed"
    kappa: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "sale", tuple(self.sale))
        running = {u: self.running.get(u, ValuePolynomial()) for u in POPULATIONS}
        unknown = set(self.running) - set(POPULATIONS)
        if unknown:
            raise ScenarioError(f"unknown populations in running costs: {sorted(unknown)}")
        object.__setattr__(self, "running", running)
        if self.quadratic_sign not in QUADRATIC_SIGNS:
            raise ScenarioError(f"quadratic_sign must be one of {QUADRATIC_SIGNS}")
        if self.kappa is not None:
            polys = [self.terminal, *self.sale, *running.values()]
            worst = max(p.degree for p in polys)
            if worst > self.kappa:
                raise ScenarioError(f"polynomial degree {worst} exceeds kappa={self.kappa}")

    @classmethod
    def linear(cls, terminal_price: Coefficient = 0.0, sale_prices: Sequence[Coefficient] = (),
               running_costs: Mapping[str, Coefficient] | None = None, **kw) -> "EconomicData":
        running_costs = running_costs or {}
        return cls(terminal=ValuePolynomial.linear(terminal_price),
                   sale=tuple(ValuePolynomial.linear(p) for p in sale_prices),
                   running={u: ValuePolynomial.linear(c) for u, c in running_costs.items()},
                   **kw)

    @property
    def degree(self) -> int:
        polys = [self.terminal, *self.sale, *self.running.values()]
        deg = max(p.degree for p in polys)
        return max(deg, 2) if self.quadratic_J else deg

    @property
    def is_linear(self) -> bool:
        return not self.quadratic_J and self.degree <= 1


@dataclass(frozen=True)
class InitialData:
    J: Profile = field(default_factory=Profile)
    S: Profile = field(default_factory=Profile)
    R: Profile = field(default_factory=Profile)

    def __getitem__(self, u: str) -> Profile:
        return getattr(self, u)


def _validate_profile(name: str, prof: Profile, lo: float, hi: float, integrable: bool):
    ages = np.linspace(lo, hi if np.isfinite(hi) else lo + 1.0, 2001)
    if prof.values is not None:
        ages = np.union1d(ages, prof.ages[(prof.ages >= lo) & (prof.ages <= hi)])
    vals = prof(ages)
    if not np.all(np.isfinite(vals)):
        raise ScenarioError(f"initial {name}: non-finite values")
    if np.any(vals < 0):
        raise ScenarioError(f"initial {name}: values must be nonnegative")
    if not np.isfinite(np.abs(np.diff(vals)).sum()):
        raise ScenarioError(f"initial {name}: infinite total variation")
    if integrable and not prof.is_zero and not np.isfinite(prof.upper_extent()):
        raise ScenarioError(f"initial {name}: must be integrable (bounded support)")


@dataclass(frozen=True, eq=False)
class Scenario:
    """All model data for the (J, S, R) system on [0, horizon].

    ``rate_convention`` fixes how the ``d`` fields enter the balance laws:
    "printed" uses d_t u + d_a(g u) = +d u; "mortality" reads d as a death
    rate, i.e. the right-hand side is -d u.
    """

    abar: float
    sell_ages: tuple[float, ...]
    g: Mapping[str, RateField]
    d: Mapping[str, RateField]
    w: Fertility
    initial: InitialData
    horizon: float
    econ: EconomicData = field(default_factory=EconomicData)
    amax: float | None = None
    rate_convention: str = "printed"

    def __post_init__(self):
        if not self.abar > 0:
            raise ScenarioError(f"abar must be > 0, got {self.abar}")
        sell = tuple(float(x) for x in self.sell_ages)
        if not sell:
            raise ScenarioError("at least one sell age is required")
        if sell[0] <= self.abar or any(b <= a for a, b in zip(sell, sell[1:])):
            raise ScenarioError(f"sell ages must satisfy abar < a_1 < ... < a_N, got {sell}")
        object.__setattr__(self, "sell_ages", sell)
        if not self.horizon > 0:
            raise ScenarioError(f"horizon must be > 0, got {self.horizon}")
        if self.rate_convention not in RATE_CONVENTIONS:
            raise ScenarioError(f"rate_convention must be one of {sorted(RATE_CONVENTIONS)}")
        g = dict(self.g)
        d = dict(self.d)
        for u in POPULATIONS:
            if u not in g or u not in d:
                raise ScenarioError(f"missing rate field for population {u}")
            try:
                g[u].check_growth(f"g_{u}")
            except RateError as exc:
                raise ScenarioError(str(exc)) from None
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "d", d)
        if self.w.support[0] < self.abar:
            raise ScenarioError("fertility support must lie in [abar, +inf)")
        if len(self.econ.sale) not in (0, len(sell)):
            raise ScenarioError(
                f"economics declares {len(self.econ.sale)} sale values for {len(sell)} sell ages")
        if not self.econ.sale:
            object.__setattr__(self, "econ", _replace_sale(self.econ, len(sell)))
        gsup = max(g["S"].sup(), g["R"].sup())
        needed = max(sell[-1], self.w.support[1]) + gsup * self.horizon
        amax = needed if self.amax is None else float(self.amax)
        if amax < needed - 1e-12:
            raise ScenarioError(f"amax={amax} is below the required bound {needed}")
        object.__setattr__(self, "amax", amax)
        _validate_profile("J", self.initial.J, 0.0, self.abar, integrable=False)
        for u in ("S", "R"):
            prof = self.initial[u]
            _validate_profile(u, prof, self.abar, amax, integrable=True)
            if prof.upper_extent() + g[u].sup() * self.horizon > amax + 1e-12:
                raise ScenarioError(
                    f"initial {u} extends to {prof.upper_extent()} and would leave the "
                    f"truncated age domain [abar, {amax}] before the horizon")

    @property
    def n_sell(self) -> int:
        return len(self.sell_ages)

    @property
    def death_sign(self) -> float:
        return RATE_CONVENTIONS[self.rate_convention]

    def with_horizon(self, horizon: float) -> "Scenario":
        from dataclasses import replace
        return replace(self, horizon=horizon, amax=None)

    def with_initial(self, initial: InitialData) -> "Scenario":
        from dataclasses import replace
        return replace(self, initial=initial)

    def with_econ(self, econ: EconomicData) -> "Scenario":
        from dataclasses import replace
        return replace(self, econ=econ)


def _replace_sale(econ: EconomicData, n: int) -> EconomicData:
    from dataclasses import replace
    return replace(econ, sale=tuple(ValuePolynomial() for _ in range(n)))


def constant_rates(**values: float) -> dict[str, RateField]:
    """``constant_rates(J=1.0, S=1.0, R=1.0)`` -> dict of constant fields."""
    return {u: RateField.constant(values[u]) for u in POPULATIONS}
