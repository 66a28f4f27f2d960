"""Characteristic curves, their inverses, growth factors and generation times.

Ages move along ``da/dt = g_u(t, a)``.  Constant rates use closed forms; tabulated
rates are integrated with classical RK4 on a lattice of step ``max_step``
anchored at zero, so that integrations over adjacent windows share nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .rates import RateField, RateError

DEFAULT_MAX_STEP = 1e-3
ROOT_TOL = 1e-12


class CharacteristicError(ValueError):
    """Raised when a characteristic cannot be evaluated or inverted."""


def _check_finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise CharacteristicError(f"non-finite input {v!r}")


def _lattice(t0: float, t1: float, h: float) -> np.ndarray:
    # Nodes from t0 to t1 (either direction): endpoints plus multiples of h strictly between.
    lo, hi = min(t0, t1), max(t0, t1)
    k_lo = math.floor(lo / h) + 1
    k_hi = math.ceil(hi / h) - 1
    inner = np.arange(k_lo, k_hi + 1) * h if k_hi >= k_lo else np.empty(0)
    inner = inner[(inner > lo + 1e-14) & (inner < hi - 1e-14)]
    nodes = np.concatenate(([lo], inner, [hi]))
    return nodes if t1 >= t0 else nodes[::-1]


def _rk4_path(g: RateField, nodes: np.ndarray, a0):
    """Ages along the characteristic through (nodes[0], a0), at every node."""
    a = np.asarray(a0, dtype=float)
    path = [a]
    for s, s_next in zip(nodes[:-1], nodes[1:]):
        dt = s_next - s
        k1 = g(s, a)
        k2 = g(s + dt / 2, a + dt / 2 * k1)
        k3 = g(s + dt / 2, a + dt / 2 * k2)
        k4 = g(s_next, a + dt * k3)
        a = a + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        path.append(a)
    return path


def flow(g: RateField, t, t0, a0, max_step: float = DEFAULT_MAX_STEP):
    """Age at time ``t`` of the individual aged ``a0`` at time ``t0``."""
    _check_finite(t, t0, a0)
    g.check_growth()
    if g.is_constant:
        return np.asarray(a0, dtype=float) + g.value * (t - t0)
    return _rk4_path(g, _lattice(float(t0), float(t), max_step), a0)[-1]


def flow_time(g: RateField, a: float, t0: float, a0: float,
              max_step: float = DEFAULT_MAX_STEP, window=None) -> float:
    """Time at which the characteristic through (t0, a0) reaches age ``a``."""
    _check_finite(a, t0, a0)
    g.check_growth()
    if g.is_constant:
        t = t0 + (a - a0) / g.value
    else:
        lo_rate = g.lower_bound if g.lower_bound is not None else g.inf()
        hi_rate = g.sup()
        da = a - a0
        if da >= 0:
            lo, hi = t0 + da / hi_rate, t0 + da / lo_rate
        else:
            lo, hi = t0 + da / lo_rate, t0 + da / hi_rate
        t = _solve_monotone(lambda s: float(flow(g, s, t0, a0, max_step)) - a,
                            lambda s, r: float(g(s, a + r)), lo, hi, t0 + da / float(g(t0, a0)))
    if window is not None and not (window[0] - 1e-12 <= t <= window[1] + 1e-12):
        raise CharacteristicError(
            f"age {a} is not reached from ({t0}, {a0}) within time window {window}")
    return float(t)


def _solve_monotone(f, slope, lo, hi, guess):
    # Safeguarded Newton on an increasing function with a known bracket.
    f_lo, f_hi = f(lo), f(hi)
    if f_lo > 0 or f_hi < 0:
        if abs(f_lo) <= ROOT_TOL:
            return lo
        if abs(f_hi) <= ROOT_TOL:
            return hi
        raise CharacteristicError("target age outside the reachable range")
    t = min(max(guess, lo), hi)
    for _ in range(200):
        r = f(t)
        if abs(r) <= ROOT_TOL:
            return t
        if r > 0:
            hi = t
        else:
            lo = t
        s = slope(t, r)
        step = t - r / s if s > 0 else None
        t = step if step is not None and lo < step < hi else 0.5 * (lo + hi)
        if hi - lo < 1e-15:
            return t
    raise CharacteristicError("characteristic inversion did not converge")


def growth_factor(g: RateField, d: RateField, t1: float, t2: float, a,
                  sign: float = 1.0, max_step: float = DEFAULT_MAX_STEP):
    """exp of the integral of (sign*d - da g) along the characteristic ending at (t2, a)."""
    _check_finite(t1, t2, a)
    if t1 > t2:
        raise CharacteristicError(f"need t1 <= t2, got t1={t1}, t2={t2}")
    if g.is_constant and d.is_constant:
        return np.exp(sign * d.value * (t2 - t1)) * np.ones(np.shape(a))[()]
    nodes = _lattice(float(t2), float(t1), max_step)
    if g.is_constant:
        path = [np.asarray(a, dtype=float) - g.value * (t2 - s) for s in nodes]
    else:
        g.check_growth()
        path = _rk4_path(g, nodes, a)
    vals = np.array([sign * d(s, p) - g.da(s, p) for s, p in zip(nodes, path)])
    # nodes run backwards from t2 to t1
    widths = -np.diff(nodes)
    integral = np.tensordot(widths, 0.5 * (vals[:-1] + vals[1:]), axes=1)
    return np.exp(integral)


def characteristic_age(u: str, t: float, t0: float, a0, scenario,
                       max_step: float = DEFAULT_MAX_STEP):
    """Age at time ``t`` along the population-``u`` characteristic through (t0, a0)."""
    return flow(scenario.g[u], t, t0, a0, max_step)


def characteristic_time(u: str, a: float, t0: float, a0: float, scenario,
                        max_step: float = DEFAULT_MAX_STEP, window=None) -> float:
    """Inverse of :func:`characteristic_age` in time."""
    return flow_time(scenario.g[u], a, t0, a0, max_step, window)


def psi_factor(u: str, t1: float, t2: float, a, scenario,
               max_step: float = DEFAULT_MAX_STEP):
    """Multiplicative change of the density of ``u`` along a characteristic
    between times t1 and t2, the characteristic ending at age ``a`` at t2."""
    return growth_factor(scenario.g[u], scenario.d[u], t1, t2, a,
                         scenario.death_sign, max_step)


@dataclass(frozen=True)
class GenerationClock:
    """Generation times 0 = T_0 < T_1 < ... covering [0, horizon]."""

    times: tuple[float, ...]
    horizon: float

    def __post_init__(self):
        times = tuple(float(x) for x in self.times)
        if not times or times[0] != 0.0:
            raise ValueError("generation times must start at 0")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("generation times must be strictly increasing")
        if times[-1] < self.horizon - 1e-12:
            raise ValueError("generation times must cover the horizon")
        object.__setattr__(self, "times", times)

    def __len__(self):
        return len(self.times)

    def __getitem__(self, k):
        return self.times[k]

    def within(self, horizon: float | None = None) -> tuple[float, ...]:
        """Generation times that are <= horizon (default: own horizon)."""
        h = self.horizon if horizon is None else horizon
        return tuple(x for x in self.times if x <= h + 1e-12)

    def generation_of(self, t: float) -> int:
        """Index l >= 1 with T_{l-1} <= t < T_l."""
        for ell in range(1, len(self.times)):
            if t < self.times[ell]:
                return ell
        return len(self.times) - 1

    def refine(self, breakpoints: Sequence[float]) -> tuple[float, ...]:
        """Merge control breakpoints with generation times (split pieces at every T_l)."""
        pts = set(round(x, 12) for x in breakpoints)
        pts.update(round(x, 12) for x in self.within(max(breakpoints)))
        return tuple(sorted(pts))

    def gaps(self) -> np.ndarray:
        return np.diff(self.times)


def generation_times(scenario, max_step: float = DEFAULT_MAX_STEP) -> GenerationClock:
    """Generation times: each is reached when the newborns of the previous one hit abar."""
    g = scenario.g["J"]
    horizon = scenario.horizon
    times = [0.0]
    if g.is_constant:
        period = scenario.abar / g.value
        while times[-1] < horizon - 1e-12:
            times.append(len(times) * period)
        return GenerationClock(tuple(times), horizon)
    while times[-1] < horizon - 1e-12:
        times.append(flow_time(g, scenario.abar, times[-1], 0.0, max_step))
    return GenerationClock(tuple(times), horizon)


def generation_time(g: RateField, abar: float, n: int,
                    max_step: float = DEFAULT_MAX_STEP) -> float:
    """T_n for juvenile growth rate g and maturity age abar."""
    g.check_growth("g_J")
    if g.is_constant:
        return n * abar / g.value
    t = 0.0
    for _ in range(n):
        t = flow_time(g, abar, t, 0.0, max_step)
    return t


__all__ = [
    "generation_time",
    "CharacteristicError", "GenerationClock", "RateError", "characteristic_age",
    "characteristic_time", "flow", "flow_time", "generation_times", "growth_factor",
    "psi_factor",
]
