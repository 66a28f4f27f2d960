"""Exact-along-characteristics solver for the coupled (J, S, R) renewal system.

Each population is sampled on a uniform age grid and advanced one time step
at a time by following characteristics back to the previous time level.
With a constant growth rate the age step equals g * dt, so every node is fed
by exactly one node of the previous level and transport is exact; otherwise
the foot of the characteristic is located by one RK4 step and the previous
level is interpolated linearly.  Boundary values close the system:

* S and R at age abar receive the fractions eta and 1 - eta of the J outflow,
* J at age 0 receives the births, int w(a) R(t, a) da (trapezoid on the R grid),
* S jumps by the factor theta_i across each sell age.

Every control breakpoint is a grid time.  Boundary and jump values at a grid
time use the control in force there, or the mean of the one-sided values at
a breakpoint, so the jump the breakpoint causes is carried along a grid
diagonal and trapezoid sums across it stay second order.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .characteristics import flow, generation_times, growth_factor
from .scenario import ControlSchedule, Scenario

log = logging.getLogger(__name__)

DEFAULT_STEPS = 2000
MAX_STEPS = 1_000_000
POSITIVITY_EPS = 1e-10
OPTIONAL_GROWTH = 8


class SolverError(RuntimeError):
    """Numerical failure while solving."""


class GridAlignmentError(SolverError):
    """The time grid cannot place every required time on a node."""


def trapezoid_weights(x: np.ndarray) -> np.ndarray:
    """Weights w with w @ f == trapezoid(f, x); duplicate abscissae are allowed."""
    x = np.asarray(x, dtype=float)
    w = np.zeros_like(x)
    if len(x) > 1:
        h = np.diff(x)
        w[:-1] += h / 2
        w[1:] += h / 2
    return w


def aligned_step_count(horizon: float, required: Sequence[float], min_steps: int,
                       optional: Sequence[float] = (), max_steps: int = MAX_STEPS) -> int:
    """Smallest K >= min_steps such that every required time is a multiple of horizon/K.

    ``optional`` times are aligned too when that at most multiplies K by
    OPTIONAL_GROWTH; otherwise they stay off the grid and a warning is logged.
    """
    def denominator(t):
        ratio = t / horizon
        frac = Fraction(ratio).limit_denominator(max_steps)
        if abs(float(frac) - ratio) > 1e-12 * max(1.0, ratio):
            return None
        return frac.denominator

    def steps_for(base):
        return base * math.ceil(max(min_steps, 1) / base)

    base = 1
    for t in required:
        if t <= 0:
            continue
        q = denominator(t)
        if q is None:
            raise GridAlignmentError(
                f"time {t!r} is not commensurate with horizon {horizon!r} on at most "
                f"{max_steps} steps")
        base = base * q // math.gcd(base, q)
        if base > max_steps:
            raise GridAlignmentError(f"aligning all breakpoints needs {base} > {max_steps} steps")
    for t in optional:
        if t <= 0 or t > horizon:
            continue
        q = denominator(t)
        trial = None if q is None else base * q // math.gcd(base, q)
        if trial is None or steps_for(trial) > min(max_steps, OPTIONAL_GROWTH * steps_for(base)):
            log.info("time %r is not aligned to the grid", t)
            continue
        base = trial
    k = steps_for(base)
    if k > max_steps:
        raise GridAlignmentError(f"requested resolution needs {k} > {max_steps} steps")
    return k


def _readonly(*arrays):
    for a in arrays:
        a.setflags(write=False)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution on [0, T].

    ``S`` has one duplicated column per sell age: the left limit followed by
    the right limit, so trapezoid integrals in age see the jump exactly.
    ``traces[i]`` is S(t, a_i-) and ``kept[i]`` the theta_i value applied to
    that sample.  Age integrals use the ``w_*`` weights.
    """

    times: np.ndarray
    age_J: np.ndarray
    age_S: np.ndarray
    age_R: np.ndarray
    J: np.ndarray
    S: np.ndarray
    R: np.ndarray
    traces: np.ndarray
    kept: np.ndarray
    w_J: np.ndarray
    w_S: np.ndarray
    w_R: np.ndarray
    sell_columns: tuple[int, ...]
    method: str = "characteristics"

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def time_weights(self) -> np.ndarray:
        return trapezoid_weights(self.times)

    def ages(self, u: str) -> np.ndarray:
        return getattr(self, f"age_{u}")

    def values(self, u: str) -> np.ndarray:
        return getattr(self, u)

    def weights(self, u: str) -> np.ndarray:
        return getattr(self, f"w_{u}")

    def totals(self) -> dict[str, np.ndarray]:
        """Total amount of each population at every time step."""
        return {u: self.values(u) @ self.weights(u) for u in ("J", "S", "R")}

    def minimum(self) -> float:
        return float(min(self.J.min(), self.S.min(), self.R.min()))


def boundary_trace(trajectory: Trajectory, i: int) -> np.ndarray:
    """S(t, a_i-) on the time grid for sell-age index i (0-based)."""
    if not 0 <= i < trajectory.traces.shape[0]:
        raise IndexError(f"sell-age index {i} out of range 0..{trajectory.traces.shape[0] - 1}")
    return trajectory.traces[i]


@dataclass
class _Grid:
    dt: float
    times: np.ndarray
    age_J: np.ndarray
    age_S: np.ndarray
    age_R: np.ndarray
    sell_idx: np.ndarray


def _age_step(g, dt):
    return g.value * dt if g.is_constant else g.sup() * dt


def build_grid(scenario: Scenario, controls: ControlSchedule, dt: float | None = None) -> _Grid:
    """Time and age grids with breakpoints, generation times and sell ages on nodes."""
    T = scenario.horizon
    min_steps = DEFAULT_STEPS if dt is None else math.ceil(T / dt - 1e-9)
    required = [T, *controls.breakpoints(T)]
    for th in controls.theta:
        required.extend(x for x in th.breakpoints if x <= T)
    optional = []
    gJ, gS = scenario.g["J"], scenario.g["S"]
    if gJ.is_constant:
        period = scenario.abar / gJ.value
        required.extend(k * period for k in range(1, int(T / period + 1e-9) + 2))
    else:
        optional.extend(generation_times(scenario).within())
    if gS.is_constant:
        required.extend((a - scenario.abar) / gS.value for a in scenario.sell_ages)
    gR = scenario.g["R"]
    if gR.is_constant:
        # fertility jumps on R grid nodes keep the birth quadrature second order
        optional.extend((edge - scenario.abar) / gR.value for edge in scenario.w.support
                        if scenario.abar < edge < scenario.amax)
    steps = aligned_step_count(T, required, min_steps, optional)
    dt = T / steps
    times = np.linspace(0.0, T, steps + 1)

    if gJ.is_constant:
        m = int(round(scenario.abar / (gJ.value * dt)))
    else:
        m = int(math.floor(scenario.abar / (gJ.sup() * dt) + 1e-9))
    if m < 1:
        raise GridAlignmentError("time step too large for the juvenile age interval")
    age_J = np.linspace(0.0, scenario.abar, m + 1)

    ages = {}
    for u in ("S", "R"):
        h = _age_step(scenario.g[u], dt)
        n = int(math.ceil((scenario.amax - scenario.abar) / h - 1e-9))
        ages[u] = scenario.abar + h * np.arange(n + 1)
    hS = ages["S"][1] - ages["S"][0]
    sell_idx = np.array([int(round((a - scenario.abar) / hS)) for a in scenario.sell_ages])
    if np.any(np.diff(sell_idx) <= 0) or sell_idx[0] < 1 or sell_idx[-1] >= len(ages["S"]):
        raise GridAlignmentError("sell ages collapse onto the same age node; refine dt")
    snapped = scenario.abar + hS * sell_idx
    if np.max(np.abs(snapped - np.array(scenario.sell_ages))) > 1e-9:
        log.info("sell ages snapped to %s", snapped)
    return _Grid(dt, times, age_J, ages["S"], ages["R"], sell_idx)


class _Transport:
    """One time step of transport along characteristics on a fixed age grid."""

    def __init__(self, g, d, sign, ages, dt):
        self.g, self.d, self.sign, self.ages, self.dt = g, d, sign, ages, dt
        self.exact = g.is_constant
        self.const_factor = (math.exp(sign * d.value * dt)
                             if g.is_constant and d.is_constant else None)

    def feet_and_factor(self, t0, t1):
        inner = self.ages[1:]
        if self.exact:
            feet = None
        else:
            feet = np.clip(flow(self.g, t0, t1, inner, max_step=self.dt), self.ages[0], None)
        if self.const_factor is not None:
            factor = self.const_factor
        else:
            factor = growth_factor(self.g, self.d, t0, t1, inner, self.sign, max_step=self.dt)
        return feet, factor

    def advance(self, prev, t0, t1, out):
        feet, factor = self.feet_and_factor(t0, t1)
        if feet is None:
            out[1:] = prev[:-1] * factor
        else:
            out[1:] = np.interp(feet, self.ages, prev) * factor
        return factor


def _interp_split(ages, right_vals, left_vals, feet):
    # Linear interpolation where the upper end of an interval takes its left limit.
    j = np.clip(np.searchsorted(ages, feet, side="right") - 1, 0, len(ages) - 2)
    lam = (feet - ages[j]) / (ages[j + 1] - ages[j])
    return (1 - lam) * right_vals[j] + lam * left_vals[j + 1]


def solve(scenario: Scenario, controls: ControlSchedule, dt: float | None = None) -> Trajectory:
    """Solve the (J, S, R) system on [0, T] for the given controls.

    ``dt`` is the requested time step (default T / 2000); it is refined so that
    every control breakpoint, generation time, sell-age passage time and T
    itself fall on the grid.
    """
    controls.validate(scenario.horizon, scenario.n_sell)
    thetas = controls.thetas(scenario.n_sell, scenario.horizon)
    grid = build_grid(scenario, controls, dt)
    dt = grid.dt
    sign = scenario.death_sign
    g, d = scenario.g, scenario.d
    abar = scenario.abar
    n_t = len(grid.times)
    k_sell = grid.sell_idx
    n_sell = len(k_sell)

    tJ = _Transport(g["J"], d["J"], sign, grid.age_J, dt)
    tS = _Transport(g["S"], d["S"], sign, grid.age_S, dt)
    tR = _Transport(g["R"], d["R"], sign, grid.age_R, dt)
    birth_w = scenario.w.quadrature_weights(grid.age_R)

    J = np.empty((n_t, len(grid.age_J)))
    S = np.empty((n_t, len(grid.age_S) + n_sell))
    R = np.empty((n_t, len(grid.age_R)))
    traces = np.empty((n_sell, n_t))
    kept = np.empty((n_sell, n_t))

    j_now = scenario.initial.J(grid.age_J).astype(float)
    s_now = scenario.initial.S(grid.age_S).astype(float)
    r_now = scenario.initial.R(grid.age_R).astype(float)
    # Where initial and boundary data disagree at a corner, the jump travels along
    # a grid diagonal; storing the mean of both sides keeps trapezoid sums second
    # order.  The same rule sets control values at breakpoint nodes.
    eta0 = controls.eta.at_node(0.0, dt)
    # S on the older side of every diagonal jump; gives the left limit in time
    # of the sell-age traces at T
    s_old = s_now.copy() if tS.exact else None
    outflow0 = g["J"](0.0, abar) * j_now[-1]
    s_now[0] = 0.5 * (s_now[0] + eta0 * outflow0 / g["S"](0.0, abar))
    r_now[0] = 0.5 * (r_now[0] + (1.0 - eta0) * outflow0 / g["R"](0.0, abar))
    # one-sided values (initial side, birth side) on the diagonal leaving (0, 0)
    corner = np.array([j_now[0], (birth_w @ r_now) / g["J"](0.0, 0.0)])
    j_now[0] = corner.mean()
    corner_node = 0 if tJ.exact else None
    theta0 = np.array([th.at_node(0.0, dt) for th in thetas])
    left = s_now[k_sell].copy()
    s_now[k_sell] = theta0 * left
    if s_old is not None:
        s_old[k_sell] *= theta0
        s_old_new = np.empty_like(s_old)
    J[0], R[0] = j_now, r_now
    S[0] = np.insert(s_now, k_sell, left)
    traces[:, 0], kept[:, 0] = left, theta0

    j_new = np.empty_like(j_now)
    s_new = np.empty_like(s_now)
    r_new = np.empty_like(r_now)
    sell_ages = grid.age_S[k_sell]
    for n in range(n_t - 1):
        t0, t1 = grid.times[n], grid.times[n + 1]
        eta = controls.eta.at_node(t1, dt)
        theta = np.array([th.on_step(t0, t1) for th in thetas])

        j_factor = tJ.advance(j_now, t0, t1, j_new)
        if corner_node is not None:
            corner_node += 1
            corner *= j_factor if np.isscalar(j_factor) else j_factor[corner_node - 1]
        tR.advance(r_now, t0, t1, r_new)
        feet, factor = tS.feet_and_factor(t0, t1)
        if feet is None:
            s_new[1:] = s_now[:-1] * factor
            left = s_new[k_sell].copy()
            theta = np.array([th.at_node(t1, dt) for th in thetas])
            s_new[k_sell] = theta * left
            s_old_new[1:] = s_old[:-1] * factor
            old_left = s_old_new[k_sell].copy()
            s_old_new[k_sell] = old_left * [th.on_step(t0, t1) for th in thetas]
        else:
            left_repr = s_now.copy()
            left_repr[k_sell] = S[n][k_sell + np.arange(n_sell)]
            s_new[1:] = _interp_split(grid.age_S, s_now, left_repr, feet) * factor
            node_age = grid.age_S[1:]
            left = np.empty(n_sell)
            for i, a_i in enumerate(sell_ages):
                left[i] = s_new[k_sell[i]]
                crossed = (feet < a_i) & (a_i <= node_age)
                s_new[1:][crossed] *= theta[i]

        g_out = g["J"](t1, abar)
        if corner_node == len(j_new) - 1:
            # the corner jump reaches abar: pair each side with its own eta
            sides = g_out * corner
            eta_sides = np.array([controls.eta.on_step(t0, t1), controls.eta.on_step(t1, t1 + dt)])
            sel = 0.5 * (eta_sides @ sides)
            rest = 0.5 * sides.sum() - sel
            sel_old = eta_sides[0] * sides[0]
        else:
            sel_old = controls.eta.on_step(t0, t1) * g_out * j_new[-1]
            sel = eta * g_out * j_new[-1]
            rest = (1.0 - eta) * g_out * j_new[-1]
        s_new[0] = sel / g["S"](t1, abar)
        r_new[0] = rest / g["R"](t1, abar)
        if s_old is not None:
            s_old_new[0] = sel_old / g["S"](t1, abar)
            s_old, s_old_new = s_old_new, s_old
        j_new[0] = (birth_w @ r_new) / g["J"](t1, 0.0)

        for name, arr, ages in (("J", j_new, grid.age_J), ("S", s_new, grid.age_S),
                                ("R", r_new, grid.age_R)):
            if not np.isfinite(arr.sum()):
                bad = int(np.flatnonzero(~np.isfinite(arr))[0])
                raise SolverError(
                    f"non-finite {name} at t={t1:.6g}, a={ages[bad]:.6g} (cell {bad})")

        J[n + 1], R[n + 1] = j_new, r_new
        S[n + 1] = np.insert(s_new, k_sell, left)
        traces[:, n + 1], kept[:, n + 1] = left, theta
        j_now, j_new = j_new, j_now
        s_now, s_new = s_new, s_now
        r_now, r_new = r_new, r_now
    if s_old is not None:
        traces[:, -1] = old_left

    age_S = np.insert(grid.age_S, k_sell, grid.age_S[k_sell])
    sell_columns = tuple(int(k + i) for i, k in enumerate(k_sell))
    out = Trajectory(
        times=grid.times, age_J=grid.age_J, age_S=age_S, age_R=grid.age_R,
        J=J, S=S, R=R, traces=traces, kept=kept,
        w_J=trapezoid_weights(grid.age_J), w_S=trapezoid_weights(age_S),
        w_R=trapezoid_weights(grid.age_R), sell_columns=sell_columns)
    _readonly(out.times, out.age_J, out.age_S, out.age_R, J, S, R, traces, kept,
              out.w_J, out.w_S, out.w_R)
    return out
