"""First-order upwind finite-volume solver, used as an independent check.

Cells of width ``da`` cover [0, abar] for J and [abar, amax] for S and R.
Each step moves mass across cell faces with the upwind flux g * u, adds the
source sign * d * u by explicit Euler, and applies the same couplings as the
characteristics solver: the J outflow at abar is split by eta, births enter J
at age 0, and the flux across a sell-age face is multiplied by theta_i.
Cell values are cell averages, so age integrals use the midpoint rule.
"""

from __future__ import annotations

import math

import numpy as np

from .scenario import ControlSchedule, Scenario
from .solver import SolverError, Trajectory, _readonly, aligned_step_count, trapezoid_weights

DEFAULT_CFL = 0.5


class CFLError(SolverError):
    """Time step too large for the upwind scheme."""


def _cells(lo, hi, da):
    n = int(round((hi - lo) / da))
    if n < 1 or abs(lo + n * da - hi) > 1e-9 * max(1.0, hi):
        raise SolverError(f"[{lo}, {hi}] is not a whole number of cells of width {da}")
    faces = lo + da * np.arange(n + 1)
    return faces, 0.5 * (faces[:-1] + faces[1:])


def solve_upwind_oracle(scenario: Scenario, controls: ControlSchedule, da: float,
                        cfl: float = DEFAULT_CFL, dt: float | None = None) -> Trajectory:
    """Upwind solution with age cell width ``da``.

    ``dt`` defaults to ``cfl * da / max g``, shortened so that T and every
    control breakpoint are grid times.  An explicit ``dt`` violating the CFL
    bound raises CFLError.
    """
    controls.validate(scenario.horizon, scenario.n_sell)
    thetas = controls.thetas(scenario.n_sell, scenario.horizon)
    T = scenario.horizon
    g, d, sign = scenario.g, scenario.d, scenario.death_sign
    gmax = max(g[u].sup() for u in ("J", "S", "R"))
    if dt is None:
        dt = cfl * da / gmax
    if dt * gmax > da * (1 + 1e-12):
        raise CFLError(f"dt={dt:.6g} violates the CFL bound da / max g = {da / gmax:.6g}")
    required = [T, *controls.breakpoints(T)]
    for th in thetas:
        required.extend(x for x in th.breakpoints if x <= T)
    steps = aligned_step_count(T, required, math.ceil(T / dt - 1e-9))
    times = np.linspace(0.0, T, steps + 1)
    dt = T / steps

    abar = scenario.abar
    top = abar + da * math.ceil((scenario.amax - abar) / da - 1e-9)
    fJ, cJ = _cells(0.0, abar, da)
    fSR, cSR = _cells(abar, top, da)
    sell_face = np.array([int(round((a - abar) / da)) for a in scenario.sell_ages])
    if np.any(np.abs(abar + sell_face * da - np.array(scenario.sell_ages)) > 1e-9):
        raise SolverError(f"sell ages must lie on cell faces of width {da}")

    birth_w = scenario.w(cSR) * da
    n_t = len(times)
    J = np.empty((n_t, len(cJ)))
    S = np.empty((n_t, len(cSR)))
    R = np.empty((n_t, len(cSR)))
    traces = np.empty((len(sell_face), n_t))
    kept = np.empty_like(traces)
    j = scenario.initial.J(cJ).astype(float)
    s = scenario.initial.S(cSR).astype(float)
    r = scenario.initial.R(cSR).astype(float)
    J[0], S[0], R[0] = j, s, r

    def rates(u, t, faces, centers):
        return np.broadcast_to(g[u](t, faces), faces.shape), np.broadcast_to(d[u](t, centers),
                                                                              centers.shape)

    def step(u, vals, t, faces, centers, inflow, face_factor=None):
        gf, dc = rates(u, t, faces, centers)
        flux = np.empty(len(faces))
        flux[0] = inflow
        flux[1:] = gf[1:] * vals
        entering = flux[:-1].copy()
        if face_factor is not None:
            # the left cell loses the full flux, the right cell receives theta of it
            idx, fac = face_factor
            entering[idx] *= fac
        out = vals + dt / da * (entering - flux[1:]) + dt * sign * dc * vals
        return out, flux[-1]

    for n in range(n_t - 1):
        t0, t1 = times[n], times[n + 1]
        eta = controls.eta.on_step(t0, t1)
        theta = np.array([th.on_step(t0, t1) for th in thetas])
        traces[:, n], kept[:, n] = s[sell_face - 1], theta

        births = birth_w @ r
        j_new, outflow = step("J", j, t0, fJ, cJ, births)
        s_new, _ = step("S", s, t0, fSR, cSR, eta * outflow, (sell_face, theta))
        r_new, _ = step("R", r, t0, fSR, cSR, (1.0 - eta) * outflow)
        for name, arr in (("J", j_new), ("S", s_new), ("R", r_new)):
            if not np.all(np.isfinite(arr)):
                raise SolverError(f"non-finite {name} at t={t1:.6g}")
        j, s, r = j_new, s_new, r_new
        J[n + 1], S[n + 1], R[n + 1] = j, s, r
    last_theta = np.array([th(T) for th in thetas])
    traces[:, -1], kept[:, -1] = s[sell_face - 1], last_theta

    wJ = np.full(len(cJ), da)
    wSR = np.full(len(cSR), da)
    out = Trajectory(times=times, age_J=cJ, age_S=cSR, age_R=cSR.copy(), J=J, S=S, R=R,
                     traces=traces, kept=kept, w_J=wJ, w_S=wSR, w_R=wSR.copy(),
                     sell_columns=tuple(int(k - 1) for k in sell_face), method="upwind")
    _readonly(out.times, out.age_J, out.age_S, out.age_R, J, S, R, traces, kept,
              out.w_J, out.w_S, out.w_R)
    return out


__all__ = ["CFLError", "DEFAULT_CFL", "solve_upwind_oracle", "trapezoid_weights"]
