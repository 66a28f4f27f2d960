"""Income, cost and profit of a trajectory (trapezoid rule throughout)."""

from __future__ import annotations

import numpy as np

from .scenario import EconomicData, ValuePolynomial
from .solver import Trajectory


class FunctionalError(ValueError):
    pass


def _check(trajectory: Trajectory, econ: EconomicData):
    n_sell = trajectory.traces.shape[0]
    if len(econ.sale) != n_sell:
        raise FunctionalError(
            f"economics has {len(econ.sale)} sale values, trajectory has {n_sell} traces")


def _double_integral(poly: ValuePolynomial, values, times, ages, w_t, w_a) -> float:
    # int int C(t, a, u(t, a)) da dt with tensor trapezoid weights
    if poly.is_zero:
        return 0.0
    if poly.is_constant_coefficient:
        total = 0.0
        power = None
        for k, c in enumerate(poly.coeffs):
            power = np.ones_like(values) if k == 0 else (values if k == 1 else power * values)
            if c != 0.0:
                total += c * float(w_t @ (power @ w_a))
        return total
    integrand = poly(values, times[:, None], ages[None, :])
    return float(w_t @ (integrand @ w_a))


def income(trajectory: Trajectory, econ: EconomicData) -> float:
    """Terminal value of J(T, .) plus sale income at each sell age."""
    _check(trajectory, econ)
    total = float(econ.terminal(trajectory.J[-1], trajectory.age_J) @ trajectory.w_J)
    w_t = trajectory.time_weights
    for i, price in enumerate(econ.sale):
        sold = (1.0 - trajectory.kept[i]) * trajectory.traces[i]
        total += float(price(sold, trajectory.times) @ w_t)
    return total


def quadratic_J_term(trajectory: Trajectory, target: float) -> float:
    """int_0^T int_0^abar (J - target)^2 da dt."""
    dev = trajectory.J - target
    return float(trajectory.time_weights @ ((dev * dev) @ trajectory.w_J))


def cost(trajectory: Trajectory, econ: EconomicData) -> float:
    """Running costs integrated over time and age."""
    _check(trajectory, econ)
    w_t = trajectory.time_weights
    total = 0.0
    for u in ("J", "S", "R"):
        if u == "J" and econ.quadratic_J:
            quad = quadratic_J_term(trajectory, econ.J_target)
            total += -quad if econ.quadratic_sign == "printed" else quad
            continue
        total += _double_integral(econ.running[u], trajectory.values(u), trajectory.times,
                                  trajectory.ages(u), w_t, trajectory.weights(u))
    return total


def profit(trajectory: Trajectory, econ: EconomicData) -> float:
    return income(trajectory, econ) - cost(trajectory, econ)
