"""Maximization of profit polynomials (or raw objectives) over the box [0, 1]^n."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .polyfit import ProfitPolynomial, evaluate

VERTEX_CAP = 24
CERT_VERTEX = "vertex-enumeration-exhaustive"
CERT_GRID = "grid-plus-local-refinement"
GRID_BUDGET = 2_000_000
MAX_SWEEPS = 1000
N_STARTS = 8
_CHUNK = 1 << 16


class OptimizerError(ValueError):
    pass


@dataclass(frozen=True)
class Optimum:
    argmax: tuple[float, ...]
    value: float
    certificate: str
    is_vertex: bool
    variables: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {"argmax": list(self.argmax), "value": self.value,
                "certificate": self.certificate, "is_vertex": self.is_vertex}


def _on_vertex(x) -> bool:
    return bool(np.all((np.asarray(x) == 0.0) | (np.asarray(x) == 1.0)))


def _batch(objective, n) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(objective, ProfitPolynomial):
        if objective.n != n:
            raise OptimizerError(f"polynomial has {objective.n} variables, expected {n}")
        return objective.evaluate_many
    return lambda pts: np.array([float(objective(p)) for p in pts])


def maximize_bangbang(objective, n: int | None = None, cap: int = VERTEX_CAP) -> Optimum:
    """Best vertex of [0, 1]^n by exhaustive enumeration.

    ``objective`` is a ProfitPolynomial or any callable on control vectors.
    Ties go to the lexicographically smallest vertex.
    """
    if n is None:
        if not isinstance(objective, ProfitPolynomial):
            raise OptimizerError("n is required for a callable objective")
        n = objective.n
    if n > cap:
        raise OptimizerError(f"{2 ** n} vertices exceed the enumeration cap 2^{cap}")
    batch = _batch(objective, n)
    best_val, best_x = -np.inf, None
    vertices = itertools.product((0.0, 1.0), repeat=n)
    while True:
        chunk = np.array(list(itertools.islice(vertices, _CHUNK)), dtype=float).reshape(-1, n)
        if not len(chunk):
            break
        vals = batch(chunk)
        if np.any(np.isnan(vals)):
            raise OptimizerError("objective returned NaN at a vertex")
        k = int(np.argmax(vals))  # first maximum within lexicographic order
        if vals[k] > best_val:
            best_val, best_x = float(vals[k]), chunk[k]
    names = objective.variables if isinstance(objective, ProfitPolynomial) else ()
    return Optimum(tuple(float(v) for v in best_x), best_val, CERT_VERTEX, True, names)


def default_density(n: int) -> int:
    if n <= 3:
        return 101
    return max(2, int(GRID_BUDGET ** (1.0 / n)))


def _grid_candidates(poly: ProfitPolynomial, density: int, keep: int):
    axis = np.linspace(0.0, 1.0, density)
    n = poly.n
    total = density ** n
    best_vals = np.empty(0)
    best_pts = np.empty((0, n))
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(total, start + _CHUNK))
        digits = np.empty((len(idx), n), dtype=int)
        rem = idx.copy()
        for k in range(n - 1, -1, -1):
            digits[:, k] = rem % density
            rem //= density
        pts = axis[digits]
        vals = poly.evaluate_many(pts)
        best_vals = np.concatenate([best_vals, vals])
        best_pts = np.concatenate([best_pts, pts])
        if len(best_vals) > keep:
            # stable sort keeps the earliest (lexicographically smallest) point on ties
            order = np.argsort(-best_vals, kind="stable")[:keep]
            order.sort()
            best_vals, best_pts = best_vals[order], best_pts[order]
    order = np.argsort(-best_vals, kind="stable")
    return best_pts[order], best_vals[order]


def _max_on_unit_interval(coefs: np.ndarray):
    """(argmax, value) of sum coefs[p] x^p over [0, 1], exactly via critical points."""
    cands = [0.0, 1.0]
    deriv = np.polynomial.polynomial.polyder(coefs)
    if len(deriv) > 1 and np.any(deriv[1:] != 0):
        roots = np.polynomial.polynomial.polyroots(deriv)
        cands += [float(r.real) for r in roots if abs(r.imag) < 1e-12 and 0.0 < r.real < 1.0]
    vals = np.polynomial.polynomial.polyval(np.array(cands), coefs)
    k = int(np.argmax(vals))
    return cands[k], float(vals[k])


def _coordinate_ascent(poly: ProfitPolynomial, x: np.ndarray, tol: float) -> np.ndarray:
    x = x.copy()
    for _ in range(MAX_SWEEPS):
        moved = 0.0
        for k in range(poly.n):
            coefs = poly.restrict(k, x)
            current = float(np.polynomial.polynomial.polyval(x[k], coefs))
            xk, val = _max_on_unit_interval(coefs)
            if val > current:
                moved = max(moved, abs(xk - x[k]))
                x[k] = xk
        if moved < tol:
            break
    return x


def _projected_gradient(poly: ProfitPolynomial, x: np.ndarray, tol: float) -> np.ndarray:
    value = evaluate(poly, x)
    step = 1.0
    for _ in range(MAX_SWEEPS):
        grad = poly.gradient(x)
        while step > tol * 1e-3:
            trial = np.clip(x + step * grad, 0.0, 1.0)
            tv = evaluate(poly, trial)
            if tv > value:
                break
            step *= 0.5
        else:
            return x
        moved = float(np.max(np.abs(trial - x)))
        x, value = trial, tv
        step *= 2.0
        if moved < tol:
            break
    return x


def maximize_box(poly: ProfitPolynomial, n: int | None = None,
                 grid_density: int | None = None, tol: float = 1e-8) -> Optimum:
    """Maximize over [0, 1]^n: dense grid scan, then local ascent from the best points.

    Local ascent alternates exact one-variable maximization (the restriction to
    one coordinate is a univariate polynomial) with projected gradient steps.
    """
    if not isinstance(poly, ProfitPolynomial):
        raise OptimizerError("maximize_box needs a ProfitPolynomial")
    if n is not None and n != poly.n:
        raise OptimizerError(f"polynomial has {poly.n} variables, expected {n}")
    if not poly.terms:
        raise OptimizerError("polynomial has no terms")
    density = grid_density or default_density(poly.n)
    if density < 2:
        raise OptimizerError("grid density must be at least 2")
    if density ** poly.n > 50 * GRID_BUDGET:
        raise OptimizerError(f"grid of {density}^{poly.n} points is too large")
    starts, _ = _grid_candidates(poly, density, N_STARTS)
    best_x, best_val = None, -np.inf
    for x0 in starts:
        x = x0
        for _ in range(20):
            prev = x
            x = _projected_gradient(poly, _coordinate_ascent(poly, x, tol), tol)
            if np.max(np.abs(x - prev)) < tol:
                break
        val = evaluate(poly, x)
        if val > best_val:
            best_x, best_val = x, val
    best_x = np.clip(best_x, 0.0, 1.0)
    best_val = evaluate(poly, best_x)
    return Optimum(tuple(float(v) for v in best_x), best_val, CERT_GRID, _on_vertex(best_x),
                   poly.variables)


def maximize(poly: ProfitPolynomial, multiaffine: bool, grid_density: int | None = None,
             tol: float = 1e-8) -> Optimum:
    """Vertex enumeration for multiaffine objectives, grid plus refinement otherwise."""
    if multiaffine and poly.n <= VERTEX_CAP:
        return maximize_bangbang(poly)
    return maximize_box(poly, grid_density=grid_density, tol=tol)


def is_multiaffine(poly: ProfitPolynomial, atol: float = 0.0) -> bool:
    return all(max(e, default=0) <= 1 or abs(c) <= atol for e, c in poly.terms.items())


__all__: Sequence[str] = ["Optimum", "OptimizerError", "maximize_bangbang", "maximize_box",
                          "maximize", "is_multiaffine", "CERT_VERTEX", "CERT_GRID"]
