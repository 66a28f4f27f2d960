"""Profit polynomials in the control parameters and their reconstruction from samples.

A fit evaluates the profit at a fixed design of control vectors and solves
for the coefficients of a known monomial basis.  Three designs are built in:

* multiaffine: the 2^n vertices of [0, 1]^n, coefficients by inclusion-exclusion;
* total degree: monomials of total degree <= n on the nodes j/n;
* structured: generational eta with per-generation thetas, where eta may
  appear squared but thetas only multiaffinely.

Every basis used here is a lower set (closed under lowering any exponent),
and the design point of a multi-index alpha is (x[alpha_1], ..., x[alpha_m])
for per-variable node lists x.  That design is unisolvent for any lower set,
so the square Vandermonde systems are always invertible; their condition
number is still checked.
"""

from __future__ import annotations

import io
import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

MODES = ("multiaffine-generational", "periodic-total-degree", "stabilizing-structured",
         "tensor")
COND_LIMIT = 1e12
SAMPLE_RESIDUAL_LIMIT = 1e-9
DEFAULT_LABEL_CAP = 2_000_000
THREADS_ENV = "RENEWALCTL_THREADS"

Exponents = tuple[int, ...]
Evaluator = Callable[[np.ndarray], float]


class FitError(RuntimeError):
    """A fit could not be carried out reliably."""


def monomial_order(exps: Exponents):
    """Sort key: total degree, then largest exponent, then earlier variables first."""
    return (sum(exps), max(exps, default=0), tuple(-e for e in exps))


@dataclass(frozen=True, eq=False)
class ProfitPolynomial:
    """sum over terms of coefficient * prod_k x_k ** exponent_k."""

    variables: tuple[str, ...]
    terms: Mapping[Exponents, float]
    degree_bounds: tuple[int, ...]
    total_degree_bound: int | None = None

    def __post_init__(self):
        n = len(self.variables)
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "degree_bounds", tuple(int(b) for b in self.degree_bounds))
        if len(self.degree_bounds) != n:
            raise FitError(f"{len(self.degree_bounds)} degree bounds for {n} variables")
        clean = {}
        for exps, c in self.terms.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != n or min(exps, default=0) < 0:
                raise FitError(f"bad exponent vector {exps} for {n} variables")
            if any(e > b for e, b in zip(exps, self.degree_bounds)):
                raise FitError(f"term {exps} exceeds degree bounds {self.degree_bounds}")
            if self.total_degree_bound is not None and sum(exps) > self.total_degree_bound:
                raise FitError(f"term {exps} exceeds total degree {self.total_degree_bound}")
            if not math.isfinite(c):
                raise FitError(f"coefficient of {exps} is not finite")
            clean[exps] = clean.get(exps, 0.0) + float(c)
        ordered = dict(sorted(clean.items(), key=lambda kv: monomial_order(kv[0])))
        object.__setattr__(self, "terms", ordered)

    @property
    def n(self) -> int:
        return len(self.variables)

    def coefficient(self, exps: Sequence[int]) -> float:
        return self.terms.get(tuple(exps), 0.0)

    def coefficients(self, basis: Iterable[Exponents]) -> np.ndarray:
        return np.array([self.coefficient(b) for b in basis])

    def _arrays(self):
        exps = np.array(list(self.terms), dtype=int).reshape(-1, self.n)
        coefs = np.array(list(self.terms.values()), dtype=float)
        return exps, coefs

    def __call__(self, point) -> float:
        return evaluate(self, point)

    def evaluate_many(self, points) -> np.ndarray:
        """Values at each row of an (m, n) array."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.n)
        exps, coefs = self._arrays()
        if not len(coefs):
            return np.zeros(len(pts))
        out = np.zeros(len(pts))
        for e, c in zip(exps, coefs):
            out += c * np.prod(pts ** e, axis=1)
        return out

    def gradient(self, point) -> np.ndarray:
        x = _as_point(point, self.n)
        grad = np.zeros(self.n)
        for exps, c in self.terms.items():
            for k, e in enumerate(exps):
                if e:
                    lowered = list(exps)
                    lowered[k] -= 1
                    grad[k] += c * e * float(np.prod(x ** np.array(lowered)))
        return grad

    def restrict(self, k: int, point) -> np.ndarray:
        """Coefficients (by increasing power) of x_k -> p(point with x_k replaced)."""
        x = _as_point(point, self.n)
        out = np.zeros(self.degree_bounds[k] + 1)
        for exps, c in self.terms.items():
            rest = np.prod([x[j] ** e for j, e in enumerate(exps) if j != k])
            out[exps[k]] += c * rest
        return out

    def permuted(self, order: Sequence[int]) -> "ProfitPolynomial":
        """Same polynomial with variables reordered: new variable j is old order[j]."""
        order = list(order)
        return ProfitPolynomial(tuple(self.variables[j] for j in order),
                                {tuple(e[j] for j in order): c for e, c in self.terms.items()},
                                tuple(self.degree_bounds[j] for j in order),
                                self.total_degree_bound)

    def to_table(self) -> str:
        """Plain-text table: header comments, then one line per term.

        Columns: one exponent per variable (in ``variables`` order), then the
        coefficient in full double precision.
        """
        buf = io.StringIO()
        buf.write("# profit polynomial\n")
        buf.write(f"# variables: {' '.join(self.variables)}\n")
        buf.write(f"# degree_bounds: {' '.join(map(str, self.degree_bounds))}\n")
        tdb = "none" if self.total_degree_bound is None else str(self.total_degree_bound)
        buf.write(f"# total_degree_bound: {tdb}\n")
        buf.write(",".join([*self.variables, "coefficient"]) + "\n")
        for exps, c in self.terms.items():
            buf.write(",".join([*map(str, exps), repr(float(c))]) + "\n")
        return buf.getvalue()

    @classmethod
    def from_table(cls, text: str) -> "ProfitPolynomial":
        meta, rows = {}, []
        header = None
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, sep, val = line[1:].partition(":")
                if sep:
                    meta[key.strip()] = val.strip()
                continue
            if header is None:
                header = line.split(",")
                if header[-1] != "coefficient":
                    raise FitError(f"line {lineno}: last column must be 'coefficient'")
                continue
            cells = line.split(",")
            if len(cells) != len(header):
                raise FitError(f"line {lineno}: expected {len(header)} columns, got {len(cells)}")
            try:
                rows.append((tuple(int(c) for c in cells[:-1]), float(cells[-1])))
            except ValueError as exc:
                raise FitError(f"line {lineno}: {exc}") from None
        if header is None:
            raise FitError("polynomial table has no header row")
        variables = tuple(header[:-1])
        if "degree_bounds" in meta:
            bounds = tuple(int(b) for b in meta["degree_bounds"].split())
        else:
            bounds = tuple(max((r[0][k] for r in rows), default=0) for k in range(len(variables)))
        tdb = meta.get("total_degree_bound", "none")
        return cls(variables, dict(rows), bounds, None if tdb == "none" else int(tdb))


def _as_point(point, n):
    x = np.asarray(point, dtype=float).ravel()
    if x.shape != (n,):
        raise FitError(f"point has dimension {x.size}, polynomial has {n} variables")
    return x


def evaluate(poly: ProfitPolynomial, point) -> float:
    """Value of ``poly`` at ``point``."""
    x = _as_point(point, poly.n)
    total = 0.0
    for exps, c in poly.terms.items():
        total += c * math.prod(float(x[k]) ** e for k, e in enumerate(exps) if e)
    return total


@dataclass(frozen=True, eq=False)
class FitPlan:
    """A monomial basis with its sample design.

    ``labels`` lists the coefficient labels of the structured form (one per
    coefficient as the form is written, so some label distinct terms that
    coincide as monomials); ``nu`` is their count.  For the other modes the
    labels are the basis itself.
    """

    mode: str
    variables: tuple[str, ...]
    basis: tuple[Exponents, ...]
    sample_points: np.ndarray
    degree_bounds: tuple[int, ...]
    total_degree_bound: int | None = None
    labels: tuple = field(default=())

    def __post_init__(self):
        if self.mode not in MODES:
            raise FitError(f"unknown fit mode {self.mode!r}")
        if len(self.sample_points) != len(self.basis):
            raise FitError("sample design and basis differ in size")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(self.basis))

    @property
    def nu(self) -> int:
        return len(self.labels)

    @property
    def n_samples(self) -> int:
        return len(self.basis)

    def design_matrix(self) -> np.ndarray:
        pts = np.asarray(self.sample_points, dtype=float)
        exps = np.array(self.basis, dtype=int)
        return np.prod(pts[:, None, :] ** exps[None, :, :], axis=2)


def _default_names(n, prefix="eta"):
    return tuple(f"{prefix}{k + 1}" for k in range(n))


def lower_set_plan(mode: str, variables: Sequence[str], basis: Iterable[Exponents],
                   nodes: Sequence[Sequence[float]], degree_bounds: Sequence[int],
                   total_degree_bound: int | None = None, labels: tuple = ()) -> FitPlan:
    """Plan whose design point for alpha is (nodes[0][alpha_0], nodes[1][alpha_1], ...)."""
    basis = tuple(sorted(set(map(tuple, basis)), key=monomial_order))
    basis_set = set(basis)
    for b in basis:
        for k, e in enumerate(b):
            if e and tuple(b[:k]) + (e - 1,) + tuple(b[k + 1:]) not in basis_set:
                raise FitError(f"basis is not a lower set: {b} present without its lowering")
    for k, b in enumerate(degree_bounds):
        if len(nodes[k]) < b + 1 or len(set(nodes[k][: b + 1])) != b + 1:
            raise FitError(f"variable {k} needs {b + 1} distinct nodes")
    pts = np.array([[nodes[k][e] for k, e in enumerate(b)] for b in basis], dtype=float)
    return FitPlan(mode, tuple(variables), basis, pts.reshape(len(basis), len(variables)),
                   tuple(degree_bounds), total_degree_bound, labels)


def multiaffine_plan(n: int, variables: Sequence[str] | None = None) -> FitPlan:
    basis = itertools.product((0, 1), repeat=n)
    return lower_set_plan("multiaffine-generational", variables or _default_names(n), basis,
                          [(0.0, 1.0)] * n, (1,) * n)


def total_degree_plan(m: int, n: int, variables: Sequence[str] | None = None) -> FitPlan:
    """All monomials in m variables of total degree <= n; nodes j / n."""
    if n < 1:
        raise FitError("total degree must be >= 1")
    basis = [e for e in itertools.product(range(n + 1), repeat=m) if sum(e) <= n]
    nodes = [tuple(j / n for j in range(n + 1))] * m
    return lower_set_plan("periodic-total-degree", variables or _default_names(m), basis,
                          nodes, (n,) * m, n)


def tensor_plan(degrees: Sequence[int], variables: Sequence[str] | None = None) -> FitPlan:
    """All monomials with exponent k below degrees[k] + 1; nodes j / degree."""
    basis = itertools.product(*(range(d + 1) for d in degrees))
    nodes = [tuple(j / d for j in range(d + 1)) if d else (0.0,) for d in degrees]
    return lower_set_plan("tensor", variables or _default_names(len(degrees)), basis, nodes,
                          tuple(degrees))


def stabilizing_labels(n: int, N: int) -> list[tuple]:
    """Coefficient labels of the structured form, in order.

    ("mixed", lambda, ells, betas) for lambda in {0,1}^n, ells in {1..n}^(N-1),
    betas in {0,1}^(N-1); then ("pure", lambda) for lambda in {0,1,2}^n with
    max(lambda) == 2.
    """
    out = []
    for lam in itertools.product((0, 1), repeat=n):
        for ells in itertools.product(range(1, n + 1), repeat=N - 1):
            for betas in itertools.product((0, 1), repeat=N - 1):
                out.append(("mixed", lam, ells, betas))
    for lam in itertools.product((0, 1, 2), repeat=n):
        if max(lam) == 2:
            out.append(("pure", lam))
    return out


def stabilizing_nu(n: int, N: int) -> int:
    return n ** (N - 1) * 2 ** (n + N - 1) + 3 ** n - 2 ** n


def stabilizing_variables(n: int, N: int) -> tuple[str, ...]:
    names = [f"eta{l + 1}" for l in range(n)]
    names += [f"theta{i + 1}_{l + 1}" for i in range(N - 1) for l in range(n)]
    return tuple(names)


def label_exponents(label: tuple, n: int, N: int) -> Exponents:
    """Exponent vector (over stabilizing_variables order) of a structured label."""
    exps = [0] * (n + n * (N - 1))
    exps[:n] = label[1]
    if label[0] == "mixed":
        for i, (ell, beta) in enumerate(zip(label[2], label[3])):
            exps[n + i * n + ell - 1] += beta
    return tuple(exps)


def build_stabilizing_basis(n: int, N: int, cap: int = DEFAULT_LABEL_CAP) -> FitPlan:
    """Structured plan for generational eta_1..eta_n and thetas theta_i^l, i < N.

    The plan carries all ``nu`` labels of the structured form.  Labels with
    beta_i = 0 and different ell_i name the same monomial, so the fitted basis
    is the set of distinct monomials they produce, which is also a lower set.
    """
    if n < 1 or N < 1:
        raise FitError(f"need n >= 1 and N >= 1, got n={n}, N={N}")
    nu = stabilizing_nu(n, N)
    if nu > cap:
        raise FitError(f"nu = {nu} exceeds the enumeration cap {cap}")
    labels = tuple(stabilizing_labels(n, N))
    basis = {label_exponents(lab, n, N) for lab in labels}
    variables = stabilizing_variables(n, N)
    n_theta = n * (N - 1)
    nodes = [(0.0, 1.0, 0.5)] * n + [(0.0, 1.0)] * n_theta
    bounds = (2,) * n + (1,) * n_theta
    return lower_set_plan("stabilizing-structured", variables, basis, nodes, bounds,
                          labels=labels)


def thread_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise FitError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return max(1, min(8, os.cpu_count() or 1))


def evaluate_points(evaluator: Evaluator, points, threads: int | None = None) -> np.ndarray:
    """evaluator at every row of ``points``; calls run concurrently, results in order."""
    pts = [np.array(p, dtype=float) for p in np.asarray(points, dtype=float)]
    workers = min(thread_count(threads), max(1, len(pts)))
    if workers == 1:
        vals = [evaluator(p) for p in pts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(evaluator, pts))
    out = np.array([float(v) for v in vals])
    if not np.all(np.isfinite(out)):
        bad = int(np.flatnonzero(~np.isfinite(out))[0])
        raise FitError(f"evaluator returned {out[bad]} at {pts[bad]}")
    return out


def solve_plan(plan: FitPlan, values: Sequence[float]) -> ProfitPolynomial:
    """Coefficients of the plan's basis through the sampled values."""
    y = np.asarray(values, dtype=float)
    V = plan.design_matrix()
    cond = np.linalg.cond(V)
    if not cond <= COND_LIMIT:
        raise FitError(f"sample design is ill-conditioned (condition number {cond:.3g})")
    coef = np.linalg.solve(V, y)
    scale = max(float(np.max(np.abs(y))), np.finfo(float).tiny)
    resid = float(np.max(np.abs(V @ coef - y))) / scale
    if resid > SAMPLE_RESIDUAL_LIMIT:
        raise FitError(f"sample residual {resid:.3g} exceeds {SAMPLE_RESIDUAL_LIMIT}")
    return ProfitPolynomial(plan.variables, dict(zip(plan.basis, coef)), plan.degree_bounds,
                            plan.total_degree_bound)


def fit_plan(evaluator: Evaluator, plan: FitPlan, threads: int | None = None):
    """Sample ``evaluator`` on the plan's design and fit; returns (polynomial, values)."""
    values = evaluate_points(evaluator, plan.sample_points, threads)
    if plan.mode == "multiaffine-generational":
        return _inclusion_exclusion(plan, values), values
    return solve_plan(plan, values), values


def _inclusion_exclusion(plan: FitPlan, values) -> ProfitPolynomial:
    # c_S = sum over subsets U of S of (-1)^{|S| - |U|} f(1_U)
    vertex_value = {b: v for b, v in zip(plan.basis, values)}
    terms = {}
    for s in plan.basis:
        ones = [k for k, e in enumerate(s) if e]
        total = 0.0
        for r in range(len(ones) + 1):
            sign = -1.0 if (len(ones) - r) % 2 else 1.0
            for sub in itertools.combinations(ones, r):
                u = [0] * len(s)
                for k in sub:
                    u[k] = 1
                total += sign * vertex_value[tuple(u)]
        terms[s] = total
    return ProfitPolynomial(plan.variables, terms, plan.degree_bounds)


def fit_multiaffine(evaluator: Evaluator, n: int, variables: Sequence[str] | None = None,
                    threads: int | None = None) -> ProfitPolynomial:
    """Multiaffine interpolant through the 2^n vertex values."""
    return fit_plan(evaluator, multiaffine_plan(n, variables), threads)[0]


def fit_total_degree(evaluator: Evaluator, m: int, n: int,
                     variables: Sequence[str] | None = None,
                     threads: int | None = None) -> ProfitPolynomial:
    """Polynomial of total degree <= n in m variables."""
    return fit_plan(evaluator, total_degree_plan(m, n, variables), threads)[0]


def fit_tensor(evaluator: Evaluator, degrees: Sequence[int],
               variables: Sequence[str] | None = None,
               threads: int | None = None) -> ProfitPolynomial:
    """Polynomial with per-variable degree bounds."""
    return fit_plan(evaluator, tensor_plan(degrees, variables), threads)[0]


def fit_stabilizing(evaluator: Evaluator, n: int, N: int,
                    threads: int | None = None) -> ProfitPolynomial:
    """Structured polynomial in generational eta and thetas."""
    return fit_plan(evaluator, build_stabilizing_basis(n, N), threads)[0]


@dataclass(frozen=True)
class HoldoutReport:
    """Fitted vs directly evaluated values at points outside the sample design."""

    points: np.ndarray
    predicted: np.ndarray
    actual: np.ndarray

    @property
    def relative(self) -> np.ndarray:
        return np.abs(self.predicted - self.actual) / np.maximum(np.abs(self.actual), 1e-300)

    @property
    def max_relative(self) -> float:
        return float(self.relative.max()) if len(self.actual) else 0.0


def holdout(poly: ProfitPolynomial, evaluator: Evaluator, count: int = 20, seed: int = 0,
            threads: int | None = None, points=None) -> HoldoutReport:
    """Compare ``poly`` with the evaluator at random interior points of the box."""
    if points is None:
        rng = np.random.default_rng(seed)
        points = rng.uniform(0.0, 1.0, size=(count, poly.n))
    points = np.asarray(points, dtype=float).reshape(-1, poly.n)
    actual = evaluate_points(evaluator, points, threads)
    return HoldoutReport(points, poly.evaluate_many(points), actual)
