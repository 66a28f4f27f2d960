"""Rate fields, fertility and age profiles used by the renewal model."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class RateError(ValueError):
    """Raised for malformed or inadmissible rate data."""


def _bilinear(t_grid, a_grid, table, t, a):
    # Clamped bilinear interpolation, vectorised over broadcastable t and a.
    t = np.clip(np.asarray(t, dtype=float), t_grid[0], t_grid[-1])
    a = np.clip(np.asarray(a, dtype=float), a_grid[0], a_grid[-1])
    if len(t_grid) == 1:
        i = np.zeros(np.shape(t), dtype=int)
        wt = np.zeros(np.shape(t))
        t_grid = np.array([t_grid[0], t_grid[0] + 1.0])
        table = np.vstack([table, table])
    else:
        i = np.clip(np.searchsorted(t_grid, t, side="right") - 1, 0, len(t_grid) - 2)
        wt = (t - t_grid[i]) / (t_grid[i + 1] - t_grid[i])
    if len(a_grid) == 1:
        j = np.zeros(np.shape(a), dtype=int)
        wa = np.zeros(np.shape(a))
        table = np.hstack([table, table])
    else:
        j = np.clip(np.searchsorted(a_grid, a, side="right") - 1, 0, len(a_grid) - 2)
        wa = (a - a_grid[j]) / (a_grid[j + 1] - a_grid[j])
    v00 = table[i, j]
    v01 = table[i, j + 1]
    v10 = table[i + 1, j]
    v11 = table[i + 1, j + 1]
    return (1 - wt) * ((1 - wa) * v00 + wa * v01) + wt * ((1 - wa) * v10 + wa * v11)


@dataclass(frozen=True, eq=False)
class RateField:
    """A rate g(t, a) or d(t, a): either a constant or a table on a (t, a) grid.

    Tables are interpolated bilinearly and clamped outside their grid.  The
    age derivative of a table is taken by central differences on the table
    grid and interpolated the same way.
    """

    value: Optional[float] = None
    t_grid: Optional[np.ndarray] = None
    a_grid: Optional[np.ndarray] = None
    table: Optional[np.ndarray] = None
    lower_bound: Optional[float] = None
    _da_table: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.value is not None:
            if self.table is not None:
                raise RateError("a rate field is either constant or tabulated, not both")
            if not np.isfinite(self.value):
                raise RateError(f"non-finite constant rate {self.value!r}")
            object.__setattr__(self, "value", float(self.value))
            return
        if self.table is None or self.t_grid is None or self.a_grid is None:
            raise RateError("tabulated rate needs t_grid, a_grid and table")
        t_grid = np.asarray(self.t_grid, dtype=float)
        a_grid = np.asarray(self.a_grid, dtype=float)
        table = np.asarray(self.table, dtype=float)
        if table.shape != (len(t_grid), len(a_grid)):
            raise RateError(
                f"table shape {table.shape} does not match grids "
                f"({len(t_grid)}, {len(a_grid)})")
        for name, grid in (("time", t_grid), ("age", a_grid)):
            if grid.ndim != 1 or len(grid) == 0 or np.any(np.diff(grid) <= 0):
                raise RateError(f"{name} grid must be strictly increasing")
        if not np.all(np.isfinite(table)):
            raise RateError("rate table contains non-finite values")
        if len(a_grid) > 1:
            da = np.gradient(table, a_grid, axis=1)
        else:
            da = np.zeros_like(table)
        object.__setattr__(self, "t_grid", t_grid)
        object.__setattr__(self, "a_grid", a_grid)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "_da_table", da)

    @classmethod
    def constant(cls, value: float, lower_bound: Optional[float] = None) -> "RateField":
        return cls(value=value, lower_bound=lower_bound)

    @classmethod
    def tabulated(cls, t_grid, a_grid, table, lower_bound=None) -> "RateField":
        return cls(t_grid=t_grid, a_grid=a_grid, table=table, lower_bound=lower_bound)

    @classmethod
    def from_function(cls, func, t_grid, a_grid, lower_bound=None) -> "RateField":
        """Sample ``func(t, a)`` on a rectangular grid."""
        t_grid = np.asarray(t_grid, dtype=float)
        a_grid = np.asarray(a_grid, dtype=float)
        table = func(t_grid[:, None], a_grid[None, :]) * np.ones((len(t_grid), len(a_grid)))
        return cls.tabulated(t_grid, a_grid, table, lower_bound)

    @property
    def is_constant(self) -> bool:
        return self.value is not None

    def __call__(self, t, a):
        if self.value is not None:
            return self.value * np.ones(np.broadcast(np.asarray(t), np.asarray(a)).shape)[()]
        return _bilinear(self.t_grid, self.a_grid, self.table, t, a)

    def da(self, t, a):
        """Partial derivative in age; exactly zero for constants."""
        if self.value is not None:
            return np.zeros(np.broadcast(np.asarray(t), np.asarray(a)).shape)[()]
        return _bilinear(self.t_grid, self.a_grid, self._da_table, t, a)

    def sup(self) -> float:
        return self.value if self.value is not None else float(self.table.max())

    def inf(self) -> float:
        return self.value if self.value is not None else float(self.table.min())

    def check_growth(self, name: str = "growth rate") -> None:
        """Check the field is bounded below by a positive declared bound."""
        bound = self.lower_bound if self.lower_bound is not None else self.inf()
        if not bound > 0:
            raise RateError(f"{name}: lower bound must be > 0, got {bound}")
        if self.inf() < bound:
            raise RateError(
                f"{name}: value {self.inf()} falls below declared lower bound {bound}")


@dataclass(frozen=True, eq=False)
class Fertility:
    """Fertility w(a) = scale * profile(a), vanishing outside [lo, hi]."""

    scale: float
    support: tuple[float, float]
    ages: Optional[np.ndarray] = None
    profile: Optional[np.ndarray] = None

    def __post_init__(self):
        lo, hi = (float(x) for x in self.support)
        if not (np.isfinite(self.scale) and self.scale >= 0):
            raise RateError(f"fertility scale must be finite and >= 0, got {self.scale}")
        if not lo < hi:
            raise RateError(f"fertility support must satisfy lo < hi, got {self.support}")
        object.__setattr__(self, "support", (lo, hi))
        if self.profile is not None:
            ages = np.asarray(self.ages, dtype=float)
            prof = np.asarray(self.profile, dtype=float)
            if ages.shape != prof.shape or np.any(np.diff(ages) <= 0):
                raise RateError("fertility profile needs matching increasing ages")
            if np.any(prof < 0):
                raise RateError("fertility profile must be nonnegative")
            object.__setattr__(self, "ages", ages)
            object.__setattr__(self, "profile", prof)

    @classmethod
    def indicator(cls, scale: float, lo: float, hi: float) -> "Fertility":
        return cls(scale=scale, support=(lo, hi))

    @property
    def kind(self) -> str:
        return "indicator" if self.profile is None else "tabulated"

    def limit(self, a, side: str):
        """One-sided limit of w at ``a``: side "right" (a+) or "left" (a-)."""
        a = np.asarray(a, dtype=float)
        lo, hi = self.support
        if side == "right":
            inside = (a >= lo) & (a < hi)
        elif side == "left":
            inside = (a > lo) & (a <= hi)
        else:
            raise ValueError(f"side must be 'left' or 'right', got {side!r}")
        return self._scaled(a, inside)

    def quadrature_weights(self, ages) -> np.ndarray:
        """Weights q with q @ f = trapezoid of w * f over the grid ``ages``.

        Each interval uses the one-sided limits of w at its ends, so a jump of w
        at a grid node costs no accuracy.
        """
        ages = np.asarray(ages, dtype=float)
        h = np.diff(ages)
        q = np.zeros_like(ages)
        q[:-1] += 0.5 * h * self.limit(ages[:-1], "right")
        q[1:] += 0.5 * h * self.limit(ages[1:], "left")
        return q

    def _scaled(self, a, inside):
        if self.profile is None:
            shape = np.ones_like(a)
        else:
            shape = np.interp(a, self.ages, self.profile, left=0.0, right=0.0)
        return np.where(inside, self.scale * shape, 0.0)

    def __call__(self, a):
        a = np.asarray(a, dtype=float)
        lo, hi = self.support
        inside = (a >= lo) & (a <= hi)
        if self.profile is None:
            shape = np.ones_like(a)
        else:
            shape = np.interp(a, self.ages, self.profile, left=0.0, right=0.0)
        return np.where(inside, self.scale * shape, 0.0)


@dataclass(frozen=True, eq=False)
class Profile:
    """An age profile: a constant on [lo, hi] or a piecewise-linear table.

    Zero outside its support.  Used for initial data.
    """

    value: float = 0.0
    support: tuple[float, float] = (0.0, np.inf)
    ages: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.values is not None:
            ages = np.asarray(self.ages, dtype=float)
            vals = np.asarray(self.values, dtype=float)
            if ages.ndim != 1 or ages.shape != vals.shape or np.any(np.diff(ages) <= 0):
                raise RateError("profile table needs matching strictly increasing ages")
            object.__setattr__(self, "ages", ages)
            object.__setattr__(self, "values", vals)
            object.__setattr__(self, "support", (float(ages[0]), float(ages[-1])))

    @classmethod
    def constant(cls, value: float, lo: float = 0.0, hi: float = np.inf) -> "Profile":
        return cls(value=float(value), support=(lo, hi))

    @classmethod
    def table(cls, ages, values) -> "Profile":
        return cls(ages=ages, values=values)

    @property
    def is_zero(self) -> bool:
        if self.values is not None:
            return not np.any(self.values)
        return self.value == 0.0

    def upper_extent(self) -> float:
        """Largest age where the profile may be nonzero."""
        if self.is_zero:
            return -np.inf
        return self.support[1]

    def __call__(self, a):
        a = np.asarray(a, dtype=float)
        if self.values is not None:
            return np.interp(a, self.ages, self.values, left=0.0, right=0.0)
        lo, hi = self.support
        return np.where((a >= lo) & (a <= hi), self.value, 0.0)
