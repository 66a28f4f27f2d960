"""TOML scenario files.

A scenario file has the sections ``[model]``, ``[growth]``, ``[death]``,
``[fertility]``, ``[initial]``, ``[economics]``, ``[controls]`` and the
optional ``[grid]`` and ``[fit]``.  Unknown sections or keys are errors.
README.md documents every key; the bundled files under ``scenarios/`` are
complete examples.  Errors carry the line of the offending key.
"""

from __future__ import annotations

import csv
import re
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .characteristics import generation_time, generation_times
from .controls import (ExplicitLayout, FixedLayout, GenerationalLayout, PeriodicLayout,
                       StabilizingLayout)
from .rates import Fertility, Profile, RateError, RateField
from .scenario import (POPULATIONS, ControlSchedule, EconomicData, InitialData, Scenario,
                       ScenarioError, ValuePolynomial)

PRESET_PREFIX = "preset:"
LAYOUTS = ("generational", "periodic", "explicit", "stabilizing", "fixed")

SCHEMA: dict[str, set[str]] = {
    "model": {"abar", "sell_ages", "horizon", "generations", "rate_convention", "amax"},
    "growth": set(POPULATIONS),
    "death": set(POPULATIONS),
    "fertility": {"scale", "support", "profile_file", "profile_ages", "profile_values"},
    "initial": set(POPULATIONS),
    "economics": {"terminal", "sale", "running", "quadratic_J", "J_target", "quadratic_sign",
                  "kappa"},
    "controls": {"layout", "generations", "taus", "breakpoints", "eta", "theta",
                 "theta_N_zero"},
    "grid": {"dt", "oracle_da"},
    "fit": {"mode", "degree", "holdout", "seed", "grid_density"},
}
REQUIRED = ("model", "growth", "death", "fertility", "initial", "controls")
RATE_KEYS = {"value", "lower_bound", "file", "t", "a", "values"}
PROFILE_KEYS = {"value", "support", "ages", "values", "file"}


class ScenarioFileError(ValueError):
    """Invalid scenario file; ``line`` is 1-based or None."""

    def __init__(self, message: str, source: str = "<scenario>", line: int | None = None):
        self.message, self.source, self.line = message, source, line
        where = f"{source}:{line}" if line else source
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True, eq=False)
class ScenarioFile:
    """A parsed scenario file: model, control layout and run settings."""

    scenario: Scenario
    layout: Any
    eta: tuple[float, ...] = ()
    theta: tuple[float, ...] = ()
    dt: float | None = None
    oracle_da: float | None = None
    fit_mode: str | None = None
    fit_degree: int | None = None
    holdout: int = 20
    seed: int = 0
    grid_density: int | None = None
    source: str = "<scenario>"
    raw: dict = field(default_factory=dict, repr=False)

    def controls(self, values=None) -> ControlSchedule:
        """Schedule for the given control vector (default: the file's values)."""
        if values is None:
            values = self.default_point()
        return self.layout.schedule(values)

    def default_point(self) -> tuple[float, ...]:
        n = self.layout.n
        if self.layout.kind == "stabilizing":
            eta = list(self.eta)
            theta = list(self.theta)
            per = n - self.layout.generations
            vals = eta + theta
            if len(eta) != self.layout.generations or len(theta) != per:
                if not self.eta and not self.theta:
                    return (0.0,) * n
                raise ScenarioFileError(
                    f"stabilizing layout needs {self.layout.generations} eta values and "
                    f"{per} theta values", self.source)
            return tuple(vals)
        if not self.eta:
            return (0.0,) * n
        if len(self.eta) != n:
            raise ScenarioFileError(f"layout has {n} eta variables, {len(self.eta)} given",
                                    self.source)
        return tuple(self.eta)


def _numeric(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


class _Locator:
    """Finds the line of a key in the source text for diagnostics."""

    def __init__(self, text: str):
        self.lines = text.splitlines()

    def __call__(self, section: str, key: str | None = None) -> int | None:
        header = re.compile(r"^\s*\[\s*" + re.escape(section) + r"\s*\]")
        start = None
        for i, line in enumerate(self.lines):
            if header.match(line):
                start = i
                break
        if start is None:
            return None
        if key is None:
            return start + 1
        pat = re.compile(r"^\s*\"?" + re.escape(key) + r"\"?\s*=")
        for i in range(start + 1, len(self.lines)):
            if re.match(r"^\s*\[", self.lines[i]):
                break
            if pat.match(self.lines[i]):
                return i + 1
        return start + 1


class _Parser:
    def __init__(self, text: str, source: str, base: Path | None):
        self.source, self.base = source, base
        self.where = _Locator(text)
        try:
            self.doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            m = re.search(r"line (\d+)", str(exc))
            raise ScenarioFileError(f"TOML syntax error: {exc}", source,
                                    int(m.group(1)) if m else None) from None

    def fail(self, msg, section, key=None):
        raise ScenarioFileError(msg, self.source, self.where(section, key))

    def check_keys(self):
        for sec, body in self.doc.items():
            if sec not in SCHEMA:
                self.fail(f"unknown section [{sec}]", sec)
            if not isinstance(body, dict):
                raise ScenarioFileError(f"[{sec}] must be a table", self.source)
            for key in body:
                if key not in SCHEMA[sec]:
                    self.fail(f"unknown key '{key}' in [{sec}]", sec, key)
        for sec in REQUIRED:
            if sec not in self.doc:
                raise ScenarioFileError(f"missing section [{sec}]", self.source)

    def get(self, sec, key, kind, default=None, required=False):
        body = self.doc.get(sec, {})
        if key not in body:
            if required:
                self.fail(f"missing key '{key}' in [{sec}]", sec)
            return default
        val = body[key]
        try:
            return kind(val)
        except (TypeError, ValueError) as exc:
            self.fail(f"[{sec}] {key}: {exc}", sec, key)

    # value converters

    @staticmethod
    def number(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValueError(f"expected a number, got {v!r}")
        return float(v)

    def numbers(self, v):
        if not isinstance(v, list):
            raise ValueError(f"expected a list of numbers, got {v!r}")
        return tuple(self.number(x) for x in v)

    @staticmethod
    def integer(v):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValueError(f"expected an integer, got {v!r}")
        return v

    @staticmethod
    def boolean(v):
        if not isinstance(v, bool):
            raise ValueError(f"expected true or false, got {v!r}")
        return v

    @staticmethod
    def string(v):
        if not isinstance(v, str):
            raise ValueError(f"expected a string, got {v!r}")
        return v

    def path(self, name):
        p = Path(name)
        if not p.is_absolute() and self.base is not None:
            p = self.base / p
        return p

    def read_rows(self, name, header=True):
        try:
            with open(self.path(name), newline="") as fh:
                rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
        except OSError as exc:
            raise ValueError(f"cannot read table file {name!r}: {exc.strerror}") from None
        if header and rows and not _numeric(rows[0][0]):
            rows = rows[1:]  # header row
        return rows

    def rate(self, sec, u, growth):
        body = self.doc[sec]
        if u not in body:
            self.fail(f"missing rate for population {u}", sec)
        v = body[u]
        try:
            if not isinstance(v, dict):
                return RateField.constant(self.number(v))
            bad = set(v) - RATE_KEYS
            if bad:
                raise ValueError(f"unknown keys {sorted(bad)}")
            lb = self.number(v["lower_bound"]) if "lower_bound" in v else None
            if lb is not None and not growth:
                raise ValueError("lower_bound applies to growth rates only")
            if "value" in v:
                return RateField.constant(self.number(v["value"]), lb)
            if "file" in v:
                rows = self.read_rows(self.string(v["file"]), header=False)
                a = [float(x) for x in rows[0][1:]]
                t = [float(r[0]) for r in rows[1:]]
                table = [[float(x) for x in r[1:]] for r in rows[1:]]
                return RateField.tabulated(t, a, table, lb)
            if {"t", "a", "values"} <= set(v):
                return RateField.tabulated(self.numbers(v["t"]), self.numbers(v["a"]),
                                           [self.numbers(r) for r in v["values"]], lb)
            raise ValueError("give a number, {value = ...}, {file = ...} or {t, a, values}")
        except (ValueError, RateError, KeyError, IndexError) as exc:
            self.fail(f"[{sec}] {u}: {exc}", sec, u)

    def profile(self, u):
        body = self.doc["initial"]
        v = body.get(u, 0.0)
        try:
            if not isinstance(v, dict):
                return Profile.constant(self.number(v))
            bad = set(v) - PROFILE_KEYS
            if bad:
                raise ValueError(f"unknown keys {sorted(bad)}")
            if "file" in v:
                rows = self.read_rows(self.string(v["file"]))
                return Profile.table([float(r[0]) for r in rows], [float(r[1]) for r in rows])
            if "ages" in v:
                return Profile.table(self.numbers(v["ages"]), self.numbers(v["values"]))
            lo, hi = self.numbers(v.get("support", [0.0, float("inf")]))
            return Profile.constant(self.number(v.get("value", 0.0)), lo, hi)
        except (ValueError, RateError, KeyError, IndexError) as exc:
            self.fail(f"[initial] {u}: {exc}", "initial", u)

    def fertility(self):
        sec = "fertility"
        scale = self.get(sec, "scale", self.number, required=True)
        support = self.get(sec, "support", self.numbers, required=True)
        if len(support) != 2:
            self.fail("support must be [lo, hi]", sec, "support")
        ages = profile = None
        try:
            if "profile_file" in self.doc[sec]:
                rows = self.read_rows(self.doc[sec]["profile_file"])
                ages = [float(r[0]) for r in rows]
                profile = [float(r[1]) for r in rows]
            elif "profile_ages" in self.doc[sec]:
                ages = self.numbers(self.doc[sec]["profile_ages"])
                profile = self.numbers(self.doc[sec]["profile_values"])
            return Fertility(scale, support, ages, profile)
        except (ValueError, RateError, KeyError, IndexError) as exc:
            self.fail(f"[fertility] {exc}", sec)

    def value_poly(self, v, linear_ok=True):
        if isinstance(v, list):
            return ValuePolynomial(self.numbers(v))
        return ValuePolynomial.linear(self.number(v))

    def economics(self):
        sec = "economics"
        body = self.doc.get(sec, {})
        terminal = self.get(sec, "terminal", self.value_poly, ValuePolynomial())
        sale_raw = body.get("sale", [])
        if not isinstance(sale_raw, list):
            self.fail("sale must be a list with one entry per sell age", sec, "sale")
        try:
            sale = tuple(self.value_poly(x) for x in sale_raw)
        except ValueError as exc:
            self.fail(f"[economics] sale: {exc}", sec, "sale")
        running_raw = body.get("running", {})
        if not isinstance(running_raw, dict):
            self.fail("running must be a table {J = .., S = .., R = ..}", sec, "running")
        running = {}
        for u, v in running_raw.items():
            if u not in POPULATIONS:
                self.fail(f"unknown population '{u}' in running costs", sec, "running")
            try:
                running[u] = self.value_poly(v)
            except ValueError as exc:
                self.fail(f"[economics] running.{u}: {exc}", sec, "running")
        try:
            return EconomicData(
                terminal=terminal, sale=sale, running=running,
                quadratic_J=self.get(sec, "quadratic_J", self.boolean, False),
                J_target=self.get(sec, "J_target", self.number, 0.0),
                quadratic_sign=self.get(sec, "quadratic_sign", self.string, "printed"),
                kappa=self.get(sec, "kappa", self.integer, None))
        except ScenarioError as exc:
            self.fail(str(exc), sec)

    def model(self, econ):
        sec = "model"
        g = {u: self.rate("growth", u, True) for u in POPULATIONS}
        d = {u: self.rate("death", u, False) for u in POPULATIONS}
        abar = self.get(sec, "abar", self.number, required=True)
        horizon = self.get(sec, "horizon", self.number)
        gens = self.get(sec, "generations", self.integer)
        if (horizon is None) == (gens is None):
            self.fail("give exactly one of 'horizon' or 'generations'", sec)
        if gens is not None:
            if gens < 1:
                self.fail("generations must be >= 1", sec, "generations")
            try:
                horizon = generation_time(g["J"], abar, gens)
            except (RateError, ValueError) as exc:
                self.fail(str(exc), sec, "generations")
        try:
            return Scenario(
                abar=abar,
                sell_ages=self.get(sec, "sell_ages", self.numbers, required=True),
                g=g, d=d, w=self.fertility(),
                initial=InitialData(*(self.profile(u) for u in POPULATIONS)),
                horizon=horizon, econ=econ,
                amax=self.get(sec, "amax", self.number),
                rate_convention=self.get(sec, "rate_convention", self.string, "printed"))
        except ScenarioError as exc:
            self.fail(str(exc), sec)

    def layout(self, scenario):
        sec = "controls"
        kind = self.get(sec, "layout", self.string, required=True)
        if kind not in LAYOUTS:
            self.fail(f"layout must be one of {LAYOUTS}, got {kind!r}", sec, "layout")
        theta = self.get(sec, "theta", self.numbers, ())
        try:
            if kind in ("generational", "stabilizing"):
                clock = generation_times(scenario)
                n = self.get(sec, "generations", self.integer, len(clock.within()) - 1)
                if kind == "generational":
                    return GenerationalLayout.from_clock(clock, n, theta)
                return StabilizingLayout.from_clock(clock, n, scenario.n_sell)
            if kind == "periodic":
                taus = self.get(sec, "taus", self.numbers, required=True)
                return PeriodicLayout(taus, scenario.horizon, theta)
            if kind == "explicit":
                bps = self.get(sec, "breakpoints", self.numbers, required=True)
                return ExplicitLayout(bps, theta)
            eta = self.get(sec, "eta", self.numbers, required=True)
            if len(eta) != 1:
                self.fail("fixed layout takes a single eta value", sec, "eta")
            return FixedLayout(ControlSchedule.constant(
                eta[0], theta, scenario.horizon,
                self.get(sec, "theta_N_zero", self.boolean, True)))
        except (ScenarioError, ValueError) as exc:
            self.fail(str(exc), sec)

    def build(self) -> ScenarioFile:
        self.check_keys()
        econ = self.economics()
        scenario = self.model(econ)
        layout = self.layout(scenario)
        eta = self.get("controls", "eta", self.numbers, ())
        if layout.kind == "fixed":
            eta = ()
        theta = self.get("controls", "theta", self.numbers, ())
        sf = ScenarioFile(
            scenario=scenario, layout=layout, eta=eta,
            theta=theta if layout.kind == "stabilizing" else (),
            dt=self.get("grid", "dt", self.number),
            oracle_da=self.get("grid", "oracle_da", self.number),
            fit_mode=self.get("fit", "mode", self.string),
            fit_degree=self.get("fit", "degree", self.integer),
            holdout=self.get("fit", "holdout", self.integer, 20),
            seed=self.get("fit", "seed", self.integer, 0),
            grid_density=self.get("fit", "grid_density", self.integer),
            source=self.source, raw=self.doc)
        try:
            sf.controls()
        except ScenarioError as exc:
            self.fail(str(exc), "controls")
        return sf


def parse_scenario(text: str, source: str = "<scenario>", base: Path | None = None
                   ) -> ScenarioFile:
    """Parse scenario-file text; relative table paths resolve against ``base``."""
    return _Parser(text, source, base).build()


def preset_names() -> list[str]:
    root = resources.files("renewalctl") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def preset_text(name: str) -> str:
    res = resources.files("renewalctl") / "scenarios" / f"{name}.toml"
    if not res.is_file():
        raise ScenarioFileError(f"unknown preset {name!r}; available: {preset_names()}",
                                PRESET_PREFIX + name)
    return res.read_text()


def load_scenario(spec: str | Path) -> ScenarioFile:
    """Load a scenario file, or a bundled preset given as ``preset:<name>``."""
    spec = str(spec)
    if spec.startswith(PRESET_PREFIX):
        name = spec[len(PRESET_PREFIX):]
        return parse_scenario(preset_text(name), spec)
    path = Path(spec)
    text = path.read_text()  # OSError propagates: an I/O failure, not a parse error
    return parse_scenario(text, str(path), path.parent)
