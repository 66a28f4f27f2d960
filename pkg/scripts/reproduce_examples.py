"""Solve, fit and maximize both worked examples and compare with the reference table.

Usage: python3 scripts/reproduce_examples.py [--dt DT] [--convention mortality|printed]
"""

import argparse
import time
from dataclasses import replace

import numpy as np

from renewalctl import tolerances as tol
from renewalctl.optimizer import maximize_bangbang, maximize_box
from renewalctl.pipeline import ProfitEvaluator
from renewalctl.polyfit import fit_multiaffine, fit_total_degree
from renewalctl.presets import (generational_example, generational_layout, periodic_example,
                                periodic_layout)


def line(name, value, ref):
    mark = "ok" if tol.within(value, ref) else "MISS"
    print(f"  {name:<12} {value:>12.5f}   ref {ref[0]:>8.2f} +- {ref[1]:<5} {mark}")


def generational(convention, dt):
    sc = replace(generational_example(), rate_convention=convention)
    ev = ProfitEvaluator(sc, generational_layout(sc), dt)
    start = time.perf_counter()
    poly = fit_multiaffine(ev, 2)
    opt = maximize_bangbang(poly)
    print(f"generational example ({convention}, {time.perf_counter() - start:.2f} s)")
    for v, ref in tol.GEN_PROFITS.items():
        line(f"P{v}", ev(np.array(v, float)), ref)
    for e, ref in tol.GEN_COEFFS.items():
        line(f"c{e}", poly.coefficient(e), ref)
    print(f"  argmax       {opt.argmax}   ref {tol.GEN_ARGMAX}")
    line("max", opt.value, tol.GEN_MAX)


def periodic(convention, dt):
    sc = replace(periodic_example(), rate_convention=convention)
    ev = ProfitEvaluator(sc, periodic_layout(sc), dt)
    start = time.perf_counter()
    poly = fit_total_degree(ev, 2, 2)
    opt = maximize_box(poly)
    print(f"periodic example ({convention}, {time.perf_counter() - start:.2f} s)")
    for e, ref in tol.PERIODIC_COEFFS.items():
        line(f"c{e}", poly.coefficient(e), ref)
    for k, ref in enumerate(tol.PERIODIC_ARGMAX):
        line(f"argmax[{k}]", opt.argmax[k], ref)
    line("max", opt.value, tol.PERIODIC_MAX)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dt", type=float)
    p.add_argument("--convention", choices=["mortality", "printed"], default="mortality")
    args = p.parse_args()
    generational(args.convention, args.dt)
    periodic(args.convention, args.dt)


if __name__ == "__main__":
    main()
