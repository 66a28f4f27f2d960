"""Profit error of the upwind solver and of the characteristics solver under refinement.

The reference is the characteristics solver at a fine step.  Prints one row per
resolution with the error and the ratio to the previous error.
"""

import argparse

import numpy as np

from renewalctl.functionals import profit
from renewalctl.oracle import solve_upwind_oracle
from renewalctl.presets import (generational_example, generational_layout, periodic_example,
                                periodic_layout)
from renewalctl.solver import solve

CASES = {
    "gen": (generational_example, generational_layout),
    "periodic": (periodic_example, periodic_layout),
}


def study(name, x, levels, fine_dt):
    make, layout_of = CASES[name]
    sc = make()
    schedule = layout_of(sc).schedule(np.array(x, dtype=float))
    reference = profit(solve(sc, schedule, fine_dt), sc.econ)
    print(f"{name} at eta={tuple(x)}: reference profit {reference:.10f} (dt={fine_dt})")
    print(f"  {'h':>8} {'upwind err':>12} {'ratio':>6} {'charact. err':>13} {'ratio':>6}")
    prev_u = prev_c = None
    for k in range(levels):
        h = 1 / (100 * 2 ** k)
        err_u = abs(profit(solve_upwind_oracle(sc, schedule, h), sc.econ) - reference)
        err_c = abs(profit(solve(sc, schedule, h), sc.econ) - reference)
        ru = f"{prev_u / err_u:6.3f}" if prev_u else " " * 6
        rc = f"{prev_c / err_c:6.3f}" if prev_c and err_c else " " * 6
        print(f"  {h:8.5f} {err_u:12.4e} {ru} {err_c:13.4e} {rc}")
        prev_u, prev_c = err_u, err_c


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--fine-dt", type=float, default=1 / 4000)
    args = p.parse_args()
    for name, x in (("gen", (0, 0)), ("gen", (0, 1)), ("periodic", (0.5, 0.5)),
                    ("periodic", (0, 0))):
        study(name, x, args.levels, args.fine_dt)


if __name__ == "__main__":
    main()
