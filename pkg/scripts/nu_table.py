"""Structured coefficient count nu versus the bang-bang count 2^(nN) and the fitted basis size."""

import argparse

from renewalctl.polyfit import build_stabilizing_basis, stabilizing_nu


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--N-max", type=int, default=4)
    p.add_argument("--enumerate-up-to", type=int, default=200_000,
                   help="also build the basis when nu is at most this")
    args = p.parse_args()
    print(f"{'n':>3} {'N':>2} {'nu':>12} {'nu_bb':>14} {'nu/nu_bb':>10} {'monomials':>10}")
    for n in range(1, args.n_max + 1):
        for N in range(1, args.N_max + 1):
            nu = stabilizing_nu(n, N)
            bb = 2 ** (n * N)
            mono = ""
            if nu <= args.enumerate_up_to:
                plan = build_stabilizing_basis(n, N)
                assert plan.nu == nu
                mono = str(plan.n_samples)
            print(f"{n:>3} {N:>2} {nu:>12} {bb:>14} {nu / bb:>10.4g} {mono:>10}")


if __name__ == "__main__":
    main()
