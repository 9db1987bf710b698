#!/usr/bin/env python3
"""Zigzag boundary kappa_z(eps) three ways, plus the deviation slope.

Usage: python scripts/zigzag_ladder.py [eps ...]   (default ladder 0.05 0.1 0.2)
"""

import sys

import numpy as np

from zzlab.expand import kappa_z_root


def main(argv):
    eps_list = [float(a) for a in argv] or [0.05, 0.1, 0.2]
    devs = []
    print(f"{'eps':>6}  {'series':>14}  {'numeric':>22}  {'spectral':>22}")
    for eps in eps_list:
        res = kappa_z_root(eps, spectral=True)
        devs.append(abs(res.kappa_z_numeric - res.kappa_z_series))
        print(
            f"{eps:6.3f}  {res.kappa_z_series:14.6e}  "
            f"{res.kappa_z_numeric:22.15e}  {res.kappa_z_spectral:22.15e}"
        )
    if len(eps_list) >= 2:
        slope = np.polyfit(np.log(eps_list), np.log(devs), 1)[0]
        print(f"\nlog-log slope of |numeric - series| vs eps: {slope:.3f} (expect ~6)")


if __name__ == "__main__":
    main(sys.argv[1:])
