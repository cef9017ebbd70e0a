"""For r = 7 the large-degree Gaussian map has a nontrivial fixed point below KS.

The map x -> g(s_{7}(x) * ks_ratio) is iterated from x = 1.  At ratios just
under one the iteration stops at a large fixed point instead of sliding to
zero, which is the numerical signature of reconstruction below the
Kesten-Stigum line.  For r = 3 the same scan finds nothing.
"""

import math

from boht.gaussian import below_ks_search, g_r_d_lambda, ks_scan, s_poly


def main():
    d = 1e5
    lam = math.sqrt(1.0 / (6 * d))
    print(f"s_7(0.8) = {s_poly(7, 0.8):.6f},  g_7(0.8) = {float(g_r_d_lambda(7, d, lam, 0.8)):.6f}")
    for r in (3, 7):
        res, _ = below_ks_search(r, d)
        if res is None:
            print(f"r={r}: no nonzero fixed point for ks_ratio in [0.90, 1.00)")
        else:
            print(f"r={r}: nonzero fixed point {res.fixed_point:.4f} already at ks_ratio {res.ks_ratio:.3f}")
    print("r=7 fixed points along the ratio axis:")
    for _, _, _, ratio, fp in ks_scan(7, d, [0.5, 0.8, 0.9, 0.95, 1.0, 1.2]):
        print(f"  ks_ratio={ratio:.2f}  fixed point {fp:.4f}")


if __name__ == "__main__":
    main()
