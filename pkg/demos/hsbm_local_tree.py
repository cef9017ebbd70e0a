"""Sparse HSBM neighborhoods look like broadcasting on a Poisson hypertree.

Samples a 3-uniform two-community HSBM with (a, b) = (6, 2), which has mean
degree 3 and lambda = 1/3, and compares depth-1 neighborhoods of random
roots with independently drawn BOHT trees.
"""

from boht.hsbm import coupling_stats, degree_profile, two_community


def main():
    params = two_community(10_000, 3, 6.0, 2.0)
    d, flag = degree_profile(params)
    print(f"expected degree per label {d.tolist()}, degree-indistinguishable: {flag}")
    rep = coupling_stats(10_000, 3, 6.0, 2.0, k=1, n_samples=1000, seed=0)
    print(f"lambda = {rep.model.lam:.4f}, snr = {rep.model.snr:.4f}")
    print(f"root degree: TV to Poisson(3) {rep.tv_root_degree_poisson:.4f}, "
          f"two-sample p against BOHT {rep.p_root_degree:.3f}")
    print(f"monochromatic hyperedges: HSBM {rep.mono_fraction_hsbm:.4f}, "
          f"BOHT {rep.mono_fraction_boht:.4f}, expected {rep.mono_fraction_expected:.4f}")
    print(f"fraction of neighborhoods that are hypertrees: {rep.hypertree_fraction:.3f}")


if __name__ == "__main__":
    main()
