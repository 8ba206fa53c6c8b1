"""The mixture-envelope comparison behind the preservation argument.

For a convexity-preserving transform, the function built by taking the
nodewise infimum of weighted endpoint mixtures (in transform coordinates),
mapped back and evolved, must stay below the mixture of evolved values at
every decomposition midpoint.  The demo runs that comparison for two
transform/datum pairs and prints the gap statistics; both hold with gaps at
the discretization noise scale.
"""

import numpy as np

from heatconvex import (
    GridFunction,
    InitialDatum,
    check_envelope_comparison,
    make_power_alpha,
    mixture_envelope,
)


def main():
    print("envelope of -|x| on [-1, 1] (weight 1/2):")
    x = np.linspace(-1.0, 1.0, 101)
    v = GridFunction(values=-np.abs(x), extent=((-1.0, 1.0),),
                     growth_a=1.0, growth_A=0.0)
    env = mixture_envelope(v, 0.5)
    for i in (0, 25, 50, 75, 100):
        print(f"    x = {x[i]:+.2f}   value {v.values[i]:+.3f}   "
              f"envelope {env.values[i]:+.3f}")
    print("  (the center drops to the chord between the endpoints)\n")

    pairs = [
        ("identity-strength transform on |x|",
         make_power_alpha(1.0),
         InitialDatum(fn=np.abs, growth_a=5.0, growth_A=0.0,
                      breakpoints=(0.0,), label="abs"),
         (-4.0, 4.0)),
        ("log transform on exp|x|",
         make_power_alpha(0.0),
         InitialDatum(fn=lambda x: np.exp(np.abs(x)), growth_a=float(np.e),
                      growth_A=0.25, breakpoints=(0.0,), label="exp_abs"),
         (-3.0, 3.0)),
    ]
    for title, F, phi, window in pairs:
        rep = check_envelope_comparison(F, phi, 0.5, 0.1, window, 1 / 64)
        print(f"{title}:")
        print(f"    status {rep.status}, max gap {rep.max_gap:.2e}, "
              f"noise floor {rep.noise_floor:.2e}, "
              f"{rep.n_samples} midpoints, {rep.n_flagged} flagged")


if __name__ == "__main__":
    main()
