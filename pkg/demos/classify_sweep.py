"""Sweep the power-transform family and print the classification table.

The family (r^alpha - 1)/alpha interpolates between log (alpha = 0) and
stronger-than-convex requirements as alpha drops; the heat flow keeps the
associated convexity exactly up to alpha = 1 and destroys it beyond.  Run:

    python3 demos/classify_sweep.py
"""

import numpy as np

from heatconvex import builtin_transforms, classify, make_power_alpha


def main():
    print("exponent sweep")
    print("-" * 72)
    for alpha in (-1.0, 0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0):
        rep = classify(make_power_alpha(alpha))
        print(f"  alpha = {alpha:5.2f}  ->  {rep.verdict:26s}  [{rep.basis}]")

    print()
    print("other built-in transforms")
    print("-" * 72)
    for name, F in builtin_transforms().items():
        if name.startswith("power"):
            continue
        rep = classify(F)
        order = "n/a" if np.isnan(rep.gaussian_order) else f"{rep.gaussian_order:.3f}"
        print(f"  {name:12s} ->  {rep.verdict:26s}  gaussian order {order}")


if __name__ == "__main__":
    main()
