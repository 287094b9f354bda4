"""Capacity and covering-gauge sanity tour over the built-in target sets."""

import numpy as np

from heatlab.geometry import capacity, hausdorff_measure
from heatlab.hitting import TargetSet, cover_set, cover_sum

M = 2.0


def main():
    seg = TargetSet.segment(np.zeros(1), 1.0, M=M)
    dust = TargetSet.dust(np.zeros(1), 1.0, M=M)
    ball = TargetSet.ball(np.zeros(2), 0.5, M=M)

    print("capacity, negative index (always 1):")
    for name, t in (("segment", seg), ("dust", dust), ("ball", ball)):
        print(f"  {name:8s} {capacity(t, -0.5).value}")

    print("capacity of the unit segment at index 1/2, refining:")
    for n in (16, 64, 128):
        res = capacity(seg, 0.5, n_points=n)
        print(f"  n={n:4d}  value {res.value:.6f}  gap {res.gap:.1e}")

    print("covering sums at the critical index (compare closed forms):")
    for eps in (2.0**-4, 2.0**-6, 2.0**-8):
        balls = cover_set(seg, eps)
        print(f"  segment eps={eps:.4f}: {cover_sum(balls, 1.0):.6f} vs 1.0")
    print(f"  closed form: {hausdorff_measure(seg, 1.0).value:.6f}")
    for eps in (3.0**-3, 3.0**-5):
        balls = cover_set(dust, eps)
        dim = np.log(2) / np.log(3)
        print(f"  dust eps={eps:.5f}: {cover_sum(balls, dim):.6f} "
              f"vs {hausdorff_measure(dust, dim).value:.6f}")


if __name__ == "__main__":
    main()
