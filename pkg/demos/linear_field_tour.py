"""Tour of the linear field: simulate, check the variance law, eyeball
increment scaling.

Runs a few hundred replications of the constant-coefficient field on a
coarse grid, compares the sample variance at the window midpoint against
the discrete mode-sum law and the continuum value sqrt(t/pi), then prints
second-moment increment ratios across a dyadic ladder of time lags.
"""

import math

import numpy as np

from heatlab import engine
from heatlab.noise import GridSpec, derive_seed

T = 2.0**-4
GRID = GridSpec.for_window(T=T, dx=2.0**-5, window=(0.0, 1.0), dt=2.0**-11)
N_REPS = 400


def mode_sum_variance(grid, n, i):
    # diagonal march in the Dirichlet sine basis of the scheme's Laplacian
    m = grid.n_x - 1
    k = np.arange(1, m)
    a = 1.0 - 4.0 * (grid.dt / (2 * grid.dx**2)) * np.sin(
        np.pi * k / (2 * m)) ** 2
    var_k = (grid.dt / grid.dx) * (1 - a ** (2 * n)) / (1 - a**2)
    phi = np.sqrt(2.0 / m) * np.sin(np.pi * k * i / m)
    return float(np.sum(phi**2 * var_k))


def variance_check():
    n_last = GRID.n_steps
    mid = GRID.space_index(0.5)
    rec = engine.run_streams(
        GRID, [derive_seed(7, 0, r) for r in range(N_REPS)], None,
        engine.Snapshots([n_last // 2, n_last], mid, mid))
    v_half = rec.u_vals[:, 0, 0]
    v_full = rec.u_vals[:, 1, 0]
    law_half = mode_sum_variance(GRID, n_last // 2, mid)
    law_full = mode_sum_variance(GRID, n_last, mid)
    print("variance at t = T/2:")
    print(f"  sample    {v_half.var(ddof=1):.6f}")
    print(f"  mode sum  {law_half:.6f}")
    print(f"  continuum {math.sqrt(T / 2 / math.pi):.6f}")
    print("variance at t = T:")
    print(f"  sample    {v_full.var(ddof=1):.6f}")
    print(f"  mode sum  {law_full:.6f}")
    print(f"  continuum {math.sqrt(T / math.pi):.6f}")
    return rec


def increment_ladder():
    # E|v(t0+tau) - v(t0)|^2 should roughly halve per quartering of tau
    t0 = T / 2
    n0 = GRID.time_index(t0)
    taus = [2.0**-11, 2.0**-9, 2.0**-7]  # ascending, matching row order
    rows = [n0] + [n0 + GRID.time_index(tau) for tau in taus]
    mid = GRID.space_index(0.5)
    rec = engine.run_streams(
        GRID, [derive_seed(7, 1, r) for r in range(N_REPS)], None,
        engine.Snapshots(rows, mid, mid))
    base = rec.u_vals[:, 0, 0]
    print("temporal increment second moments (tau, E|dv|^2):")
    for i, tau in enumerate(taus):
        m2 = np.mean((rec.u_vals[:, 1 + i, 0] - base) ** 2)
        print(f"  {tau:.6f}  {m2:.3e}")


if __name__ == "__main__":
    variance_check()
    increment_ladder()
