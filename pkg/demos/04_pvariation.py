"""
p-variation of step functions
=============================

"""

import math

import numpy as np

from randnls.evolution import linear_trajectory
from randnls.grid import Field, make_grid
from randnls.norms import ladder_norm
from randnls.pvariation import (StepFunction, coarsen, discrete_ys_norm, greedy_up_bound, restrict_atomic,
                                greedy_atomic, vp_bruteforce, vp_norm)

# a bump: 0, then 1, then 0. Two jumps of size 1, so the 2-variation is sqrt(2).
bump = StepFunction([0, 1, 2, 3], [0.0, 1.0, 0.0])
print("V^2 of the bump:", vp_norm(bump, 2))

# random vector-valued step function; DP and exhaustive search agree
rng = np.random.default_rng(4)
u = StepFunction(np.cumsum(rng.random(11) + 0.1), rng.standard_normal((10, 3)))
for p in (1, 2, 4):
    print(f"p={p}: dp {vp_norm(u, p):.6f}  brute force {vp_bruteforce(u, p):.6f}")

# sampling on a coarser partition cannot raise the variation
print("coarsened V^2:", vp_norm(coarsen(u, u.knots[:-1:3]), 2), "<=", vp_norm(u, 2))

# one-atom representation and its restriction to an interval
rep = greedy_atomic(u, 2)
cut = restrict_atomic(rep, (u.knots[2], u.knots[6]))
print(f"U^2 bound {greedy_up_bound(u, 2):.4f}, after restriction {cut.l1:.4f}")

# For a free wave S(-t)u(t) is constant, so only the terminal drop counts and
# the discrete Y^s norm is the dyadic Sobolev ladder norm.
g = make_grid(2, 32, 8 * math.pi)
spec = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
phi = Field(g, spec, "frequency")
traj = linear_trajectory(phi, np.linspace(0, 2, 9))
print(f"Y^0.5 {discrete_ys_norm(traj, 0.5):.10f}  ladder {ladder_norm(phi, 0.5):.10f}")
