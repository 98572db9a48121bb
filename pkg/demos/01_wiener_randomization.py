"""
Randomizing a function on unit frequency cubes
==============================================

"""

import math

import numpy as np

from randnls.grid import lattice_points, make_grid, partition_of_unity_error, wiener_project
from randnls.norms import modulation_norm, sobolev_norm
from randnls.randomization import RandomizationSpec, discarded_energy_fraction, randomize
from randnls.experiments import make_profile

# A 2-d periodic box of side 8*pi with 64 points per axis. Frequency spacing is 1/4,
# so every unit cube holds 16 grid frequencies.
g = make_grid(2, 64, 8 * math.pi)
print(g)

# The raised-cosine windows sum to one on the whole grid.
for mu in (1.0, 0.5, 0.25):
    print(f"mu={mu}: partition of unity error {partition_of_unity_error(g, mu):.1e}")

phi = make_profile(g, "power_law", s=0.25, eps=0.1, kmax=5.0)
pieces = [wiener_project(phi, n) for n in lattice_points(g)]
print("lattice pieces:", len(pieces))
print("sum of pieces reproduces phi:",
      np.allclose(sum(p.spectrum for p in pieces), phi.spectrum))

# Randomize with complex Gaussians. The coefficient for cube n depends only on
# (seed, sample index, n), so sample 7 is the same field however it is computed.
spec = RandomizationSpec(dist="complex_gaussian", seed=11)
u7 = randomize(phi, spec, 7)
print("same sample twice:", np.array_equal(u7.spectrum, randomize(phi, spec, 7).spectrum))
print(f"energy outside the lattice window: {discarded_energy_fraction(phi, spec):.2e}")

# Randomization does not improve regularity on average, but E|g|^2 = 1 makes the
# mean squared H^s norm equal to the sum over cubes.
s = 0.5
oracle = sum(sobolev_norm(p, s) ** 2 for p in pieces)
mc = np.mean([sobolev_norm(randomize(phi, spec, i), s) ** 2 for i in range(400)])
print(f"E||phi^w||^2_H^s  MC {mc:.4f}  cube sum {oracle:.4f}  rel.err {abs(mc / oracle - 1):.3f}")

# Modulation norms are also unchanged in law.
print(f"M^(2,2) norm of phi {modulation_norm(phi, 2, 2):.4f}, of one sample {modulation_norm(u7, 2, 2):.4f}")
