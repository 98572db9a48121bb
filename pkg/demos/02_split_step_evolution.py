"""
Split-step evolution and the z + v decomposition
================================================

Strang splitting on a 1-d soliton, then conservation and the perturbed solver
in two dimensions.
"""

import math

import numpy as np

from randnls.evolution import (EvolveParams, conserved_series, evolve_nls, evolve_perturbed,
                               linear_propagate)
from randnls.grid import Field, make_grid

g = make_grid(1, 128, 16 * math.pi)
x = g.x[0]


def soliton(t):
    return Field(g, math.sqrt(2) / np.cosh(x) * np.exp(1j * t))


errs = []
for dt in (0.04, 0.02, 0.01):
    traj = evolve_nls(soliton(0.0), EvolveParams("focusing", dt, 1.0, round(1 / dt)))
    e = np.linalg.norm(traj.fields[-1].spectrum - soliton(1.0).spectrum) / np.linalg.norm(soliton(1.0).spectrum)
    errs.append(e)
    print(f"dt={dt:<5} error {e:.3e}")
print("observed orders:", np.round(np.log2(np.array(errs[:-1]) / errs[1:]), 3))

# defocusing bump in 2-d; mass is conserved to roundoff, the Hamiltonian to O(dt^2)
g2 = make_grid(2, 64, 4 * math.pi)
X, Y = g2.x
u0 = Field(g2, 1.5 * np.exp(-(X**2 + Y**2) / 4) * np.exp(0.5j * Y))
series = conserved_series(evolve_nls(u0, EvolveParams("defocusing", 0.01, 5.0, 50)))
m0, h0 = series[0].mass, series[0].hamiltonian
for c, t in zip(series[::2], np.arange(0, 5.01, 1.0)):
    print(f"t={t:.1f}  mass drift {abs(c.mass - m0) / m0:.1e}  energy drift {abs(c.hamiltonian - h0) / h0:.1e}")

# evolve_perturbed returns the free part z and the nonlinear remainder v
p = EvolveParams("defocusing", 0.01, 1.0, 100)
z, v = evolve_perturbed(u0, p)
u = evolve_nls(u0, p).fields[-1]
print("z is free evolution:",
      np.allclose(z.fields[-1].spectrum, linear_propagate(u0, 1.0).spectrum))
gap = np.linalg.norm((z.fields[-1] + v.fields[-1]).spectrum - u.spectrum) / np.linalg.norm(u.spectrum)
print(f"||(z+v) - u|| / ||u|| = {gap:.2e}")
