"""
Dilation, randomization, evolution
==================================

Shrinking the scale mu makes the homogeneous H^-1 norm of phi_mu decay like mu
in two dimensions.  Randomize phi_mu, evolve the cubic remainder and count
samples that stay finite, keep their mass and whose scattering increments settle.
This is a smaller run than the bundled ``randnls dilate`` config.
"""

import math

from randnls.evolution import EvolveParams
from randnls.experiments import ExperimentConfig, dilation_pipeline
from randnls.randomization import RandomizationSpec

cfg = ExperimentConfig(
    grid={"d": 2, "points_per_axis": 64, "box_length": 16 * math.pi},
    profile={"name": "gaussian_bump", "width": 1.0, "amplitude": 0.13, "zero_mean": True},
    randomization=RandomizationSpec(seed=5),
    evolve=EvolveParams("defocusing", dt=0.01, t_end=0.5, sample_every=1),
    norms={"s": -1.0}, n_samples=40, eta2=0.1)

reports = dilation_pipeline(cfg.make_data(), [1.0, 0.5, 0.25], cfg)
print(f"{'mu':>5} {'|phi_mu|':>10} {'predicted':>10} {'small':>6} {'success':>8}")
for r in reports:
    print(f"{r['mu']:5.2f} {r['hdot_norm']:10.5f} {r['hdot_predicted']:10.5f} "
          f"{r['small_fraction']:6.2f} {r['success_fraction']:8.3f}")
