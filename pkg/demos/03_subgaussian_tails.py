"""
Sub-Gaussian tails of random Strichartz norms
=============================================

"""

import math

from randnls.experiments import ExperimentConfig, estimate_tail
from randnls.randomization import RandomizationSpec

# L^4_t L^4_x norms of the free evolution of randomized data, over two horizons.
# A Gaussian tail in lambda shows up as a straight line of log P(X > lambda)
# against lambda^2.  Doubling T should flatten the slope by about 2^(2/q).
grid = {"d": 2, "points_per_axis": 64, "box_length": 8 * math.pi}
slopes = {}
for T in (0.05, 0.1):
    cfg = ExperimentConfig(grid=grid, profile={"name": "gaussian_bump", "width": 0.5},
                           randomization=RandomizationSpec(seed=3),
                           norms={"q": 4, "r": 4, "T": T, "n_times": 8}, n_samples=500)
    est = estimate_tail(cfg, "strichartz")
    slopes[T] = est.fit["slope"]
    print(f"T={T}: slope {est.fit['slope']:.1f}  R^2 {est.fit['r_squared']:.3f}  "
          f"window {est.fit['fit_window']}")
print(f"slope ratio {slopes[0.05] / slopes[0.1]:.3f}, expected about {2 ** 0.5:.3f}")

# the survival curve itself
for lam, s in list(zip(est.thresholds, est.survival))[::4]:
    print(f"  lambda={lam:.4f}  P={s:.3f}")

# doubling the data quarters the slope, since the statistic is linear in phi
for A in (1.0, 2.0):
    cfg = ExperimentConfig(grid=grid, profile={"name": "power_law", "s": -0.3, "eps": 0.1, "kmax": 6.0,
                                               "amplitude": A},
                           randomization=RandomizationSpec(seed=3), norms={"s": -0.3}, n_samples=500)
    print(f"H^-0.3 tail, amplitude {A}: slope {estimate_tail(cfg, 'sobolev').fit['slope']:.2f}")
