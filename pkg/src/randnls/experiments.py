"""Monte Carlo experiments: tail estimates, sub-Gaussian fits, Strichartz and bilinear scans,
and the small-dilation pipeline.

Every sample is keyed by ``(seed, sample_index)`` so results do not depend on
the number of worker processes or on scheduling.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable

import numpy as np

from .evolution import (EvolveParams, NumericalAbort, evolve_perturbed, linear_trajectory,
                        scale_field, scattering_diagnostic)
from .grid import Field, Grid, dyadic_blocks, lp_symbol, make_grid
from .norms import critical_indices, exponent, lebesgue_norm, sobolev_norm, spacetime_norm, ws_norm
from .randomization import RandomizationSpec, randomize_dilated, sample_coefficients

log = logging.getLogger(__name__)

# survival levels 0.5 ... 0.001, geometric, i.e. quantiles q_0.5 ... q_0.999
TAIL_LEVELS = np.geomspace(0.5, 1e-3, 21)


# ---------------------------------------------------------------------------
# data profiles


def make_profile(grid: Grid, name: str, **params) -> Field:
    """Named initial-data recipes.

    ``gaussian_bump``: ``amplitude * exp(-|x - center|^2 / (2 width^2)) * exp(i k0.x)``.
    ``power_law``: radial spectrum ``<xi>^{-(s + d/2 + eps)}`` up to ``kmax`` (H^{s'} for s' < s + eps).
    ``plane_wave``: ``amplitude * exp(i k.x)``.
    Any profile accepts ``zero_mean=True`` to remove the zero Fourier mode.
    """
    zero_mean = params.pop("zero_mean", False)
    amplitude = params.pop("amplitude", 1.0)
    if name == "gaussian_bump":
        width = params.pop("width", 1.0)
        center = np.broadcast_to(np.asarray(params.pop("center", 0.0), dtype=float), (grid.d,))
        k0 = np.broadcast_to(np.asarray(params.pop("k0", 0.0), dtype=float), (grid.d,))
        r2 = sum((x - c) ** 2 for x, c in zip(grid.x, center))
        phase = sum(k * x for k, x in zip(k0, grid.x))
        data = amplitude * np.exp(-r2 / (2 * width**2)) * np.exp(1j * phase)
        spec = np.fft.fftn(data * np.ones(grid.shape))
    elif name == "power_law":
        s = params.pop("s", 0.0)
        eps = params.pop("eps", 0.1)
        kmax = params.pop("kmax", grid.nyquist)
        sym = grid.japanese(-(s + grid.d / 2 + eps)) * (grid.xi_abs <= kmax)
        # normalise to unit L^2 before scaling by amplitude
        spec = sym * grid.size / math.sqrt(grid.weight * grid.size * float(np.sum(sym**2)))
        spec = amplitude * spec
    elif name == "plane_wave":
        k = np.broadcast_to(np.asarray(params.pop("k", 0.0), dtype=float), (grid.d,))
        phase = sum(ki * x for ki, x in zip(k, grid.x))
        spec = np.fft.fftn(amplitude * np.exp(1j * phase) * np.ones(grid.shape))
    else:
        raise ValueError(f"unknown profile {name!r}")
    if params:
        raise ValueError(f"unused profile parameters {sorted(params)}")
    spec = np.array(spec, dtype=np.complex128)
    if zero_mean:
        spec.flat[0] = 0.0
    return Field(grid, spec, "frequency")


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    grid: dict
    profile: dict
    randomization: RandomizationSpec
    evolve: EvolveParams | None = None
    norms: dict = field(default_factory=dict)
    n_samples: int = 1000
    workers: int = 1
    eta2: float = 0.1
    eps: float = 0.05

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")
        if self.workers < 1:
            raise ValueError("workers must be positive")

    @property
    def seed(self) -> int:
        return self.randomization.seed

    def make_grid(self) -> Grid:
        g = self.grid
        return make_grid(int(g["d"]), int(g["points_per_axis"]), float(g["box_length"]))

    def make_data(self) -> Field:
        prof = dict(self.profile)
        name = prof.pop("name")
        return make_profile(self.make_grid(), name, **prof)

    def time_grid(self, T: float | None = None) -> np.ndarray:
        T = float(self.norms.get("T", 1.0)) if T is None else T
        n_times = int(self.norms.get("n_times", 16))
        return np.linspace(0.0, T, n_times + 1)

    def to_dict(self) -> dict:
        out = {
            "grid": dict(self.grid),
            "profile": dict(self.profile),
            "randomization": self.randomization.to_dict(),
            "evolve": self.evolve.to_dict() if self.evolve is not None else None,
            "norms": dict(self.norms),
            "n_samples": self.n_samples,
            "eta2": self.eta2,
            "eps": self.eps,
        }
        return out

    @classmethod
    def from_dict(cls, d: dict, workers: int = 1) -> "ExperimentConfig":
        ev = d.get("evolve")
        return cls(grid=dict(d["grid"]), profile=dict(d["profile"]),
                   randomization=RandomizationSpec.from_dict(d["randomization"]),
                   evolve=EvolveParams(**ev) if ev else None,
                   norms=dict(d.get("norms", {})), n_samples=int(d.get("n_samples", 1000)),
                   workers=workers, eta2=float(d.get("eta2", 0.1)), eps=float(d.get("eps", 0.05)))


# ---------------------------------------------------------------------------
# statistics


@dataclass(frozen=True)
class Statistic:
    """Named functional of one randomized sample; picklable for worker processes."""

    name: str
    q: float = 4.0
    r: float = 4.0
    T: float = 1.0
    s: float = 0.0
    n_times: int = 16

    def __call__(self, phi_rand: Field, spec: RandomizationSpec, sample_index: int) -> float:
        if self.name == "strichartz":
            traj = linear_trajectory(phi_rand, np.linspace(0.0, self.T, self.n_times + 1))
            return spacetime_norm(traj, self.q, self.r)
        if self.name == "sobolev":
            return sobolev_norm(phi_rand, self.s)
        if self.name == "ws":
            traj = linear_trajectory(phi_rand, np.linspace(0.0, self.T, self.n_times + 1))
            return ws_norm(traj, self.s)
        if self.name == "re_g0":
            g0 = sample_coefficients(spec, np.zeros((1, phi_rand.grid.d), dtype=np.int64), sample_index)
            return abs(float(g0[0].real))
        raise ValueError(f"unknown statistic {self.name!r}")


STATISTICS = ("strichartz", "sobolev", "ws", "re_g0")


def _sample_value(phi: Field, spec: RandomizationSpec, statistic: Callable, index: int) -> float:
    return float(statistic(randomize_dilated(phi, spec, index), spec, index))


def map_samples(fn: Callable[[int], float], n: int, workers: int = 1) -> np.ndarray:
    """Evaluate ``fn(i)`` for i < n; output order is by index whatever the worker count."""
    if workers <= 1:
        return np.array([fn(i) for i in range(n)], dtype=float)
    chunk = max(1, n // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return np.array(list(pool.map(fn, range(n), chunksize=chunk)), dtype=float)


def sample_statistic(cfg: ExperimentConfig, statistic: Callable, phi: Field | None = None) -> np.ndarray:
    phi = cfg.make_data() if phi is None else phi
    fn = partial(_sample_value, phi, cfg.randomization, statistic)
    return map_samples(fn, cfg.n_samples, cfg.workers)


# ---------------------------------------------------------------------------
# tails


@dataclass
class TailEstimate:
    thresholds: np.ndarray
    survival: np.ndarray
    n_samples: int
    fit: dict = field(default_factory=dict)
    samples: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {"thresholds": [float(x) for x in self.thresholds],
                "survival": [float(x) for x in self.survival],
                "n_samples": self.n_samples, "fit": dict(self.fit)}


def tail_from_samples(samples) -> TailEstimate:
    """Empirical survival P(X > lambda) at quantile thresholds, plus a sub-Gaussian fit.

    The first threshold sits just below the smallest sample, so its survival is 1.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    lam = np.quantile(x, 1.0 - TAIL_LEVELS)
    lam = np.unique(np.concatenate([[np.nextafter(x[0], -np.inf)], lam]))
    survival = 1.0 - np.searchsorted(x, lam, side="right") / n
    est = TailEstimate(lam, survival, n, samples=np.asarray(samples, dtype=float))
    est.fit = fit_subgaussian(est)
    return est


def estimate_tail(cfg: ExperimentConfig, statistic, phi: Field | None = None) -> TailEstimate:
    """Draw ``cfg.n_samples`` randomizations and tabulate the statistic's survival curve."""
    if isinstance(statistic, str):
        statistic = statistic_from_config(cfg, statistic)
    return tail_from_samples(sample_statistic(cfg, statistic, phi))


def statistic_from_config(cfg: ExperimentConfig, name: str) -> Statistic:
    nm = cfg.norms
    return Statistic(name, q=exponent(nm.get("q", 4.0)), r=exponent(nm.get("r", 4.0)),
                     T=float(nm.get("T", 1.0)), s=float(nm.get("s", 0.0)),
                     n_times=int(nm.get("n_times", 16)))


def fit_subgaussian(est: TailEstimate) -> dict:
    """Least squares of log survival against lambda^2 where survival lies in [10/n, 0.5]."""
    lo = 10.0 / est.n_samples
    mask = (est.survival >= lo) & (est.survival <= 0.5) & (est.survival > 0)
    out = {"slope": None, "intercept": None, "r_squared": None, "fit_window": None,
           "n_points": int(mask.sum()), "valid": False}
    if mask.sum() < 4:
        return out
    x = est.thresholds[mask] ** 2
    y = np.log(est.survival[mask])
    if np.ptp(x) == 0:
        return out
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
    out.update(slope=float(slope), intercept=float(intercept), r_squared=r2,
               fit_window=[float(est.thresholds[mask][0]), float(est.thresholds[mask][-1])],
               valid=True)
    return out


# ---------------------------------------------------------------------------
# scans


def strichartz_ratios(fields, q, r, T: float, n_times: int = 32) -> list[float]:
    times = np.linspace(0.0, T, n_times + 1)
    ratios = []
    for k, phi in enumerate(fields):
        l2 = lebesgue_norm(phi, 2)
        if l2 == 0:
            log.info("strichartz_scan: datum %d is zero, skipped", k)
            continue
        ratio = spacetime_norm(linear_trajectory(phi, times), q, r) / l2
        log.info("strichartz_scan: datum %d ratio %.6g", k, ratio)
        ratios.append(ratio)
    return ratios


def strichartz_scan(fields, q, r, T: float, n_times: int = 32) -> float:
    """sup over the family of ||S(t) phi||_{L^q_t L^r_x([0, T])} / ||phi||_{L^2}."""
    ratios = strichartz_ratios(fields, q, r, T, n_times)
    return max(ratios) if ratios else 0.0


def random_block_field(grid: Grid, N: int, rng: np.random.Generator) -> Field:
    """Complex Gaussian spectrum localised to the LP block N."""
    spec = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)) * lp_symbol(grid, N)
    return Field(grid, spec, "frequency")


def bilinear_ratio(phi1: Field, phi2: Field, N1: int, N2: int, T: float, n_times: int = 32) -> float:
    """||P_N1 S(t) phi1 * P_N2 S(t) phi2||_{L^2_{t,x}} over N1^{(d-2)/2} (N1/N2)^{1/2} ||P phi1|| ||P phi2||."""
    grid = phi1.grid
    times = np.linspace(0.0, T, n_times + 1)
    a = phi1.multiply_symbol(lp_symbol(grid, N1))
    b = phi2.multiply_symbol(lp_symbol(grid, N2))
    ta, tb = linear_trajectory(a, times), linear_trajectory(b, times)
    prod = [Field(grid, fa.physical * fb.physical) for fa, fb in zip(ta.fields, tb.fields)]
    lhs = spacetime_norm(type(ta)(times, prod), 2, 2)
    rhs = N1 ** ((grid.d - 2) / 2) * math.sqrt(N1 / N2) * lebesgue_norm(a, 2) * lebesgue_norm(b, 2)
    return lhs / rhs if rhs > 0 else 0.0


def bilinear_scan(grid: Grid, pairs, samples: int, T: float, seed: int = 0,
                  n_times: int = 32) -> dict:
    """Empirical max of :func:`bilinear_ratio` over random block data, per (N1, N2)."""
    blocks = dyadic_blocks(grid)
    table = {}
    for N1, N2 in pairs:
        if not (N1 <= N2 and N1 in blocks and N2 in blocks):
            raise ValueError(f"need dyadic N1 <= N2 <= {blocks[-1]}, got ({N1}, {N2})")
        best = 0.0
        for i in range(samples):
            rng = np.random.default_rng([seed, N1, N2, i])
            phi1 = random_block_field(grid, N1, rng)
            phi2 = random_block_field(grid, N2, rng)
            best = max(best, bilinear_ratio(phi1, phi2, N1, N2, T, n_times))
        log.info("bilinear_scan: (N1, N2)=(%d, %d) max ratio %.6g", N1, N2, best)
        table[(N1, N2)] = best
    ratios = [table[k] for k in sorted(table, key=lambda k: k[1] / k[0])]
    trend = "non-increasing" if all(b <= a for a, b in zip(ratios, ratios[1:])) else "not monotone"
    log.info("bilinear_scan: ratio trend in N2/N1 is %s", trend)
    return table


# ---------------------------------------------------------------------------
# small-dilation pipeline


@dataclass(frozen=True)
class SuccessCriteria:
    """Operational success of one evolved sample.

    A sample succeeds when the solution stays finite, the mass of z + v stays
    within ``mass_tol`` (relative) of its initial value, and the scattering
    increments trend downwards over the last quartile of samples.  With
    ``require_small_data`` the H^s statistic must also be at most ``eta2``.
    """

    eta2: float = 0.1
    mass_tol: float = 1e-6
    require_small_data: bool = False


def _increments_settle(increments: np.ndarray) -> bool:
    """Least-squares trend of the increments over their last quartile is non-positive."""
    n = len(increments)
    q = max(2, n // 4)
    if n < 2:
        return True
    tail = increments[-q:]
    return bool(np.polyfit(np.arange(q, dtype=float), tail, 1)[0] <= 0.0)


def _pipeline_sample(phi: Field, spec: RandomizationSpec, mu: float, s: float,
                     params: EvolveParams, criteria: SuccessCriteria, index: int) -> tuple:
    data = scale_field(randomize_dilated(phi, spec, index), mu)
    stat = sobolev_norm(data, s)
    small = stat <= criteria.eta2
    try:
        z, v = evolve_perturbed(data, params)
    except NumericalAbort:
        return stat, small, False, False, False
    u_mass = np.array([lebesgue_norm(a + b, 2) ** 2 for a, b in zip(z.fields, v.fields)])
    finite = bool(np.all(np.isfinite(u_mass)))
    mass_ok = finite and float(np.max(np.abs(u_mass - u_mass[0]))) <= criteria.mass_tol * max(u_mass[0], 1e-300)
    settle = finite and _increments_settle(scattering_diagnostic(v))
    return stat, small, finite, mass_ok, settle


def _pipeline_worker(args, index):
    return _pipeline_sample(*args, index)


def dilation_pipeline(phi: Field, mu_list, cfg: ExperimentConfig,
                      criteria: SuccessCriteria | None = None) -> list[dict]:
    """Per dilation scale: deterministic scaling of phi, H^s statistics and success fraction of
    randomized data on cubes of side mu, rescaled to unit cubes and evolved."""
    if cfg.evolve is None:
        raise ValueError("dilation_pipeline needs evolve parameters")
    criteria = criteria or SuccessCriteria(eta2=cfg.eta2)
    d = phi.grid.d
    s = float(cfg.norms.get("s", 0.0))
    s_crit = critical_indices(d).s_crit
    base_hdot = sobolev_norm(phi, s, homogeneous=True)
    reports = []
    for mu in mu_list:
        mu = float(mu)
        spec = cfg.randomization.replace(mu=mu)
        phi_mu = scale_field(phi, mu)
        hdot = sobolev_norm(phi_mu, s, homogeneous=True)
        args = (phi, spec, mu, s, cfg.evolve, criteria)
        rows = _map_rows(partial(_pipeline_worker, args), cfg.n_samples, cfg.workers)
        stats = np.array([r[0] for r in rows])
        small = np.array([r[1] for r in rows])
        finite = np.array([r[2] for r in rows])
        mass_ok = np.array([r[3] for r in rows])
        settle = np.array([r[4] for r in rows])
        ok = finite & mass_ok & settle
        if criteria.require_small_data:
            ok = ok & small
        reports.append({
            "mu": mu,
            "s": s,
            "hdot_norm": hdot,
            "hdot_predicted": mu ** (s_crit - s) * base_hdot,
            "hs_norm_scaled": sobolev_norm(phi_mu, s),
            "mean_statistic": float(stats.mean()),
            "small_fraction": float(small.mean()),
            "finite_fraction": float(finite.mean()),
            "mass_ok_fraction": float(mass_ok.mean()),
            "settle_fraction": float(settle.mean()),
            "success_fraction": float(ok.mean()),
            "n_samples": int(cfg.n_samples),
            "statistics": [float(x) for x in stats],
        })
        log.info("dilation_pipeline: mu=%g small=%.3f success=%.3f", mu, small.mean(), ok.mean())
    return reports


def _map_rows(fn, n: int, workers: int) -> list:
    if workers <= 1:
        return [fn(i) for i in range(n)]
    chunk = max(1, n // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n), chunksize=chunk))


theorem4_pipeline = dilation_pipeline  # name used by the public API contract


def success_monotone(reports: list[dict], tolerance: int = 1) -> bool:
    """Success fraction non-decreasing as mu decreases, allowing ``tolerance`` violations."""
    ordered = sorted(reports, key=lambda r: -r["mu"])
    fr = [r["success_fraction"] for r in ordered]
    violations = sum(1 for a, b in zip(fr, fr[1:]) if b < a)
    return violations <= tolerance


# ---------------------------------------------------------------------------
# result files


def canonical_json(obj) -> str:
    """Sorted-key JSON with a trailing newline; floats use Python's shortest round-trip repr."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def content_hash(obj, version: str) -> str:
    payload = json.dumps({"inputs": obj, "version": version}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json(obj), encoding="utf-8")
    return path


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]
