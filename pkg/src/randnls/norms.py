"""Function-space norms on fields and sampled trajectories.

Spatial integrals are rectangle-rule sums with the grid cell weight; time
integrals use the left rectangle rule on the trajectory's sample times, so a
trajectory sampled at ``t_0 < ... < t_K`` integrates over ``[t_0, t_K]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Field, Grid, dyadic_blocks, lattice_points, lp_symbol, window_value

INF = math.inf


def exponent(p) -> float:
    """Normalise an exponent; ``None``, ``"inf"``, ``"oo"`` and ``"∞"`` mean infinity."""
    if p is None:
        return INF
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity", "oo", "∞"):
            return INF
        return float(p)
    return float(p)


@dataclass(frozen=True)
class NormParams:
    p: float = 2.0
    q: float = 2.0
    r: float = 2.0
    s: float = 0.0
    homogeneous: bool = False

    def __post_init__(self):
        for name in ("p", "q", "r"):
            val = exponent(getattr(self, name))
            if not val >= 1.0:
                raise ValueError(f"exponent {name}={val} must be >= 1")
            object.__setattr__(self, name, val)
        if not math.isfinite(self.s):
            raise ValueError("regularity s must be finite")


@dataclass(frozen=True)
class CriticalIndices:
    s_crit: float
    s_d: float


def critical_indices(d: int) -> CriticalIndices:
    """Scaling-critical index (d-2)/2 and the threshold (d-1)/(d+1) * (d-2)/2."""
    return CriticalIndices(s_crit=(d - 2) / 2, s_d=(d - 1) * (d - 2) / (2 * (d + 1)))


def is_admissible(q, r, d: int, tol: float = 1e-12) -> bool:
    """Schrodinger admissibility: 2/q + d/r = d/2, 2 <= q, r <= oo, (q, r, d) != (2, oo, 2)."""
    q, r = exponent(q), exponent(r)
    if q < 2 or r < 2:
        return False
    if q == 2 and r == INF and d == 2:
        return False
    return abs(2.0 / q + d / r - d / 2.0) <= tol


def _lp_sum(values: np.ndarray, p: float, weight: float) -> float:
    a = np.abs(values)
    if p == INF:
        return float(a.max()) if a.size else 0.0
    return float(weight * np.sum(a**p)) ** (1.0 / p)


def lebesgue_norm(u: Field, p=2.0) -> float:
    p = exponent(p)
    if p < 1:
        raise ValueError(f"L^p norm needs p >= 1, got {p}")
    return _lp_sum(u.physical, p, u.grid.weight)


def _sobolev_symbol(grid: Grid, s: float, homogeneous: bool) -> np.ndarray:
    if s == 0:
        return np.ones(grid.shape)
    if not homogeneous:
        return grid.japanese(s)
    r = grid.xi_abs
    with np.errstate(divide="ignore"):
        sym = np.where(r > 0, r ** s, 0.0)
    return sym


def sobolev_norm(u: Field, s: float, homogeneous: bool = False) -> float:
    """H^s (Japanese bracket weight) or homogeneous H^s norm via Plancherel."""
    grid = u.grid
    spec = u.spectrum
    if homogeneous and s < 0:
        zero = abs(spec.flat[0])
        if zero > 1e-12 * max(1.0, float(np.abs(spec).max())):
            raise ValueError("homogeneous norm with s < 0 needs a vanishing zero mode")
    sym = _sobolev_symbol(grid, s, homogeneous)
    return math.sqrt(grid.weight / grid.size * float(np.sum((sym * np.abs(spec)) ** 2)))


def ladder_norm(u: Field, s: float, lp_top: int | None = None) -> float:
    """(sum_N N^{2s} ||P_N u||_{L^2}^2)^{1/2} over the dyadic ladder."""
    total = 0.0
    spec = u.spectrum
    g = u.grid
    for N in dyadic_blocks(g, lp_top):
        block = spec * lp_symbol(g, N, lp_top)
        total += N ** (2 * s) * g.weight / g.size * float(np.sum(np.abs(block) ** 2))
    return math.sqrt(total)


def _lq(values, q: float) -> float:
    v = np.asarray(values, dtype=float)
    if q == INF:
        return float(v.max()) if v.size else 0.0
    return float(np.sum(v**q)) ** (1.0 / q)


def modulation_pieces(u: Field, p=2.0, mu: float = 1.0, kind: str = "raised_cosine"):
    """Lattice points n and ||psi^mu(D - mu n) u||_{L^p} for every resolved cube."""
    p = exponent(p)
    grid = u.grid
    spec = u.spectrum
    ns = lattice_points(grid, mu)
    norms = np.empty(len(ns))
    for i, n in enumerate(ns):
        block = spec * window_value(grid.xi, n, mu, kind)
        if p == 2:
            norms[i] = math.sqrt(grid.weight / grid.size * float(np.sum(np.abs(block) ** 2)))
        else:
            norms[i] = _lp_sum(np.fft.ifftn(block), p, grid.weight)
    return ns, norms


def modulation_norm(u: Field, p=2.0, q=2.0, s: float = 0.0, kind: str = "raised_cosine") -> float:
    """M^{p,q}_s: l^q over n of <n>^s ||psi(D - n) u||_{L^p}."""
    p, q = exponent(p), exponent(q)
    if p < 1 or q < 1:
        raise ValueError("modulation exponents must be >= 1")
    ns, norms = modulation_pieces(u, p, 1.0, kind)
    weights = (1.0 + np.sum(ns.astype(float) ** 2, axis=1)) ** (0.5 * s)
    return _lq(weights * norms, q)


def besov_norm(u: Field, p=2.0, q=2.0, s: float = 0.0, lp_top: int | None = None) -> float:
    """B^s_{p,q}: l^q over dyadic j of 2^{js} ||P_{2^j} u||_{L^p}, using the LP ladder."""
    p, q = exponent(p), exponent(q)
    grid = u.grid
    spec = u.spectrum
    terms = []
    for N in dyadic_blocks(grid, lp_top):
        block = np.fft.ifftn(spec * lp_symbol(grid, N, lp_top))
        terms.append(N**s * _lp_sum(block, p, grid.weight))
    return _lq(terms, q)


# ---------------------------------------------------------------------------
# space-time norms


def _time_weights(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.size == 0:
        raise ValueError("empty trajectory")
    if np.any(np.diff(t) <= 0):
        raise ValueError("trajectory times must be strictly increasing")
    w = np.zeros(t.size)
    w[:-1] = np.diff(t)
    return w


def _spacetime(times, arrays, q: float, r: float, weight: float) -> float:
    wt = _time_weights(times)
    per_time = np.array([_lp_sum(a, r, weight) for a in arrays])
    if q == INF:
        return float(per_time.max())
    return float(np.sum(wt * per_time**q)) ** (1.0 / q)


def spacetime_norm(traj, q, r) -> float:
    """L^q_t L^r_x norm of a sampled trajectory."""
    q, r = exponent(q), exponent(r)
    if q < 1 or r < 1:
        raise ValueError("exponents must be >= 1")
    fields = traj.fields
    if not fields:
        raise ValueError("empty trajectory")
    return _spacetime(traj.times, [f.physical for f in fields], q, r, fields[0].grid.weight)


def z_norm(traj, lp_top: int | None = None) -> float:
    """(sum_N N^{d-2} ||P_N u||_{L^4_{t,x}}^4)^{1/4}."""
    fields = traj.fields
    if not fields:
        raise ValueError("empty trajectory")
    grid = fields[0].grid
    specs = [f.spectrum for f in fields]
    total = 0.0
    for N in dyadic_blocks(grid, lp_top):
        sym = lp_symbol(grid, N, lp_top)
        blocks = [np.fft.ifftn(sp * sym) for sp in specs]
        total += N ** (grid.d - 2) * _spacetime(traj.times, blocks, 4.0, 4.0, grid.weight) ** 4
    return total**0.25


def ws_exponents(d: int) -> tuple[float, float, float]:
    return (4.0, float(d + 2), 6.0 * (d + 2) / (d + 4))


def ws_norm(traj, s: float) -> float:
    """max over q in {4, d+2, 6(d+2)/(d+4)} of ||<grad>^s u||_{L^q_{t,x}}."""
    fields = traj.fields
    if not fields:
        raise ValueError("empty trajectory")
    grid = fields[0].grid
    sym = grid.japanese(s)
    arrays = [np.fft.ifftn(f.spectrum * sym) for f in fields]
    return max(_spacetime(traj.times, arrays, q, q, grid.weight) for q in ws_exponents(grid.d))
