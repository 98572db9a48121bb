"""Linear Schrodinger flow, Strang split-step NLS solvers, conservation laws and scaling.

Equation: ``i u_t + Laplace(u) = sign * |u|^2 u`` with ``sign = +1`` (defocusing)
or ``-1`` (focusing).  The linear flow multiplies frequency data by
``exp(-i t |xi|^2)`` and the nonlinear flow is the exact phase rotation
``u -> exp(-i sign |u|^2 t) u``.
"""
from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .grid import Field, Grid, read_snapshot, write_snapshot
from .norms import critical_indices, sobolev_norm

log = logging.getLogger(__name__)

SIGNS = {"defocusing": 1.0, "focusing": -1.0}


class NumericalAbort(RuntimeError):
    """Raised when the solution stops being finite."""

    def __init__(self, message: str, last_good_time: float):
        super().__init__(f"{message} (last finite sample at t={last_good_time:.6g})")
        self.last_good_time = last_good_time


@dataclass(frozen=True)
class EvolveParams:
    sign: str = "defocusing"
    dt: float = 1e-3
    t_end: float = 1.0
    sample_every: int = 1

    def __post_init__(self):
        if self.sign not in SIGNS:
            raise ValueError(f"sign must be one of {tuple(SIGNS)}, got {self.sign!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end >= self.dt * (1 - 1e-12):
            raise ValueError("t_end must be at least one time step")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")

    @property
    def sigma(self) -> float:
        return SIGNS[self.sign]

    @property
    def n_steps(self) -> int:
        steps = round(self.t_end / self.dt)
        if abs(steps * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise ValueError(f"t_end={self.t_end} is not an integer multiple of dt={self.dt}")
        return steps

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Trajectory:
    times: np.ndarray
    fields: list
    params: EvolveParams | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.fields):
            raise ValueError("times and fields differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if self.fields and any(f.grid != self.fields[0].grid for f in self.fields):
            raise ValueError("trajectory fields live on different grids")

    def __len__(self) -> int:
        return len(self.fields)

    @property
    def grid(self) -> Grid:
        return self.fields[0].grid

    def restrict(self, stop: int) -> "Trajectory":
        """Prefix with the first ``stop`` samples."""
        return Trajectory(self.times[:stop], self.fields[:stop], self.params)

    def __add__(self, other: "Trajectory") -> "Trajectory":
        if not np.array_equal(self.times, other.times):
            raise ValueError("trajectories sampled at different times")
        return Trajectory(self.times, [a + b for a, b in zip(self.fields, other.fields)], self.params)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        if not np.array_equal(self.times, other.times):
            raise ValueError("trajectories sampled at different times")
        return Trajectory(self.times, [a - b for a, b in zip(self.fields, other.fields)], self.params)


@dataclass(frozen=True)
class ConservedTriple:
    mass: float
    momentum: np.ndarray = field(repr=True)
    hamiltonian: float

    def to_dict(self) -> dict:
        return {"mass": self.mass, "momentum": [float(p) for p in self.momentum],
                "hamiltonian": self.hamiltonian}


# ---------------------------------------------------------------------------
# linear flow


def propagator_symbol(grid: Grid, t: float) -> np.ndarray:
    return np.exp(-1j * t * grid.xi_sq)


def linear_propagate(phi: Field, t: float) -> Field:
    """S(t) phi = exp(i t Laplace) phi, exact in time."""
    if t == 0:
        return phi
    return phi.multiply_symbol(propagator_symbol(phi.grid, t))


def linear_trajectory(phi: Field, times) -> Trajectory:
    """Free evolution S(t) phi sampled at the given times."""
    spec = phi.spectrum
    fields = [Field(phi.grid, spec * propagator_symbol(phi.grid, t), "frequency") for t in times]
    return Trajectory(np.asarray(times, dtype=float), fields)


# ---------------------------------------------------------------------------
# split-step solvers


def _check_step(grid: Grid, dt: float) -> None:
    if dt * grid.nyquist**2 > math.pi:
        warnings.warn(
            f"dt={dt:.3g} under-resolves the fastest linear phase (dt*Nyq^2="
            f"{dt * grid.nyquist**2:.3g} > pi)", stacklevel=3)


def _sample_steps(params: EvolveParams) -> list[int]:
    steps = params.n_steps
    idx = list(range(0, steps + 1, params.sample_every))
    if idx[-1] != steps:
        idx.append(steps)
    return idx


def _rotate(u: np.ndarray, sigma: float, tau: float) -> np.ndarray:
    # overflow surfaces as non-finite values, caught by the abort check
    with np.errstate(over="ignore", invalid="ignore"):
        return u * np.exp((-1j * sigma * tau) * (u.real**2 + u.imag**2))


def evolve_nls(phi: Field, params: EvolveParams) -> Trajectory:
    """Strang splitting: half linear step, exact nonlinear rotation, half linear step."""
    grid = phi.grid
    _check_step(grid, params.dt)
    dt, sigma = params.dt, params.sigma
    half = propagator_symbol(grid, 0.5 * dt)
    samples = _sample_steps(params)
    times, fields = [0.0], [phi.to_frequency()]
    spec = phi.spectrum.copy()
    step = 0
    for target in samples[1:]:
        while step < target:
            u = np.fft.ifftn(spec * half)
            u = _rotate(u, sigma, dt)
            spec = np.fft.fftn(u) * half
            step += 1
        if not np.all(np.isfinite(spec)):
            raise NumericalAbort("non-finite solution in evolve_nls", times[-1])
        times.append(step * dt)
        fields.append(Field(grid, spec, "frequency"))
    return Trajectory(np.array(times), fields, params)


def evolve_perturbed(phi_rand: Field, params: EvolveParams) -> tuple[Trajectory, Trajectory]:
    """Solve for the linear part z = S(t) phi and nonlinear part v = u - z.

    v obeys ``i v_t + Laplace v = sign |v + z|^2 (v + z)`` with v(0) = 0.  Each
    step is nonlinear(h/2), linear(h), nonlinear(h/2); during a nonlinear
    substep z is frozen at the substep midpoint, so ``w = v + z`` rotates
    exactly.  This ordering differs from :func:`evolve_nls`, which makes
    ``z + v`` an independent second-order approximation of the full solution.
    """
    grid = phi_rand.grid
    _check_step(grid, params.dt)
    dt, sigma = params.dt, params.sigma
    phi_hat = phi_rand.spectrum
    full = propagator_symbol(grid, dt)
    q1 = propagator_symbol(grid, 0.25 * dt)
    q3 = propagator_symbol(grid, 0.75 * dt)
    samples = _sample_steps(params)
    times = [0.0]
    z_fields = [phi_rand.to_frequency()]
    v_fields = [Field.zeros(grid)]
    v = np.zeros(grid.shape, dtype=np.complex128)
    z_hat = phi_hat.copy()  # z at the current step start
    step = 0
    for target in samples[1:]:
        while step < target:
            zq = np.fft.ifftn(z_hat * q1)
            v = _rotate(v + zq, sigma, 0.5 * dt) - zq
            v = np.fft.ifftn(np.fft.fftn(v) * full)
            zq = np.fft.ifftn(z_hat * q3)
            v = _rotate(v + zq, sigma, 0.5 * dt) - zq
            z_hat = z_hat * full
            step += 1
        if not np.all(np.isfinite(v)):
            raise NumericalAbort("non-finite solution in evolve_perturbed", times[-1])
        t = step * dt
        times.append(t)
        # recompute z exactly rather than accumulating multiplier round-off
        z_hat = phi_hat * propagator_symbol(grid, t)
        z_fields.append(Field(grid, z_hat, "frequency"))
        v_fields.append(Field(grid, v))
    times = np.array(times)
    return Trajectory(times, z_fields, params), Trajectory(times, v_fields, params)


# ---------------------------------------------------------------------------
# conservation laws


def gradient(u: Field) -> list[np.ndarray]:
    spec = u.spectrum
    return [np.fft.ifftn(1j * k * spec) for k in u.grid.xi]


def conserved_quantities(u: Field, sign: str = "defocusing") -> ConservedTriple:
    """Mass, momentum Im int u conj(grad u), and Hamiltonian for the given sign."""
    grid = u.grid
    w = grid.weight
    phys = u.physical
    spec = u.spectrum
    dens = np.abs(phys) ** 2
    mass = w * float(dens.sum())
    momentum = np.array([w * float(np.imag(np.sum(phys * np.conj(g)))) for g in gradient(u)])
    kinetic = w / grid.size * float(np.sum(grid.xi_sq * np.abs(spec) ** 2))
    potential = w * float(np.sum(dens**2))
    ham = 0.5 * kinetic + SIGNS[sign] * 0.25 * potential
    return ConservedTriple(mass, momentum, ham)


def conserved_series(traj: Trajectory, sign: str | None = None) -> list[ConservedTriple]:
    if sign is None:
        sign = traj.params.sign if traj.params is not None else "defocusing"
    return [conserved_quantities(f, sign) for f in traj.fields]


# ---------------------------------------------------------------------------
# scaling and scattering


def _dyadic_exponent(mu: float) -> int:
    m = math.log2(mu)
    if not (mu > 0 and abs(m - round(m)) < 1e-12):
        raise ValueError(f"scale must be a power of two, got {mu}")
    return int(round(m))


def scaled_grid(grid: Grid, mu: float) -> Grid:
    """Companion grid with box length mu * L and the same number of points."""
    _dyadic_exponent(mu)
    return Grid(grid.d, grid.points_per_axis, grid.box_length * mu)


def scale_field(phi: Field, mu: float) -> Field:
    """phi_mu(x) = mu^{-1} phi(x / mu) on the companion grid (exact index bijection)."""
    _dyadic_exponent(mu)
    if mu == 1:
        return phi
    return Field(scaled_grid(phi.grid, mu), phi.physical / mu)


def unscale_field(phi_mu: Field, mu: float) -> Field:
    """Inverse of :func:`scale_field`."""
    _dyadic_exponent(mu)
    if mu == 1:
        return phi_mu
    return Field(scaled_grid(phi_mu.grid, 1.0 / mu), phi_mu.physical * mu)


def scattering_diagnostic(v_traj: Trajectory, s: float | None = None) -> np.ndarray:
    """Cauchy increments ||S(-t_k) v(t_k) - S(-t_{k-1}) v(t_{k-1})||_{H^s}, s = (d-2)/2 by default."""
    grid = v_traj.grid
    if s is None:
        s = critical_indices(grid.d).s_crit
    # exp(-it|xi|^2) on the lattice (2pi/L)Z^d returns to the identity at t = L^2/(2pi)
    recurrence = grid.box_length**2 / (2 * math.pi)
    log.info("scattering_diagnostic: horizon %.4g, box recurrence time %.4g (ratio %.3g)",
             v_traj.times[-1], recurrence, v_traj.times[-1] / recurrence)
    profiles = [f.spectrum * propagator_symbol(grid, -t) for t, f in zip(v_traj.times, v_traj.fields)]
    out = np.empty(max(len(profiles) - 1, 0))
    for k in range(1, len(profiles)):
        out[k - 1] = sobolev_norm(Field(grid, profiles[k] - profiles[k - 1], "frequency"), s)
    return out


# ---------------------------------------------------------------------------
# trajectory export


def write_trajectory(traj: Trajectory, directory, sign: str | None = None) -> Path:
    """Write one snapshot per sample plus ``manifest.json``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for k, f in enumerate(traj.fields):
        name = f"field_{k:05d}.rnls"
        write_snapshot(f, out / name)
        files.append(name)
    g = traj.grid
    series = [c.to_dict() for c in conserved_series(traj, sign)]
    manifest = {
        "times": [float(t) for t in traj.times],
        "files": files,
        "params": traj.params.to_dict() if traj.params is not None else None,
        "grid": {"d": g.d, "points_per_axis": g.points_per_axis, "box_length": g.box_length},
        "conserved": series,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return out


def read_trajectory(directory) -> Trajectory:
    src = Path(directory)
    manifest = json.loads((src / "manifest.json").read_text())
    fields = [read_snapshot(src / name) for name in manifest["files"]]
    params = EvolveParams(**manifest["params"]) if manifest.get("params") else None
    return Trajectory(np.array(manifest["times"]), fields, params)
