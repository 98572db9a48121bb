"""Wiener randomization of initial data on unit and dilated frequency cubes.

Coefficients are drawn from numpy's counter-based Philox generator: the key is
``(seed, sample_index)`` and the counter is the lattice point ``n``, so each
``g_n`` is a pure function of ``(seed, sample_index, n)`` and independent of
the order or subset in which lattice points are queried.

Every family is normalised to ``E|g_n|^2 = 1`` with independent real and
imaginary parts of variance 1/2.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from .grid import Field, _check_resolved, lattice_range, window_multiplier

log = logging.getLogger(__name__)

DISTRIBUTIONS = ("complex_gaussian", "rademacher", "uniform", "ones")

_MASK64 = (1 << 64) - 1
_UNIFORM_HALF_WIDTH = math.sqrt(1.5)  # U(-a, a) with variance 1/2


@dataclass(frozen=True)
class RandomizationSpec:
    dist: str = "complex_gaussian"
    seed: int = 0
    mu: float = 1.0
    lattice_radius: int | None = None
    window_kind: str = "raised_cosine"

    def __post_init__(self):
        if self.dist not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.dist!r}; expected one of {DISTRIBUTIONS}")
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if self.lattice_radius is not None and self.lattice_radius < 0:
            raise ValueError("lattice_radius must be non-negative")

    def to_dict(self) -> dict:
        return {"dist": self.dist, "seed": int(self.seed), "mu": float(self.mu),
                "lattice_radius": self.lattice_radius, "window_kind": self.window_kind}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RandomizationSpec":
        return cls(dist=d.get("dist", "complex_gaussian"), seed=int(d["seed"]),
                   mu=float(d.get("mu", 1.0)), lattice_radius=d.get("lattice_radius"),
                   window_kind=d.get("window_kind", "raised_cosine"))

    @classmethod
    def from_json(cls, text: str) -> "RandomizationSpec":
        return cls.from_dict(json.loads(text))

    def replace(self, **changes) -> "RandomizationSpec":
        return RandomizationSpec(**{**asdict(self), **changes})


def _raw_blocks(seed: int, sample_index: int, ns: np.ndarray) -> np.ndarray:
    """Four raw uint64 words per lattice point from Philox(key=(seed, sample), counter=n)."""
    key = np.array([int(seed) & _MASK64, int(sample_index) & _MASK64], dtype=np.uint64)
    bitgen = np.random.Philox(key=key)
    state = bitgen.state
    out = np.empty((len(ns), 4), dtype=np.uint64)
    counter = np.zeros(4, dtype=np.uint64)
    for i, n in enumerate(ns):
        counter[:] = 0
        counter[: len(n)] = [int(c) & _MASK64 for c in n]
        state["state"]["counter"] = counter
        state["buffer_pos"] = 4
        bitgen.state = state
        out[i] = bitgen.random_raw(4)
    return out


def _unit_interval(words: np.ndarray) -> np.ndarray:
    return (words >> np.uint64(11)).astype(np.float64) * (1.0 / 2**53)


def sample_coefficients(spec: RandomizationSpec, ns, sample_index: int = 0) -> np.ndarray:
    """Coefficients g_n for the given lattice points (rows of ``ns``)."""
    ns = np.atleast_2d(np.asarray(ns, dtype=np.int64))
    if spec.dist == "ones":
        return np.ones(len(ns), dtype=np.complex128)
    raw = _raw_blocks(spec.seed, sample_index, ns)
    if spec.dist == "complex_gaussian":
        u1 = 1.0 - _unit_interval(raw[:, 0])  # (0, 1]
        u2 = _unit_interval(raw[:, 1])
        rad = np.sqrt(-np.log(u1))  # sqrt(-2 ln u1) / sqrt(2)
        return rad * np.exp(2j * np.pi * u2)
    if spec.dist == "rademacher":
        sign = 1.0 - 2.0 * (raw[:, :2] >> np.uint64(63)).astype(np.float64)
        return (sign[:, 0] + 1j * sign[:, 1]) / math.sqrt(2.0)
    # uniform
    u = _unit_interval(raw[:, :2])
    parts = _UNIFORM_HALF_WIDTH * (2.0 * u - 1.0)
    return parts[:, 0] + 1j * parts[:, 1]


def _coefficient_box(spec: RandomizationSpec, grid, mu: float, sample_index: int):
    lo, hi = lattice_range(grid, mu)
    axis = np.arange(lo, hi + 1)
    mesh = np.meshgrid(*([axis] * grid.d), indexing="ij")
    ns = np.stack([m.ravel() for m in mesh], axis=1)
    coeffs = sample_coefficients(spec, ns, sample_index)
    if spec.lattice_radius is not None:
        coeffs = np.where(np.abs(ns).max(axis=1) <= spec.lattice_radius, coeffs, 0.0)
    return coeffs.reshape(mesh[0].shape), lo


def randomization_symbol(spec: RandomizationSpec, grid, sample_index: int = 0,
                         mu: float | None = None) -> np.ndarray:
    """Frequency symbol sum_n g_n psi^mu(xi - mu n) for one sample."""
    mu = spec.mu if mu is None else mu
    _check_resolved(grid, mu)
    coeffs, lo = _coefficient_box(spec, grid, mu, sample_index)
    return window_multiplier(grid, coeffs, lo, mu, spec.window_kind)


def discarded_energy_fraction(phi: Field, spec: RandomizationSpec) -> float:
    """Fraction of ||phi||_{L^2}^2 carried by cubes outside ``lattice_radius``."""
    if spec.lattice_radius is None:
        return 0.0
    kept = randomization_symbol(spec.replace(dist="ones"), phi.grid)
    spec_phi = phi.spectrum
    total = float(np.sum(np.abs(spec_phi) ** 2))
    if total == 0:
        return 0.0
    return float(np.sum(np.abs((1.0 - kept) * spec_phi) ** 2)) / total


def randomize(phi: Field, spec: RandomizationSpec, sample_index: int = 0) -> Field:
    """Wiener randomization sum_n g_n psi(D - n) phi on unit cubes."""
    if spec.mu != 1.0:
        raise ValueError("randomize works on unit cubes; use randomize_dilated for mu != 1")
    return randomize_dilated(phi, spec, sample_index)


def randomize_dilated(phi: Field, spec: RandomizationSpec, sample_index: int = 0) -> Field:
    """Randomization sum_n g_n psi^mu(D - mu n) phi on cubes of side mu."""
    if not 0 < spec.mu <= 1:
        raise ValueError(f"dilation scale must lie in (0, 1], got {spec.mu}")
    if spec.lattice_radius is not None:
        frac = discarded_energy_fraction(phi, spec)
        if frac > 0:
            log.info("lattice truncation at radius %d discards %.3e of the L2 energy",
                     spec.lattice_radius, frac)
    return phi.multiply_symbol(randomization_symbol(spec, phi.grid, sample_index))


# ---------------------------------------------------------------------------
# exponential moment condition


def mgf(dist: str, gamma) -> np.ndarray:
    """Moment generating function of one real part of ``g_n`` for the given family."""
    gamma = np.asarray(gamma, dtype=float)
    if dist == "complex_gaussian":
        return np.exp(gamma**2 / 4.0)
    if dist == "rademacher":
        return np.cosh(gamma / math.sqrt(2.0))
    if dist == "uniform":
        x = _UNIFORM_HALF_WIDTH * gamma
        return np.where(x == 0, 1.0, np.sinh(x) / np.where(x == 0, 1.0, x))
    if dist == "ones":
        return np.exp(gamma)
    raise ValueError(f"unknown distribution {dist!r}")


def mgf_bound_check(dist: str, gammas, c: float) -> bool:
    """Whether |E exp(gamma X)| <= exp(c gamma^2) holds on every gamma given."""
    gammas = np.asarray(gammas, dtype=float)
    lhs = np.log(mgf(dist, gammas))
    return bool(np.all(lhs <= c * gammas**2 + 1e-12))
