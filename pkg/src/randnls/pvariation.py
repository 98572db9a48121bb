"""Step functions, exact p-variation, U^p atoms and a discrete Y^s surrogate.

A :class:`StepFunction` with knots ``t_0 < ... < t_K`` takes the value
``values[k]`` on ``[t_k, t_{k+1})`` and vanishes outside ``[t_0, t_K)``.  Its
p-variation is the supremum over increasing evaluation points inside the knot
range.  With ``vanishes_at_infinity`` the terminal value ``u(t_K) := 0`` is
appended, as for partitions ending at ``+oo``.
"""
from __future__ import annotations

import base64
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import dyadic_blocks, lp_symbol
from .evolution import propagator_symbol


def euclidean_norm(x) -> float:
    return float(np.sqrt(np.sum(np.abs(np.asarray(x)) ** 2)))


@dataclass
class StepFunction:
    knots: np.ndarray
    values: np.ndarray
    vanishes_at_infinity: bool = False
    norm: Callable = field(default=euclidean_norm, repr=False, compare=False)

    def __post_init__(self):
        self.knots = np.asarray(self.knots, dtype=float)
        self.values = np.asarray(self.values)
        if self.knots.ndim != 1 or len(self.knots) < 2:
            raise ValueError("a step function needs at least two knots")
        if np.any(np.isinf(self.knots[:-1])):
            raise ValueError("only the last knot may be infinite")
        if np.any(np.diff(self.knots) <= 0):
            raise ValueError("knots must be strictly increasing")
        if len(self.values) != len(self.knots) - 1:
            raise ValueError(f"{len(self.values)} values for {len(self.knots)} knots")

    @property
    def value_shape(self) -> tuple:
        return self.values.shape[1:]

    def zero(self) -> np.ndarray:
        return np.zeros(self.value_shape, dtype=self.values.dtype)

    def sequence(self) -> np.ndarray:
        """Values used by the p-variation, including the terminal zero if flagged."""
        if self.vanishes_at_infinity:
            return np.concatenate([self.values, self.zero()[None]], axis=0)
        return self.values

    def __call__(self, t: float) -> np.ndarray:
        k = int(np.searchsorted(self.knots, t, side="right")) - 1
        if k < 0 or k >= len(self.values):
            return self.zero()
        return self.values[k]

    def restrict(self, a: float, b: float) -> "StepFunction":
        """u * chi_[a, b) as a step function on the knots meeting [a, b)."""
        kn = self.knots
        keep = [k for k in range(len(self.values)) if max(kn[k], a) < min(kn[k + 1], b)]
        if not keep:
            raise ValueError(f"[{a}, {b}) misses the support")
        knots = [max(kn[keep[0]], a)] + [min(kn[k + 1], b) for k in keep]
        return StepFunction(np.array(knots), self.values[keep], False, self.norm)

    def to_dict(self, inline: bool = True) -> dict:
        knots = [("inf" if math.isinf(k) else float(k)) for k in self.knots]
        vals = np.asarray(self.values, dtype=np.complex128)
        if inline:
            payload = {"shape": list(vals.shape), "re": vals.real.ravel().tolist(),
                       "im": vals.imag.ravel().tolist()}
        else:
            payload = {"shape": list(vals.shape),
                       "base64": base64.b64encode(vals.astype("<c16").tobytes()).decode("ascii")}
        return {"knots": knots, "values": payload, "vanishes_at_infinity": self.vanishes_at_infinity}

    def to_json(self, inline: bool = True) -> str:
        return json.dumps(self.to_dict(inline), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict, norm: Callable = euclidean_norm) -> "StepFunction":
        knots = [math.inf if k in ("inf", "Infinity") else float(k) for k in d["knots"]]
        v = d["values"]
        if isinstance(v, dict):
            shape = tuple(v["shape"])
            if "base64" in v:
                vals = np.frombuffer(base64.b64decode(v["base64"]), dtype="<c16").reshape(shape)
            else:
                vals = (np.asarray(v["re"], dtype=float) + 1j * np.asarray(v["im"], dtype=float)).reshape(shape)
            if not np.any(vals.imag):
                vals = vals.real
        else:
            vals = np.asarray(v, dtype=float)
        return cls(np.array(knots), np.array(vals), bool(d.get("vanishes_at_infinity", False)), norm)

    @classmethod
    def from_json(cls, text: str, norm: Callable = euclidean_norm) -> "StepFunction":
        return cls.from_dict(json.loads(text), norm)


def _pairwise_distances(seq: np.ndarray, norm: Callable) -> np.ndarray:
    n = len(seq)
    dist = np.zeros((n, n))
    flat = seq.reshape(n, -1)
    if norm is euclidean_norm:
        for j in range(1, n):
            dist[:j, j] = np.sqrt(np.sum(np.abs(flat[:j] - flat[j]) ** 2, axis=1))
    else:
        for j in range(1, n):
            for i in range(j):
                dist[i, j] = norm(seq[j] - seq[i])
    return dist


def _check_p(p: float) -> float:
    p = float(p)
    if not p >= 1:
        raise ValueError(f"p-variation needs p >= 1, got {p}")
    return p


def vp_norm(u: StepFunction, p: float) -> float:
    """Exact V^p norm by O(n^2) dynamic programming over the value sequence.

    ``best[j]`` is the largest sum of p-th powers of increments over chains
    ending at value ``j``.
    """
    p = _check_p(p)
    seq = u.sequence()
    n = len(seq)
    if n < 2:
        return 0.0
    dist = _pairwise_distances(seq, u.norm) ** p
    best = np.zeros(n)
    for j in range(1, n):
        best[j] = np.max(best[:j] + dist[:j, j])
    return float(best.max()) ** (1.0 / p)


def vp_bruteforce(u: StepFunction, p: float) -> float:
    """Exhaustive supremum over all increasing subsequences (at most 14 values)."""
    p = _check_p(p)
    seq = u.sequence()
    n = len(seq)
    if n > 14:
        raise ValueError("brute force limited to 14 values")
    best = 0.0
    for size in range(2, n + 1):
        for idx in itertools.combinations(range(n), size):
            total = sum(u.norm(seq[b] - seq[a]) ** p for a, b in zip(idx, idx[1:]))
            best = max(best, total)
    return best ** (1.0 / p)


def vp_prefix(u: StepFunction, p: float) -> np.ndarray:
    """V^p norm of the value sequence truncated after each index (non-decreasing)."""
    p = _check_p(p)
    seq = u.sequence()
    n = len(seq)
    dist = _pairwise_distances(seq, u.norm) ** p if n > 1 else np.zeros((n, n))
    best = np.zeros(n)
    running = np.zeros(n)
    for j in range(1, n):
        best[j] = np.max(best[:j] + dist[:j, j])
        running[j] = max(running[j - 1], best[j])
    return running ** (1.0 / p)


# ---------------------------------------------------------------------------
# atoms


def atom_mass(a: StepFunction, p: float) -> float:
    """sum_k ||phi_k||^p over the atom's values."""
    return float(sum(a.norm(v) ** p for v in a.values))


@dataclass
class AtomicRep:
    weights: np.ndarray
    atoms: list
    p: float

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.complex128)
        if len(self.weights) != len(self.atoms):
            raise ValueError("one weight per atom")
        for a in self.atoms:
            if abs(atom_mass(a, self.p) - 1.0) > 1e-12:
                raise ValueError("atom values must satisfy sum ||phi_k||^p = 1")

    @property
    def l1(self) -> float:
        return float(np.sum(np.abs(self.weights)))

    def __call__(self, t: float):
        if not self.atoms:
            return 0.0
        return sum(w * a(t) for w, a in zip(self.weights, self.atoms))


def restrict_atomic(rep: AtomicRep, interval: tuple[float, float]) -> AtomicRep:
    """Representation of u * chi_[a, b) whose l^1 weight never exceeds the original.

    Each atom keeps the pieces meeting the interval, cut to it, and is
    renormalised; its weight is multiplied by the retained p-mass to the 1/p.
    """
    a, b = map(float, interval)
    if not a < b:
        raise ValueError(f"empty interval [{a}, {b})")
    p = rep.p
    weights, atoms = [], []
    for lam, atom in zip(rep.weights, rep.atoms):
        kn = atom.knots
        keep = [k for k in range(len(atom.values)) if max(kn[k], a) < min(kn[k + 1], b)]
        if not keep:
            continue
        mass = sum(atom.norm(atom.values[k]) ** p for k in keep) ** (1.0 / p)
        if mass == 0:
            continue
        # consecutive kept pieces are adjacent, so their cut knots chain up
        knots = [max(kn[keep[0]], a)] + [min(kn[k + 1], b) for k in keep]
        vals = np.stack([atom.values[k] for k in keep]) / mass
        atoms.append(StepFunction(np.array(knots), vals, False, atom.norm))
        weights.append(lam * mass)
    return AtomicRep(np.array(weights, dtype=np.complex128), atoms, p)


def coarsen(u: StepFunction, partition) -> StepFunction:
    """u_P = sum_j u(tau_j) chi_[tau_j, tau_{j+1}) with tau_{n+1} the last knot of u."""
    taus = np.sort(np.asarray(partition, dtype=float))
    if taus.size == 0:
        raise ValueError("empty partition")
    if np.any(np.diff(taus) <= 0):
        raise ValueError("partition points must be distinct")
    end = u.knots[-1]
    if taus[0] < u.knots[0] or taus[-1] >= end:
        raise ValueError("partition points must lie in [t_0, t_K)")
    vals = np.stack([u(t) for t in taus])
    return StepFunction(np.append(taus, end), vals, u.vanishes_at_infinity, u.norm)


def greedy_atomic(u: StepFunction, p: float) -> AtomicRep:
    """The step function itself as lambda times one normalised atom."""
    p = _check_p(p)
    mass = atom_mass(u, p) ** (1.0 / p)
    if mass == 0:
        return AtomicRep(np.zeros(0), [], p)
    atom = StepFunction(u.knots, u.values / mass, False, u.norm)
    return AtomicRep(np.array([mass]), [atom], p)


def greedy_up_bound(u: StepFunction, p: float) -> float:
    """l^1 weight of :func:`greedy_atomic`; an upper bound for the U^p norm."""
    return greedy_atomic(u, p).l1


# ---------------------------------------------------------------------------
# discrete Y^s


def discrete_ys_norm(traj, s: float, vanishes_at_infinity: bool = True,
                     lp_top: int | None = None) -> float:
    """(sum_N N^{2s} ||t -> S(-t) P_N u(t)||_{V^2 L^2}^2)^{1/2} over the LP ladder."""
    grid = traj.grid
    w = grid.weight / grid.size  # Plancherel: L^2 norm from unnormalised FFT
    times = np.asarray(traj.times, dtype=float)
    knots = np.append(times, math.inf if vanishes_at_infinity else times[-1] + 1.0)
    twisted = np.stack([f.spectrum * propagator_symbol(grid, -t) for t, f in zip(times, traj.fields)])
    total = 0.0
    for N in dyadic_blocks(grid, lp_top):
        vals = twisted * lp_symbol(grid, N, lp_top) * math.sqrt(w)
        step = StepFunction(knots, vals, vanishes_at_infinity)
        total += N ** (2 * s) * vp_norm(step, 2.0) ** 2
    return math.sqrt(total)
