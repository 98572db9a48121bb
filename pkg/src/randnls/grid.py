"""Periodic spectral grids, fields, Wiener windows and the Littlewood-Paley ladder.

Whole space is truncated to the box [-L/2, L/2)^d with ``n`` points per axis.
Frequencies are angular wavenumbers: a plane wave is ``exp(i k.x)`` and the
frequency lattice is ``(2 pi / L) * Z^d`` restricted to ``[-Nyq, Nyq)^d`` with
``Nyq = pi n / L``.  Frequency data is kept in standard FFT order; use
:attr:`Grid.signed_index` to map array positions to signed lattice coordinates.
"""
from __future__ import annotations

import itertools
import math
import struct
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

WINDOW_KINDS = ("raised_cosine", "smoothstep")

# LP cutoff: eta == 1 on [0, 5/4], eta == 0 on [8/5, oo)
LP_INNER = 5.0 / 4.0
LP_OUTER = 8.0 / 5.0


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on a cube of side ``box_length`` in ``d`` dimensions.

    Use :func:`make_grid` to build one with validation; the plain constructor
    is used internally for companion grids (e.g. after rescaling) that may
    legitimately have a box shorter than ``2 pi``.
    """

    d: int
    points_per_axis: int
    box_length: float

    @property
    def n(self) -> int:
        return self.points_per_axis

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.d

    @property
    def size(self) -> int:
        return self.points_per_axis**self.d

    @property
    def dx(self) -> float:
        return self.box_length / self.points_per_axis

    @property
    def weight(self) -> float:
        """Quadrature weight of one grid cell."""
        return self.dx**self.d

    @property
    def volume(self) -> float:
        return self.box_length**self.d

    @property
    def freq_spacing(self) -> float:
        return 2.0 * math.pi / self.box_length

    @property
    def nyquist(self) -> float:
        return math.pi * self.points_per_axis / self.box_length

    @cached_property
    def signed_index(self) -> np.ndarray:
        """Signed integer frequency index per FFT position along one axis."""
        n = self.points_per_axis
        return np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)

    @cached_property
    def k1d(self) -> np.ndarray:
        """Angular wavenumbers along one axis, FFT order."""
        return self.freq_spacing * self.signed_index

    @cached_property
    def x1d(self) -> np.ndarray:
        n = self.points_per_axis
        return (np.arange(n) - n // 2) * self.dx

    @cached_property
    def xi(self) -> tuple[np.ndarray, ...]:
        """Broadcastable per-axis wavenumber arrays."""
        return _axis_arrays(self.k1d, self.d)

    @cached_property
    def x(self) -> tuple[np.ndarray, ...]:
        return _axis_arrays(self.x1d, self.d)

    @cached_property
    def xi_sq(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for k in self.xi:
            out = out + k**2
        return out

    @cached_property
    def xi_abs(self) -> np.ndarray:
        return np.sqrt(self.xi_sq)

    def japanese(self, s: float) -> np.ndarray:
        """Symbol <xi>^s = (1 + |xi|^2)^(s/2)."""
        return (1.0 + self.xi_sq) ** (0.5 * s)

    @property
    def max_xi_sq(self) -> float:
        return float(self.xi_sq.max())

    def lp_top(self) -> int:
        """Largest dyadic block not exceeding the Nyquist frequency (at least 1)."""
        top = 1
        while 2 * top <= self.nyquist:
            top *= 2
        return top


def _axis_arrays(v: np.ndarray, d: int) -> tuple[np.ndarray, ...]:
    out = []
    for axis in range(d):
        shape = [1] * d
        shape[axis] = v.size
        out.append(v.reshape(shape))
    return tuple(out)


def make_grid(d: int, points_per_axis: int, box_length: float) -> Grid:
    """Validated grid constructor.

    ``box_length >= 2 pi`` is enforced so that the frequency spacing is at most
    one and every unit Wiener cube contains a frequency node.
    """
    if d not in (1, 2, 3, 4):
        raise ValueError(f"dimension must be 1..4, got {d}")
    if not isinstance(points_per_axis, (int, np.integer)) or not _is_power_of_two(int(points_per_axis)):
        raise ValueError(f"points_per_axis must be a power of two, got {points_per_axis}")
    if points_per_axis < 8:
        raise ValueError(f"points_per_axis must be >= 8, got {points_per_axis}")
    if not box_length >= 2.0 * math.pi * (1.0 - 1e-14):
        raise ValueError(
            f"box_length={box_length} < 2*pi: frequency spacing would exceed 1 and "
            "unit Wiener cubes would not be resolved by the frequency lattice"
        )
    return Grid(int(d), int(points_per_axis), float(box_length))


class Field:
    """Complex scalar field on a :class:`Grid`, in physical or frequency representation.

    Frequency data is the unnormalised ``numpy.fft.fftn`` of the physical samples.
    Instances are treated as immutable; the stored array is read-only.
    """

    __slots__ = ("grid", "rep", "data")

    def __init__(self, grid: Grid, data, rep: str = "physical"):
        if rep not in ("physical", "frequency"):
            raise ValueError(f"unknown representation {rep!r}")
        arr = np.array(data, dtype=np.complex128)
        if arr.size != grid.size:
            raise ValueError(f"data of size {arr.size} does not fit grid of size {grid.size}")
        arr = arr.reshape(grid.shape)
        arr.setflags(write=False)
        self.grid = grid
        self.rep = rep
        self.data = arr

    def __repr__(self) -> str:
        return f"Field(grid={self.grid}, rep={self.rep!r})"

    @classmethod
    def from_spectrum(cls, grid: Grid, spectrum) -> "Field":
        return cls(grid, spectrum, rep="frequency")

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape), rep="physical")

    @property
    def physical(self) -> np.ndarray:
        if self.rep == "physical":
            return self.data
        return np.fft.ifftn(self.data)

    @property
    def spectrum(self) -> np.ndarray:
        if self.rep == "frequency":
            return self.data
        return np.fft.fftn(self.data)

    def to_physical(self) -> "Field":
        return self if self.rep == "physical" else Field(self.grid, self.physical, "physical")

    def to_frequency(self) -> "Field":
        return self if self.rep == "frequency" else Field(self.grid, self.spectrum, "frequency")

    def _check(self, other: "Field") -> None:
        if other.grid != self.grid:
            raise ValueError("grid mismatch")

    def __add__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.grid, self.physical + other.physical)

    def __sub__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.grid, self.physical - other.physical)

    def __mul__(self, c) -> "Field":
        return Field(self.grid, self.data * c, self.rep)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return self * -1.0

    def multiply_symbol(self, symbol: np.ndarray) -> "Field":
        """Apply a Fourier multiplier given on the frequency grid."""
        return Field(self.grid, self.spectrum * symbol, "frequency")


def plane_wave(grid: Grid, k, amplitude: complex = 1.0) -> Field:
    """``amplitude * exp(i k.x)``; ``k`` should lie on the frequency lattice."""
    k = np.broadcast_to(np.asarray(k, dtype=float), (grid.d,))
    phase = sum(ki * xi for ki, xi in zip(k, grid.x))
    return Field(grid, amplitude * np.exp(1j * phase) * np.ones(grid.shape))


def plancherel(spectrum: np.ndarray, grid: Grid) -> float:
    """L^2 norm of the physical field computed from its unnormalised FFT."""
    return math.sqrt(grid.weight / grid.size * float(np.sum(np.abs(spectrum) ** 2)))


# ---------------------------------------------------------------------------
# Wiener windows


def window_1d(t, kind: str = "raised_cosine") -> np.ndarray:
    """One-dimensional window supported on [-1, 1] with sum_n psi(t - n) == 1."""
    t = np.abs(np.asarray(t, dtype=float))
    inside = t < 1.0
    if kind == "raised_cosine":
        val = np.cos(0.5 * np.pi * np.minimum(t, 1.0)) ** 2
    elif kind == "smoothstep":
        y = 1.0 - np.minimum(t, 1.0)
        val = y**3 * (10.0 - 15.0 * y + 6.0 * y**2)
    else:
        raise ValueError(f"unknown window kind {kind!r}; expected one of {WINDOW_KINDS}")
    return np.where(inside, val, 0.0)


def window_value(xi, n, mu: float = 1.0, kind: str = "raised_cosine"):
    """Dilated, translated window psi^mu(xi - mu n) = prod_i psi((xi_i - mu n_i) / mu).

    ``xi`` may be a length-d vector or a tuple of broadcastable per-axis arrays.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    n = np.atleast_1d(np.asarray(n, dtype=float))
    if isinstance(xi, tuple):
        axes = xi
    else:
        axes = tuple(np.atleast_1d(np.asarray(xi, dtype=float)))
    if len(axes) != n.size:
        raise ValueError("xi and n have different dimensions")
    out = 1.0
    for xa, na in zip(axes, n):
        out = out * window_1d((xa - mu * na) / mu, kind)
    if np.ndim(out) == 0:
        return float(out)
    return out


def lattice_range(grid: Grid, mu: float = 1.0) -> tuple[int, int]:
    """Inclusive per-axis range of lattice indices whose dilated cube meets the grid."""
    k = grid.k1d
    lo = math.floor(k.min() / mu) - 1
    hi = math.ceil(k.max() / mu) + 1
    # drop indices whose open support (mu(n-1), mu(n+1)) misses every node
    while lo < hi and not np.any(np.abs(k - mu * lo) < mu):
        lo += 1
    while hi > lo and not np.any(np.abs(k - mu * hi) < mu):
        hi -= 1
    return lo, hi


def lattice_points(grid: Grid, mu: float = 1.0) -> np.ndarray:
    """All lattice points n (rows) whose window psi^mu(. - mu n) is nonzero somewhere on the grid."""
    lo, hi = lattice_range(grid, mu)
    axis = np.arange(lo, hi + 1)
    mesh = np.meshgrid(*([axis] * grid.d), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _check_resolved(grid: Grid, mu: float) -> None:
    if grid.freq_spacing > mu * (1.0 + 1e-12):
        raise ValueError(
            f"frequency spacing {grid.freq_spacing:.6g} exceeds cube scale mu={mu}: "
            "dilated Wiener cubes are not resolved"
        )


def wiener_project(phi: Field, n, mu: float = 1.0, kind: str = "raised_cosine") -> Field:
    """psi^mu(D - mu n) phi as a frequency-side multiplication."""
    grid = phi.grid
    n = np.atleast_1d(np.asarray(n))
    if n.size != grid.d:
        raise ValueError(f"lattice point of dimension {n.size} on a {grid.d}-d grid")
    symbol = window_value(grid.xi, n, mu, kind)
    if not np.any(symbol):
        warnings.warn(f"Wiener cube at n={tuple(n)} (mu={mu}) lies outside the resolved band", stacklevel=2)
        return Field.zeros(grid)
    return phi.multiply_symbol(symbol)


def window_multiplier(grid: Grid, coeffs: np.ndarray, lo: int, mu: float = 1.0,
                      kind: str = "raised_cosine") -> np.ndarray:
    """Symbol sum_n c_n psi^mu(xi - mu n) on the frequency grid.

    ``coeffs`` is a d-dimensional array indexed by ``n - lo`` per axis.  Every
    frequency meets at most two windows per axis, so the sum is assembled from
    the ``2^d`` neighbouring lattice corners instead of looping over ``n``.
    """
    per_axis = []
    for k in grid.xi:
        t = k / mu
        n0 = np.floor(t).astype(np.int64)
        frac = t - n0
        per_axis.append(((n0 - lo, window_1d(frac, kind)), (n0 + 1 - lo, window_1d(frac - 1.0, kind))))
    hi = np.array(coeffs.shape)
    out = np.zeros(grid.shape, dtype=np.complex128)
    for corner in itertools.product((0, 1), repeat=grid.d):
        idx = []
        w = 1.0
        for axis, c in enumerate(corner):
            ia, wa = per_axis[axis][c]
            idx.append(ia)
            w = w * wa
        idx = np.broadcast_arrays(*idx)
        inside = np.ones(grid.shape, dtype=bool)
        for axis, ia in enumerate(idx):
            inside &= (ia >= 0) & (ia < hi[axis])
        clipped = [np.clip(ia, 0, hi[axis] - 1) for axis, ia in enumerate(idx)]
        vals = np.where(inside, coeffs[tuple(clipped)], 0.0)
        out += vals * np.broadcast_to(w, grid.shape)
    return out


def partition_of_unity_error(grid: Grid, mu: float = 1.0, kind: str = "raised_cosine") -> float:
    """max |sum_n psi^mu(xi - mu n) - 1| over the frequency grid.

    The tensor window sum factorises into per-axis lattice sums, each taken
    over every lattice index whose window meets the grid.
    """
    lo, hi = lattice_range(grid, mu)
    total = np.ones(grid.shape)
    for k in grid.xi:
        axis_sum = sum(window_1d((k - mu * n) / mu, kind) for n in range(lo, hi + 1))
        total = total * axis_sum
    return float(np.max(np.abs(total - 1.0)))


# ---------------------------------------------------------------------------
# Littlewood-Paley ladder


def _smooth_transition(x: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def lp_cutoff(r) -> np.ndarray:
    """Even cutoff eta: 1 on [0, 5/4], 0 beyond 8/5, smooth in between."""
    r = np.abs(np.asarray(r, dtype=float))
    return 1.0 - _smooth_transition((r - LP_INNER) / (LP_OUTER - LP_INNER))


def dyadic_blocks(grid: Grid, lp_top: int | None = None) -> list[int]:
    top = grid.lp_top() if lp_top is None else int(lp_top)
    if not _is_power_of_two(top):
        raise ValueError(f"lp_top must be dyadic, got {lp_top}")
    blocks = [1]
    while blocks[-1] < top:
        blocks.append(2 * blocks[-1])
    return blocks


def lp_symbol(grid: Grid, N: int, lp_top: int | None = None) -> np.ndarray:
    """eta_N on the grid; the top block absorbs every frequency above the ladder."""
    blocks = dyadic_blocks(grid, lp_top)
    if N not in blocks:
        raise ValueError(f"N={N} is not a dyadic block of the ladder {blocks}")
    top = blocks[-1]
    r = grid.xi_abs
    upper = np.ones(grid.shape) if N == top else lp_cutoff(r / N)
    lower = np.zeros(grid.shape) if N == 1 else lp_cutoff(2.0 * r / N)
    return upper - lower


def lp_project(u: Field, N: int, lp_top: int | None = None) -> Field:
    """Littlewood-Paley projection P_N."""
    return u.multiply_symbol(lp_symbol(u.grid, N, lp_top))


@dataclass(frozen=True)
class WindowLadder:
    """Window choice plus LP ladder extent and dilation scale, recorded with experiment output."""

    window_kind: str = "raised_cosine"
    lp_top: int | None = None
    mu: float = 1.0

    def __post_init__(self):
        if self.window_kind not in WINDOW_KINDS:
            raise ValueError(f"unknown window kind {self.window_kind!r}")
        if self.mu <= 0:
            raise ValueError("mu must be positive")

    def blocks(self, grid: Grid) -> list[int]:
        return dyadic_blocks(grid, self.lp_top)

    def window(self, xi, n) -> float:
        return window_value(xi, n, self.mu, self.window_kind)


# ---------------------------------------------------------------------------
# Binary snapshots

_MAGIC = b"RNLS"
_HEADER = struct.Struct("<4sBBIdB")
_REP_CODE = {"physical": 0, "frequency": 1}
_CODE_REP = {v: k for k, v in _REP_CODE.items()}


def field_to_bytes(u: Field) -> bytes:
    g = u.grid
    header = _HEADER.pack(_MAGIC, 1, g.d, g.points_per_axis, g.box_length, _REP_CODE[u.rep])
    return header + np.ascontiguousarray(u.data, dtype="<c16").tobytes()


def field_from_bytes(buf: bytes) -> Field:
    if len(buf) < _HEADER.size:
        raise ValueError("truncated snapshot header")
    magic, version, d, n, box, rep = _HEADER.unpack_from(buf)
    if magic != _MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != 1:
        raise ValueError(f"unsupported snapshot version {version}")
    if rep not in _CODE_REP:
        raise ValueError(f"unknown representation code {rep}")
    grid = Grid(d, n, box)
    data = np.frombuffer(buf, dtype="<c16", offset=_HEADER.size)
    if data.size != grid.size:
        raise ValueError(f"snapshot holds {data.size} values, grid expects {grid.size}")
    return Field(grid, data.reshape(grid.shape), _CODE_REP[rep])


def write_snapshot(u: Field, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(field_to_bytes(u))


def read_snapshot(path) -> Field:
    return field_from_bytes(Path(path).read_bytes())
