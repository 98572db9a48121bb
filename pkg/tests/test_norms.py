import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randnls.evolution import Trajectory, linear_trajectory
from randnls.grid import Field, lp_project, make_grid, plane_wave
from randnls.norms import (NormParams, besov_norm, critical_indices, exponent, is_admissible, ladder_norm,
                           lebesgue_norm, modulation_norm, modulation_pieces, sobolev_norm,
                           spacetime_norm, ws_exponents, ws_norm, z_norm)

from conftest import random_field


def const_traj(u, T, n=8):
    times = np.linspace(0.0, T, n + 1)
    return Trajectory(times, [u] * len(times))


# exponents and parameters

@pytest.mark.parametrize("text", ["inf", "Infinity", "oo", "∞", None])
def test_exponent_infinity_spellings(text):
    assert exponent(text) == math.inf


def test_norm_params_validation():
    assert NormParams(p="inf").p == math.inf
    with pytest.raises(ValueError):
        NormParams(q=0.5)
    with pytest.raises(ValueError):
        NormParams(s=math.nan)


# Lebesgue

def test_lebesgue_constant_field(grid2):
    u = Field(grid2, np.ones(grid2.shape))
    assert lebesgue_norm(u, 2) == pytest.approx(math.sqrt(grid2.volume), rel=1e-14)


def test_lebesgue_zero(grid2):
    assert lebesgue_norm(Field.zeros(grid2), 3) == 0.0


@pytest.mark.parametrize("p", [1, 2, 3.5, 6])
def test_lebesgue_plane_wave(grid3, p):
    A = 1.7
    u = plane_wave(grid3, [grid3.freq_spacing, 0, 2 * grid3.freq_spacing], A)
    assert lebesgue_norm(u, p) == pytest.approx(A * grid3.volume ** (1 / p), rel=1e-13)
    assert lebesgue_norm(u, "inf") == pytest.approx(A, rel=1e-13)


def test_lebesgue_rejects_small_p(grid1):
    with pytest.raises(ValueError):
        lebesgue_norm(Field.zeros(grid1), 0.5)


# Sobolev

@pytest.mark.parametrize("s", [-1.0, 0.5, 2.0])
def test_sobolev_plane_wave_homogeneous(grid2, s):
    k = np.array([3.0, -1.0]) * grid2.freq_spacing
    u = plane_wave(grid2, k)
    expected = np.linalg.norm(k) ** s * math.sqrt(grid2.volume)
    assert sobolev_norm(u, s, homogeneous=True) == pytest.approx(expected, rel=1e-12)
    inhom = (1 + k @ k) ** (s / 2) * math.sqrt(grid2.volume)
    assert sobolev_norm(u, s) == pytest.approx(inhom, rel=1e-12)


@pytest.mark.parametrize("homogeneous", [False, True])
def test_sobolev_zero_equals_l2(grid3, homogeneous):
    u = random_field(grid3, 1)
    assert sobolev_norm(u, 0.0, homogeneous) == pytest.approx(lebesgue_norm(u, 2), rel=1e-12)


def test_homogeneous_negative_needs_zero_mean(grid2):
    u = random_field(grid2, 2)
    with pytest.raises(ValueError, match="zero mode"):
        sobolev_norm(u, -0.5, homogeneous=True)
    spec = u.spectrum.copy()
    spec.flat[0] = 0
    assert sobolev_norm(Field(grid2, spec, "frequency"), -0.5, homogeneous=True) > 0


def test_homogeneous_zero_mode_contributes_nothing(grid2):
    u = Field(grid2, np.ones(grid2.shape))
    assert sobolev_norm(u, 1.0, homogeneous=True) == 0.0


# modulation and Besov

def test_modulation_zero_mode_only(grid2):
    u = Field(grid2, 2.5 * np.ones(grid2.shape))
    for p, q, s in [(2, 2, 0.0), (1, 3, 1.0), ("inf", 1, -2.0)]:
        assert modulation_norm(u, p, q, s) == pytest.approx(lebesgue_norm(u, p), rel=1e-12)


def test_modulation_zero_field(grid2):
    assert modulation_norm(Field.zeros(grid2), 2, 1, 0.5) == 0.0


def test_modulation_definition_and_equivalence_band(grid2):
    # M^{2,2}_0 squared is the sum of squared window pieces; raised-cosine
    # windows satisfy 2^{-d} <= sum psi^2 <= 1 pointwise
    lo, hi = math.inf, 0.0
    for seed in range(20):
        u = random_field(grid2, seed)
        _, pieces = modulation_pieces(u, 2)
        m = modulation_norm(u, 2, 2, 0.0)
        assert m**2 == pytest.approx(float(np.sum(pieces**2)), rel=1e-12)
        r = m**2 / lebesgue_norm(u, 2) ** 2
        lo, hi = min(lo, r), max(hi, r)
    assert 2.0**-grid2.d <= lo <= hi <= 1.0


def test_besov_constant_field(grid2):
    u = Field(grid2, 3.0 * np.ones(grid2.shape))
    for p in (1, 2, 4):
        assert besov_norm(u, p, 2, 1.5) == pytest.approx(lebesgue_norm(u, p), rel=1e-12)


def test_besov_single_block(grid2):
    u = plane_wave(grid2, [2.0, 0.0])  # inside block N=2 only (eta_2 = 1 at |xi| = 2)
    assert besov_norm(u, 2, 1, 0.7) == pytest.approx(2**0.7 * lebesgue_norm(u, 2), rel=1e-12)


def test_besov_l2_ratio_band():
    g = make_grid(2, 32, 8 * math.pi)
    ratios = [besov_norm(u, 2, 2, 0.0) / lebesgue_norm(u, 2)
              for u in (random_field(g, seed) for seed in range(100))]
    assert 1 / math.sqrt(2) <= min(ratios) and max(ratios) <= math.sqrt(2)


@pytest.mark.parametrize("seed", range(3))
def test_besov_and_modulation_monotone_in_s(grid2, seed):
    u = random_field(grid2, seed)
    ss = [-1.0, 0.0, 0.5, 1.0]
    b = [besov_norm(u, 2, 2, s) for s in ss]
    m = [modulation_norm(u, 2, 2, s) for s in ss]
    assert np.all(np.diff(b) >= 0) and np.all(np.diff(m) >= 0)


def test_ladder_norm_matches_besov_22(grid2):
    u = random_field(grid2, 7)
    assert ladder_norm(u, 0.5) == pytest.approx(besov_norm(u, 2, 2, 0.5), rel=1e-12)


# space-time

@pytest.mark.parametrize("q", [1, 2, 4, 7.5])
def test_spacetime_time_constant(grid2, q):
    u = random_field(grid2, 3)
    T = 0.8
    assert spacetime_norm(const_traj(u, T), q, 3) == pytest.approx(T ** (1 / q) * lebesgue_norm(u, 3), rel=1e-12)


def test_spacetime_sup_in_time(grid2):
    u = random_field(grid2, 4)
    traj = Trajectory(np.array([0.0, 0.5, 1.0]), [u, u * 3.0, u * 2.0])
    assert spacetime_norm(traj, "inf", 2) == pytest.approx(3 * lebesgue_norm(u, 2), rel=1e-13)


def test_spacetime_rejects_empty_and_unsorted(grid2):
    u = Field.zeros(grid2)
    with pytest.raises(ValueError):
        spacetime_norm(Trajectory(np.array([]), []), 2, 2)
    with pytest.raises(ValueError):
        spacetime_norm(Trajectory(np.array([1.0, 0.0]), [u, u]), 2, 2)


def test_z_norm_single_block_and_zero(grid2):
    u = lp_project(random_field(grid2, 5), 2)
    traj = const_traj(u, 1.0)
    blocks = [lp_project(u, N) for N in (1, 2, 4)]
    expected = sum(N ** (grid2.d - 2) * spacetime_norm(const_traj(b, 1.0), 4, 4) ** 4
                   for N, b in zip((1, 2, 4), blocks)) ** 0.25
    assert z_norm(traj) == pytest.approx(expected, rel=1e-12)
    assert z_norm(const_traj(Field.zeros(grid2), 1.0)) == 0.0


def test_z_norm_pure_block_closed_form():
    g = make_grid(3, 16, 4 * math.pi)
    u = plane_wave(g, [2.0, 0.0, 0.0])  # eta_2 == 1 there
    traj = const_traj(u, 1.0)
    assert z_norm(traj) == pytest.approx(2 ** (1 / 4) * spacetime_norm(traj, 4, 4), rel=1e-12)


def test_z_norm_dominated_by_derivative_l4(grid3):
    ratios = []
    for seed in range(10):
        u = random_field(grid3, seed, kmax=3.0)
        traj = linear_trajectory(u, np.linspace(0, 0.5, 9))
        bracket = Trajectory(traj.times, [f.multiply_symbol(grid3.japanese((grid3.d - 2) / 4)) for f in traj.fields])
        ratios.append(z_norm(traj) / spacetime_norm(bracket, 4, 4))
    assert np.isfinite(max(ratios)) and max(ratios) < 10


def test_ws_exponents():
    assert ws_exponents(3) == (4.0, 5.0, 30 / 7)


def test_ws_time_constant_plane_wave(grid2):
    A, k = 0.7, np.array([1.0, 0.5])
    u = plane_wave(grid2, k, A)
    T = 0.6
    expected = max(T ** (1 / q) * (1 + k @ k) ** 0.25 * A * grid2.volume ** (1 / q) for q in ws_exponents(2))
    assert ws_norm(const_traj(u, T), 0.5) == pytest.approx(expected, rel=1e-12)
    assert ws_norm(const_traj(Field.zeros(grid2), T), 0.5) == 0.0


def test_ws_monotone_under_restriction(grid2):
    traj = linear_trajectory(random_field(grid2, 9), np.linspace(0, 1, 11))
    vals = [ws_norm(traj.restrict(k), 0.3) for k in range(2, 12)]
    assert np.all(np.diff(vals) >= -1e-15)


# admissibility and indices

@pytest.mark.parametrize("d", [3, 4, 5])
def test_admissible_pairs(d):
    diag = 2 * (d + 2) / d
    assert is_admissible(diag, diag, d)
    assert is_admissible(4, 2 * d / (d - 1), d)
    assert is_admissible("inf", 2, d)


def test_endpoint_excluded_in_two_dimensions():
    assert not is_admissible(2, "inf", 2)
    assert not is_admissible(2, math.inf, 2)
    assert is_admissible(2, 6, 3)


def test_non_admissible():
    assert not is_admissible(4, 4, 3)
    assert not is_admissible(1.5, 10, 3)


@given(st.sampled_from(["inf", "Infinity", "oo", None]), st.integers(1, 6))
def test_admissible_infinity_representation(inf, d):
    assert is_admissible(inf, 2, d) == is_admissible(math.inf, 2, d)


@pytest.mark.parametrize("d,expected", [(3, (0.5, 0.25)), (4, (1.0, 0.6)), (5, (1.5, 1.0))])
def test_critical_indices(d, expected):
    ci = critical_indices(d)
    assert (ci.s_crit, ci.s_d) == pytest.approx(expected, abs=1e-15)


def test_threshold_ratio_increasing():
    ratios = [critical_indices(d).s_d / critical_indices(d).s_crit for d in range(3, 12)]
    assert all(r == pytest.approx((d - 1) / (d + 1), rel=1e-15) for r, d in zip(ratios, range(3, 12)))
    assert np.all(np.diff(ratios) > 0)
    assert all(critical_indices(d).s_d < critical_indices(d).s_crit for d in range(3, 12))
