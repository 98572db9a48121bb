import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randnls.evolution import linear_propagate
from randnls.grid import (Field, Grid, WindowLadder, dyadic_blocks, field_from_bytes, field_to_bytes,
                          lattice_points, lp_cutoff, lp_project, lp_symbol, make_grid,
                          partition_of_unity_error, plancherel, plane_wave, read_snapshot,
                          wiener_project, window_1d, window_value, write_snapshot)

from conftest import random_field


def test_make_grid_one_dimensional_arithmetic():
    g = make_grid(1, 64, 2 * math.pi * 8)
    assert g.freq_spacing == pytest.approx(1 / 8, rel=1e-15)
    assert g.nyquist == pytest.approx(4.0, rel=1e-15)
    # nodes are m/8 for m = -32..31
    assert sorted(g.signed_index.tolist()) == list(range(-32, 32))
    assert np.allclose(np.sort(g.k1d), np.arange(-32, 32) / 8, atol=1e-15)


def test_make_grid_three_dimensional_arithmetic():
    g = make_grid(3, 32, 2 * math.pi * 4)
    assert g.size == 32768
    assert g.shape == (32, 32, 32)
    assert g.freq_spacing == pytest.approx(0.25, rel=1e-15)


def test_make_grid_rejects_non_power_of_two():
    with pytest.raises(ValueError, match="power of two"):
        make_grid(2, 48, 2 * math.pi)


@pytest.mark.parametrize("args", [(0, 16, 10.0), (5, 16, 10.0), (1, 4, 10.0)])
def test_make_grid_rejects_bad_shapes(args):
    with pytest.raises(ValueError):
        make_grid(*args)


def test_make_grid_rejects_short_box_naming_cube_resolution():
    with pytest.raises(ValueError, match="Wiener"):
        make_grid(1, 16, 6.0)


def test_grid_is_hashable_and_deterministic():
    assert make_grid(2, 16, 10.0) == make_grid(2, 16, 10.0)
    assert hash(make_grid(2, 16, 10.0)) == hash(make_grid(2, 16, 10.0))


def test_round_trip_physical_frequency(grid2):
    u = random_field(grid2, 3)
    back = u.to_physical().to_frequency().spectrum
    assert np.max(np.abs(back - u.spectrum)) <= 1e-12 * np.max(np.abs(u.spectrum))


@pytest.mark.parametrize("seed", range(5))
def test_plancherel_matches_quadrature(grid3, seed):
    u = random_field(grid3, seed)
    direct = math.sqrt(grid3.weight * float(np.sum(np.abs(u.physical) ** 2)))
    assert abs(direct - plancherel(u.spectrum, grid3)) / direct < 1e-12


def test_field_data_is_read_only(grid1):
    u = plane_wave(grid1, 1.0)
    with pytest.raises(ValueError):
        u.physical[0] = 0.0


def test_field_arithmetic_requires_same_grid(grid1, grid2):
    with pytest.raises(ValueError):
        Field.zeros(grid1) + Field.zeros(grid2)


def test_plane_wave_single_mode(grid1):
    k = 3 * grid1.freq_spacing
    u = plane_wave(grid1, k, 2.0)
    spec = u.spectrum
    assert np.count_nonzero(np.abs(spec) > 1e-9) == 1
    assert np.allclose(np.abs(u.physical), 2.0)


# windows

def test_window_value_examples():
    assert window_value([0.0, 0.0], [0, 0]) == 1.0
    assert window_value([1.0, 0.0], [0, 0]) == 0.0
    assert window_value([0.5, 0.0], [0, 0]) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("kind", ["raised_cosine", "smoothstep"])
def test_window_support_and_range(kind):
    t = np.linspace(-2, 2, 4001)
    w = window_1d(t, kind)
    assert np.all((w >= 0) & (w <= 1))
    assert np.all(w[np.abs(t) >= 1] == 0)


@pytest.mark.parametrize("kind", ["raised_cosine", "smoothstep"])
@given(xi=st.floats(-50, 50, allow_nan=False))
def test_window_partition_of_unity_1d(kind, xi):
    total = sum(window_1d(xi - n, kind) for n in range(math.floor(xi) - 2, math.floor(xi) + 3))
    assert abs(total - 1.0) < 1e-12


def test_dilated_window_scales():
    assert window_value([0.25], [1], 0.25) == 1.0
    assert window_value([0.125], [0], 0.25) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("mu", [1.0, 0.5, 0.25])
def test_partition_of_unity_grid(grid2, mu):
    assert partition_of_unity_error(grid2, mu) < 1e-12


def test_partition_of_unity_factorised_matches_direct_sum():
    g = make_grid(2, 16, 4 * math.pi)
    total = np.zeros(g.shape)
    for n in lattice_points(g, 0.5):
        total += window_value(g.xi, n, 0.5)
    assert np.max(np.abs(total - 1.0)) < 1e-12
    assert partition_of_unity_error(g, 0.5) < 1e-12


def test_wiener_project_zero_mode(grid2):
    phi = Field(grid2, np.where(grid2.xi_sq == 0, 1.0, 0.0) * (1 + 0j), "frequency")
    assert np.allclose(wiener_project(phi, [0, 0]).spectrum, phi.spectrum, atol=0)
    assert np.all(wiener_project(phi, [1, 0]).spectrum == 0)


def test_wiener_project_outside_band_warns(grid2):
    phi = random_field(grid2, 1)
    with pytest.warns(UserWarning, match="outside"):
        out = wiener_project(phi, [100, 0])
    assert not np.any(out.spectrum)


@pytest.mark.parametrize("mu", [1.0, 0.5])
def test_wiener_projections_sum_to_field(grid2, mu):
    phi = random_field(grid2, 2)
    total = np.zeros(grid2.shape, dtype=complex)
    for n in lattice_points(grid2, mu):
        total += wiener_project(phi, n, mu).spectrum
    assert np.max(np.abs(total - phi.spectrum)) < 1e-12 * np.max(np.abs(phi.spectrum))


def test_wiener_project_rejects_wrong_dimension(grid2):
    with pytest.raises(ValueError):
        wiener_project(Field.zeros(grid2), [0, 0, 0])


# Littlewood-Paley

def test_lp_cutoff_plateau_and_support():
    assert np.all(lp_cutoff(np.linspace(0, 1.25, 50)) == 1.0)
    assert np.all(lp_cutoff(np.linspace(1.6, 10, 50)) == 0.0)
    mid = lp_cutoff(np.linspace(1.25, 1.6, 200))
    assert np.all(np.diff(mid) <= 0)


def test_lp_ladder_top_and_blocks():
    g = make_grid(2, 64, 8 * math.pi)  # Nyquist 8
    assert g.lp_top() == 8
    assert dyadic_blocks(g) == [1, 2, 4, 8]


def test_lp_reconstruction_exact(grid2):
    u = random_field(grid2, 4)
    total = sum(lp_project(u, N).spectrum for N in dyadic_blocks(grid2))
    assert np.max(np.abs(total - u.spectrum)) < 1e-12


def test_lp_symbols_sum_to_one(grid3):
    total = sum(lp_symbol(grid3, N) for N in dyadic_blocks(grid3))
    assert np.max(np.abs(total - 1.0)) == 0.0


def test_lp_plane_wave_examples():
    g = make_grid(2, 64, 8 * math.pi)
    low = plane_wave(g, [1.0, 0.0])
    assert np.allclose(lp_project(low, 1).physical, low.physical, atol=1e-14)
    far = plane_wave(make_grid(2, 64, 4 * math.pi), [10.0, 0.0])
    assert np.max(np.abs(lp_project(far, 1).physical)) < 1e-14


def test_lp_rejects_non_dyadic(grid2):
    with pytest.raises(ValueError):
        lp_symbol(grid2, 3)
    with pytest.raises(ValueError):
        lp_symbol(grid2, 2 * grid2.lp_top())


def test_projections_commute_with_propagator(grid2):
    u = random_field(grid2, 5)
    t = 0.37
    a = linear_propagate(lp_project(u, 2), t).physical
    b = lp_project(linear_propagate(u, t), 2).physical
    assert np.max(np.abs(a - b)) < 1e-12
    a = linear_propagate(wiener_project(u, [1, -1]), t).physical
    b = wiener_project(linear_propagate(u, t), [1, -1]).physical
    assert np.max(np.abs(a - b)) < 1e-12


def test_window_ladder_validates():
    with pytest.raises(ValueError):
        WindowLadder(window_kind="boxcar")
    wl = WindowLadder(mu=0.5)
    assert wl.window([0.5], [1]) == 1.0


# snapshots

def test_snapshot_round_trip(tmp_path, grid3):
    for rep in ("physical", "frequency"):
        u = random_field(grid3, 6)
        u = u if rep == "frequency" else u.to_physical()
        write_snapshot(u, tmp_path / f"{rep}.rnls")
        back = read_snapshot(tmp_path / f"{rep}.rnls")
        assert back.grid == grid3 and back.rep == rep
        assert np.array_equal(back.data, u.data)


def test_snapshot_header_layout(grid1):
    buf = field_to_bytes(plane_wave(grid1, 0.0))
    assert buf[:4] == b"RNLS"
    assert buf[4] == 1 and buf[5] == 1
    assert len(buf) == 4 + 1 + 1 + 4 + 8 + 1 + 16 * 64


def test_snapshot_rejects_bad_magic(grid1):
    buf = bytearray(field_to_bytes(plane_wave(grid1, 0.0)))
    buf[:4] = b"XXXX"
    with pytest.raises(ValueError):
        field_from_bytes(bytes(buf))
