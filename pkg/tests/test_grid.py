import numpy as np
import pytest

from otfseq.grid import OtfsGrid, add_cp, demodulate, isfft, modulate, sfft, strip_cp

from oracles import demodulate_dense, isfft_dense, modulate_dense, sfft_dense


def random_frame(rng, grid):
    return rng.standard_normal(grid.size) + 1j * rng.standard_normal(grid.size)


def test_grid_validation():
    with pytest.raises(ValueError):
        OtfsGrid(0, 4)
    with pytest.raises(ValueError):
        OtfsGrid(4, -1)
    with pytest.raises(ValueError):
        OtfsGrid(4, 3, cp_len=13)
    g = OtfsGrid(4, 3, cp_len=2)
    assert g.size == 12


def test_isfft_matches_dense_oracle():
    rng = np.random.default_rng(7)
    for m, n in [(4, 3), (8, 4), (5, 7), (16, 16)]:
        grid = OtfsGrid(m, n)
        x = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
        np.testing.assert_allclose(isfft(grid, x), isfft_dense(m, n, x), atol=1e-12)
        np.testing.assert_allclose(sfft(grid, x), sfft_dense(m, n, x), atol=1e-12)


def test_isfft_sfft_round_trip_and_energy():
    rng = np.random.default_rng(8)
    grid = OtfsGrid(8, 6)
    x = rng.standard_normal((8, 6)) + 1j * rng.standard_normal((8, 6))
    y = isfft(grid, x)
    np.testing.assert_allclose(sfft(grid, y), x, atol=1e-12)
    assert np.linalg.norm(y) == pytest.approx(np.linalg.norm(x), rel=1e-12)


def test_modulate_matches_dense_kronecker():
    rng = np.random.default_rng(9)
    for m, n in [(4, 3), (8, 4), (3, 5)]:
        grid = OtfsGrid(m, n)
        x = random_frame(rng, grid)
        np.testing.assert_allclose(modulate(grid, x), modulate_dense(m, n, x), atol=1e-12)
        y = random_frame(rng, grid)
        np.testing.assert_allclose(demodulate(grid, y), demodulate_dense(m, n, y), atol=1e-12)


def test_modulate_demodulate_round_trip():
    rng = np.random.default_rng(10)
    grid = OtfsGrid(16, 8)
    x = random_frame(rng, grid)
    np.testing.assert_allclose(demodulate(grid, modulate(grid, x)), x, atol=1e-12)
    assert np.linalg.norm(modulate(grid, x)) == pytest.approx(np.linalg.norm(x), rel=1e-12)


def test_cp_attach_strip():
    rng = np.random.default_rng(11)
    grid = OtfsGrid(6, 4, cp_len=5)
    x = random_frame(rng, grid)
    x_cp = add_cp(grid, x)
    assert x_cp.size == grid.size + grid.cp_len
    np.testing.assert_array_equal(x_cp[: grid.cp_len], x[-grid.cp_len:])
    np.testing.assert_array_equal(strip_cp(grid, x_cp), x)

    flat = OtfsGrid(6, 4, cp_len=0)
    np.testing.assert_array_equal(add_cp(flat, x), x)


def test_shape_validation():
    grid = OtfsGrid(4, 4, cp_len=2)
    with pytest.raises(ValueError):
        modulate(grid, np.zeros(15))
    with pytest.raises(ValueError):
        isfft(grid, np.zeros((4, 5)))
    with pytest.raises(ValueError):
        strip_cp(grid, np.zeros(16))
