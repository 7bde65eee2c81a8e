import numpy as np
import pytest

from otfseq.channel import (
    ChannelRealization,
    ChannelStatistics,
    apply_channel,
    build_dd_matrix,
    build_time_matrix,
    sample_channel,
)
from otfseq.grid import OtfsGrid, add_cp, demodulate, modulate, strip_cp

from oracles import dd_matrix_dense, shift_matrix


def random_frame(rng, grid):
    return rng.standard_normal(grid.size) + 1j * rng.standard_normal(grid.size)


def through_channel(grid, chan, x, n0=0.0, rng=None):
    y_cp = apply_channel(grid, chan, add_cp(grid, modulate(grid, x)), n0, rng)
    return demodulate(grid, strip_cp(grid, y_cp))


def test_sample_channel_ranges_and_power():
    rng = np.random.default_rng(0)
    stats = ChannelStatistics(n_paths=6, l_max=3, k_max=2)
    power = []
    for _ in range(400):
        chan = sample_channel(stats, rng)
        assert chan.delays.min() >= 0 and chan.delays.max() <= 3
        assert chan.dopplers.min() >= -2 and chan.dopplers.max() <= 2
        assert chan.is_integer
        power.append(np.sum(np.abs(chan.gains) ** 2))
    # total path power is chi-squared with mean 1
    assert np.mean(power) == pytest.approx(1.0, rel=0.05)


def test_sample_channel_fractional_split():
    rng = np.random.default_rng(1)
    stats = ChannelStatistics(n_paths=64, l_max=5, k_max=6, fractional=True)
    chan = sample_channel(stats, rng)
    nu = chan.dopplers + chan.doppler_fracs
    assert np.all(np.abs(chan.doppler_fracs) <= 0.5)
    assert np.all(np.abs(nu) <= 6.0 + 1e-12)
    assert not chan.is_integer


def test_apply_channel_identity_and_shift():
    rng = np.random.default_rng(2)
    grid = OtfsGrid(8, 4, cp_len=3)
    x = random_frame(rng, grid)
    x_t = modulate(grid, x)

    ident = ChannelRealization([1.0], [0], [0])
    y = apply_channel(grid, ident, add_cp(grid, x_t))
    np.testing.assert_allclose(y, add_cp(grid, x_t), atol=1e-12)

    shift = ChannelRealization([1.0], [2], [0])
    y_body = strip_cp(grid, apply_channel(grid, shift, add_cp(grid, x_t)))
    np.testing.assert_allclose(y_body, np.roll(x_t, 2), atol=1e-12)


def test_apply_channel_matches_time_matrix():
    rng = np.random.default_rng(3)
    grid = OtfsGrid(8, 4, cp_len=4)
    for fractional in (False, True):
        stats = ChannelStatistics(n_paths=3, l_max=4, k_max=1, fractional=fractional)
        chan = sample_channel(stats, rng)
        x_t = modulate(grid, random_frame(rng, grid))
        y_body = strip_cp(grid, apply_channel(grid, chan, add_cp(grid, x_t)))
        np.testing.assert_allclose(y_body, build_time_matrix(grid, chan) @ x_t, atol=1e-10)


def test_apply_channel_linear_without_noise():
    rng = np.random.default_rng(4)
    grid = OtfsGrid(6, 3, cp_len=2)
    chan = sample_channel(ChannelStatistics(2, 2, 1), rng)
    u = rng.standard_normal(grid.size + 2) + 1j * rng.standard_normal(grid.size + 2)
    v = rng.standard_normal(grid.size + 2) + 1j * rng.standard_normal(grid.size + 2)
    lhs = apply_channel(grid, chan, 2.0 * u + 3j * v)
    rhs = 2.0 * apply_channel(grid, chan, u) + 3j * apply_channel(grid, chan, v)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_apply_channel_noise_power():
    rng = np.random.default_rng(5)
    grid = OtfsGrid(64, 32, cp_len=10)
    chan = ChannelRealization([0.0], [0], [0])
    z = apply_channel(grid, chan, np.zeros(grid.size + 10, complex), n0=0.25, rng=rng)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(0.25, rel=0.1)


def test_cp_shorter_than_delay_rejected():
    grid = OtfsGrid(8, 4, cp_len=1)
    chan = ChannelRealization([1.0], [2], [0])
    with pytest.raises(ValueError):
        apply_channel(grid, chan, np.zeros(grid.size + 1, complex))


def test_dd_matrix_single_path_pattern():
    # each per-path DD matrix is a doubly cyclic-shifted diagonal:
    # its pattern equals kron(Pi_N^k, Pi_M^l)
    grid = OtfsGrid(4, 3, cp_len=3)
    for l, k in [(0, 0), (1, 0), (0, 1), (2, -1), (3, 2)]:
        chan = ChannelRealization([1.0], [l], [k])
        h_dd = build_dd_matrix(grid, chan)
        pattern = (np.abs(h_dd.toarray()) > 1e-14).astype(int)
        expected = np.kron(shift_matrix(3, k % 3), shift_matrix(4, l))
        np.testing.assert_array_equal(pattern, expected)
        # one nonzero per row, unit magnitude
        assert h_dd.nnz == grid.size
        np.testing.assert_allclose(np.abs(h_dd.data), 1.0, atol=1e-12)


def test_dd_matrix_matches_dense_conjugation_integer():
    rng = np.random.default_rng(6)
    grid = OtfsGrid(8, 4, cp_len=4)
    for _ in range(5):
        chan = sample_channel(ChannelStatistics(4, 4, 2), rng)
        h_dd = build_dd_matrix(grid, chan).toarray()
        oracle = dd_matrix_dense(grid.m, grid.n, build_time_matrix(grid, chan))
        np.testing.assert_allclose(h_dd, oracle, atol=1e-10)


def test_dd_matrix_matches_dense_conjugation_fractional_full_trunc():
    rng = np.random.default_rng(7)
    grid = OtfsGrid(6, 5, cp_len=4)
    for _ in range(5):
        chan = sample_channel(ChannelStatistics(3, 4, 2, fractional=True), rng)
        h_dd = build_dd_matrix(grid, chan, trunc=grid.n // 2).toarray()
        oracle = dd_matrix_dense(grid.m, grid.n, build_time_matrix(grid, chan))
        np.testing.assert_allclose(h_dd, oracle, atol=1e-10)


def test_dd_matrix_truncation_keeps_peak_taps():
    rng = np.random.default_rng(8)
    grid = OtfsGrid(4, 9, cp_len=3)
    chan = sample_channel(ChannelStatistics(1, 3, 2, fractional=True), rng)
    full = build_dd_matrix(grid, chan, trunc=grid.n // 2).toarray()
    cut = build_dd_matrix(grid, chan, trunc=1).toarray()
    assert (np.abs(cut) > 0).sum() == 3 * grid.size
    # kept entries agree with the untruncated matrix exactly
    mask = np.abs(cut) > 0
    np.testing.assert_allclose(cut[mask], full[mask], atol=1e-12)
    # dropped mass is the tail of the Dirichlet kernel, small relative to the peak
    dropped = np.abs(full - cut)
    assert dropped.max() < np.abs(full).max()


def test_pipeline_equals_dd_matrix():
    rng = np.random.default_rng(9)
    grid = OtfsGrid(8, 4, cp_len=4)
    for fractional in (False, True):
        stats = ChannelStatistics(3, 4, 1, fractional=fractional)
        chan = sample_channel(stats, rng)
        x = random_frame(rng, grid)
        y_dd = through_channel(grid, chan, x)
        h_dd = build_dd_matrix(grid, chan, trunc=grid.n // 2)
        np.testing.assert_allclose(y_dd, h_dd @ x, atol=1e-10)


def test_duplicate_taps_accumulate():
    grid = OtfsGrid(4, 3, cp_len=2)
    twice = ChannelRealization([0.5, 0.25], [1, 1], [1, 1])
    once = ChannelRealization([0.75], [1], [1])
    np.testing.assert_allclose(
        build_dd_matrix(grid, twice).toarray(), build_dd_matrix(grid, once).toarray(), atol=1e-12
    )
