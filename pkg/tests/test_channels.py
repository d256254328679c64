import math

import numpy as np
import pytest

from hetsim.channels import correlation_matrix, correlation_root, draw_channels


def simple_draw(rng, n, gains, tau):
    return draw_channels(rng, n, np.asarray(gains, dtype=float),
                         np.asarray(tau, dtype=float), np.zeros(0), np.zeros(0),
                         np.zeros((0, len(gains))))


def test_perfect_csi_estimate_equals_channel():
    ch = simple_draw(np.random.default_rng(0), 64, [1e-9, 3e-11], [0.0, 0.0])
    assert np.array_equal(ch.served, ch.served_est)


def test_column_norm_tracks_pathloss():
    gain = 3.47e-11
    ch = simple_draw(np.random.default_rng(1), 4096, [gain], [0.0])
    assert np.linalg.norm(ch.served[:, 0]) ** 2 / 4096 == pytest.approx(gain, rel=0.05)


def test_useless_estimate_uncorrelated():
    ch = simple_draw(np.random.default_rng(2), 4096, [1e-9], [1.0])
    h, e = ch.served[:, 0], ch.served_est[:, 0]
    corr = np.vdot(h, e) / (np.linalg.norm(h) * np.linalg.norm(e))
    assert abs(corr) < 0.05


def test_estimate_correlation_matches_quality():
    tau = math.sqrt(0.3)
    ch = simple_draw(np.random.default_rng(3), 8192, [2e-10], [tau])
    h, e = ch.served[:, 0], ch.served_est[:, 0]
    corr = abs(np.vdot(h, e)) / (np.linalg.norm(h) * np.linalg.norm(e))
    assert corr == pytest.approx(math.sqrt(1 - 0.3), abs=0.02)


def test_estimate_error_variance():
    gain, tau_sq = 5e-11, 0.25
    ch = simple_draw(np.random.default_rng(4), 8192, [gain], [math.sqrt(tau_sq)])
    diff = ch.served_est[:, 0] - math.sqrt(1 - tau_sq) * ch.served[:, 0]
    assert np.mean(np.abs(diff) ** 2) == pytest.approx(tau_sq * gain, rel=0.05)


def test_scalar_links_scaled_by_pathloss():
    rng = np.random.default_rng(5)
    access = np.array([1e-9, 4e-10])
    cross = np.array([[2e-12, 3e-12], [5e-13, 1e-12]])
    vals_a = np.empty((4000, 2), dtype=complex)
    vals_c = np.empty((4000, 2, 2), dtype=complex)
    for i in range(4000):
        ch = draw_channels(rng, 4, np.array([1e-10, 1e-10]), np.zeros(2),
                           np.array([1e-11, 1e-11]), access, cross)
        vals_a[i] = ch.sue_access
        vals_c[i] = ch.sue_cross
    assert np.mean(np.abs(vals_a) ** 2, axis=0) == pytest.approx(access, rel=0.1)
    assert np.mean(np.abs(vals_c) ** 2, axis=0) == pytest.approx(cross, rel=0.15)


def test_correlation_diagonal_and_hermitian():
    m = correlation_matrix(0.3, math.pi / 12, 32)
    assert np.abs(np.diag(m) - 1.0).max() < 1e-12
    assert np.abs(m - m.conj().T).max() < 1e-12
    assert np.linalg.eigvalsh(m).min() > -1e-10


def test_correlation_entry_against_fine_quadrature_oracle():
    # independent adaptive-quadrature value for the adjacent-antenna entry at
    # boresight with a pi/12 spread (frozen from scipy.integrate.quad at
    # epsrel 1e-14)
    oracle = -0.9999277074011187 + 0.0089635776238563j
    m = correlation_matrix(0.0, math.pi / 12, 4)
    assert abs(m[1, 0] - oracle) < 1e-10


def test_wider_spread_decorrelates():
    narrow = correlation_matrix(0.0, math.pi / 12, 4)
    wide = correlation_matrix(0.0, 2 * math.pi, 4)
    assert abs(wide[1, 0]) < abs(narrow[1, 0])


def test_correlation_root_squares_back():
    root = correlation_root(1.1, math.pi / 6, 16)
    m = correlation_matrix(1.1, math.pi / 6, 16)
    assert np.abs(root @ root.conj().T - m).max() < 1e-10


def test_correlated_columns_keep_norm():
    root = correlation_root(0.4, math.pi / 12, 256)
    gain = 1e-10
    ch = draw_channels(np.random.default_rng(6), 256, np.array([gain]),
                       np.zeros(1), np.zeros(0), np.zeros(0), np.zeros((0, 1)),
                       corr_roots=[root])
    # trace of the correlation is the antenna count, so the norm scaling holds
    norms = np.linalg.norm(ch.served[:, 0]) ** 2 / 256
    assert norms == pytest.approx(gain, rel=0.4)


def test_spread_must_be_positive():
    with pytest.raises(ValueError):
        correlation_matrix(0.0, 0.0, 4)
