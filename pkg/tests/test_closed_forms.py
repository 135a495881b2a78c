import numpy as np
import pytest

from tmscatter import ConfigError, SpectralSingularityError
from tmscatter.closed_forms import (
    delta2d_amplitude,
    delta2d_auxiliary_divergence,
    delta2d_coefficients,
    delta3d_amplitude,
    delta3d_moment,
    multi_delta_amplitude,
    multi_delta_moments,
    multi_delta_solve,
)
from tmscatter.momentum import build_grid
from tmscatter.potentials import delta_line, multi_delta
from tmscatter.solve2d import amplitude, scatter_2d


def test_delta2d_frozen():
    val = delta2d_amplitude(1 + 0.5j, 0.7, 1.0, 0.3, 2.0)
    assert abs(val - (-0.23779168258897606282 + 0.05927549900915990737j)) < 1e-15


def test_delta3d_frozen():
    assert abs(delta3d_amplitude(2 + 1j, 1.3) - (-0.18799112242027229088 - 0.04537602207544370099j)) < 1e-15
    z, k = 0.4 - 0.2j, 2.0
    # f = -z h / (4 pi)
    assert np.isclose(delta3d_amplitude(z, k), -z * delta3d_moment(z, k) / (4 * np.pi))


def test_singularities_raise():
    with pytest.raises(SpectralSingularityError):
        delta2d_amplitude(4j, 0.0, 1.0, 0.0, 1.0)
    with pytest.raises(SpectralSingularityError):
        delta3d_amplitude(4j * np.pi, 1.0)
    with pytest.raises(ConfigError):
        delta2d_amplitude(1.0, 0.0, -1.0, 0.0, 1.0)


def test_coefficients_consistent_with_amplitude():
    z, a, k, t0 = 0.7 - 0.3j, 0.4, 1.2, 2.7
    th = np.array([2.0, 3.0, 4.0])
    b, _ = delta2d_coefficients(z, a, k, t0, k * np.sin(th))
    assert np.allclose(-1j / np.sqrt(2 * np.pi) * b, delta2d_amplitude(z, a, k, t0, th))


def test_delta_line_engine_both_sides():
    th = np.array([0.2, 1.0, 2.0, 3.0, 4.5, -0.4])
    for z, a, k, t0 in [(1.0, 0.3, 1.0, 0.2), (0.5 - 2j, -0.7, 2.0, 2.8)]:
        f = scatter_2d(delta_line(z, a), k, t0, th).f
        assert np.max(np.abs(f - delta2d_amplitude(z, a, k, t0, th))) < 1e-12


def test_divergence_report():
    rep = delta2d_auxiliary_divergence(1 + 0.5j, 0.7, 1.0)
    assert rep.slope_relative_error < 0.05
    assert abs(rep.fundamental_moment - np.pi) < 1e-12
    assert np.isclose(rep.fundamental_denominator, 1 + 1j * (1 + 0.5j) / 4)
    # the evanescent part of the moment is -2 i arccosh(P / k); frozen at P / k = 16
    g = build_grid(1.0, 32, 16.0, 48)
    ev = np.sum(g.weights[g.n_osc:] / g.varpi[g.n_osc:])
    assert abs(ev - (-6.92951581335172565585j)) < 1e-12


def test_multi_delta_single_reduces_to_delta():
    th = np.array([0.3, 2.5])
    f = multi_delta_amplitude([1 + 0.5j], [0.7], 1.0, 0.3, th)
    assert np.allclose(f, delta2d_amplitude(1 + 0.5j, 0.7, 1.0, 0.3, th), atol=1e-14)


def test_multi_delta_moments_frozen():
    g = build_grid(1.5, 64)
    jm = multi_delta_moments([0.0, 1.3], g)
    assert abs(jm[0, 0] - 0.5) < 1e-14
    assert abs(jm[0, 1] - 0.12639962359006023769) < 1e-13
    assert np.allclose(jm, jm.T)


def test_multi_delta_engine_and_solver_agree():
    zs, pos, k, t0 = [1.0, 0.5j], [0.0, 1.3], 1.5, 0.4
    th = np.array([0.2, 1.0, 2.0, 3.0, 4.5, -0.4])
    f = scatter_2d(multi_delta(zs, pos), k, t0, th).f
    assert np.max(np.abs(f - multi_delta_amplitude(zs, pos, k, t0, th))) < 1e-10
    grid = build_grid(k, 64)
    c = multi_delta_solve(zs, pos, k, t0, grid=grid)
    quad_th = np.arcsin(grid.osc_nodes[:5] / k)
    assert np.allclose(amplitude(c, quad_th).f, multi_delta_amplitude(zs, pos, k, t0, quad_th, grid), atol=1e-12)
    with pytest.raises(ConfigError):
        multi_delta_solve(zs, pos, k, t0, side="right")
