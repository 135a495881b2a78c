import numpy as np
import pytest

from tmscatter import ConfigError, SpectralSingularityError
from tmscatter.closed_forms import delta2d_amplitude
from tmscatter.invisibility import born_amplitude_2d
from tmscatter.momentum import build_grid
from tmscatter.potentials import delta_line, gaussian_2d, rect_barrier
from tmscatter.solve2d import (
    GridPolicy,
    amplitude,
    augment_for_incidence,
    cross_section,
    kernel_column,
    sample_outgoing,
    scatter_2d,
    sigma_min_m22,
    solve_incident,
    spectral_singularity_scan,
    theta_mesh,
)
from tmscatter.transfer import fundamental_tm


def test_theta_mesh_avoids_grazing():
    th = theta_mesh(64)
    assert len(th) == 64 and np.all(np.abs(np.cos(th)) > 1e-4)
    assert np.all((th >= 0) & (th < 2 * np.pi))


def test_kernel_column_exact_on_delta_channel():
    g = augment_for_incidence(build_grid(1.0, 16, 4.0, 8), 0.3, [0.1, -0.5])
    m = fundamental_tm(gaussian_2d(0.3, 0.5, 1.0), g)
    j = g.delta_slice.start
    assert np.array_equal(kernel_column(m.b21, g, 0.3), m.b21[:, j])


def test_kernel_column_interpolation_close_to_delta_channel():
    base = build_grid(1.0, 32, 4.0, 16)
    spec = gaussian_2d(0.3, 0.5, 1.0)
    g = augment_for_incidence(base, 0.3)
    exact = kernel_column(fundamental_tm(spec, g).b21, g, 0.3)[: g.n_quad]
    interp = kernel_column(fundamental_tm(spec, base).b21, base, 0.3)
    assert np.max(np.abs(exact - interp)) <= 1e-6 * np.max(np.abs(exact))


def test_sample_outgoing_prefers_probes():
    g = augment_for_incidence(build_grid(1.0, 8), 0.0, [0.25])
    vals = np.arange(g.n_nodes, dtype=complex)
    assert sample_outgoing(g, vals, [0.25])[0] == vals[g.probe_slice.start]


def test_side_inference_and_checks():
    g = build_grid(1.0, 16, 4.0, 8)
    m = fundamental_tm(delta_line(1.0), g)
    assert solve_incident(m, 0.3).side == "left"
    assert solve_incident(m, 2.5).side == "right"
    with pytest.raises(ConfigError):
        solve_incident(m, 0.3, side="right")
    with pytest.raises(ConfigError):
        solve_incident(m, np.pi / 2)


def test_left_and_right_incidence_on_delta_line():
    th = theta_mesh(16)
    for t0 in (0.3, np.pi - 0.3, np.pi + 0.8):
        f = scatter_2d(delta_line(0.6 - 0.2j, -0.4), 1.5, t0, th).f
        assert np.max(np.abs(f - delta2d_amplitude(0.6 - 0.2j, -0.4, 1.5, t0, th))) < 1e-12


def test_weak_potential_approaches_born():
    th = np.array([0.2, 1.5, 3.0])
    spec = gaussian_2d(1e-4, 0.5, 1.0)
    f = scatter_2d(spec, 1.0, 0.3, th).f
    fb = born_amplitude_2d(spec, 1.0, 0.3, th)
    assert np.max(np.abs(f - fb)) <= 1e-3 * np.max(np.abs(fb))


def test_grid_refinement_converges():
    th = np.array([0.4, 2.0])
    spec = gaussian_2d(0.3, 0.5, 1.0)
    f1 = scatter_2d(spec, 1.0, 0.3, th, GridPolicy(24, 4.0, 16)).f
    f2 = scatter_2d(spec, 1.0, 0.3, th, GridPolicy(40, 4.0, 24)).f
    assert np.max(np.abs(f1 - f2)) <= 1e-5 * np.max(np.abs(f2))


def test_cross_section_pairs():
    c = solve_incident(fundamental_tm(delta_line(1.0), build_grid(1.0, 16)), 0.3)
    rows = cross_section(amplitude(c, [0.5, 2.0]))
    assert len(rows) == 2 and all(v >= 0 for _, v in rows)


def test_spectral_singularity_detected():
    # 4 + i z = 0 makes I + K22 singular for the delta line
    g = build_grid(1.0, 16)
    m = fundamental_tm(delta_line(4j), g)
    smin, smax = sigma_min_m22(m)
    assert smin <= 1e-12 * smax
    with pytest.raises(SpectralSingularityError):
        solve_incident(m, 0.3)


def test_scan_reports_positive_singular_values():
    pts = spectral_singularity_scan(delta_line(1.0), [0.5, 1.0], GridPolicy(16, 4.0, 8))
    assert [p.k for p in pts] == [0.5, 1.0]
    assert all(0 < p.normalized <= 1 for p in pts)


def test_y_independent_scatter_rejected():
    with pytest.raises(ConfigError):
        scatter_2d(rect_barrier(0.3, 0.0, 1.0), 1.0, 0.3)
