import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tmscatter import ConfigError
from tmscatter.momentum import augment_grid, build_grid
from tmscatter.potentials import (
    GaussianProfile,
    RectProfile,
    SumPotential,
    TabulatedPotential,
    ZeroPotential,
    band_limited_2d,
    band_limited_3d,
    bump,
    delta_line,
    fourier_y,
    gaussian_2d,
    interaction_operator,
    multi_delta,
    rect_barrier,
    truncate_x,
)


def test_delta_line_transverse_transform():
    spec = delta_line(1.5 - 0.5j, a=0.4)
    K = np.linspace(-3, 3, 7)
    assert np.allclose(fourier_y(spec, 0.0, K), (1.5 - 0.5j) * np.exp(-0.4j * K))
    assert np.all(fourier_y(spec, 0.1, K) == 0)


def test_gaussian_transform_at_zero_matches_numeric_fft():
    spec = gaussian_2d(0.7, 1.3, 0.8)
    x = 0.5
    expect = 0.7 * np.sqrt(2 * np.pi) * 0.8 * np.exp(-0.5 * (x / 1.3) ** 2)
    assert np.isclose(fourier_y(spec, x, 0.0), expect, rtol=1e-14)
    # trapezoid rule on the real-space profile is spectrally accurate for a gaussian
    y = np.linspace(-12, 12, 2401)
    for K in (0.0, 0.9, 2.1):
        num = np.trapezoid(spec.real_space(x, y) * np.exp(-1j * K * y), y)
        assert abs(num - fourier_y(spec, x, K)) < 1e-12


@pytest.mark.parametrize("spec", [gaussian_2d(1.0, 1.0, 1.0), band_limited_2d(1.0, 1.0, 2.0), rect_barrier(0.3, 0, 1)])
def test_outside_support_is_zero(spec):
    K = np.array([0.0, 0.5, 1.5])
    assert np.all(fourier_y(spec, spec.a_plus + 1.0, K) == 0)


def test_zero_and_y_independent_operators():
    g = build_grid(1.0, 6, 3.0, 3)
    assert np.all(interaction_operator(ZeroPotential(), 0.5, g) == 0)
    v = interaction_operator(rect_barrier(0.3, 0.0, 1.0), 0.5, g)
    assert np.array_equal(v, 0.3 * np.eye(g.n_nodes))


def test_band_limited_transform_has_one_sided_support():
    spec = band_limited_2d(2.0, 1.0, 3.0)
    K = np.linspace(-5, 1.0, 301)
    assert np.all(fourier_y(spec, 0.5, K) == 0)
    assert abs(fourier_y(spec, 0.5, 2.0)) == pytest.approx(2.0)
    assert bump(2.0, 1.0, 3.0) == pytest.approx(1.0)


def test_band_limited_real_space_profile_inverts_transform():
    spec = band_limited_2d(1.0, 1.0, 2.5)
    y = np.linspace(-200, 200, 80001)
    gy = spec.real_space(0.5, y)
    for K in (1.4, 1.75, 2.2):
        num = np.trapezoid(gy * np.exp(-1j * K * y), y)
        assert abs(num - fourier_y(spec, 0.5, K)) < 1e-6


def test_support_shift_on_grid():
    g = build_grid(1.0, 16, 5.0, 12)
    spec = band_limited_2d(1.0, 2.0, 3.0)
    v = interaction_operator(spec, 0.5, g)
    rng = np.random.default_rng(3)
    gamma = -0.6
    f = rng.normal(size=g.n_nodes) * (g.nodes > gamma)
    out = v @ f
    assert np.max(np.abs(out[g.nodes <= 2.0 + gamma])) <= 1e-10 * np.max(np.abs(out))


def test_hermiticity_correspondence_for_real_potential():
    g = build_grid(1.0, 8, 3.0, 4)
    v = interaction_operator(gaussian_2d(0.4, 1.0, 0.7), 0.2, g)
    neg = np.array([np.argmin(np.abs(g.nodes + p)) for p in g.nodes])
    assert np.allclose(v[np.ix_(neg, neg)], np.conj(v), atol=1e-15)


def test_linearity_of_interaction_operator():
    g = build_grid(1.0, 8, 3.0, 4)
    a = gaussian_2d(0.4, 1.0, 0.7)
    b = band_limited_2d(0.3j, 0.5, 2.0, GaussianProfile(1.0))
    s = SumPotential(2, -7.0, 7.0, "sum", 1.0, parts=(a, b))
    assert np.allclose(interaction_operator(s, 0.3, g), interaction_operator(a, 0.3, g) + interaction_operator(b, 0.3, g))


def test_delta_rows_are_zero_on_augmented_grid():
    g = augment_grid(build_grid(1.0, 6, 3.0, 2), probes=[0.2], deltas=[0.1])
    v = interaction_operator(gaussian_2d(0.4, 1.0, 0.7), 0.0, g)
    assert np.all(v[g.delta_slice] == 0)
    assert np.all(v[:, g.probe_slice] == 0)
    assert np.any(v[g.probe_slice] != 0) and np.any(v[:, g.delta_slice] != 0)


def test_truncation():
    spec = gaussian_2d(1.0, 1.0, 1.0)
    K = np.array([0.0, 0.7])
    assert truncate_x(spec, -100, 100) is spec
    left, right = truncate_x(spec, -100, 0.3), truncate_x(spec, 0.3, 100)
    for x in (-1.0, 0.3, 0.31, 2.0):
        assert np.allclose(fourier_y(left, x, K) + fourier_y(right, x, K), fourier_y(spec, x, K))
    assert np.all(fourier_y(truncate_x(spec, 0, np.inf), -1.0, K) == 0)
    with pytest.raises(ConfigError):
        truncate_x(spec, 1.0, 0.0)


def test_tabulated_potential_bilinear():
    xs = np.linspace(0, 1, 5)
    ks = np.linspace(-4, 4, 9)
    vals = np.outer(1 + xs, 2 - 0.1j * ks)
    spec = TabulatedPotential(dimension=2, a_minus=0.0, a_plus=1.0, kind="tabulated", scale=1.0,
                              x_table=xs, k_table=ks, values=vals)
    assert np.isclose(fourier_y(spec, 0.375, 0.5), (1.375) * (2 - 0.05j))
    with pytest.raises(ConfigError):
        fourier_y(spec, 0.5, 5.0)
    with pytest.raises(ConfigError):
        TabulatedPotential(dimension=2, a_minus=0.0, a_plus=1.0, kind="t", scale=1.0, x_table=xs, k_table=ks, values=vals[:, :3])


def test_band_limited_3d_support_along_first_axis():
    spec = band_limited_3d(1.0, 1.0, 2.0)
    K = np.array([[0.9, 0.0], [-3.0, 1.0], [1.5, 0.2]])
    val = fourier_y(spec, 0.5, K)
    assert val[0] == 0 and val[1] == 0 and abs(val[2]) > 0


def test_multi_delta_validation():
    with pytest.raises(ConfigError):
        multi_delta([1.0], [0.0, 1.0])
    with pytest.raises(ConfigError):
        gaussian_2d(1.0, 1.0, 1.0).interaction_matrix(0.0, build_grid(1.0, 4).__class__(
            k=1.0, nodes=np.zeros((2, 2)), weights=np.ones(2), n_osc=2, p_max=2.0, tdim=2))


@settings(max_examples=25, deadline=None)
@given(st.floats(-5, 5), st.floats(0.2, 3.0))
def test_rect_profile_transform(kx, width):
    prof = RectProfile(0.3, 0.3 + width, 2.0)
    x = np.linspace(0.3, 0.3 + width, 4001)
    num = np.trapezoid(2.0 * np.exp(-1j * kx * x), x)
    assert abs(prof.ft(kx) - num) < 1e-5 * (1 + width)
