import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tmscatter import ConfigError
from tmscatter.momentum import (
    GridFunction,
    augment_grid,
    build_grid,
    legendre_barycentric_matrix,
    project,
    varpi,
    varpi_i,
    varpi_r,
)


def test_varpi_values():
    assert varpi(0.0, 1.0) == 1.0
    assert varpi(1.0, 1.0) == 0.0
    assert np.isclose(varpi(np.sqrt(2.0) * 3.0, 3.0), 3.0j)
    assert varpi_r(2.0, 1.0) == 0.0
    assert np.isclose(varpi_i(2.0, 1.0), np.sqrt(3.0))


@given(st.floats(-10, 10), st.floats(0.1, 5))
def test_varpi_squares_to_dispersion(p, k):
    w = varpi(p, k)
    assert np.isclose(w * w, k * k - p * p, atol=1e-9 * (1 + p * p))
    assert w.real >= 0 and w.imag >= 0


def test_grid_layout_and_symmetry():
    g = build_grid(1.5, 12, 6.0, 5)
    assert g.n_nodes == 22 and g.n_osc == 12 and g.n_ev == 5 and len(g.ev_nodes) == 10
    assert np.all(np.abs(g.osc_nodes) < 1.5)
    assert np.all(np.abs(g.ev_nodes) > 1.5) and np.all(np.abs(g.ev_nodes) <= 6.0)
    assert np.allclose(np.sort(g.nodes), np.sort(-g.nodes))


@pytest.mark.parametrize("n", [4, 9, 16])
def test_theta_rule_exact_for_polynomials(n):
    g = build_grid(2.0, n)
    for deg in range(2 * n):
        exact = 0.0 if deg % 2 else 2 * (np.pi / 2) ** (deg + 1) / (deg + 1)
        assert np.isclose(np.sum(g.theta_weights * g.theta**deg), exact, rtol=1e-12, atol=1e-12)


def test_osc_moment_is_pi():
    g = build_grid(0.7, 8)
    assert abs(np.sum(g.osc_weights / g.varpi[: g.n_osc].real) - np.pi) < 1e-13


def test_evanescent_rule_integrates_singular_weight():
    # int_k^P dq / sqrt(q^2 - k^2) = arccosh(P/k), exact under the cosh substitution
    k, P = 1.3, 9.0
    g = build_grid(k, 4, P, 6)
    q = g.ev_nodes
    pos = q > 0
    val = np.sum(g.ev_weights[pos] / np.sqrt(q[pos] ** 2 - k * k))
    assert abs(val - np.arccosh(P / k)) < 1e-13


def test_barycentric_reproduces_polynomials():
    t, w = np.polynomial.legendre.leggauss(10)
    te = np.linspace(-0.99, 0.99, 17)
    mat = legendre_barycentric_matrix(t, w, te)
    f = lambda x: 3 * x**9 - x**4 + 0.5
    assert np.max(np.abs(mat @ f(t) - f(te))) < 1e-12
    assert np.allclose(legendre_barycentric_matrix(t, w, t[:3]), np.eye(10)[:3])


def test_interp_matrix_rejects_evanescent_targets():
    g = build_grid(1.0, 6)
    with pytest.raises(ValueError):
        g.interp_matrix([1.2])


@pytest.mark.parametrize("kw", [dict(k=0.0, n_osc=4), dict(k=1.0, n_osc=1), dict(k=1.0, n_osc=4, p_max=0.5), dict(k=1.0, n_osc=4, n_ev=-1)])
def test_build_grid_rejects_bad_parameters(kw):
    with pytest.raises(ConfigError):
        build_grid(**kw)


def test_grid_function_and_projection():
    g = build_grid(1.0, 4, 3.0, 2)
    f = GridFunction(g, np.arange(g.n_nodes) + 1.0)
    pf = project(f)
    assert pf.in_fk and np.all(pf.values[g.n_osc:] == 0) and np.array_equal(pf.osc_values, f.osc_values)
    with pytest.raises(ValueError):
        GridFunction(g, np.ones(3))
    with pytest.raises(ValueError):
        GridFunction(g, np.ones(g.n_nodes), in_fk=True)


def test_projection_is_idempotent():
    g = build_grid(1.0, 5, 3.0, 3)
    f = GridFunction(g, np.random.default_rng(1).normal(size=g.n_nodes))
    assert np.array_equal(project(project(f)).values, project(f).values)


def test_augmented_grid_layout():
    g = build_grid(1.0, 6, 3.0, 2)
    a = augment_grid(g, probes=[0.1, -0.2], deltas=[0.3])
    assert a.n_quad == 6 and a.n_probe == 2 and a.n_delta == 1 and a.n_osc == 9
    assert np.array_equal(a.weights[6:9], [0.0, 0.0, 1.0])
    assert np.array_equal(a.nodes[9:], g.nodes[6:])
    assert np.allclose(a.reduced_weights, g.reduced_weights)
    with pytest.raises(ValueError):
        augment_grid(g, probes=[1.5])


def test_grid_json_roundtrip():
    g = build_grid(1.0, 4, 3.0, 2)
    doc = json.loads(g.to_json())
    assert doc["type"] == "line" and len(doc["nodes"]) == g.n_nodes
    assert g.same_as(build_grid(1.0, 4, 3.0, 2)) and not g.same_as(build_grid(1.0, 5, 3.0, 2))
