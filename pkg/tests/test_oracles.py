"""Independent oracles checked against values frozen from 30-digit mpmath runs."""

import numpy as np
import pytest
from scipy import integrate, special

from tmscatter import ConfigError, ConvergenceError
from tmscatter.invisibility import born_amplitude_2d
from tmscatter.oracles import (
    born_series_greens_2d,
    hankel0,
    hankel0_quadrature,
    oned_transfer_matrix,
    rect_barrier_tm,
    truncated_green_ft,
)
from tmscatter.potentials import ZeroPotential, gaussian_2d

HANKEL = {
    0.5: 0.9384698072408129042 - 0.4445187335067065571j,
    2.0: 0.2238907791412356681 + 0.5103756726497451196j,
    10.0: -0.2459357644513483352 + 0.0556711672835993914j,
}

RECT_A = np.array([
    [0.99665033286906089524 - 0.15621894984837904300j, -0.11200179943390903675 - 0.07191552838787089308j],
    [-0.11200179943390903675 + 0.07191552838787089308j, 0.99665033286906089524 + 0.15621894984837904300j],
])
RECT_B = np.array([
    [1.18497344604021143082 - 0.36220168590187336450j, -0.08931515735110108534 - 0.35796337261249874808j],
    [-0.35074876527131912796 + 0.11441274896361699541j, 0.80037114774967442373 + 0.34197576215385649210j],
])


@pytest.mark.parametrize("x", sorted(HANKEL))
def test_hankel_frozen(x):
    assert abs(hankel0(x) - HANKEL[x]) < 1e-14
    assert abs(hankel0_quadrature(x) - HANKEL[x]) < 1e-10


@pytest.mark.parametrize("x", [0.3, 7.9, 8.1, 25.0])
def test_hankel_quadrature_agrees_with_library(x):
    assert abs(hankel0(x) - hankel0_quadrature(x)) < 1e-10


def test_rect_barrier_frozen():
    assert np.max(np.abs(rect_barrier_tm(0.3, 0.0, 1.0, 1.0) - RECT_A)) < 1e-14
    assert np.max(np.abs(rect_barrier_tm(2 + 1j, 0.0, 0.5, 1.5) - RECT_B)) < 1e-13


@pytest.mark.parametrize("z,lo,hi,k", [(0.3, 0.0, 1.0, 1.0), (0.3, 0.4, 1.7, 2.0), (1.0, 0.0, 1.0, 1.0), (2 + 1j, 0.0, 0.5, 1.5)])
def test_rect_barrier_matches_ode(z, lo, hi, k):
    m = rect_barrier_tm(z, lo, hi, k)
    n = oned_transfer_matrix(lambda x: z, (lo, hi), k)
    assert np.max(np.abs(m - n)) < 1e-9
    assert abs(np.linalg.det(m) - 1) < 1e-13


def test_rect_barrier_k_squared_equals_z():
    # kappa = 0 is a removable point of the closed form
    m = rect_barrier_tm(1.0, 0.0, 1.0, 1.0)
    m2 = rect_barrier_tm(1.0 + 1e-9, 0.0, 1.0, 1.0)
    assert np.all(np.isfinite(m)) and np.max(np.abs(m - m2)) < 1e-8


def test_ode_composition_splits_at_midpoint():
    v = lambda x: 0.4 * np.exp(-((x - 0.5) ** 2))
    whole = oned_transfer_matrix(v, (0.0, 1.0), 1.3)
    half = oned_transfer_matrix(v, (0.5, 1.0), 1.3) @ oned_transfer_matrix(v, (0.0, 0.5), 1.3)
    assert np.max(np.abs(whole - half)) < 1e-9
    assert abs(np.linalg.det(whole) - 1) < 1e-9


def test_ode_with_breakpoints():
    v = lambda x: 0.3 if x < 0.5 else 0.7
    m = oned_transfer_matrix(v, (0.0, 1.0), 1.0, breakpoints=[0.5])
    ref = rect_barrier_tm(0.7, 0.5, 1.0, 1.0) @ rect_barrier_tm(0.3, 0.0, 0.5, 1.0)
    assert np.max(np.abs(m - ref)) < 1e-9


def test_truncated_green_ft_frozen_and_quadrature():
    frozen = 1.5520922066222653893 - 2.1806407674527771700j
    assert abs(truncated_green_ft(0.7, 1.0, 5.0) - frozen) < 1e-12
    f = lambda r: -0.25j * special.hankel1(0, 1.3 * r) * special.j0(2.1 * r) * r
    re = integrate.quad(lambda r: f(r).real, 0, 4.0, limit=400)[0]
    im = integrate.quad(lambda r: f(r).imag, 0, 4.0, limit=400)[0]
    assert abs(truncated_green_ft(2.1, 1.3, 4.0) - 2 * np.pi * (re + 1j * im)) < 1e-9


def test_truncated_green_ft_continuous_at_resonance():
    vals = truncated_green_ft(np.array([1 - 1e-6, 1.0, 1 + 1e-6]), 1.0, 5.0)
    assert np.all(np.isfinite(vals)) and np.ptp(np.abs(vals)) < 1e-4


def test_born_series_first_order_is_born():
    spec = gaussian_2d(0.1, 1.0, 1.0)
    th = np.array([0.1, 1.0, 2.0, 3.0, 4.5])
    r = born_series_greens_2d(spec, 1.0, 0.3, order=3, thetas=th)
    assert np.max(np.abs(r.amplitudes[0] - born_amplitude_2d(spec, 1.0, 0.3, th))) < 1e-10
    # frozen first Born value at theta = 1
    assert abs(born_amplitude_2d(spec, 1.0, 0.3, 1.0) - (-0.09906772685822852794)) < 1e-14


def test_born_series_zero_potential():
    r = born_series_greens_2d(ZeroPotential(), 1.0, 0.3, order=2, thetas=[0.5], radius=2.0)
    assert np.all(r.amplitudes == 0)


def test_born_series_diverges_for_strong_potential():
    with pytest.raises(ConvergenceError):
        born_series_greens_2d(gaussian_2d(20.0, 1.0, 1.0), 1.0, 0.3, order=8, thetas=[0.5])


def test_oracle_argument_checks():
    with pytest.raises(ConfigError):
        oned_transfer_matrix(lambda x: 0.0, (0.0, 1.0), 0.0)
    with pytest.raises(ConfigError):
        born_series_greens_2d(gaussian_2d(0.1, 1.0, 1.0), 1.0, 0.3, order=0)
