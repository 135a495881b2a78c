"""Closed-form reference results for delta-type potentials."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SpectralSingularityError
from .momentum import GridFunction, MomentumGrid, build_grid
from .solve2d import WaveCoefficients

__all__ = [
    "delta2d_amplitude",
    "delta2d_coefficients",
    "DivergenceReport",
    "delta2d_auxiliary_divergence",
    "multi_delta_moments",
    "multi_delta_solve",
    "multi_delta_amplitude",
    "delta3d_amplitude",
    "delta3d_moment",
]


def _check_k(k):
    if not k > 0:
        raise ConfigError("k must be positive")


def delta2d_amplitude(z: complex, a: float, k: float, theta0: float, theta):
    """Exact amplitude of v = z delta(x) delta(y - a).

    f(theta) = -sqrt(2/pi) z / (4 + i z) exp(-i a k (sin theta - sin theta0)),
    identical for left and right incidence.
    """
    _check_k(k)
    den = 4.0 + 1j * z
    if abs(den) < 1e-14:
        raise SpectralSingularityError("4 + i z = 0: spectral singularity of the delta line", 0.0)
    theta = np.asarray(theta, dtype=float)
    return -np.sqrt(2 / np.pi) * z / den * np.exp(-1j * a * k * (np.sin(theta) - np.sin(theta0)))


def delta2d_coefficients(z: complex, a: float, k: float, theta0: float, p):
    """Smooth parts of B-^r and A+^r at momenta ``p`` (right incidence).

    Both equal -2 i z exp(-i a (p - p0)) / (4 + i z); returns the pair.
    """
    den = 4.0 + 1j * z
    if abs(den) < 1e-14:
        raise SpectralSingularityError("4 + i z = 0", 0.0)
    p = np.asarray(p, dtype=float)
    p0 = k * np.sin(theta0)
    val = -2j * z * np.exp(-1j * a * (p - p0)) / den
    return val, val.copy()


@dataclass(frozen=True)
class DivergenceReport:
    """Auxiliary-route denominator versus the evanescent cut-off.

    ``denominators[i]`` is 1 + (i z / 4 pi) sum_j w_j / varpi_j over the
    whole truncated grid at ``p_max_ratios[i] * k``.  ``slope`` is the fitted
    derivative with respect to log(p_max / k); the analytic coefficient is
    z / (2 pi) (the evanescent part of the integral is -2 i arccosh(P/k)).
    """

    p_max_ratios: np.ndarray
    denominators: np.ndarray
    slope: complex
    expected_slope: complex
    fundamental_moment: float
    fundamental_denominator: complex

    @property
    def slope_relative_error(self) -> float:
        if self.expected_slope == 0:
            return float(abs(self.slope))
        return float(abs(self.slope - self.expected_slope) / abs(self.expected_slope))


def delta2d_auxiliary_divergence(
    z: complex,
    a: float,
    k: float,
    ratios=(4, 8, 16, 32, 64),
    n_osc: int = 32,
    n_ev: int = 48,
) -> DivergenceReport:
    """Growth of the auxiliary-route denominator with p_max.

    The oscillating moment sum w/varpi = pi keeps the fundamental route
    finite, while the evanescent moment grows logarithmically in p_max.
    """
    _check_k(k)
    ratios = np.asarray(ratios, dtype=float)
    dens = []
    for r in ratios:
        g = build_grid(k, n_osc, r * k, n_ev)
        moment = np.sum(g.weights / g.varpi)
        dens.append(1.0 + 1j * z / (4 * np.pi) * moment)
    dens = np.array(dens)
    x = np.log(ratios)
    slope = np.polyfit(x, dens.real, 1)[0] + 1j * np.polyfit(x, dens.imag, 1)[0]
    g = build_grid(k, n_osc, 2 * k, 0)
    fm = float(np.sum(g.osc_weights / g.varpi[: g.n_osc].real))
    return DivergenceReport(
        p_max_ratios=ratios,
        denominators=dens,
        slope=complex(slope),
        expected_slope=complex(z) / (2 * np.pi),
        fundamental_moment=fm,
        fundamental_denominator=1.0 + 1j * z / (4 * np.pi) * fm,
    )


def multi_delta_moments(positions, grid: MomentumGrid) -> np.ndarray:
    """J_mn = (1/2 pi) int_{-k}^{k} exp(i (a_m - a_n) q) / varpi(q) dq on the theta rule."""
    a = np.asarray(positions, dtype=float)
    q = grid.osc_nodes
    ph = np.exp(1j * (a[:, None, None] - a[None, :, None]) * q[None, None, :])
    return ph @ grid.theta_weights / (2 * np.pi)


def _multi_delta_weights(zs, positions, grid, p0):
    zs = np.asarray(zs, dtype=complex)
    a = np.asarray(positions, dtype=float)
    jm = multi_delta_moments(a, grid)
    sysm = np.eye(len(zs)) + 0.5j * jm * zs[None, :]
    e = np.exp(1j * a * p0)
    sv = np.linalg.svd(sysm, compute_uv=False)
    if sv[-1] <= 1e-13 * sv[0]:
        raise SpectralSingularityError("finite-rank delta system is singular", float(sv[-1]))
    return np.linalg.solve(sysm, e), sysm


def multi_delta_solve(zs, positions, k: float, theta0: float, side: str | None = None, grid: MomentumGrid | None = None) -> WaveCoefficients:
    """Solve v = delta(x) sum_n z_n delta(y - a_n) through its rank-N reduction.

    The outgoing smooth parts are -(i/2) sum_n z_n d_n exp(-i a_n p), where
    (I + (i/2) J Z) d = exp(i a p0).  Both sides give the same profile.
    """
    _check_k(k)
    c0 = np.cos(theta0)
    inferred = "left" if c0 > 0 else "right"
    side = side or inferred
    if side != inferred:
        raise ConfigError("side does not match the incidence angle")
    grid = grid or build_grid(k, 64, 4 * k, 0)
    p0 = k * np.sin(theta0)
    d, _ = _multi_delta_weights(zs, positions, grid, p0)
    zs = np.asarray(zs, dtype=complex)
    a = np.asarray(positions, dtype=float)
    prof = -0.5j * (np.exp(-1j * grid.osc_nodes[:, None] * a[None, :]) @ (zs * d))
    return WaveCoefficients(
        grid=grid, k=k, p0=p0, side=side,
        b_minus=GridFunction.from_osc(grid, prof), a_plus=GridFunction.from_osc(grid, prof.copy()),
        theta0=float(theta0),
    )


def multi_delta_amplitude(zs, positions, k: float, theta0: float, theta, grid: MomentumGrid | None = None):
    """Amplitude of the multi-delta line evaluated directly from the plane-wave sum."""
    grid = grid or build_grid(k, 64, 4 * k, 0)
    p0 = k * np.sin(theta0)
    d, _ = _multi_delta_weights(zs, positions, grid, p0)
    zs = np.asarray(zs, dtype=complex)
    a = np.asarray(positions, dtype=float)
    p = k * np.sin(np.asarray(theta, dtype=float))
    prof = -0.5j * (np.exp(-1j * np.asarray(p)[..., None] * a) @ (zs * d))
    return -1j / np.sqrt(2 * np.pi) * prof


def delta3d_amplitude(z: complex, k: float) -> complex:
    """f = -z / (4 pi + i k z) for v = z delta^3(r)."""
    _check_k(k)
    den = 4 * np.pi + 1j * k * z
    if abs(den) < 1e-14:
        raise SpectralSingularityError("4 pi + i k z = 0", 0.0)
    return -z / den


def delta3d_moment(z: complex, k: float) -> complex:
    """h = 4 pi / (4 pi + i k z)."""
    den = 4 * np.pi + 1j * k * z
    if abs(den) < 1e-14:
        raise SpectralSingularityError("4 pi + i k z = 0", 0.0)
    return 4 * np.pi / den
