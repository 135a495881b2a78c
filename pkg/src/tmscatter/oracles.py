"""Independent reference solvers.

Nothing here touches the transfer-matrix code path.  The 1D transfer
matrix is obtained by integrating the Schrodinger equation in position
space, and the 2D Born series by iterating the Lippmann-Schwinger equation
on a periodic spatial grid with a truncated Green's function.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import ConfigError, ConvergenceError

log = logging.getLogger(__name__)

__all__ = [
    "oned_transfer_matrix",
    "rect_barrier_tm",
    "hankel0",
    "hankel0_quadrature",
    "truncated_green_ft",
    "BornSeriesResult",
    "born_series_greens_2d",
]


# ---------------------------------------------------------------------------
# 1D transfer matrix


def oned_transfer_matrix(v1: Callable, support: tuple[float, float], k: float, breakpoints=(), rtol: float = 1e-12) -> np.ndarray:
    """Transfer matrix of -psi'' + v1 psi = k^2 psi by direct integration.

    M maps the coefficients (A-, B-) of A e^{ikx} + B e^{-ikx} on the left of
    ``support`` to (A+, B+) on the right.  ``breakpoints`` are interior points
    where v1 jumps; the integration restarts there.
    """
    if not k > 0:
        raise ConfigError("k must be positive")
    a, b = map(float, support)
    if not b >= a:
        raise ConfigError("support must satisfy a <= b")
    pts = [a] + sorted(float(p) for p in breakpoints if a < p < b) + [b]

    def rhs(x, y):
        return np.array([y[1], (v1(x) - k * k) * y[0]])

    cols = []
    for A, B in ((1.0, 0.0), (0.0, 1.0)):
        y = np.array([A * np.exp(1j * k * a) + B * np.exp(-1j * k * a),
                      1j * k * (A * np.exp(1j * k * a) - B * np.exp(-1j * k * a))], dtype=complex)
        for lo, hi in zip(pts[:-1], pts[1:]):
            if hi > lo:
                sol = integrate.solve_ivp(rhs, (lo, hi), y, method="DOP853", rtol=rtol, atol=rtol * 1e-2)
                if not sol.success:  # pragma: no cover - integrator failure
                    raise ConvergenceError(f"1D integration failed: {sol.message}")
                y = sol.y[:, -1]
        psi, dpsi = y
        cols.append([(1j * k * psi + dpsi) * np.exp(-1j * k * b) / (2j * k),
                     (1j * k * psi - dpsi) * np.exp(1j * k * b) / (2j * k)])
    return np.array(cols).T


def rect_barrier_tm(z: complex, lo: float, hi: float, k: float) -> np.ndarray:
    """Closed-form transfer matrix of v1 = z on (lo, hi)."""
    if not k > 0:
        raise ConfigError("k must be positive")
    L = float(hi) - float(lo)
    kap = np.sqrt(complex(k * k - z))
    c = np.cos(kap * L)
    s_over = L * np.sinc(kap * L / np.pi)  # sin(kap L) / kap, finite at kap = 0
    s_kap = kap * kap * s_over  # kap sin(kap L)
    e = np.exp(1j * k * L)
    m = np.array([
        [(c + 1j * (k * k * s_over + s_kap) / (2 * k)) / e, 1j * (s_kap - k * k * s_over) / (2 * k) / e],
        [-1j * (s_kap - k * k * s_over) / (2 * k) * e, (c - 1j * (k * k * s_over + s_kap) / (2 * k)) * e],
    ])
    d = np.array([np.exp(1j * k * lo), np.exp(-1j * k * lo)])
    return m * d[None, :] / d[:, None]


# ---------------------------------------------------------------------------
# 2D Green's function


def hankel0(x):
    """H_0^(1)(x) for x > 0."""
    return special.hankel1(0, x)


def hankel0_quadrature(x: float) -> complex:
    """H_0^(1)(x) from integral representations, for validating :func:`hankel0`.

    J0(x) = (1/pi) int_0^pi cos(x sin t) dt and
    Y0(x) = (4/pi^2) int_0^{pi/2} cos(x cos t) (gamma + log(2 x sin^2 t)) dt.
    """
    x = float(x)
    if not x > 0:
        raise ValueError("x must be positive")
    lim = 200 + int(4 * x)
    j0 = integrate.quad(lambda t: np.cos(x * np.sin(t)), 0.0, np.pi, limit=lim, epsabs=1e-14, epsrel=1e-13)[0] / np.pi
    # log(sin^2 t) = 2 log t + log((sin t / t)^2): integrate the log singularity with a weight
    smooth = lambda t: np.cos(x * np.cos(t)) * (np.euler_gamma + np.log(2 * x) + 2 * np.log(np.sinc(t / np.pi)))
    part1 = integrate.quad(smooth, 0.0, 0.5 * np.pi, limit=lim, epsabs=1e-15, epsrel=1e-13)[0]
    part2 = integrate.quad(lambda t: 2 * np.cos(x * np.cos(t)), 0.0, 0.5 * np.pi, weight="alg-loga", wvar=(0.0, 0.0),
                           limit=lim, epsabs=1e-15, epsrel=1e-13)[0]
    y0 = (part1 + part2) * 4 / np.pi**2
    return complex(j0, y0)


def truncated_green_ft(s, k: float, R: float):
    """Fourier transform of G(r) = -(i/4) H_0^(1)(k r) restricted to r <= R.

    Returns int_{r<=R} G(r) e^{-i xi.r} d^2r as a function of s = |xi|.
    The closed form has a removable singularity at s = k, which is handled
    by averaging the two neighbours.
    """
    s = np.asarray(s, dtype=float)
    h0, h1 = special.hankel1(0, k * R), special.hankel1(1, k * R)

    def raw(q):
        num = R * (q * special.j1(q * R) * h0 - k * special.j0(q * R) * h1) - 2j / np.pi
        return 2 * np.pi * (-0.25j) * num / (q * q - k * k)

    near = np.abs(s - k) < 1e-6 * k
    safe = np.where(near, k + 1.0, s)
    out = raw(safe)
    if np.any(near):
        d = 1e-4 * k
        out = np.where(near, 0.5 * (raw(s + d) + raw(s - d)), out)
    return out


# ---------------------------------------------------------------------------
# Born series


@dataclass(frozen=True)
class BornSeriesResult:
    """Amplitudes of the partial sums of the Born series.

    ``amplitudes[m - 1]`` is the order-m amplitude at ``theta``;
    ``ratios[n]`` is |psi_{n+2} - psi_{n+1}| / |psi_{n+1} - psi_n|.
    """

    theta: np.ndarray
    amplitudes: np.ndarray
    ratios: np.ndarray
    spacing: float
    period: float
    meta: dict = field(default_factory=dict)

    @property
    def f(self) -> np.ndarray:
        return self.amplitudes[-1]


def born_series_greens_2d(
    spec,
    k: float,
    theta0: float,
    order: int = 8,
    thetas=None,
    radius: float | None = None,
    n: int | None = None,
    max_ratio: float = 0.9,
) -> BornSeriesResult:
    """Born series for a 2D potential on a periodic spatial grid.

    The potential is sampled on [-T/2, T/2)^2 with T = 4 * radius, where
    ``radius`` bounds the support (centered at the origin after shifting
    by the support midpoint in x).  Convolution with the Green's function
    truncated at 2 * radius is then exact for the periodic extension, so the
    only discretization error is the trigonometric interpolation of v psi.

    f_m(theta) = -(1 / (2 sqrt(2 pi))) int e^{-i k r.u(theta)} v psi_{m-1},
    where psi_0 is the incident wave; order 1 is the first Born amplitude.

    Raises
    ------
    ConvergenceError
        If the iterate differences stop decaying (ratio above ``max_ratio``
        after the first two iterations).
    """
    if spec.dimension != 2:
        raise ConfigError("born_series_greens_2d needs a 2D potential")
    if order < 1:
        raise ConfigError("order must be at least 1")
    if not k > 0:
        raise ConfigError("k must be positive")
    a, b = spec.support
    xc = 0.5 * (a + b)
    if radius is None:
        # gaussian specs know their transverse width; otherwise assume a round support
        sy = getattr(spec, "params", {}).get("sigma_y")
        radius = max(0.5 * (b - a), 7.0 * sy if sy else 0.0)
    radius = float(radius)
    period = 4.0 * radius
    if n is None:
        n = int(2 ** np.ceil(np.log2(max(64, period * max(k, 1.0) * 4))))
    h = period / n
    u = -0.5 * period + h * np.arange(n)
    X, Y = np.meshgrid(u, u, indexing="ij")
    v = np.asarray(spec.real_space(X + xc, Y), dtype=complex)
    v[np.hypot(X, Y) > radius] = 0.0

    xi = 2 * np.pi * np.fft.fftfreq(n, d=h)
    S = np.hypot(xi[:, None], xi[None, :])
    ghat = truncated_green_ft(S, k, 2 * radius)

    def conv(phi):
        return np.fft.ifft2(ghat * np.fft.fft2(phi))

    k0 = k * np.array([np.cos(theta0), np.sin(theta0)])
    inc = np.exp(1j * (k0[0] * (X + xc) + k0[1] * Y))
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False) if thetas is None else np.atleast_1d(np.asarray(thetas, dtype=float))
    phase = np.exp(-1j * k * (np.cos(th)[:, None, None] * (X + xc)[None] + np.sin(th)[:, None, None] * Y[None]))
    pref = -h * h / (2 * np.sqrt(2 * np.pi))

    psi = inc
    amps, ratios, diffs = [], [], []
    for m in range(1, order + 1):
        amps.append(pref * np.tensordot(phase, v * psi, axes=([1, 2], [0, 1])))
        if m == order:
            break
        nxt = inc + conv(v * psi)
        diffs.append(float(np.max(np.abs(nxt - psi))))
        psi = nxt
        if len(diffs) >= 2:
            r = diffs[-1] / diffs[-2] if diffs[-2] > 0 else 0.0
            ratios.append(r)
            log.info("born series order %d ratio %.3e", m + 1, r)
            if len(diffs) >= 3 and r > max_ratio:
                raise ConvergenceError(f"Born series is not converging (ratio {r:.3g})", r)
    return BornSeriesResult(
        theta=th, amplitudes=np.array(amps), ratios=np.array(ratios), spacing=h, period=period,
        meta={"k": k, "theta0": theta0, "order": order, "n": n, "radius": radius},
    )
