"""Three-dimensional scattering: disk grids, solves and amplitudes.

The propagation axis is z; transverse momenta p = (px, py) live on a disk
grid.  The same Hamiltonian and transfer code as in 2D is used, with the
delta normalization 4 pi^2 and the amplitude prefactor -i / (2 pi).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .hamiltonian import BlockOperator
from .momentum import TransverseGrid, legendre_barycentric_matrix
from .solve2d import AmplitudeTable, WaveCoefficients, augment_for_incidence, sample_outgoing, solve_momentum

__all__ = [
    "DiskGrid",
    "build_disk_grid",
    "periodic_interp_matrix",
    "incident_momentum_3d",
    "solve_3d",
    "amplitude_3d",
    "born_amplitude_3d",
    "scatter_3d",
    "certify_invisibility_3d",
    "born_exactness_3d",
    "direction_mesh",
]


def periodic_interp_matrix(n: int, phi_eval) -> np.ndarray:
    """Trigonometric interpolation from n (even) equispaced samples 2 pi j / n."""
    phi_eval = np.atleast_1d(np.asarray(phi_eval, dtype=float))
    nodes = 2 * np.pi * np.arange(n) / n
    u = phi_eval[:, None] - nodes[None, :]
    u = np.mod(u + np.pi, 2 * np.pi) - np.pi
    small = np.abs(u) < 1e-14
    us = np.where(small, 1.0, u)
    d = np.sin(0.5 * n * us) / (n * np.tan(0.5 * us))
    return np.where(small, 1.0, d)


@dataclass(frozen=True, eq=False)
class DiskGrid(TransverseGrid):
    """Polar tensor grid on the transverse momentum plane.

    Oscillating nodes: radius k sin(vartheta) with vartheta on a
    Gauss-Legendre rule over (0, pi/2), times ``n_azimuthal`` equispaced
    angles.  Evanescent nodes: radius k cosh(t) with t Gauss-Legendre on
    (0, arccosh(p_max/k)).
    """

    n_radial: int = 0
    n_azimuthal: int = 0
    n_ev_radial: int = 0
    vartheta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    vartheta_weights: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def phi(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_azimuthal) / self.n_azimuthal

    @property
    def reduced_weights(self) -> np.ndarray:
        dphi = 2 * np.pi / self.n_azimuthal
        radial = self.vartheta_weights * self.k * np.sin(self.vartheta) * dphi
        return np.repeat(radial, self.n_azimuthal)

    def interp_matrix(self, targets) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(targets, dtype=float))
        rho = np.hypot(pts[:, 0], pts[:, 1])
        if np.any(rho > self.k):
            raise ValueError("interpolation target outside the oscillating disk")
        th = np.arcsin(np.clip(rho / self.k, 0.0, 1.0))
        ph = np.arctan2(pts[:, 1], pts[:, 0])
        t_nodes = self.vartheta / (np.pi / 4) - 1.0
        t_w = self.vartheta_weights / (np.pi / 4)
        lr = legendre_barycentric_matrix(t_nodes, t_w, th / (np.pi / 4) - 1.0)
        la = periodic_interp_matrix(self.n_azimuthal, ph)
        return (lr[:, :, None] * la[:, None, :]).reshape(pts.shape[0], -1)

    def describe(self) -> dict:
        return {
            "type": "disk",
            "k": float(self.k),
            "n_radial": int(self.n_radial),
            "n_azimuthal": int(self.n_azimuthal),
            "p_max": float(self.p_max),
            "n_ev_radial": int(self.n_ev_radial),
        }


def build_disk_grid(k: float, n_radial: int = 16, n_azimuthal: int = 32, p_max: float | None = None, n_ev_radial: int = 8) -> DiskGrid:
    """Build a disk grid (defaults: 16 x 32 oscillating nodes, p_max = 3k, 8 evanescent radii)."""
    if not k > 0:
        raise ConfigError("k must be positive")
    for name, val, lo in (("n_radial", n_radial, 2), ("n_azimuthal", n_azimuthal, 2), ("n_ev_radial", n_ev_radial, 0)):
        if int(val) != val or val < lo:
            raise ConfigError(f"{name} must be an integer >= {lo}, got {val!r}")
    if n_azimuthal % 2:
        raise ConfigError("n_azimuthal must be even")
    p_max = 3.0 * k if p_max is None else float(p_max)
    if not p_max > k:
        raise ConfigError("p_max must exceed k")
    n_radial, n_azimuthal, n_ev_radial = int(n_radial), int(n_azimuthal), int(n_ev_radial)
    dphi = 2 * np.pi / n_azimuthal
    phi = dphi * np.arange(n_azimuthal)
    cph, sph = np.cos(phi), np.sin(phi)

    t, w = np.polynomial.legendre.leggauss(n_radial)
    th = 0.25 * np.pi * (t + 1.0)
    wth = 0.25 * np.pi * w
    rho = k * np.sin(th)
    w_rad = wth * k * np.cos(th) * rho * dphi
    osc = np.stack([np.outer(rho, cph).ravel(), np.outer(rho, sph).ravel()], axis=-1)
    w_osc = np.repeat(w_rad, n_azimuthal)

    if n_ev_radial:
        tmax = np.arccosh(p_max / k)
        s, ws = np.polynomial.legendre.leggauss(n_ev_radial)
        tt = 0.5 * tmax * (s + 1.0)
        wt = 0.5 * tmax * ws
        r_ev = k * np.cosh(tt)
        w_ev_rad = wt * k * np.sinh(tt) * r_ev * dphi
        ev = np.stack([np.outer(r_ev, cph).ravel(), np.outer(r_ev, sph).ravel()], axis=-1)
        w_ev = np.repeat(w_ev_rad, n_azimuthal)
    else:
        ev = np.zeros((0, 2))
        w_ev = np.zeros(0)

    return DiskGrid(
        k=float(k),
        nodes=np.concatenate([osc, ev]),
        weights=np.concatenate([w_osc, w_ev]),
        n_osc=n_radial * n_azimuthal,
        p_max=p_max,
        tdim=2,
        n_radial=n_radial,
        n_azimuthal=n_azimuthal,
        n_ev_radial=n_ev_radial,
        vartheta=th,
        vartheta_weights=wth,
    )


def incident_momentum_3d(k: float, theta0: float, phi0: float) -> np.ndarray:
    return k * np.sin(theta0) * np.array([np.cos(phi0), np.sin(phi0)])


def solve_3d(m: BlockOperator, theta0: float, phi0: float = 0.0, side: str | None = None) -> WaveCoefficients:
    """3D solve for the incident direction (theta0, phi0) measured from +z.

    Left incidence (from z = -inf) has cos(theta0) > 0.
    """
    if m.grid.tdim != 2:
        raise ConfigError("solve_3d needs a disk grid")
    c0 = np.cos(theta0)
    if abs(c0) < 1e-12:
        raise ConfigError("grazing incidence is not supported")
    inferred = "left" if c0 > 0 else "right"
    side = side or inferred
    if side != inferred:
        raise ConfigError(f"direction corresponds to {inferred} incidence, not {side}")
    p0 = incident_momentum_3d(m.grid.k, theta0, phi0)
    wc = solve_momentum(m, p0, side)
    return WaveCoefficients(
        grid=wc.grid, k=wc.k, p0=p0, side=side, b_minus=wc.b_minus, a_plus=wc.a_plus,
        direction0=(float(theta0), float(phi0)), condition=wc.condition,
    )


def direction_mesh(n_theta: int = 16, n_phi: int = 8, margin: float = 1e-3):
    """Product mesh of polar angles in (0, pi) and azimuths in [0, 2 pi)."""
    th = np.pi * (np.arange(n_theta) + 0.5) / n_theta
    th = th[np.abs(th - 0.5 * np.pi) > margin]
    ph = 2 * np.pi * np.arange(n_phi) / n_phi
    tt, pp = np.meshgrid(th, ph, indexing="ij")
    return tt.ravel(), pp.ravel()


def amplitude_3d(coeffs: WaveCoefficients, thetas=None, phis=None) -> AmplitudeTable:
    """f = -(i / 2 pi) {A+(p) for cos theta > 0, B-(p) otherwise}, p = k sin theta (cos phi, sin phi)."""
    grid = coeffs.grid
    if thetas is None:
        thetas, phis = direction_mesh()
    th = np.atleast_1d(np.asarray(thetas, dtype=float))
    ph = np.broadcast_to(np.asarray(0.0 if phis is None else phis, dtype=float), th.shape)
    if np.any(np.abs(np.cos(th)) < 1e-12):
        raise ConfigError("grazing observation directions are excluded")
    p = grid.k * np.sin(th)[:, None] * np.stack([np.cos(ph), np.sin(ph)], axis=-1)
    fwd = sample_outgoing(grid, coeffs.a_plus.osc_values, p)
    bwd = sample_outgoing(grid, coeffs.b_minus.osc_values, p)
    vals = np.where(np.cos(th) > 0, fwd, bwd)
    f = -1j / (2 * np.pi) * vals
    return AmplitudeTable(theta=th, f=f, side=coeffs.side, phi=np.array(ph), meta={"k": coeffs.k, "direction0": coeffs.direction0})


def scatter_3d(spec, k: float, direction0=(0.0, 0.0), thetas=None, phis=None, grid_policy: dict | None = None, **tm_kwargs) -> AmplitudeTable:
    """Disk grid with delta and probe channels, fundamental matrix, solve and sample."""
    from .transfer import fundamental_tm

    if thetas is None:
        thetas, phis = direction_mesh()
    th = np.atleast_1d(np.asarray(thetas, dtype=float))
    ph = np.broadcast_to(np.asarray(0.0 if phis is None else phis, dtype=float), th.shape)
    base = build_disk_grid(k, **dict(grid_policy or {}))
    grid = augment_for_incidence(base, incident_momentum_3d(k, *direction0), _wavevector(k, th, ph)[:, :2])
    m = fundamental_tm(spec, grid, **tm_kwargs)
    return amplitude_3d(solve_3d(m, *direction0), th, ph)


def _wavevector(k, theta, phi):
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return k * np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1)


def born_amplitude_3d(spec, k: float, incident, scattered):
    """First-Born amplitude -vhat(k - k0) / (4 pi).

    ``incident`` and ``scattered`` are (theta, phi) pairs (arrays allowed
    for ``scattered``), polar angle measured from the propagation axis.
    """
    if spec.dimension != 3:
        raise ConfigError("born_amplitude_3d needs a 3D potential")
    k0 = _wavevector(k, *incident)
    kv = _wavevector(k, *scattered)
    q = kv - k0
    return -spec.vhat(q[..., 2], q[..., :2]) / (4 * np.pi)


def certify_invisibility_3d(spec, alpha: float, k_samples=None, directions=None, grid_policy=None, **kw):
    """Invisibility certificate for a 3D potential with a one-sided transverse spectrum."""
    from .invisibility import certify_invisibility

    if spec.dimension != 3:
        raise ConfigError("certify_invisibility_3d needs a 3D potential")
    return certify_invisibility(spec, alpha, k_samples, directions, grid_policy, **kw)


def born_exactness_3d(spec, alpha: float, k: float, direction=(0.3, 0.2), grid_policy=None, mesh=None, dyson_nx: int = 16, **tm_kwargs):
    """Engine versus 3D first-Born amplitude for k <= alpha."""
    from .invisibility import BornReport, check_support_condition, nilpotency_residual
    from .errors import PremiseError
    from .solve2d import kernel_column
    from .transfer import fundamental_tm, truncated_dyson

    if spec.dimension != 3:
        raise ConfigError("born_exactness_3d needs a 3D potential")
    if not 0 < k <= alpha:
        raise ConfigError("Born exactness requires 0 < k <= alpha")
    if not check_support_condition(spec, alpha).passed:
        raise PremiseError(f"support condition fails at beta = alpha = {alpha:g}")
    base = build_disk_grid(k, **dict(grid_policy or {}))
    th, ph = mesh if mesh is not None else direction_mesh()
    grid = augment_for_incidence(base, incident_momentum_3d(k, *direction), _wavevector(k, th, ph)[:, :2])
    m = fundamental_tm(spec, grid, **tm_kwargs)
    coeffs = solve_3d(m, *direction)
    fe = amplitude_3d(coeffs, th, ph).f
    fb = born_amplitude_3d(spec, k, direction, (th, ph))
    from .invisibility import _normwise_error

    tiny = np.finfo(float).tiny
    err = _normwise_error(fe, fb, spec.scale)
    p0 = coeffs.p0
    w0 = np.sqrt(k * k - float(p0 @ p0))
    src = m.b21 if coeffs.side == "left" else m.b22 - np.eye(m.n)
    closed = -4 * np.pi**2 * w0 * kernel_column(src, grid, p0)
    cf = _normwise_error(coeffs.b_minus.osc_values, closed, spec.scale)
    dy = truncated_dyson(spec, grid, 1, n_x=dyson_nx)
    return BornReport(
        k=float(k), alpha=float(alpha), amplitude_error=err, nilpotency=nilpotency_residual(m),
        closed_form_error=cf, dyson_residual=float(np.max(np.abs(dy.matrix - m.matrix))),
        theta=th, engine=fe, born=fb,
    )
