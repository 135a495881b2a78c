"""Outgoing amplitudes from the fundamental transfer matrix.

The incident wave contributes a term N varpi(p0) delta(p - p0) to one of
the incoming amplitudes (N = 2 pi in 2D, 4 pi^2 in 3D).  It is never put on
the grid: writing M = I + K, the delta passes through the identity part and
only the kernel column K(., p0) enters the smooth linear system.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import ConfigError, SpectralSingularityError
from .hamiltonian import BlockOperator
from .momentum import GridFunction, TransverseGrid, augment_grid, build_grid

log = logging.getLogger(__name__)

__all__ = [
    "GridPolicy",
    "WaveCoefficients",
    "AmplitudeTable",
    "kernel_column",
    "sample_outgoing",
    "augment_for_incidence",
    "solve_incident",
    "solve_momentum",
    "amplitude",
    "cross_section",
    "theta_mesh",
    "sigma_min_m22",
    "ScanPoint",
    "spectral_singularity_scan",
    "scatter_2d",
]

SINGULAR_RCOND = 1e-13


@dataclass(frozen=True)
class GridPolicy:
    """How to build a line grid for a given k."""

    n_osc: int = 32
    p_max_factor: float = 4.0
    n_ev: int = 24

    def build(self, k: float):
        return build_grid(k, self.n_osc, self.p_max_factor * k, self.n_ev)


@dataclass(frozen=True, eq=False)
class WaveCoefficients:
    """Solved outgoing data for one incident plane wave.

    ``b_minus`` and ``a_plus`` are the smooth parts of the outgoing
    amplitudes; the incident delta (weight ``delta_weight``) and the
    forward delta it produces are kept symbolic.
    """

    grid: TransverseGrid
    k: float
    p0: np.ndarray | float
    side: str
    b_minus: GridFunction
    a_plus: GridFunction
    delta_weight: complex = 1.0
    theta0: float | None = None
    direction0: tuple | None = None
    condition: float = float("nan")

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ConfigError(f"side must be 'left' or 'right', got {self.side!r}")


@dataclass(frozen=True, eq=False)
class AmplitudeTable:
    """Sampled scattering amplitude.

    ``theta`` holds polar angles; ``phi`` is set for 3D tables.
    """

    theta: np.ndarray
    f: np.ndarray
    side: str
    delta_cancelled: bool = True
    phi: np.ndarray | None = None
    meta: dict = field(default_factory=dict)


def theta_mesh(n: int = 64, margin: float = 1e-3) -> np.ndarray:
    """Uniform mesh on [0, 2 pi) offset by half a step, grazing angles removed."""
    th = 2 * np.pi * (np.arange(n) + 0.5) / n
    keep = (np.abs(th - 0.5 * np.pi) > margin) & (np.abs(th - 1.5 * np.pi) > margin)
    return th[keep]


def kernel_column(block: np.ndarray, grid: TransverseGrid, p0) -> np.ndarray:
    """Kernel of a grid operator evaluated at (p_i, p0).

    On a grid carrying a delta channel at p0 this is the exact column of
    that channel.  Otherwise the quadrature columns divided by the reduced
    weights w_j / varpi(q_j), which are smooth in the angular variables, are
    interpolated to p0 and divided by varpi(p0).
    """
    idx = _match_nodes(grid, grid.delta_slice, np.asarray(p0, dtype=float)[None])
    if idx is not None:
        return block[:, idx[0]]
    nq = grid.n_quad
    lrow = grid.interp_matrix(np.asarray(p0)[None] if grid.tdim == 2 else np.atleast_1d(p0))[0]
    mod = np.linalg.norm(np.atleast_1d(p0))
    w0 = np.sqrt(grid.k**2 - mod**2)
    return block[:, :nq] @ (lrow / grid.reduced_weights) / w0


def _match_nodes(grid: TransverseGrid, where: slice, targets: np.ndarray):
    """Indices of the nodes in ``where`` equal to ``targets`` (None unless all match)."""
    cand = np.asarray(grid.nodes[where])
    if cand.shape[0] == 0 or targets.shape[0] == 0:
        return None
    if grid.tdim == 1:
        dist = np.abs(targets.reshape(-1)[:, None] - cand[None, :])
    else:
        dist = np.linalg.norm(targets.reshape(-1, 2)[:, None, :] - cand[None, :, :], axis=-1)
    j = np.argmin(dist, axis=1)
    if np.all(dist[np.arange(len(j)), j] <= 1e-13 * grid.k):
        return where.start + j
    return None


def sample_outgoing(grid: TransverseGrid, values: np.ndarray, targets) -> np.ndarray:
    """Values of an outgoing amplitude at oscillating momenta ``targets``.

    Probe channels give the Nystrom values directly; other targets are
    interpolated from the quadrature nodes.
    """
    targets = np.asarray(targets, dtype=float)
    targets = targets.reshape(-1) if grid.tdim == 1 else targets.reshape(-1, 2)
    idx = _match_nodes(grid, grid.probe_slice, targets)
    if idx is not None:
        return values[idx]
    return grid.interp_matrix(targets) @ values[: grid.n_quad]


def augment_for_incidence(grid: TransverseGrid, p0, targets=()) -> TransverseGrid:
    """Add a delta channel at p0 and probe channels at the observation momenta."""
    shape = (-1,) if grid.tdim == 1 else (-1, 2)
    targets = np.asarray(targets, dtype=float).reshape(shape)
    targets = np.unique(targets, axis=0)
    return augment_grid(grid, probes=targets, deltas=np.asarray(p0, dtype=float).reshape(shape))


def _split(m: BlockOperator):
    if m.sector != "osc":
        m = m.osc_part()
    n = m.n
    k = m.matrix - np.eye(2 * n)
    return k[:n, :n], k[:n, n:], k[n:, :n], k[n:, n:]


def solve_momentum(m: BlockOperator, p0, side: str) -> WaveCoefficients:
    """Solve for the outgoing amplitudes given the incident transverse momentum.

    The linear system lives on the quadrature nodes; probe rows are filled
    in afterwards from the same equations (Nystrom extension).
    """
    grid = m.grid
    k = grid.k
    mod = float(np.linalg.norm(np.atleast_1d(p0)))
    if not mod < k:
        raise ConfigError("incident transverse momentum must satisfy |p0| < k")
    if side not in ("left", "right"):
        raise ConfigError(f"side must be 'left' or 'right', got {side!r}")
    k11, k12, k21, k22 = _split(m)
    w0 = np.sqrt(k * k - mod * mod)
    c = grid.fourier_norm * w0
    nq = grid.n_quad
    col = kernel_column(k22 if side == "right" else k21, grid, p0)
    sys = np.eye(nq) + k22[:nq, :nq]
    try:
        sv = np.linalg.svd(sys, compute_uv=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise SpectralSingularityError(f"SVD failed: {exc}") from exc
    smin, smax = float(sv[-1]), float(sv[0])
    cond = smax / smin if smin > 0 else np.inf
    log.info("solve side=%s |p0|=%.6g cond=%.3e", side, mod, cond)
    if smin <= SINGULAR_RCOND * smax:
        raise SpectralSingularityError(
            f"I + K22 is numerically singular (sigma_min={smin:.3e}); spectral-singularity candidate", smin
        )
    bq = sla.lu_solve(sla.lu_factor(sys), -c * col[:nq])
    b = -c * col - k22[:, :nq] @ bq
    b[:nq] = bq
    src = k12 if side == "right" else k11
    a = c * kernel_column(src, grid, p0) + k12[:, :nq] @ bq
    b[grid.delta_slice] = 0.0
    a[grid.delta_slice] = 0.0
    return WaveCoefficients(
        grid=grid, k=k, p0=p0, side=side,
        b_minus=GridFunction.from_osc(grid, b), a_plus=GridFunction.from_osc(grid, a),
        condition=cond,
    )


def solve_incident(m: BlockOperator, theta0: float, side: str | None = None) -> WaveCoefficients:
    """2D solve for incidence angle ``theta0``.

    Left incidence has cos(theta0) > 0 and right incidence cos(theta0) < 0;
    ``side`` is inferred when omitted and checked otherwise.
    """
    if m.grid.tdim != 1:
        raise ConfigError("solve_incident is the 2D solver; use threed.solve_3d")
    c0 = np.cos(theta0)
    if abs(c0) < 1e-12:
        raise ConfigError("grazing incidence is not supported")
    inferred = "left" if c0 > 0 else "right"
    if side is None:
        side = inferred
    elif side != inferred:
        raise ConfigError(f"theta0={theta0:g} corresponds to {inferred} incidence, not {side}")
    p0 = m.grid.k * np.sin(theta0)
    wc = solve_momentum(m, p0, side)
    return WaveCoefficients(
        grid=wc.grid, k=wc.k, p0=wc.p0, side=wc.side, b_minus=wc.b_minus, a_plus=wc.a_plus,
        theta0=float(theta0), condition=wc.condition,
    )


def amplitude(coeffs: WaveCoefficients, thetas=None, n_theta: int = 64, margin: float = 1e-3) -> AmplitudeTable:
    """Sample f(theta) = -(i / sqrt(2 pi)) {A+(k sin t) if cos t > 0, B-(k sin t) otherwise}."""
    grid = coeffs.grid
    th = theta_mesh(n_theta, margin) if thetas is None else np.atleast_1d(np.asarray(thetas, dtype=float))
    if np.any(np.abs(np.cos(th)) < 1e-12):
        raise ConfigError("grazing observation angles are excluded")
    p = grid.k * np.sin(th)
    fwd = sample_outgoing(grid, coeffs.a_plus.osc_values, p)
    bwd = sample_outgoing(grid, coeffs.b_minus.osc_values, p)
    vals = np.where(np.cos(th) > 0, fwd, bwd)
    f = -1j / np.sqrt(2 * np.pi) * vals
    return AmplitudeTable(theta=th, f=f, side=coeffs.side, meta={"k": coeffs.k, "theta0": coeffs.theta0})


def cross_section(table: AmplitudeTable):
    """List of (theta, |f|^2)."""
    return list(zip(table.theta.tolist(), (np.abs(table.f) ** 2).tolist()))


def sigma_min_m22(m: BlockOperator) -> tuple[float, float]:
    """Extreme singular values of M22 in the L2(dp) metric."""
    if m.sector != "osc":
        m = m.osc_part()
    grid = m.grid
    nq = grid.n_quad
    sw = np.sqrt(grid.weights[:nq])
    mat = sw[:, None] * m.b22[:nq, :nq] / sw[None, :]
    sv = np.linalg.svd(mat, compute_uv=False)
    return float(sv[-1]), float(sv[0])


@dataclass(frozen=True)
class ScanPoint:
    k: float
    sigma_min: float
    sigma_max: float

    @property
    def normalized(self) -> float:
        return self.sigma_min / self.sigma_max if self.sigma_max > 0 else 0.0


def spectral_singularity_scan(spec, k_values, grid_policy: GridPolicy | None = None, **tm_kwargs) -> list[ScanPoint]:
    """Smallest singular value of M22 over a list of wavenumbers."""
    from .transfer import fundamental_tm

    policy = grid_policy or GridPolicy()
    out = []
    for k in k_values:
        if not k > 0:
            raise ConfigError("scan wavenumbers must be positive")
        grid = policy.build(float(k))
        m = fundamental_tm(spec, grid, **tm_kwargs)
        smin, smax = sigma_min_m22(m)
        out.append(ScanPoint(float(k), smin, smax))
    return out


def scatter_2d(
    spec, k: float, theta0: float, thetas=None, grid_policy: GridPolicy | None = None, n_theta: int = 64, **tm_kwargs
) -> AmplitudeTable:
    """Grid, fundamental matrix, solve and sample for one incident wave.

    The grid is augmented with a delta channel at the incident momentum and
    probe channels at the observation momenta, so no interpolation in the
    angle is needed.
    """
    from .transfer import fundamental_tm

    if getattr(spec, "y_independent", False):
        raise ConfigError("a y-independent potential scatters only specularly; use the per-channel matrices")
    th = theta_mesh(n_theta) if thetas is None else np.atleast_1d(np.asarray(thetas, dtype=float))
    if np.any(np.abs(np.cos(th)) < 1e-12) or abs(np.cos(theta0)) < 1e-12:
        raise ConfigError("grazing angles are excluded")
    base = (grid_policy or GridPolicy()).build(k)
    grid = augment_for_incidence(base, k * np.sin(theta0), k * np.sin(th))
    m = fundamental_tm(spec, grid, **tm_kwargs)
    return amplitude(solve_incident(m, theta0), th)
