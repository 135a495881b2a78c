"""Transverse-momentum discretization.

Functions of the transverse momentum p are represented by their values on a
quadrature grid that splits into an oscillating sector (|p| < k) and a
truncated evanescent sector (k < |p| <= p_max).  Integrals over the
oscillating sector are done in the angle variable p = k sin(theta), which
absorbs the 1/varpi endpoint singularity.  The evanescent rule uses
p = k cosh(t) for the same reason.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError

__all__ = [
    "varpi",
    "varpi_r",
    "varpi_i",
    "TransverseGrid",
    "MomentumGrid",
    "GridFunction",
    "build_grid",
    "project",
    "augment_grid",
    "legendre_barycentric_matrix",
]


def varpi(p, k: float):
    """Dispersion function.

    Returns sqrt(k**2 - p**2) for |p| < k and i*sqrt(p**2 - k**2) otherwise.
    ``p`` may be a scalar or an array; for 2D transverse momenta pass the
    modulus.
    """
    p = np.asarray(p, dtype=float)
    d = k * k - p * p
    out = np.where(d > 0, np.sqrt(np.abs(d)) + 0j, 1j * np.sqrt(np.abs(d)))
    return out[()] if out.ndim == 0 else out


def varpi_r(p, k: float):
    """Real part of :func:`varpi` (non-zero only on the oscillating sector)."""
    return np.real(varpi(p, k))


def varpi_i(p, k: float):
    """Imaginary part of :func:`varpi` (non-zero only on the evanescent sector)."""
    return np.imag(varpi(p, k))


def legendre_barycentric_matrix(t_nodes: np.ndarray, t_weights: np.ndarray, t_eval) -> np.ndarray:
    """Barycentric interpolation matrix for Gauss-Legendre nodes on (-1, 1).

    Uses the closed-form barycentric weights (-1)^j sqrt((1 - t_j^2) w_j),
    which are exact for Legendre points sorted in increasing order.
    Rows correspond to evaluation points.
    """
    t_eval = np.atleast_1d(np.asarray(t_eval, dtype=float))
    order = np.argsort(t_nodes)
    lam = np.empty_like(t_nodes)
    lam[order] = (-1.0) ** np.arange(t_nodes.size) * np.sqrt((1.0 - t_nodes[order] ** 2) * t_weights[order])
    diff = t_eval[:, None] - t_nodes[None, :]
    hit = diff == 0.0
    diff[hit] = 1.0
    terms = lam[None, :] / diff
    mat = terms / terms.sum(axis=1, keepdims=True)
    rows = np.nonzero(hit.any(axis=1))[0]
    for r in rows:
        mat[r] = hit[r].astype(float)
    return mat


@dataclass(frozen=True, eq=False)
class TransverseGrid:
    """Common interface of the 2D (line) and 3D (disk) momentum grids.

    Attributes
    ----------
    k : float
        Wavenumber.
    nodes : ndarray
        Momentum nodes, oscillating sector first.  Shape ``(N,)`` for a line
        grid and ``(N, 2)`` for a disk grid.
    weights : ndarray
        Quadrature weights for the momentum measure.
    n_osc : int
        Number of oscillating nodes.
    p_max : float
        Evanescent truncation.
    """

    k: float
    nodes: np.ndarray
    weights: np.ndarray
    n_osc: int
    p_max: float
    tdim: int = field(default=1)
    n_probe: int = field(default=0)
    n_delta: int = field(default=0)

    @property
    def n_nodes(self) -> int:
        return int(self.weights.size)

    @property
    def n_quad(self) -> int:
        """Oscillating quadrature nodes (probe and delta channels excluded)."""
        return self.n_osc - self.n_probe - self.n_delta

    @property
    def probe_slice(self) -> slice:
        return slice(self.n_quad, self.n_quad + self.n_probe)

    @property
    def delta_slice(self) -> slice:
        return slice(self.n_quad + self.n_probe, self.n_osc)

    @property
    def n_ev(self) -> int:
        return self.n_nodes - self.n_osc

    @property
    def momentum_modulus(self) -> np.ndarray:
        if self.tdim == 1:
            return np.abs(self.nodes)
        return np.hypot(self.nodes[:, 0], self.nodes[:, 1])

    @property
    def varpi(self) -> np.ndarray:
        return np.asarray(varpi(self.momentum_modulus, self.k))

    @property
    def varpi_r(self) -> np.ndarray:
        return self.varpi.real

    @property
    def varpi_i(self) -> np.ndarray:
        return self.varpi.imag

    @property
    def osc(self) -> slice:
        return slice(0, self.n_osc)

    @property
    def fourier_norm(self) -> float:
        """(2 pi)^d for d transverse dimensions."""
        return (2.0 * np.pi) ** self.tdim

    @property
    def reduced_weights(self) -> np.ndarray:
        """Quadrature weights divided by varpi (the smooth angular measure)."""
        return self.weights[: self.n_quad] / self.varpi[: self.n_quad].real

    def osc_mask(self) -> np.ndarray:
        m = np.zeros(self.n_nodes, dtype=bool)
        m[: self.n_osc] = True
        return m

    def interp_matrix(self, targets) -> np.ndarray:  # pragma: no cover - abstract
        """Matrix mapping values on the ``n_quad`` quadrature nodes to ``targets``."""
        raise NotImplementedError

    def same_as(self, other: "TransverseGrid") -> bool:
        if other is self:
            return True
        return (
            type(other) is type(self)
            and self.describe() == other.describe()
            and np.array_equal(self.nodes, other.nodes)
        )

    def describe(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError

    def to_json(self) -> str:
        doc = dict(self.describe())
        doc["nodes"] = np.asarray(self.nodes).tolist()
        doc["weights"] = self.weights.tolist()
        return json.dumps(doc)


@dataclass(frozen=True, eq=False)
class MomentumGrid(TransverseGrid):
    """Line grid for two-dimensional scattering.

    ``theta`` and ``theta_weights`` hold the underlying Gauss-Legendre rule
    on (-pi/2, pi/2); ``t_ev`` the rule in the evanescent variable.
    """

    n_ev: int = 0
    theta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    theta_weights: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def osc_nodes(self) -> np.ndarray:
        return self.nodes[: self.n_quad]

    @property
    def osc_weights(self) -> np.ndarray:
        return self.weights[: self.n_quad]

    @property
    def ev_nodes(self) -> np.ndarray:
        return self.nodes[self.n_osc:]

    @property
    def ev_weights(self) -> np.ndarray:
        return self.weights[self.n_osc:]

    @property
    def reduced_weights(self) -> np.ndarray:
        return self.theta_weights

    def interp_matrix(self, targets) -> np.ndarray:
        """Matrix mapping osc-node values to values at momenta ``targets``."""
        p = np.atleast_1d(np.asarray(targets, dtype=float))
        if np.any(np.abs(p) > self.k):
            raise ValueError("interpolation target outside the oscillating sector")
        th = np.arcsin(np.clip(p / self.k, -1.0, 1.0))
        t_nodes = self.theta / (np.pi / 2)
        t_w = self.theta_weights / (np.pi / 2)
        return legendre_barycentric_matrix(t_nodes, t_w, th / (np.pi / 2))

    def describe(self) -> dict:
        return {
            "type": "line",
            "k": float(self.k),
            "n_osc": int(self.n_quad),
            "p_max": float(self.p_max),
            "n_ev": int(self.n_ev),
        }


def build_grid(k: float, n_osc: int, p_max: float | None = None, n_ev: int = 0) -> MomentumGrid:
    """Build a symmetric line grid.

    Parameters
    ----------
    k : float
        Wavenumber, > 0.
    n_osc : int
        Gauss-Legendre order in theta for the oscillating sector (>= 2).
    p_max : float, optional
        Evanescent cut-off, default ``4 k``.
    n_ev : int
        Nodes per evanescent half-line, placed by Gauss-Legendre in
        ``t = arccosh(|p|/k)`` and mirrored to negative momenta.
    """
    if not np.isfinite(k) or k <= 0:
        raise ConfigError(f"k must be positive, got {k!r}")
    if int(n_osc) != n_osc or n_osc < 2:
        raise ConfigError(f"n_osc must be an integer >= 2, got {n_osc!r}")
    if p_max is None:
        p_max = 4.0 * k
    if not p_max > k:
        raise ConfigError(f"p_max must exceed k, got p_max={p_max!r}, k={k!r}")
    if int(n_ev) != n_ev or n_ev < 0:
        raise ConfigError(f"n_ev must be a non-negative integer, got {n_ev!r}")
    n_osc, n_ev = int(n_osc), int(n_ev)

    t, w = np.polynomial.legendre.leggauss(n_osc)
    theta = 0.5 * np.pi * t
    w_theta = 0.5 * np.pi * w
    p_osc = k * np.sin(theta)
    w_osc = w_theta * k * np.cos(theta)

    if n_ev:
        tmax = np.arccosh(p_max / k)
        s, ws = np.polynomial.legendre.leggauss(n_ev)
        tt = 0.5 * tmax * (s + 1.0)
        wt = 0.5 * tmax * ws
        q = k * np.cosh(tt)
        wq = wt * k * np.sinh(tt)
        order = np.argsort(q)
        q, wq = q[order], wq[order]
        p_ev = np.concatenate([-q[::-1], q])
        w_ev = np.concatenate([wq[::-1], wq])
    else:
        p_ev = np.zeros(0)
        w_ev = np.zeros(0)

    return MomentumGrid(
        k=float(k),
        nodes=np.concatenate([p_osc, p_ev]),
        weights=np.concatenate([w_osc, w_ev]),
        n_osc=n_osc,
        p_max=float(p_max),
        tdim=1,
        n_ev=n_ev,
        theta=theta,
        theta_weights=w_theta,
    )


def augment_grid(grid: TransverseGrid, probes=(), deltas=()) -> TransverseGrid:
    """Append probe and delta channels to the oscillating sector.

    Probe nodes carry zero quadrature weight, so they do not act on other
    nodes but their rows of any integral operator give the Nystrom values
    of the output at those momenta.  Delta nodes carry weight one and their
    rows of the interaction operator are zeroed, so their columns are the
    exact kernel at (., p0): a delta function stays a delta function while
    generating a smooth response.
    """
    if grid.n_probe or grid.n_delta:
        raise ValueError("grid is already augmented")
    shape = (-1,) if grid.tdim == 1 else (-1, 2)
    probes = np.asarray(probes, dtype=float).reshape(shape)
    deltas = np.asarray(deltas, dtype=float).reshape(shape)
    for arr in (probes, deltas):
        mod = np.abs(arr) if grid.tdim == 1 else np.hypot(arr[:, 0], arr[:, 1])
        if np.any(mod >= grid.k):
            raise ValueError("probe and delta momenta must lie in the oscillating sector")
    n = grid.n_osc
    nodes = np.concatenate([grid.nodes[:n], probes, deltas, grid.nodes[n:]])
    weights = np.concatenate([grid.weights[:n], np.zeros(len(probes)), np.ones(len(deltas)), grid.weights[n:]])
    return replace(
        grid, nodes=nodes, weights=weights, n_osc=n + len(probes) + len(deltas),
        n_probe=len(probes), n_delta=len(deltas),
    )


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values of a function of transverse momentum on a grid."""

    grid: TransverseGrid
    values: np.ndarray
    in_fk: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.n_nodes,):
            raise ValueError(f"expected {self.grid.n_nodes} values, got shape {vals.shape}")
        if self.in_fk and np.any(vals[self.grid.n_osc:] != 0):
            raise ValueError("function tagged in F_k has non-zero evanescent values")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_osc(cls, grid: TransverseGrid, osc_values) -> "GridFunction":
        vals = np.zeros(grid.n_nodes, dtype=complex)
        vals[: grid.n_osc] = osc_values
        return cls(grid, vals, in_fk=True)

    @property
    def osc_values(self) -> np.ndarray:
        return self.values[: self.grid.n_osc]

    @property
    def quad_values(self) -> np.ndarray:
        return self.values[: self.grid.n_quad]

    @property
    def probe_values(self) -> np.ndarray:
        return self.values[self.grid.probe_slice]


def project(f: GridFunction) -> GridFunction:
    """Oscillating projection: zero out all evanescent-node values."""
    vals = f.values.copy()
    vals[f.grid.n_osc:] = 0.0
    return GridFunction(f.grid, vals, in_fk=True)
