"""Potential specifications and the discretized interaction operator.

A potential v(x, y) (or v(x, y, z) in 3D, with z the propagation axis) is
described by its partial Fourier transform over the transverse coordinates,

    vt(x, K) = int dy exp(-i K y) v(x, y),

together with a compact support [a_minus, a_plus] along the propagation
axis.  The interaction operator acts on functions of transverse momentum as

    (V f)(p) = (2 pi)^-d int dq vt(x, p - q) f(q),

and is discretized on a grid as (2 pi)^-d vt(x, p_i - q_j) w_j.

Throughout, the name ``x`` denotes the propagation coordinate, also for 3D
specs where it plays the role of z.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import ConfigError
from .momentum import TransverseGrid

__all__ = [
    "RectProfile",
    "GaussianProfile",
    "PotentialSpec",
    "ZeroPotential",
    "SeparablePotential",
    "YIndependentPotential",
    "DeltaLinePotential",
    "TruncatedPotential",
    "SumPotential",
    "TabulatedPotential",
    "ProjectedPotential",
    "bump",
    "gaussian_2d",
    "gaussian_3d",
    "band_limited_2d",
    "band_limited_3d",
    "rect_barrier",
    "delta_line",
    "multi_delta",
    "point_delta_3d",
    "fourier_y",
    "interaction_operator",
    "truncate_x",
]


# ---------------------------------------------------------------------------
# profiles along the propagation axis


@dataclass(frozen=True)
class RectProfile:
    """Indicator of (lo, hi] times ``height``."""

    lo: float
    hi: float
    height: complex = 1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x > self.lo) & (x <= self.hi), self.height, 0.0) * (1.0 + 0j)

    def ft(self, kx):
        """int dx exp(-i kx x) chi(x)."""
        kx = np.asarray(kx, dtype=float)
        small = np.abs(kx) * (self.hi - self.lo) < 1e-8
        safe = np.where(small, 1.0, kx)
        val = (np.exp(-1j * safe * self.lo) - np.exp(-1j * safe * self.hi)) / (1j * safe)
        mid = 0.5 * (self.lo + self.hi)
        return self.height * np.where(small, (self.hi - self.lo) * np.exp(-1j * kx * mid), val)

    @property
    def support(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    @property
    def piecewise_constant(self) -> bool:
        return True


@dataclass(frozen=True)
class GaussianProfile:
    """exp(-(x - center)^2 / (2 sigma^2)) cut to |x - center| <= cut.

    The Fourier transform ignores the cut; with the default ``cut = 7 sigma``
    the neglected tail is below 1e-10 relative.
    """

    sigma: float
    center: float = 0.0
    cut: float | None = None

    @property
    def half_width(self) -> float:
        return 7.0 * self.sigma if self.cut is None else float(self.cut)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        u = (x - self.center) / self.sigma
        inside = np.abs(x - self.center) <= self.half_width
        return np.where(inside, np.exp(-0.5 * u * u), 0.0) * (1.0 + 0j)

    def ft(self, kx):
        kx = np.asarray(kx, dtype=float)
        return np.sqrt(2 * np.pi) * self.sigma * np.exp(-0.5 * (kx * self.sigma) ** 2 - 1j * kx * self.center)

    @property
    def support(self) -> tuple[float, float]:
        return (self.center - self.half_width, self.center + self.half_width)

    @property
    def piecewise_constant(self) -> bool:
        return False


def bump(K, lo: float, hi: float):
    """C-infinity bump supported exactly on [lo, hi], peak value 1."""
    K = np.asarray(K, dtype=float)
    t = (2.0 * K - lo - hi) / (hi - lo)
    inside = np.abs(t) < 1.0
    ts = np.where(inside, t, 0.0)
    return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - ts * ts)), 0.0)


# ---------------------------------------------------------------------------
# specs


def _mask_delta_rows(v: np.ndarray, grid: TransverseGrid) -> np.ndarray:
    # a smooth kernel never produces a delta function, so delta channels get no rows
    if getattr(grid, "n_delta", 0):
        v = np.array(v, dtype=complex)
        v[grid.delta_slice, :] = 0.0
    return v


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """Base class.  Subclasses override :meth:`fourier_y` at minimum."""

    dimension: int
    a_minus: float
    a_plus: float
    kind: str
    scale: float

    is_delta_line = False
    y_independent = False

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ConfigError(f"dimension must be 2 or 3, got {self.dimension!r}")
        if not self.a_minus <= self.a_plus:
            raise ConfigError("support bounds must satisfy a_minus <= a_plus")

    @property
    def tdim(self) -> int:
        return self.dimension - 1

    @property
    def support(self) -> tuple[float, float]:
        return (self.a_minus, self.a_plus)

    def inside(self, x: float) -> bool:
        return self.a_minus < x <= self.a_plus

    # evaluators ---------------------------------------------------------
    def fourier_y(self, x: float, K):
        raise NotImplementedError

    def vhat(self, kx, kt):
        """Full Fourier transform over all coordinates.

        ``kt`` is the transverse wave vector (scalar array in 2D, trailing
        axis of length 2 in 3D).  The default integrates :meth:`fourier_y`
        over the support with a 200-point Gauss-Legendre rule.
        """
        s, w = np.polynomial.legendre.leggauss(200)
        a, b = self.support
        xs = 0.5 * (b - a) * (s + 1) + a
        ws = 0.5 * (b - a) * w
        kx = np.asarray(kx, dtype=float)
        total = 0.0
        for xi, wi in zip(xs, ws):
            total = total + wi * np.exp(-1j * kx * xi) * self.fourier_y(xi, kt)
        return total

    def real_space(self, x, y):
        raise NotImplementedError(f"no real-space evaluator for kind {self.kind!r}")

    def piecewise_constant_in_x(self) -> bool:
        return False

    # discretization ------------------------------------------------------
    def transverse_differences(self, grid: TransverseGrid):
        if grid.tdim == 1:
            return grid.nodes[:, None] - grid.nodes[None, :]
        return grid.nodes[:, None, :] - grid.nodes[None, :, :]

    def interaction_matrix(self, x: float, grid: TransverseGrid) -> np.ndarray:
        """Dense matrix (2 pi)^-d vt(x, p_i - q_j) w_j."""
        self._check_grid(grid)
        if not self.inside(x):
            return np.zeros((grid.n_nodes, grid.n_nodes), dtype=complex)
        vt = self.fourier_y(x, self.transverse_differences(grid))
        return _mask_delta_rows(vt * (grid.weights[None, :] / grid.fourier_norm), grid)

    def _check_grid(self, grid: TransverseGrid):
        if grid.tdim != self.tdim:
            raise ConfigError(
                f"grid has {grid.tdim} transverse dimension(s) but the potential is {self.dimension}D"
            )


@dataclass(frozen=True, eq=False)
class ZeroPotential(PotentialSpec):
    dimension: int = 2
    a_minus: float = 0.0
    a_plus: float = 1.0
    kind: str = "zero"
    scale: float = 0.0

    def fourier_y(self, x, K):
        return np.zeros(np.shape(K)[: np.ndim(K) - (self.tdim - 1)], dtype=complex)

    def vhat(self, kx, kt):
        return np.zeros(np.broadcast(np.asarray(kx), np.asarray(kt)[..., 0] if self.tdim == 2 else np.asarray(kt)).shape, dtype=complex)

    def real_space(self, x, y):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape, dtype=complex)

    def interaction_matrix(self, x, grid):
        self._check_grid(grid)
        return np.zeros((grid.n_nodes, grid.n_nodes), dtype=complex)

    def piecewise_constant_in_x(self) -> bool:
        return True


@dataclass(frozen=True, eq=False)
class SeparablePotential(PotentialSpec):
    """vt(x, K) = chi(x) g(K).

    Parameters
    ----------
    profile : RectProfile or GaussianProfile
        Dependence on the propagation coordinate.
    gfun : callable
        Transverse transform g(K); receives an array of shape ``(...,)`` in
        2D and ``(..., 2)`` in 3D.
    beta_lo : float, optional
        Lower edge of the transverse support along the first transverse
        axis when it is known to be one-sided.
    yfun : callable, optional
        Real-space transverse profile g(y), used by the Green's-function
        oracle.
    """

    profile: object = None
    gfun: Callable = None
    beta_lo: float | None = None
    beta_hi: float | None = None
    yfun: Callable | None = None
    params: dict = field(default_factory=dict)

    def fourier_y(self, x, K):
        K = np.asarray(K, dtype=float)
        return self.profile(x) * self.gfun(K)

    def interaction_matrix(self, x, grid):
        self._check_grid(grid)
        if not self.inside(x):
            return np.zeros((grid.n_nodes, grid.n_nodes), dtype=complex)
        return self.profile(x) * self._kernel(grid)

    def _kernel(self, grid):
        cache = self.__dict__.setdefault("_kernel_cache", {})
        key = id(grid)
        hit = cache.get(key)
        if hit is None or hit[0] is not grid:
            mat = self.gfun(self.transverse_differences(grid)) * (grid.weights[None, :] / grid.fourier_norm)
            hit = (grid, _mask_delta_rows(np.asarray(mat, dtype=complex), grid))
            if len(cache) > 8:
                cache.clear()
            cache[key] = hit
        return hit[1]

    def vhat(self, kx, kt):
        return self.profile.ft(kx) * self.gfun(np.asarray(kt, dtype=float))

    def real_space(self, x, y):
        if self.yfun is None:
            raise NotImplementedError("no real-space transverse profile for this potential")
        return self.profile(x) * self.yfun(y)

    def piecewise_constant_in_x(self) -> bool:
        return bool(getattr(self.profile, "piecewise_constant", False))


@dataclass(frozen=True, eq=False)
class YIndependentPotential(PotentialSpec):
    """v(x, y) = v1(x).  The interaction operator is v1(x) times identity.

    :meth:`fourier_y` returns the coefficient 2 pi v1(x) of delta(K) at
    ``K == 0`` and zero elsewhere.
    """

    profile: object = None

    y_independent = True

    def fourier_y(self, x, K):
        K = np.asarray(K, dtype=float)
        return np.where(K == 0.0, 2 * np.pi * self.profile(x), 0.0) * (1.0 + 0j)

    def interaction_matrix(self, x, grid):
        self._check_grid(grid)
        if not self.inside(x):
            return np.zeros((grid.n_nodes, grid.n_nodes), dtype=complex)
        return self.profile(x) * np.eye(grid.n_nodes, dtype=complex)

    def v1(self, x):
        return self.profile(x)

    def vhat(self, kx, kt):
        raise NotImplementedError("the transverse transform of a y-independent potential is a delta function")

    def piecewise_constant_in_x(self) -> bool:
        return bool(getattr(self.profile, "piecewise_constant", False))


@dataclass(frozen=True, eq=False)
class DeltaLinePotential(PotentialSpec):
    """v = delta(x - x0) g(y) (2D) or delta(z - z0) g(x, y) (3D).

    ``fourier_y(x0, K)`` returns the coefficient g~(K) of the delta; at any
    other x it returns zero.  ``zs`` and ``positions`` are set for sums of
    point scatterers g = sum_n z_n delta(y - a_n).
    """

    gfun: Callable = None
    x0: float = 0.0
    zs: tuple = ()
    positions: tuple = ()

    is_delta_line = True

    def fourier_y(self, x, K):
        K = np.asarray(K, dtype=float)
        val = self.gfun(K)
        return val if x == self.x0 else np.zeros_like(val)

    def inside(self, x):
        return x == self.x0

    def transverse_matrix(self, grid: TransverseGrid) -> np.ndarray:
        """(2 pi)^-d g~(p_i - q_j) w_j, the coefficient of delta(x - x0)."""
        self._check_grid(grid)
        mat = self.gfun(self.transverse_differences(grid)) * (grid.weights[None, :] / grid.fourier_norm)
        return _mask_delta_rows(np.asarray(mat, dtype=complex), grid)

    def interaction_matrix(self, x, grid):
        raise NotImplementedError("delta-line potentials have no pointwise interaction operator; use transverse_matrix")

    def vhat(self, kx, kt):
        return np.exp(-1j * np.asarray(kx, dtype=float) * self.x0) * self.gfun(np.asarray(kt, dtype=float))


@dataclass(frozen=True, eq=False)
class TruncatedPotential(PotentialSpec):
    """``base`` restricted to lo < x <= hi."""

    base: PotentialSpec = None
    lo: float = -np.inf
    hi: float = np.inf

    @property
    def is_delta_line(self):
        return self.base.is_delta_line

    @property
    def y_independent(self):
        return self.base.y_independent

    def inside(self, x):
        return self.lo < x <= self.hi and self.base.inside(x)

    def fourier_y(self, x, K):
        val = self.base.fourier_y(x, K)
        return val if self.lo < x <= self.hi else np.zeros_like(val)

    def interaction_matrix(self, x, grid):
        if not (self.lo < x <= self.hi):
            return np.zeros((grid.n_nodes, grid.n_nodes), dtype=complex)
        return self.base.interaction_matrix(x, grid)

    def transverse_matrix(self, grid):
        return self.base.transverse_matrix(grid)

    @property
    def x0(self):
        return self.base.x0

    def piecewise_constant_in_x(self) -> bool:
        return self.base.piecewise_constant_in_x()


@dataclass(frozen=True, eq=False)
class SumPotential(PotentialSpec):
    """Pointwise sum of smooth (non-delta) potentials."""

    parts: tuple = ()

    def fourier_y(self, x, K):
        return sum(p.fourier_y(x, K) for p in self.parts)

    def inside(self, x):
        return any(p.inside(x) for p in self.parts)

    def interaction_matrix(self, x, grid):
        out = np.zeros((grid.n_nodes, grid.n_nodes), dtype=complex)
        for p in self.parts:
            out = out + p.interaction_matrix(x, grid)
        return out

    def vhat(self, kx, kt):
        return sum(p.vhat(kx, kt) for p in self.parts)

    def real_space(self, x, y):
        return sum(p.real_space(x, y) for p in self.parts)


@dataclass(frozen=True, eq=False)
class TabulatedPotential(PotentialSpec):
    """Bilinear interpolation of a table vt(x_i, K_j) (2D only)."""

    x_table: np.ndarray = None
    k_table: np.ndarray = None
    values: np.ndarray = None

    def __post_init__(self):
        super().__post_init__()
        if self.dimension != 2:
            raise ConfigError("tabulated potentials are two-dimensional")
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (len(self.x_table), len(self.k_table)):
            raise ConfigError("table shape does not match its axes")
        opts = dict(method="linear", bounds_error=False, fill_value=None)
        object.__setattr__(self, "_re", RegularGridInterpolator((self.x_table, self.k_table), vals.real, **opts))
        object.__setattr__(self, "_im", RegularGridInterpolator((self.x_table, self.k_table), vals.imag, **opts))

    def fourier_y(self, x, K):
        K = np.asarray(K, dtype=float)
        if not self.inside(x):
            return np.zeros(K.shape, dtype=complex)
        if K.size and (K.min() < self.k_table[0] - 1e-12 or K.max() > self.k_table[-1] + 1e-12):
            raise ConfigError("momentum transfer outside the tabulated range; extend the K axis to p_max + k")
        pts = np.stack([np.full(K.size, float(x)), K.ravel()], axis=-1)
        return (self._re(pts) + 1j * self._im(pts)).reshape(K.shape)


@dataclass(frozen=True, eq=False)
class ProjectedPotential(PotentialSpec):
    """Interaction operator replaced by Pi V Pi on a fixed grid.

    Only used to demonstrate that this substitution changes the result.
    """

    base: PotentialSpec = None

    def fourier_y(self, x, K):
        return self.base.fourier_y(x, K)

    def inside(self, x):
        return self.base.inside(x)

    def interaction_matrix(self, x, grid):
        v = self.base.interaction_matrix(x, grid).copy()
        n = grid.n_osc
        v[n:, :] = 0.0
        v[:, n:] = 0.0
        return v


# ---------------------------------------------------------------------------
# factories


def gaussian_2d(z: complex, sigma_x: float, sigma_y: float, center: float = 0.0, cut: float | None = None) -> SeparablePotential:
    """v = z exp(-(x-c)^2/(2 sx^2)) exp(-y^2/(2 sy^2)), cut at |x - c| <= cut."""
    prof = GaussianProfile(sigma_x, center, cut)
    a, b = prof.support
    amp = complex(z) * np.sqrt(2 * np.pi) * sigma_y

    def g(K):
        return amp * np.exp(-0.5 * (K * sigma_y) ** 2)

    def gy(y):
        return complex(z) * np.exp(-0.5 * (np.asarray(y, dtype=float) / sigma_y) ** 2)

    return SeparablePotential(
        dimension=2, a_minus=a, a_plus=b, kind="gaussian", scale=abs(z),
        profile=prof, gfun=g, yfun=gy,
        params={"z": complex(z), "sigma_x": sigma_x, "sigma_y": sigma_y, "center": center},
    )


def gaussian_3d(z: complex, sigma_t: float, sigma_z: float, center: float = 0.0) -> SeparablePotential:
    """Isotropic-in-plane gaussian z exp(-r^2/(2 st^2)) exp(-(z-c)^2/(2 sz^2))."""
    prof = GaussianProfile(sigma_z, center)
    a, b = prof.support
    amp = complex(z) * 2 * np.pi * sigma_t**2

    def g(K):
        return amp * np.exp(-0.5 * (K[..., 0] ** 2 + K[..., 1] ** 2) * sigma_t**2)

    return SeparablePotential(
        dimension=3, a_minus=a, a_plus=b, kind="gaussian", scale=abs(z),
        profile=prof, gfun=g,
        params={"z": complex(z), "sigma_t": sigma_t, "sigma_z": sigma_z, "center": center},
    )


def _profile_from(x_profile):
    if x_profile is None:
        return RectProfile(0.0, 1.0)
    return x_profile


def band_limited_2d(amplitude: complex, beta_lo: float, beta_hi: float, x_profile=None) -> SeparablePotential:
    """chi(x) g(y) with g~(K) = amplitude * bump on [beta_lo, beta_hi]."""
    if not beta_hi > beta_lo:
        raise ConfigError("beta_hi must exceed beta_lo")
    prof = _profile_from(x_profile)
    a, b = prof.support
    amp = complex(amplitude)

    def g(K):
        return amp * bump(K, beta_lo, beta_hi)

    s, w = np.polynomial.legendre.leggauss(96)
    kk = 0.5 * (beta_hi - beta_lo) * (s + 1) + beta_lo
    wk = 0.5 * (beta_hi - beta_lo) * w * bump(kk, beta_lo, beta_hi)

    def gy(y):
        y = np.asarray(y, dtype=float)
        return amp * (np.exp(1j * y[..., None] * kk) @ wk) / (2 * np.pi)

    return SeparablePotential(
        dimension=2, a_minus=a, a_plus=b, kind="band-limited", scale=abs(amplitude),
        profile=prof, gfun=g, beta_lo=beta_lo, beta_hi=beta_hi, yfun=gy,
        params={"amplitude": amp, "beta_lo": beta_lo, "beta_hi": beta_hi},
    )


def band_limited_3d(amplitude: complex, beta_lo: float, beta_hi: float, sigma_y: float = 1.0, z_profile=None) -> SeparablePotential:
    """chi(z) times a transverse profile with one-sided support along x.

    g~(Kx, Ky) = amplitude * bump(Kx; beta_lo, beta_hi) * exp(-Ky^2 sy^2 / 2).
    """
    if not beta_hi > beta_lo:
        raise ConfigError("beta_hi must exceed beta_lo")
    prof = _profile_from(z_profile)
    a, b = prof.support
    amp = complex(amplitude)

    def g(K):
        return amp * bump(K[..., 0], beta_lo, beta_hi) * np.exp(-0.5 * (K[..., 1] * sigma_y) ** 2)

    return SeparablePotential(
        dimension=3, a_minus=a, a_plus=b, kind="band-limited", scale=abs(amplitude),
        profile=prof, gfun=g, beta_lo=beta_lo, beta_hi=beta_hi,
        params={"amplitude": amp, "beta_lo": beta_lo, "beta_hi": beta_hi, "sigma_y": sigma_y},
    )


def rect_barrier(z: complex, lo: float, hi: float, dimension: int = 2) -> YIndependentPotential:
    """y-independent barrier v1(x) = z on (lo, hi]."""
    if dimension != 2:
        raise ConfigError("y-independent barriers are implemented in 2D")
    return YIndependentPotential(
        dimension=2, a_minus=lo, a_plus=hi, kind="y-independent", scale=abs(z),
        profile=RectProfile(lo, hi, complex(z)),
    )


def delta_line(z: complex, a: float = 0.0, x0: float = 0.0) -> DeltaLinePotential:
    """v = z delta(x - x0) delta(y - a)."""
    return multi_delta([z], [a], x0=x0)


def multi_delta(zs: Sequence[complex], positions: Sequence[float], x0: float = 0.0) -> DeltaLinePotential:
    """v = delta(x - x0) sum_n z_n delta(y - a_n)."""
    zs = tuple(complex(z) for z in zs)
    positions = tuple(float(a) for a in positions)
    if len(zs) != len(positions) or not zs:
        raise ConfigError("multi-delta needs matching, non-empty coupling and position lists")
    zarr = np.array(zs)
    aarr = np.array(positions)

    def g(K):
        K = np.asarray(K, dtype=float)
        return np.tensordot(np.exp(-1j * K[..., None] * aarr), zarr, axes=([-1], [0]))

    return DeltaLinePotential(
        dimension=2, a_minus=x0, a_plus=x0, kind="delta-line" if len(zs) == 1 else "multi-delta",
        scale=float(np.max(np.abs(zarr))), gfun=g, x0=x0, zs=zs, positions=positions,
    )


def point_delta_3d(z: complex, z0: float = 0.0, offset: tuple[float, float] = (0.0, 0.0)) -> DeltaLinePotential:
    """v = z delta^3(r - r0) with r0 = (offset, z0)."""
    zc = complex(z)
    ox, oy = float(offset[0]), float(offset[1])

    def g(K):
        K = np.asarray(K, dtype=float)
        return zc * np.exp(-1j * (K[..., 0] * ox + K[..., 1] * oy))

    return DeltaLinePotential(
        dimension=3, a_minus=z0, a_plus=z0, kind="delta-line", scale=abs(zc),
        gfun=g, x0=z0, zs=(zc,), positions=((ox, oy),),
    )


# ---------------------------------------------------------------------------
# functional interface


def fourier_y(spec: PotentialSpec, x: float, K):
    """Partial Fourier transform vt(x, K); zero outside the support."""
    return spec.fourier_y(x, K)


def interaction_operator(spec: PotentialSpec, x: float, grid: TransverseGrid) -> np.ndarray:
    """Discretized interaction operator at ``x`` over all grid nodes."""
    return spec.interaction_matrix(x, grid)


def truncate_x(spec: PotentialSpec, lo: float, hi: float) -> PotentialSpec:
    """Restrict ``spec`` to lo < x <= hi."""
    if not lo < hi:
        raise ConfigError("truncate_x needs lo < hi")
    a = max(spec.a_minus, lo)
    b = min(spec.a_plus, hi)
    if b < a:
        a = b = min(max(spec.a_minus, lo), hi)
    if lo <= spec.a_minus and hi >= spec.a_plus and not spec.is_delta_line:
        return spec
    return TruncatedPotential(
        dimension=spec.dimension, a_minus=a, a_plus=b, kind=spec.kind, scale=spec.scale,
        base=spec, lo=lo, hi=hi,
    )
