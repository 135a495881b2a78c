"""Evolution operators and transfer matrices.

Conventions
-----------
``evolve`` returns the full-picture propagator U(x1, x0) of
i dU/dx = H(x) U.  The auxiliary transfer matrix is the interaction-picture
propagator across the support,

    Maux = e^{wi a+ s3} U(a+, a-) e^{-wi a- s3},

and composes as a product over x-slices.  Its evanescent blocks grow like
exp(max|wi| (a+ - a-)), so it is only usable for thin supports.

The fundamental transfer matrix maps oscillating in/out amplitudes.  Two
routes are provided:

``"sandwich"``
    the oscillating sub-block of Maux.
``"eliminate"``
    imposes boundedness of the evanescent field on both sides exactly:
    per-slice propagators are converted to scattering form (inputs: upper
    components on the left and lower components on the right) and chained
    with the Redheffer star product, which never forms growing exponentials.
    The evanescent inputs are then set to zero and the oscillating
    scattering blocks are converted back to transfer form.

The two routes coincide whenever the evanescent sector cannot feed back
into the oscillating one (band-limited potentials with one-sided
transverse support, y-independent potentials).  For smooth potentials with
two-sided transverse spectra the sandwich misses evanescent round trips and
only the elimination route agrees with an independent Lippmann-Schwinger
solution.  Delta-line potentials use the sandwich, which is their finite
(cut-off free) definition; the elimination route there depends on p_max.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .errors import ConfigError, NumericalError, TransferOverflowError
from .hamiltonian import (
    OVERFLOW_BOUND,
    BlockOperator,
    _assemble,
    hamiltonian_full,
    hamiltonian_interaction,
)
from .momentum import TransverseGrid
from .potentials import PotentialSpec, ProjectedPotential

log = logging.getLogger(__name__)

__all__ = [
    "SCHEMES",
    "AUX_SLICE_GROWTH",
    "ELIM_SLICE_GROWTH",
    "default_steps",
    "slice_edges",
    "free_propagator",
    "evolve",
    "auxiliary_tm",
    "fundamental_tm",
    "compose",
    "truncated_dyson",
    "naive_projected_tm",
    "sandwich_discrepancy",
    "transfer_to_scattering",
    "scattering_to_transfer",
    "star_product",
    "save_block_operator",
    "load_block_operator",
]

SCHEMES = ("magnus4", "midpoint-magnus", "rk4")
AUX_SLICE_GROWTH = 20.0
ELIM_SLICE_GROWTH = 6.0
_C1 = 0.5 - math.sqrt(3.0) / 6.0
_C2 = 0.5 + math.sqrt(3.0) / 6.0


def default_steps(spec: PotentialSpec, grid: TransverseGrid, step: float | None = None) -> int:
    """Step count over the support: about 24 steps per unit k * length, at least 16."""
    width = spec.a_plus - spec.a_minus
    if step is None:
        step = 1.0 / (24.0 * max(grid.k, 1.0))
    return max(16, int(math.ceil(width / step)))


def slice_edges(spec: PotentialSpec, grid: TransverseGrid, slices: int | None = None, max_growth: float = AUX_SLICE_GROWTH) -> np.ndarray:
    """Equal-width slice boundaries over the support.

    Without an explicit count, the number of slices is the smallest one with
    max|wi| * width <= max_growth.
    """
    a, b = spec.a_minus, spec.a_plus
    if slices is None:
        vi = float(np.max(np.abs(grid.varpi_i), initial=0.0))
        slices = max(1, int(math.ceil(vi * (b - a) / max_growth)))
    if int(slices) != slices or slices < 1:
        raise ConfigError(f"slices must be a positive integer, got {slices!r}")
    return np.linspace(a, b, int(slices) + 1)


def free_propagator(grid: TransverseGrid, dx: float) -> np.ndarray:
    """Diagonal of exp(-wi s3 dx) (upper then lower)."""
    vi = grid.varpi_i
    return np.concatenate([np.exp(-vi * dx), np.exp(vi * dx)])


def _growth_guard(grid: TransverseGrid, length: float, what: str):
    g = float(np.max(np.abs(grid.varpi_i), initial=0.0)) * abs(length)
    if g > OVERFLOW_BOUND:
        raise TransferOverflowError(
            f"{what}: evanescent growth exp({g:.1f}) exceeds exp({OVERFLOW_BOUND:g}); "
            "use more slices or a smaller p_max"
        )


def _delta_aux_matrix(spec: PotentialSpec, grid: TransverseGrid) -> np.ndarray:
    """Closed form I - (i/2) e^{-i w x0 s3} G K e^{i w x0 s3} / varpi."""
    x0 = spec.x0
    _growth_guard(grid, x0, "delta-line placement")
    g = spec.transverse_matrix(grid)
    w = grid.varpi
    ph = np.exp(-1j * w * x0)
    mat = -1j * _assemble(g, ph, 1.0 / ph, 1.0 / w)
    mat[np.diag_indices_from(mat)] += 1.0
    return mat


def _channel_hamiltonians(spec, x, grid):
    """Per-channel 2x2 full-picture Hamiltonians for a y-independent spec."""
    w = grid.varpi
    v1 = complex(spec.v1(x)) if spec.inside(x) else 0.0
    ph = np.exp(-1j * w.real * x)
    c = 0.5 * v1 / w
    h = np.empty((w.size, 2, 2), dtype=complex)
    h[:, 0, 0] = c - 1j * w.imag
    h[:, 0, 1] = c * ph * ph
    h[:, 1, 0] = -c / (ph * ph)
    h[:, 1, 1] = -c + 1j * w.imag
    return h


def _exact_channels(spec, grid, xa, xb):
    # constant v1 on [xa, xb]: H(x) = D(x) H0 D(x)^-1 with D = diag(e^{-i wr x}, e^{i wr x}),
    # so U = D(xb) expm(-i (H0 - wr sigma3) (xb - xa)) D(xa)^-1
    w = grid.varpi
    hz = np.empty((w.size, 2, 2), dtype=complex)
    c = 0.5 * complex(spec.v1(0.5 * (xa + xb))) / w
    hz[:, 0, 0] = c - 1j * w.imag - w.real
    hz[:, 0, 1] = c
    hz[:, 1, 0] = -c
    hz[:, 1, 1] = -c + 1j * w.imag + w.real
    e = np.stack([sla.expm(-1j * (xb - xa) * hi) for hi in hz])
    db = np.exp(-1j * w.real * xb)
    da = np.exp(-1j * w.real * xa)
    e[:, 0, 0] *= db / da
    e[:, 0, 1] *= db * da
    e[:, 1, 0] /= db * da
    e[:, 1, 1] *= da / db
    return e


def _advance_channels(spec, grid, xa, xb, nsteps, scheme):
    n = grid.n_nodes
    u = np.broadcast_to(np.eye(2, dtype=complex), (n, 2, 2)).copy()
    h = (xb - xa) / nsteps
    if spec.piecewise_constant_in_x():
        u = _exact_channels(spec, grid, xa, xb)
        nsteps = 0
    for s in range(nsteps):
        x = xa + s * h
        if scheme == "midpoint-magnus":
            e = sla.expm(-1j * h * _channel_hamiltonians(spec, x + 0.5 * h, grid))
        elif scheme == "magnus4":
            a1 = -1j * _channel_hamiltonians(spec, x + _C1 * h, grid)
            a2 = -1j * _channel_hamiltonians(spec, x + _C2 * h, grid)
            om = 0.5 * h * (a1 + a2) - (math.sqrt(3.0) / 12.0) * h * h * (a1 @ a2 - a2 @ a1)
            e = sla.expm(om)
        else:
            f = lambda xx, y: -1j * _channel_hamiltonians(spec, xx, grid) @ y
            k1 = f(x, u)
            k2 = f(x + 0.5 * h, u + 0.5 * h * k1)
            k3 = f(x + 0.5 * h, u + 0.5 * h * k2)
            k4 = f(x + h, u + h * k3)
            u = u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            continue
        u = e @ u
    mat = np.zeros((2 * n, 2 * n), dtype=complex)
    idx = np.arange(n)
    mat[idx, idx] = u[:, 0, 0]
    mat[idx, n + idx] = u[:, 0, 1]
    mat[n + idx, idx] = u[:, 1, 0]
    mat[n + idx, n + idx] = u[:, 1, 1]
    return mat


def _advance(spec, grid, xa, xb, nsteps, scheme):
    """Fixed-step propagator across [xa, xb] inside the support."""
    if spec.y_independent:
        return _advance_channels(spec, grid, xa, xb, nsteps, scheme)
    n2 = 2 * grid.n_nodes
    h = (xb - xa) / nsteps
    u = np.eye(n2, dtype=complex)
    ham = lambda xx: hamiltonian_full(spec, xx, grid).matrix
    for s in range(nsteps):
        x = xa + s * h
        if scheme == "midpoint-magnus":
            u = sla.expm(-1j * h * ham(x + 0.5 * h)) @ u
        elif scheme == "magnus4":
            a1 = -1j * ham(x + _C1 * h)
            a2 = -1j * ham(x + _C2 * h)
            om = 0.5 * h * (a1 + a2) - (math.sqrt(3.0) / 12.0) * h * h * (a1 @ a2 - a2 @ a1)
            u = sla.expm(om) @ u
        else:
            a = -1j * ham(x)
            b = -1j * ham(x + 0.5 * h)
            c = -1j * ham(x + h)
            k1 = a @ u
            k2 = b @ (u + 0.5 * h * k1)
            k3 = b @ (u + 0.5 * h * k2)
            k4 = c @ (u + h * k3)
            u = u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return u


def evolve(
    spec: PotentialSpec,
    x0: float,
    x1: float,
    grid: TransverseGrid,
    steps: int | None = None,
    scheme: str = "magnus4",
) -> BlockOperator:
    """Full-picture propagator U(x1, x0).

    Stretches outside the support are applied exactly as free factors.
    ``steps`` counts integrator steps over the part of [x0, x1] that lies
    inside the support; by default it is scaled from :func:`default_steps`.
    Delta-line specs are propagated in closed form.
    """
    if scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    if x1 < x0:
        raise ConfigError("evolve requires x0 <= x1")
    _growth_guard(grid, x1 - x0, "evolve")
    n2 = 2 * grid.n_nodes

    if spec.is_delta_line:
        xd = spec.x0
        if not (x0 < xd <= x1):
            return BlockOperator(grid, np.diag(free_propagator(grid, x1 - x0)))
        m = _delta_aux_matrix(spec, grid)
        u_d = free_propagator(grid, xd)[:, None] * m * free_propagator(grid, -xd)[None, :]
        mat = free_propagator(grid, x1 - xd)[:, None] * u_d * free_propagator(grid, xd - x0)[None, :]
        return BlockOperator(grid, mat)

    lo = max(x0, spec.a_minus)
    hi = min(x1, spec.a_plus)
    if hi <= lo:
        return BlockOperator(grid, np.diag(free_propagator(grid, x1 - x0)))
    if steps is None:
        full = default_steps(spec, grid)
        steps = max(4, int(math.ceil(full * (hi - lo) / (spec.a_plus - spec.a_minus))))
    if int(steps) != steps or steps < 1:
        raise ConfigError(f"steps must be a positive integer, got {steps!r}")
    inner = _advance(spec, grid, lo, hi, int(steps), scheme)
    mat = free_propagator(grid, x1 - hi)[:, None] * inner * free_propagator(grid, lo - x0)[None, :]
    assert mat.shape == (n2, n2)
    return BlockOperator(grid, mat)


def compose(tms: Sequence[BlockOperator]) -> BlockOperator:
    """Product of per-slice transfer matrices, list ordered left slice first."""
    tms = list(tms)
    if not tms:
        raise ConfigError("compose needs at least one operator")
    out = tms[0]
    for t in tms[1:]:
        out = t @ out
    return out


def _slice_steps(steps, spec, grid, nslices):
    total = default_steps(spec, grid) if steps is None else int(steps)
    return max(1, int(math.ceil(total / nslices)))


def auxiliary_tm(
    spec: PotentialSpec,
    grid: TransverseGrid,
    slices: int | None = None,
    steps: int | None = None,
    scheme: str = "magnus4",
) -> BlockOperator:
    """Auxiliary transfer matrix on the full (oscillating + evanescent) grid.

    ``steps`` is the total number of integrator steps across the support,
    split evenly over the slices, so partitions with a common divisor share
    the same step grid.
    """
    if spec.is_delta_line:
        return BlockOperator(grid, _delta_aux_matrix(spec, grid))
    edges = slice_edges(spec, grid, slices)
    _growth_guard(grid, max(abs(edges[0]), abs(edges[-1])), "auxiliary transfer matrix")
    per = _slice_steps(steps, spec, grid, len(edges) - 1)
    parts = []
    for a, b in zip(edges[:-1], edges[1:]):
        u = evolve(spec, a, b, grid, per, scheme).matrix
        parts.append(BlockOperator(grid, free_propagator(grid, -b)[:, None] * u * free_propagator(grid, a)[None, :]))
    return compose(parts)


# ---------------------------------------------------------------------------
# scattering-form composition


def transfer_to_scattering(t: np.ndarray) -> np.ndarray:
    """Map [U(b); L(b)] = T [U(a); L(a)] to [U(b); L(a)] = S [U(a); L(b)]."""
    n = t.shape[0] // 2
    t11, t12, t21, t22 = t[:n, :n], t[:n, n:], t[n:, :n], t[n:, n:]
    lu = sla.lu_factor(t22)
    s22 = sla.lu_solve(lu, np.eye(n))
    x = sla.lu_solve(lu, t21)
    s12 = t12 @ s22
    s11 = t11 - t12 @ x
    return np.block([[s11, s12], [-x, s22]])


def scattering_to_transfer(s: np.ndarray) -> np.ndarray:
    """Inverse of :func:`transfer_to_scattering`."""
    n = s.shape[0] // 2
    s11, s12, s21, s22 = s[:n, :n], s[:n, n:], s[n:, :n], s[n:, n:]
    lu = sla.lu_factor(s22)
    t22 = sla.lu_solve(lu, np.eye(n))
    y = sla.lu_solve(lu, s21)
    return np.block([[s11 - s12 @ y, s12 @ t22], [-y, t22]])


def star_product(sa: np.ndarray, sb: np.ndarray) -> np.ndarray:
    """Scattering form of slice A followed (to the right) by slice B."""
    n = sa.shape[0] // 2
    a11, a12, a21, a22 = sa[:n, :n], sa[:n, n:], sa[n:, :n], sa[n:, n:]
    b11, b12, b21, b22 = sb[:n, :n], sb[:n, n:], sb[n:, :n], sb[n:, n:]
    eye = np.eye(n)
    lu = sla.lu_factor(eye - b21 @ a12)
    xb21a11 = sla.lu_solve(lu, b21 @ a11)
    xb22 = sla.lu_solve(lu, b22)
    s11 = b11 @ (a11 + a12 @ xb21a11)
    s12 = b11 @ (a12 @ xb22) + b12
    s21 = a21 + a22 @ xb21a11
    s22 = a22 @ xb22
    return np.block([[s11, s12], [s21, s22]])


def _osc_from_scattering(s: np.ndarray, grid: TransverseGrid) -> np.ndarray:
    n, m = grid.n_nodes, grid.n_osc
    idx = np.concatenate([np.arange(m), n + np.arange(m)])
    s_osc = s[np.ix_(idx, idx)]
    try:
        return scattering_to_transfer(s_osc)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"oscillating transmission block is singular: {exc}") from exc


def _eliminate(spec, grid, slices, steps, scheme) -> np.ndarray:
    if spec.is_delta_line:
        m = _delta_aux_matrix(spec, grid)
        xd = spec.x0
        u = free_propagator(grid, xd)[:, None] * m * free_propagator(grid, -xd)[None, :]
        return _osc_from_scattering(transfer_to_scattering(u), grid)
    edges = slice_edges(spec, grid, slices, ELIM_SLICE_GROWTH)
    per = _slice_steps(steps, spec, grid, len(edges) - 1)
    s_tot = None
    for a, b in zip(edges[:-1], edges[1:]):
        u = evolve(spec, a, b, grid, per, scheme).matrix
        s = transfer_to_scattering(u)
        s_tot = s if s_tot is None else star_product(s_tot, s)
    return _osc_from_scattering(s_tot, grid)


def fundamental_tm(
    spec: PotentialSpec,
    grid: TransverseGrid,
    slices: int | None = None,
    steps: int | None = None,
    scheme: str = "magnus4",
    route: str = "auto",
) -> BlockOperator:
    """Fundamental transfer matrix on the oscillating sector.

    Parameters
    ----------
    route : {"auto", "sandwich", "eliminate"}
        ``"auto"`` uses the sandwich for delta-line potentials and the
        evanescent elimination otherwise.  See the module docstring.
    """
    if route == "auto":
        route = "sandwich" if spec.is_delta_line else "eliminate"
    if route == "sandwich":
        return auxiliary_tm(spec, grid, slices, steps, scheme).osc_part()
    if route == "eliminate":
        return BlockOperator(grid, _eliminate(spec, grid, slices, steps, scheme), "osc")
    raise ConfigError(f"unknown route {route!r}")


def sandwich_discrepancy(spec: PotentialSpec, grid: TransverseGrid, **kw) -> float:
    """max|sandwich - eliminate| / max|eliminate - I| on the oscillating block.

    A diagnostic of how much evanescent feedback the sandwich misses.
    """
    a = fundamental_tm(spec, grid, route="sandwich", **kw).matrix
    b = fundamental_tm(spec, grid, route="eliminate", **kw).matrix
    ref = np.max(np.abs(b - np.eye(b.shape[0])))
    diff = float(np.max(np.abs(a - b)))
    return diff / ref if ref > 0 else diff


def naive_projected_tm(
    spec: PotentialSpec,
    grid: TransverseGrid,
    slices: int | None = None,
    steps: int | None = None,
    scheme: str = "magnus4",
) -> BlockOperator:
    """Sandwich of the auxiliary matrix computed with V replaced by Pi V Pi."""
    proj = ProjectedPotential(
        dimension=spec.dimension, a_minus=spec.a_minus, a_plus=spec.a_plus,
        kind=spec.kind, scale=spec.scale, base=spec,
    )
    return auxiliary_tm(proj, grid, slices, steps, scheme).osc_part()


# ---------------------------------------------------------------------------
# Dyson series


def _chebyshev_integration(n: int):
    """Nodes on (-1, 1), cumulative-integration matrix and total weights."""
    cheb = np.polynomial.chebyshev
    x = np.cos(np.pi * (np.arange(n) + 0.5) / n)[::-1]
    v = cheb.chebvander(x, n - 1)
    coef = np.linalg.solve(v, np.eye(n))
    icoef = cheb.chebint(coef, lbnd=-1.0, axis=0)
    s = cheb.chebvander(x, n) @ icoef
    q = (cheb.chebvander(np.array([1.0]), n) @ icoef)[0]
    return x, s, q


def truncated_dyson(
    spec: PotentialSpec,
    grid: TransverseGrid,
    n_max: int,
    n_x: int = 32,
) -> BlockOperator:
    """Pi [I + sum_{n<=n_max} (-i)^n int...int H(x_n)...H(x_1)] Pi.

    Nested integrals use a Chebyshev cumulative-integration matrix on the
    support, so the ordered integral of order n costs n matrix sweeps.
    """
    if int(n_max) != n_max or n_max < 1:
        raise ConfigError("n_max must be a positive integer")
    n2 = 2 * grid.n_nodes
    if spec.is_delta_line:
        return BlockOperator(grid, _delta_aux_matrix(spec, grid)).osc_part()
    a, b = spec.a_minus, spec.a_plus
    t, smat, q = _chebyshev_integration(int(n_x))
    half = 0.5 * (b - a)
    xs = a + half * (t + 1.0)
    smat = smat * half
    q = q * half
    hs = np.stack([hamiltonian_interaction(spec, float(x), grid).matrix for x in xs])
    total = np.eye(n2, dtype=complex)
    prev = None
    for order in range(1, int(n_max) + 1):
        if prev is None:
            integrand = hs
        else:
            integrand = np.einsum("mij,mjk->mik", hs, prev)
        total = total + (-1j) ** order * np.tensordot(q, integrand, axes=1)
        if order < n_max:
            prev = np.tensordot(smat, integrand, axes=1)
    return BlockOperator(grid, total).osc_part()


# ---------------------------------------------------------------------------
# regression snapshots


def save_block_operator(path, op: BlockOperator, extra: dict | None = None) -> None:
    """Binary dump: JSON header line, then row-major little-endian complex128."""
    header = {"grid": op.grid.describe(), "sector": op.sector, "shape": list(op.matrix.shape)}
    if extra:
        header.update(extra)
    data = np.ascontiguousarray(op.matrix, dtype="<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(data)


def load_block_operator(path) -> tuple[dict, np.ndarray]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        data = fh.read()
    mat = np.frombuffer(data, dtype="<c16").reshape(header["shape"])
    return header, mat
