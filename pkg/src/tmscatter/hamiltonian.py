"""Block operators and the effective Hamiltonians.

State vectors are pairs (upper, lower) of functions of transverse momentum.
Operators on them are 2x2 blocks of grid matrices, stored here as a single
dense ``(2n, 2n)`` array with the upper component first.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, TransferOverflowError
from .momentum import GridFunction, TransverseGrid
from .potentials import PotentialSpec

log = logging.getLogger(__name__)

__all__ = [
    "KAPPA",
    "SIGMA3",
    "OVERFLOW_BOUND",
    "BlockOperator",
    "StateVector",
    "hamiltonian_full",
    "hamiltonian_interaction",
    "hamiltonian_unscaled",
    "free_hamiltonian",
]

KAPPA = np.array([[1.0, 1.0], [-1.0, -1.0]])
SIGMA3 = np.array([[1.0, 0.0], [0.0, -1.0]])
OVERFLOW_BOUND = 700.0


@dataclass(frozen=True, eq=False)
class BlockOperator:
    """2x2 block operator on a grid.

    Parameters
    ----------
    grid : TransverseGrid
    matrix : ndarray, shape (2n, 2n)
        ``n`` is ``grid.n_nodes`` for ``sector="full"`` and ``grid.n_osc``
        for ``sector="osc"``.
    sector : {"full", "osc"}
    """

    grid: TransverseGrid
    matrix: np.ndarray
    sector: str = "full"

    def __post_init__(self):
        if self.sector not in ("full", "osc"):
            raise ValueError(f"unknown sector {self.sector!r}")
        n = self.n
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (2 * n, 2 * n):
            raise ValueError(f"block operator must be {2 * n}x{2 * n}, got {mat.shape}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def n(self) -> int:
        return self.grid.n_nodes if self.sector == "full" else self.grid.n_osc

    @classmethod
    def identity(cls, grid: TransverseGrid, sector: str = "full") -> "BlockOperator":
        n = grid.n_nodes if sector == "full" else grid.n_osc
        return cls(grid, np.eye(2 * n, dtype=complex), sector)

    @classmethod
    def from_blocks(cls, grid, b11, b12, b21, b22, sector="full") -> "BlockOperator":
        return cls(grid, np.block([[b11, b12], [b21, b22]]), sector)

    def block(self, i: int, j: int) -> np.ndarray:
        """Block (i, j) with 1-based indices as in the 2x2 notation."""
        n = self.n
        return self.matrix[(i - 1) * n: i * n, (j - 1) * n: j * n]

    @property
    def b11(self):
        return self.block(1, 1)

    @property
    def b12(self):
        return self.block(1, 2)

    @property
    def b21(self):
        return self.block(2, 1)

    @property
    def b22(self):
        return self.block(2, 2)

    def _compatible(self, other: "BlockOperator"):
        if not isinstance(other, BlockOperator):
            raise TypeError("expected a BlockOperator")
        if other.sector != self.sector or not self.grid.same_as(other.grid):
            raise ConfigError("block operators live on different grids or sectors")

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            vec = self.matrix @ other.stacked(self.sector)
            return StateVector.from_stacked(self.grid, vec, self.sector)
        self._compatible(other)
        return BlockOperator(self.grid, self.matrix @ other.matrix, self.sector)

    def __add__(self, other):
        self._compatible(other)
        return BlockOperator(self.grid, self.matrix + other.matrix, self.sector)

    def __sub__(self, other):
        self._compatible(other)
        return BlockOperator(self.grid, self.matrix - other.matrix, self.sector)

    def __mul__(self, scalar):
        return BlockOperator(self.grid, self.matrix * scalar, self.sector)

    __rmul__ = __mul__

    def inverse(self) -> "BlockOperator":
        return BlockOperator(self.grid, np.linalg.inv(self.matrix), self.sector)

    def osc_indices(self) -> np.ndarray:
        n, m = self.grid.n_nodes, self.grid.n_osc
        if self.sector == "osc":
            return np.arange(2 * m)
        return np.concatenate([np.arange(m), n + np.arange(m)])

    def osc_part(self) -> "BlockOperator":
        """Oscillating sub-block (the Pi-sandwich, ev rows/columns dropped)."""
        if self.sector == "osc":
            return self
        idx = self.osc_indices()
        return BlockOperator(self.grid, self.matrix[np.ix_(idx, idx)], "osc")

    def embed(self) -> "BlockOperator":
        """Full-grid operator with zero evanescent rows and columns."""
        if self.sector == "full":
            return self
        n = self.grid.n_nodes
        idx = np.concatenate([np.arange(self.grid.n_osc), n + np.arange(self.grid.n_osc)])
        full = np.zeros((2 * n, 2 * n), dtype=complex)
        full[np.ix_(idx, idx)] = self.matrix
        return BlockOperator(self.grid, full, "full")

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.matrix))) if self.matrix.size else 0.0

    def conjugate_diag(self, left: np.ndarray, right: np.ndarray) -> "BlockOperator":
        """diag(left) @ self @ diag(right) with vectors of length 2n."""
        return BlockOperator(self.grid, left[:, None] * self.matrix * right[None, :], self.sector)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pair of grid functions (upper, lower)."""

    grid: TransverseGrid
    upper: GridFunction
    lower: GridFunction

    def __post_init__(self):
        if self.upper.grid is not self.grid and not self.upper.grid.same_as(self.grid):
            raise ValueError("upper component lives on a different grid")
        if self.lower.grid is not self.grid and not self.lower.grid.same_as(self.grid):
            raise ValueError("lower component lives on a different grid")

    def stacked(self, sector: str = "full") -> np.ndarray:
        if sector == "full":
            return np.concatenate([self.upper.values, self.lower.values])
        m = self.grid.n_osc
        return np.concatenate([self.upper.values[:m], self.lower.values[:m]])

    @classmethod
    def from_stacked(cls, grid, vec, sector: str = "full") -> "StateVector":
        if sector == "full":
            n = grid.n_nodes
            return cls(grid, GridFunction(grid, vec[:n]), GridFunction(grid, vec[n:]))
        m = grid.n_osc
        return cls(grid, GridFunction.from_osc(grid, vec[:m]), GridFunction.from_osc(grid, vec[m:]))


def _assemble(v: np.ndarray, row_phase: np.ndarray, col_phase: np.ndarray, inv_w: np.ndarray) -> np.ndarray:
    """0.5 * blocks K_jl diag(row_j) V diag(col_l / varpi)."""
    up_r, lo_r = row_phase, 1.0 / row_phase
    up_c, lo_c = col_phase * inv_w, inv_w / col_phase
    a = 0.5 * (up_r[:, None] * v)
    b = 0.5 * (lo_r[:, None] * v)
    return np.block([[a * up_c[None, :], a * lo_c[None, :]], [-b * up_c[None, :], -b * lo_c[None, :]]])


def free_hamiltonian(grid: TransverseGrid) -> BlockOperator:
    """-i varpi_i sigma3 on the full grid."""
    vi = grid.varpi_i
    return BlockOperator(grid, np.diag(np.concatenate([-1j * vi, 1j * vi])))


def _no_delta(spec: PotentialSpec):
    if spec.is_delta_line:
        raise ConfigError("delta-line potentials have no pointwise Hamiltonian; use the closed-form transfer matrix")


def hamiltonian_full(spec: PotentialSpec, x: float, grid: TransverseGrid) -> BlockOperator:
    """Discretized H(x) = 1/2 e^{-i wr x s3} V K e^{i wr x s3} / varpi - i wi s3."""
    _no_delta(spec)
    w = grid.varpi
    vi = w.imag
    free = np.concatenate([-1j * vi, 1j * vi])
    if not spec.inside(x):
        return BlockOperator(grid, np.diag(free))
    v = spec.interaction_matrix(x, grid)
    ph = np.exp(-1j * w.real * x)
    mat = _assemble(v, ph, 1.0 / ph, 1.0 / w)
    mat[np.diag_indices_from(mat)] += free
    return BlockOperator(grid, mat)


def hamiltonian_interaction(
    spec: PotentialSpec, x: float, grid: TransverseGrid, overflow_bound: float = OVERFLOW_BOUND
) -> BlockOperator:
    """Discretized interaction-picture Hamiltonian 1/2 e^{-i w x s3} V K e^{i w x s3} / varpi.

    Raises
    ------
    TransferOverflowError
        If max|varpi_i| |x| exceeds ``overflow_bound``.
    """
    _no_delta(spec)
    n = grid.n_nodes
    if not spec.inside(x):
        return BlockOperator(grid, np.zeros((2 * n, 2 * n), dtype=complex))
    w = grid.varpi
    growth = float(np.max(np.abs(w.imag), initial=0.0)) * abs(x)
    if growth > overflow_bound:
        raise TransferOverflowError(
            f"evanescent factor exp({growth:.1f}) at x={x:g} exceeds exp({overflow_bound:g}); "
            "shift the origin into the support, use more slices or a smaller p_max"
        )
    v = spec.interaction_matrix(x, grid)
    ph = np.exp(-1j * w * x)
    return BlockOperator(grid, _assemble(v, ph, 1.0 / ph, 1.0 / w))


def hamiltonian_unscaled(spec: PotentialSpec, x: float, grid: TransverseGrid) -> BlockOperator:
    """Hamiltonian for the unscaled amplitudes A, B.

    1/2 e^{-i wr x s3} varpi^-1 V K e^{i wr x s3} - i wi s3, assembled
    directly (the scaled form divides columns instead of rows).
    """
    _no_delta(spec)
    w = grid.varpi
    vi = w.imag
    free = np.concatenate([-1j * vi, 1j * vi])
    if not spec.inside(x):
        return BlockOperator(grid, np.diag(free))
    v = spec.interaction_matrix(x, grid) / w[:, None]
    ph = np.exp(-1j * w.real * x)
    mat = _assemble(v, ph, 1.0 / ph, np.ones_like(w))
    mat[np.diag_indices_from(mat)] += free
    return BlockOperator(grid, mat)
