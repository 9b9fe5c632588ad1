"""Group averaging on full product grids.

A :class:`FullGrid` discretizes the product chart of a torus-leaf model:
uniform quotient nodes times one uniform periodic grid per leaf angle.  The
quadrature weight of a node depends only on its quotient index, which is the
discrete backbone of every exact-symmetry statement in this package:

* cyclic shifts along a leaf axis permute grid values without touching
  weights or coefficients, so shift invariance holds to machine precision;
* the group average (the mean over leaf indices) commutes exactly with any
  functional whose coefficients are leaf-constant.

Averages are computed with correctly-rounded per-node summation and the
grid-wide reductions accumulate in extended precision, so the identities
above survive floating point at the advertised tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grids import (BasicFunction, GridMismatchError, QuotientGrid,
                    differentiate_values)
from .models import TWO_PI, FullModel


@dataclass(frozen=True, eq=False)
class FullGrid:
    """Product discretization: quotient nodes x uniform periodic leaf grids.

    ``weight_column[i]`` is the quadrature weight of every node over
    quotient index ``i``; the full weight array would be its broadcast
    along the leaf axes.  It is built from the metric coefficients
    (``(2*pi)^k prod g_j^{1/2}`` divided by the leaf grid size), so its
    agreement with the quotient grid's density weights is exactly the
    product-chart consistency of the model.
    """

    full_model: FullModel
    quotient: QuotientGrid
    leaf_sizes: tuple[int, ...]
    leaf_spacings: tuple[float, ...]
    metric_values: np.ndarray        # shape (k, N_t)
    weight_column: np.ndarray        # shape (N_t,)

    @classmethod
    def build(cls, full_model: FullModel, n_quotient: int,
              leaf_sizes) -> "FullGrid":
        k = full_model.leaf_coord_count
        leaf_sizes = tuple(int(m) for m in np.atleast_1d(leaf_sizes))
        if len(leaf_sizes) == 1 and k > 1:
            leaf_sizes = leaf_sizes * k
        if len(leaf_sizes) != k:
            raise ValueError(f"expected {k} leaf sizes, got {leaf_sizes}")
        if any(m < 4 for m in leaf_sizes):
            raise ValueError("leaf grids need at least 4 nodes")
        quotient = QuotientGrid.build(full_model.quotient, n_quotient)
        g = full_model.metric_at(quotient.nodes)
        if np.any(g[:, 1:-1] <= 0.0):
            raise ValueError("metric coefficients must be positive inside")
        coeff = np.ones(quotient.N)
        if not quotient.is_circle:
            coeff[0] = coeff[-1] = 0.5
        column = coeff * quotient.spacing \
            * TWO_PI ** k * np.prod(np.sqrt(g), axis=0) \
            / np.prod([float(m) for m in leaf_sizes])
        return cls(full_model=full_model, quotient=quotient,
                   leaf_sizes=leaf_sizes,
                   leaf_spacings=tuple(TWO_PI / m for m in leaf_sizes),
                   metric_values=g, weight_column=column)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.quotient.N,) + self.leaf_sizes

    @property
    def leaf_count(self) -> int:
        return int(np.prod(self.leaf_sizes))

    def total_weight(self) -> float:
        return float(np.dot(self.weight_column,
                            np.full(self.quotient.N, float(self.leaf_count))))

    def theta_nodes(self, axis: int) -> np.ndarray:
        return self.leaf_spacings[axis] * np.arange(self.leaf_sizes[axis])


@dataclass(frozen=True, eq=False)
class FullGridFunction:
    """A function on the full product grid, indexed ``(t node, leaf indices...)``."""

    grid: FullGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise GridMismatchError(
                f"expected shape {self.grid.shape}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, grid: FullGrid, fn) -> "FullGridFunction":
        coords = np.meshgrid(grid.quotient.nodes,
                             *[grid.theta_nodes(j) for j in range(len(grid.leaf_sizes))],
                             indexing="ij")
        return cls(grid, np.asarray(fn(*coords), dtype=float))

    def with_values(self, values: np.ndarray) -> "FullGridFunction":
        return FullGridFunction(self.grid, values)


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------

def leaf_sums(values: np.ndarray) -> np.ndarray:
    """Per-quotient-node sums over all leaf indices, extended precision."""
    flat = values.reshape(values.shape[0], -1)
    return np.sum(flat, axis=1, dtype=np.longdouble)


def full_reduce(grid: FullGrid, values: np.ndarray) -> float:
    """Weighted sum over the full grid: ``sum_i wcol_i * sum_a values[i, a]``."""
    inner = leaf_sums(values)
    return float(np.dot(grid.weight_column.astype(np.longdouble), inner))


def integrate_full(grid: FullGrid, F: FullGridFunction) -> float:
    """Full-grid quadrature of ``F`` over the manifold."""
    _check_full(grid, F)
    return full_reduce(grid, F.values)


def _check_full(grid: FullGrid, F: FullGridFunction) -> None:
    if F.grid is not grid and F.values.shape != grid.shape:
        raise GridMismatchError("function does not live on the given full grid")


# ---------------------------------------------------------------------------
# lifting, averaging, shifting
# ---------------------------------------------------------------------------

def lift(u: BasicFunction, grid: FullGrid) -> FullGridFunction:
    """Extend a leaf-constant function to the full grid (constant along leaves)."""
    if u.grid.N != grid.quotient.N or not np.array_equal(u.grid.nodes,
                                                         grid.quotient.nodes):
        raise GridMismatchError("quotient grids do not match")
    values = np.broadcast_to(
        u.values.reshape((-1,) + (1,) * len(grid.leaf_sizes)), grid.shape)
    return FullGridFunction(grid, np.ascontiguousarray(values))


def average(F: FullGridFunction) -> BasicFunction:
    """Group average: correctly-rounded mean over the leaf indices per node.

    Uniform normalized measure on the leaf torus sampled on a uniform grid;
    exact for trigonometric polynomials below the grid's Nyquist degree, and
    a projection onto lifted leaf-constant functions.
    """
    grid = F.grid
    flat = F.values.reshape(grid.quotient.N, -1)
    m = float(flat.shape[1])
    means = np.fromiter((math.fsum(row) / m for row in flat),
                        dtype=float, count=flat.shape[0])
    return BasicFunction(grid.quotient, means)


def is_basic(F: FullGridFunction, tol: float = 0.0) -> tuple[bool, float]:
    """Whether ``F`` is leaf-constant; returns ``(verdict, max spread)``."""
    flat = F.values.reshape(F.grid.quotient.N, -1)
    deviation = float(np.max(flat.max(axis=1) - flat.min(axis=1)))
    return deviation <= tol, deviation


def shift(F: FullGridFunction, axis: int, cells: int) -> FullGridFunction:
    """Cyclic shift along leaf axis ``axis`` by ``cells`` grid cells.

    An exact isometry of the discretization: it permutes values and leaves
    weights untouched.
    """
    k = len(F.grid.leaf_sizes)
    if not 0 <= axis < k:
        raise ValueError(f"axis must be in [0, {k})")
    return FullGridFunction(F.grid, np.roll(F.values, int(cells), axis=1 + axis))


# ---------------------------------------------------------------------------
# symmetric integral functionals
# ---------------------------------------------------------------------------

def differentiate_t(grid: FullGrid, values: np.ndarray) -> np.ndarray:
    """Quotient-direction derivative on the full grid (same stencils as 1-d)."""
    return differentiate_values(grid.quotient, values)


def symmetric_functional(b: BasicFunction, L1: BasicFunction, L2: BasicFunction,
                         w: FullGridFunction) -> float:
    """``∫ L1(t) (grad b . grad w) + L2(t) w`` over the full grid.

    With ``b`` leaf-constant and the block-diagonal product metric, only the
    quotient component of ``grad w`` pairs with ``grad b``.
    """
    grid = w.grid
    for fn in (b, L1, L2):
        if fn.grid.N != grid.quotient.N:
            raise GridMismatchError("coefficients must live on the quotient grid")
    db = differentiate_values(grid.quotient, b.values)
    dwt = differentiate_t(grid, w.values)
    col = (L1.values * db)
    integrand = col.reshape((-1,) + (1,) * len(grid.leaf_sizes)) * dwt \
        + L2.values.reshape((-1,) + (1,) * len(grid.leaf_sizes)) * w.values
    return full_reduce(grid, integrand)


def verify_average_identity(b: BasicFunction, L1: BasicFunction,
                            L2: BasicFunction, F: FullGridFunction) -> float:
    """Residual ``|l(lift(average F)) - l(F)|`` of the averaging identity.

    Zero up to rounding: the average commutes with every ingredient of the
    functional because weights and coefficients are leaf-constant.
    """
    l_direct = symmetric_functional(b, L1, L2, F)
    l_avg = symmetric_functional(b, L1, L2, lift(average(F), F.grid))
    return abs(l_avg - l_direct)
