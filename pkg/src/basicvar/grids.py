"""Discretization of leaf-constant functions on the quotient.

A :class:`QuotientGrid` samples the quotient on uniform nodes and carries
density-weighted quadrature weights, so that ``sum(w * u)`` approximates the
manifold integral of the lifted function.  Grids are uniform on purpose:
integer-cell shifts stay exact symmetries on circles and refinement studies
are straightforward.  No boundary condition is imposed at singular interval
endpoints; the vanishing density already suppresses their weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .models import QuotientModel


class GridMismatchError(ValueError):
    """A function was evaluated against a grid it does not live on."""


@dataclass(frozen=True, eq=False)
class QuotientGrid:
    """Uniform nodes on the quotient with density-weighted quadrature.

    Intervals include both endpoints and use trapezoid coefficients;
    circles wrap periodically with plain midpoint-style weights.
    """

    model: QuotientModel
    N: int
    nodes: np.ndarray
    weights: np.ndarray
    spacing: float

    @classmethod
    def build(cls, model: QuotientModel, N: int) -> "QuotientGrid":
        if N < 3:
            raise ValueError("need at least 3 nodes")
        T = model.domain.length
        if model.domain.is_circle:
            h = T / N
            nodes = h * np.arange(N)
            coeff = np.ones(N)
        else:
            h = T / (N - 1)
            nodes = np.linspace(0.0, T, N)
            coeff = np.ones(N)
            coeff[0] = coeff[-1] = 0.5
        density = np.asarray(model.density_at(nodes), dtype=float)
        if np.any(density < 0.0) or np.any(density[1:-1] <= 0.0):
            raise ValueError("density must be positive on interior nodes")
        weights = density * coeff * h
        return cls(model=model, N=N, nodes=nodes, weights=weights, spacing=h)

    @property
    def is_circle(self) -> bool:
        return self.model.domain.is_circle

    def refined(self) -> "QuotientGrid":
        """Grid with halved spacing (2N on circles, 2N-1 on intervals)."""
        N = 2 * self.N if self.is_circle else 2 * self.N - 1
        return QuotientGrid.build(self.model, N)

    def total_weight(self) -> float:
        return float(np.sum(self.weights))


@dataclass(frozen=True, eq=False)
class BasicFunction:
    """A leaf-constant function: one value per quotient node."""

    grid: QuotientGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.N,):
            raise GridMismatchError(
                f"expected {self.grid.N} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: QuotientGrid, c: float) -> "BasicFunction":
        return cls(grid, np.full(grid.N, float(c)))

    @classmethod
    def from_callable(cls, grid: QuotientGrid, fn) -> "BasicFunction":
        return cls(grid, np.asarray(fn(grid.nodes), dtype=float))

    def with_values(self, values: np.ndarray) -> "BasicFunction":
        return BasicFunction(self.grid, values)


def _check_grid(grid: QuotientGrid, u: BasicFunction) -> None:
    if u.grid is not grid:
        same = (u.grid.N == grid.N
                and u.grid.model.name == grid.model.name
                and u.grid.model.domain == grid.model.domain)
        if not same:
            raise GridMismatchError("function does not live on the given grid")


def integrate(grid: QuotientGrid, u: BasicFunction) -> float:
    """Weighted quadrature of the lifted function over the manifold."""
    _check_grid(grid, u)
    return float(np.dot(grid.weights, u.values))


def differentiate_values(grid: QuotientGrid, values: np.ndarray) -> np.ndarray:
    """Second-order derivative stencil on raw values.

    Central differences inside, one-sided second-order at interval
    endpoints, periodic wrap on circles.
    """
    v = np.asarray(values, dtype=float)
    h = grid.spacing
    if grid.is_circle:
        return (np.roll(v, -1, axis=0) - np.roll(v, 1, axis=0)) / (2.0 * h)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    # one-sided second order, grouped as differences so constants are exact
    out[0] = (4.0 * (v[1] - v[0]) - (v[2] - v[0])) / (2.0 * h)
    out[-1] = (4.0 * (v[-1] - v[-2]) - (v[-1] - v[-3])) / (2.0 * h)
    return out


def derivative(grid: QuotientGrid, u: BasicFunction) -> BasicFunction:
    """Discrete quotient derivative; for arc-length quotients this is |grad u|-signed."""
    _check_grid(grid, u)
    if grid.N < 3:
        raise ValueError("derivative needs at least 3 nodes")
    return BasicFunction(grid, differentiate_values(grid, u.values))


def derivative_matrix(grid: QuotientGrid) -> sparse.csr_matrix:
    """Sparse matrix version of :func:`differentiate_values` (same stencils)."""
    N, h = grid.N, grid.spacing
    rows, cols, vals = [], [], []
    if grid.is_circle:
        for i in range(N):
            rows += [i, i]
            cols += [(i + 1) % N, (i - 1) % N]
            vals += [1.0 / (2 * h), -1.0 / (2 * h)]
    else:
        rows += [0, 0, 0]
        cols += [0, 1, 2]
        vals += [-3.0 / (2 * h), 4.0 / (2 * h), -1.0 / (2 * h)]
        for i in range(1, N - 1):
            rows += [i, i]
            cols += [i + 1, i - 1]
            vals += [1.0 / (2 * h), -1.0 / (2 * h)]
        rows += [N - 1, N - 1, N - 1]
        cols += [N - 1, N - 2, N - 3]
        vals += [3.0 / (2 * h), -4.0 / (2 * h), 1.0 / (2 * h)]
    return sparse.csr_matrix((vals, (rows, cols)), shape=(N, N))


def lp_norm(grid: QuotientGrid, u: BasicFunction, q: float) -> float:
    """Density-weighted Lebesgue norm ``(∫ |u|^q)^{1/q}``."""
    if q < 1.0:
        raise ValueError("q must be >= 1")
    _check_grid(grid, u)
    total = float(np.dot(grid.weights, np.abs(u.values) ** q))
    return total ** (1.0 / q)


def sobolev_energy(grid: QuotientGrid, u: BasicFunction, p: float) -> float:
    """Gradient mass ``∫ |u'|^p`` (without any leading constant)."""
    if p < 1.0:
        raise ValueError("p must be >= 1")
    _check_grid(grid, u)
    du = differentiate_values(grid, u.values)
    return float(np.dot(grid.weights, np.abs(du) ** p))


# ---------------------------------------------------------------------------
# embedding exponent arithmetic
# ---------------------------------------------------------------------------

REGIME_ALL = "all-exponents"
REGIME_SUBCRITICAL = "subcritical-improved"


def critical_exponent(n: int, p: float) -> float:
    """Critical Sobolev exponent ``n*p / (n - p)`` for ``1 <= p < n``."""
    if p < 1.0:
        raise ValueError("p must be >= 1")
    if p >= n:
        raise ValueError(f"critical exponent not applicable for p={p} >= n={n}")
    return n * p / (n - p)


@dataclass(frozen=True)
class ExponentReport:
    """Which Lebesgue exponents the reduced space embeds compactly into."""

    n: int
    p: float
    d_star: int
    regime: str
    p_star: float | None
    note: str

    def __post_init__(self) -> None:
        if self.p_star is not None and self.p < self.n:
            expected = critical_exponent(self.n, self.p)
            if abs(self.p_star - expected) > 1e-12 * expected:
                raise ValueError("inconsistent critical exponent")


def embedding_range(n: int, p: float, d_star: int) -> ExponentReport:
    """Exponent regime of the compact embedding for the reduced space.

    With every leaf at least ``d_star``-dimensional, the reduced space
    embeds compactly into ``L^q`` for every ``q >= 1`` once
    ``p >= n - d_star``; below that threshold the compact range still
    reaches beyond the critical exponent, but no closed-form upper exponent
    is available, so the report only records the critical value and the
    improvement claim.
    """
    if n < 3:
        raise ValueError("need ambient dimension n >= 3")
    if p < 1.0:
        raise ValueError("p must be >= 1")
    if d_star < 1:
        raise ValueError("model has a trivial leaf (d* = 0): not eligible")
    if p >= n - d_star:
        p_star = critical_exponent(n, p) if p < n else None
        return ExponentReport(
            n=n, p=p, d_star=d_star, regime=REGIME_ALL, p_star=p_star,
            note="compact embedding into L^q for every q >= 1")
    p_star = critical_exponent(n, p)
    return ExponentReport(
        n=n, p=p, d_star=d_star, regime=REGIME_SUBCRITICAL, p_star=p_star,
        note=("compact embedding into L^q for all q below some exponent "
              f"strictly larger than the critical value {p_star:.6g}; "
              "no closed form for that exponent is provided"))
