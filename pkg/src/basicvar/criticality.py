"""Full-grid verification that reduced critical points are true critical points.

A converged solve lives on the quotient; this module lifts it to the full
product grid and tests the first variation against directions that are not
leaf-constant.  Two tiers of checks are kept apart on purpose:

* exact-symmetry tier (machine precision, any mesh): integer-cell shifts
  leave the first variation unchanged, and the assembled full gradient at a
  leaf-constant point is itself leaf-constant, because every coefficient in
  the discretization depends on the quotient index alone;

* discretization tier (second order in the quotient spacing): metric
  quadrature errors, measured by refinement.

Test directions are band-limited in the leaf angles (at most a quarter of
the Nyquist degree) so shifts act exactly and aliasing cannot fake a
residual, and their envelopes carry the square-root metric factor of each
participating angle so they are honest functions of the underlying manifold
even where a leaf circle collapses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .averaging import (FullGrid, FullGridFunction, differentiate_t,
                        full_reduce, integrate_full, leaf_sums, lift)
from .functionals import GeneralEnergySpec, KirchhoffSpec, odd_power
from .grids import BasicFunction, QuotientGrid, derivative_matrix
from .models import FullModel
from .solver import SolveResult


def _bshape(grid: FullGrid) -> tuple[int, ...]:
    return (grid.quotient.N,) + (1,) * len(grid.leaf_sizes)


def differentiate_theta(grid: FullGrid, values: np.ndarray, axis: int) -> np.ndarray:
    """Central periodic derivative along leaf axis ``axis``."""
    h = grid.leaf_spacings[axis]
    ax = 1 + axis
    return (np.roll(values, -1, axis=ax) - np.roll(values, 1, axis=ax)) / (2.0 * h)


def _transpose_theta(grid: FullGrid, values: np.ndarray, axis: int) -> np.ndarray:
    # the periodic central stencil is antisymmetric, so its transpose flips sign
    h = grid.leaf_spacings[axis]
    ax = 1 + axis
    return (np.roll(values, 1, axis=ax) - np.roll(values, -1, axis=ax)) / (2.0 * h)


def _inverse_metric_columns(grid: FullGrid) -> list[np.ndarray]:
    """``1/g_j(t_i)`` as broadcast columns, zero where a leaf circle collapses.

    At an exactly degenerate node the angle direction carries no volume, so
    its contribution is the limiting zero; masking keeps 0*inf out of the
    arithmetic.
    """
    shape = _bshape(grid)
    cols = []
    for j in range(len(grid.leaf_sizes)):
        g = grid.metric_values[j]
        cols.append(np.where(g > 0.0, 1.0 / np.where(g > 0.0, g, 1.0), 0.0)
                    .reshape(shape))
    return cols


class FullFirstVariation:
    """First variation of an energy at a fixed full-grid point.

    With ``lam_star`` given, the nonlocal potential prefactor is replaced by
    that number (the effective-eigenvalue form used once the multiplier has
    been absorbed); otherwise the raw nonlocal form is evaluated.
    """

    def __init__(self, spec, grid: FullGrid, U: FullGridFunction,
                 lam_star: float | None = None):
        self.spec, self.grid = spec, grid
        k = len(grid.leaf_sizes)
        vals = U.values
        self.dUt = differentiate_t(grid, vals)
        self.dUj = [differentiate_theta(grid, vals, j) for j in range(k)]
        self.ginv = _inverse_metric_columns(grid)
        grad_sq = self.dUt ** 2
        for j in range(k):
            grad_sq = grad_sq + self.ginv[j] * self.dUj[j] ** 2
        p = spec.p
        base = grad_sq ** ((p - 2.0) / 2.0)
        wcol = grid.weight_column.reshape(_bshape(grid))

        if isinstance(spec, KirchhoffSpec):
            ps = spec.p_star
            gradient_mass = full_reduce(grid, grad_sq ** (p / 2.0))
            self.m_at = float(spec.weight.m(gradient_mass / p))
            if lam_star is None:
                pot_mass = full_reduce(grid, np.abs(vals) ** ps) / ps
                pot_coeff = spec.lam * pot_mass ** spec.r
            else:
                pot_coeff = lam_star
            self.q1t = self.m_at * base * self.dUt
            self.q1j = [self.m_at * base * self.ginv[j] * self.dUj[j]
                        for j in range(k)]
            self.q0 = -pot_coeff * odd_power(vals, ps)
        elif isinstance(spec, GeneralEnergySpec):
            t_col = grid.quotient.nodes.reshape(_bshape(grid))
            gradient_mass = full_reduce(grid, grad_sq ** (p / 2.0))
            self.m_at = float(spec.weight.m(gradient_mass))
            M_at = float(spec.weight.M(gradient_mass))
            lag = spec.lagrangian
            L_mass = full_reduce(grid, np.asarray(lag.L(grad_sq, vals, t_col),
                                                  dtype=float) + 0.0 * vals)
            if lam_star is None:
                F_mass = full_reduce(grid, np.asarray(
                    spec.potential.F(vals, t_col), dtype=float) + 0.0 * vals)
                pot_coeff = (spec.lam / spec.a) * (spec.r + 1.0) \
                    * F_mass ** spec.r
            else:
                pot_coeff = lam_star
            L1 = np.asarray(lag.dL_ds1(grad_sq, vals, t_col), dtype=float)
            L2 = np.asarray(lag.dL_ds2(grad_sq, vals, t_col), dtype=float)
            coeff = p * self.m_at * L_mass * base + 2.0 * M_at * L1
            self.q1t = coeff * self.dUt
            self.q1j = [coeff * self.ginv[j] * self.dUj[j] for j in range(k)]
            self.q0 = (M_at * L2 + 0.0 * vals
                       - pot_coeff * np.asarray(spec.potential.f(vals, t_col),
                                                dtype=float))
        else:
            raise TypeError(f"unsupported spec type {type(spec).__name__}")
        self._wcol = wcol

    def apply(self, W: FullGridFunction) -> float:
        grid = self.grid
        dWt = differentiate_t(grid, W.values)
        integrand = self.q1t * dWt + self.q0 * W.values
        for j in range(len(grid.leaf_sizes)):
            integrand = integrand + self.q1j[j] * differentiate_theta(grid,
                                                                      W.values, j)
        return full_reduce(grid, integrand)

    def sobolev_norm(self, W: FullGridFunction) -> float:
        grid = self.grid
        dWt = differentiate_t(grid, W.values)
        dens = W.values ** 2 + dWt ** 2
        for j in range(len(grid.leaf_sizes)):
            dens = dens + self.ginv[j] * differentiate_theta(grid, W.values, j) ** 2
        return math.sqrt(max(full_reduce(grid, dens), 0.0))

    def dual_components(self) -> np.ndarray:
        """Assembled components ``dJ[delta_{i,a}]`` over the whole grid."""
        grid = self.grid
        D = derivative_matrix(grid.quotient)
        y = (self._wcol * self.q1t).reshape(grid.quotient.N, -1)
        comp = np.asarray(D.T @ y).reshape(grid.shape)
        for j in range(len(grid.leaf_sizes)):
            comp = comp + _transpose_theta(grid, self._wcol * self.q1j[j], j)
        return comp + self._wcol * self.q0


def full_denergy(spec, grid: FullGrid, U: FullGridFunction, W: FullGridFunction,
                 lam_star: float | None = None) -> float:
    """Directional derivative of the full-manifold energy at ``U`` along ``W``."""
    return FullFirstVariation(spec, grid, U, lam_star=lam_star).apply(W)


# ---------------------------------------------------------------------------
# exact-symmetry checks
# ---------------------------------------------------------------------------

def gradient_is_basic_check(spec, grid: FullGrid, b: BasicFunction) -> float:
    """Leaf spread of the assembled full gradient at a leaf-constant point.

    Assembles the first-variation components against every nodal basis
    function on the full grid (weight-multiplied dual components; the
    density-vanishing endpoints make a pointwise weighted division
    ill-posed) and returns
    ``max_i (max_a g - min_a g) / (1 + max |g|)``.  The input need not be a
    critical point.
    """
    u_interp = _match_quotient(b, grid.quotient)
    comp = FullFirstVariation(spec, grid, lift(u_interp, grid)).dual_components()
    flat = comp.reshape(grid.quotient.N, -1)
    spread = float(np.max(flat.max(axis=1) - flat.min(axis=1)))
    return spread / (1.0 + float(np.max(np.abs(comp))))


def flow_invariance_check(spec, grid: FullGrid, b: BasicFunction,
                          W: FullGridFunction, shifts) -> float:
    """Max change of the first variation under integer-cell leaf shifts.

    ``shifts`` is an iterable of ``(axis, cells)`` pairs.  Exact discrete
    isometries: the deviation is pure floating-point noise.
    """
    from .averaging import shift as _shift
    u_interp = _match_quotient(b, grid.quotient)
    fv = FullFirstVariation(spec, grid, lift(u_interp, grid))
    baseline = fv.apply(W)
    worst = 0.0
    for axis, cells in shifts:
        worst = max(worst, abs(fv.apply(_shift(W, axis, cells)) - baseline))
    return worst


# ---------------------------------------------------------------------------
# randomized non-basic directions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Direction:
    """A test direction defined resolution-independently."""

    kind: str                      # "leaf-mode" | "mixed"
    axes: tuple[int, ...]
    modes: tuple[int, ...]
    phases: tuple[float, ...]
    envelope: tuple[float, ...]
    basic_envelope: tuple[float, ...] | None

    def sample(self, grid: FullGrid) -> FullGridFunction:
        t = grid.quotient.nodes
        chi = _envelope_values(self.envelope, t, grid.quotient)
        for j in self.axes:
            chi = chi * np.sqrt(np.maximum(grid.metric_values[j], 0.0))
        shape = _bshape(grid)
        values = chi.reshape(shape).copy()
        for j, mode, phase in zip(self.axes, self.modes, self.phases):
            theta = grid.theta_nodes(j)
            factor_shape = [1] * (1 + len(grid.leaf_sizes))
            factor_shape[1 + j] = grid.leaf_sizes[j]
            values = values * np.cos(mode * theta + phase).reshape(factor_shape)
        values = np.broadcast_to(values, grid.shape).copy()
        if self.basic_envelope is not None:
            base = _envelope_values(self.basic_envelope, t, grid.quotient)
            values = values + base.reshape(shape)
        return FullGridFunction(grid, values)


def _envelope_values(coeffs, t: np.ndarray, quotient: QuotientGrid) -> np.ndarray:
    T = quotient.model.domain.length
    c = np.asarray(coeffs, dtype=float)
    if quotient.is_circle:
        x = 2.0 * np.pi * t / T
        return c[0] + c[1] * np.cos(x) + c[2] * np.sin(x) + c[3] * np.cos(2.0 * x)
    x = t / T
    return c[0] + c[1] * x + c[2] * x ** 2 + c[3] * x ** 3


def _draw_direction(rng: np.random.Generator, k: int, leaf_sizes,
                    kind: str) -> _Direction:
    count = int(rng.integers(1, k + 1))
    axes = tuple(sorted(rng.choice(k, size=count, replace=False).tolist()))
    modes = tuple(int(rng.integers(1, max(2, leaf_sizes[j] // 4)))
                  for j in axes)
    phases = tuple(float(rng.uniform(0.0, 2.0 * np.pi)) for _ in axes)
    envelope = tuple(rng.uniform(-1.0, 1.0, size=4).tolist())
    basic = tuple(rng.uniform(-1.0, 1.0, size=4).tolist()) \
        if kind == "mixed" else None
    return _Direction(kind=kind, axes=axes, modes=modes, phases=phases,
                      envelope=envelope, basic_envelope=basic)


def _match_quotient(u: BasicFunction, target: QuotientGrid) -> BasicFunction:
    """Move ``u`` onto ``target`` (same model), splining when sizes differ."""
    if u.grid.N == target.N and np.array_equal(u.grid.nodes, target.nodes):
        return BasicFunction(target, u.values)
    src = u.grid
    if src.is_circle:
        t = np.append(src.nodes, src.model.domain.length)
        v = np.append(u.values, u.values[0])
        spline = CubicSpline(t, v, bc_type="periodic")
    else:
        spline = CubicSpline(src.nodes, u.values)
    return BasicFunction(target, spline(target.nodes))


# ---------------------------------------------------------------------------
# the verification report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DirectionResidual:
    kind: str
    residuals: tuple[float, ...]      # one per resolution, normalized
    order: float | None               # log2 decay rate, None when at the floor


@dataclass(frozen=True)
class CriticalityReport:
    resolutions: tuple[tuple[int, tuple[int, ...]], ...]
    residual_per_direction: tuple[DirectionResidual, ...]
    max_nonbasic_residual: float
    refinement_order_estimate: float
    basic_deviation_of_gradient: float
    pure_floor: float = 1e-10
    mixed_floor: float = 1e-12

    def leaf_mode_ok(self) -> bool:
        return all(max(d.residuals) <= self.pure_floor
                   for d in self.residual_per_direction if d.kind == "leaf-mode")

    def mixed_ok(self, min_order: float = 1.5) -> bool:
        for d in self.residual_per_direction:
            if d.kind != "mixed":
                continue
            first, last = d.residuals[0], d.residuals[-1]
            at_floor = last <= self.mixed_floor
            decayed = last <= first / 2.0 ** min_order
            if not (at_floor or decayed):
                return False
        return True

    def passed(self, min_order: float = 1.5) -> bool:
        return self.leaf_mode_ok() and self.mixed_ok(min_order)


def verify_symmetric_criticality(spec, model: FullModel, result: SolveResult,
                                 num_dirs: int = 8, seed: int = 0,
                                 n_quotient: int = 401, leaf_sizes=64,
                                 lam_star: float | None = None
                                 ) -> CriticalityReport:
    """Check that a converged reduced solution kills the full first variation.

    Draws seeded random directions (half pure leaf modes with zero leaf
    average, half mixed with a lifted leaf-constant part), evaluates the
    normalized effective-eigenvalue first variation on the requested grid
    and on a once-refined quotient grid, and reports per-direction residuals
    with their decay rates.  Pure leaf modes must sit at the exact-symmetry
    floor at every resolution; mixed residuals must either sit at the floor
    or decay under refinement.
    """
    if not isinstance(model, FullModel):
        raise TypeError("verification needs a full product model")
    if not result.converged:
        raise ValueError("refusing to verify a non-converged result")
    if lam_star is None:
        lam_star = result.lambda_star
    k = model.leaf_coord_count

    coarse = FullGrid.build(model, n_quotient, leaf_sizes)
    fine_n = 2 * n_quotient if coarse.quotient.is_circle else 2 * n_quotient - 1
    grids = (coarse, FullGrid.build(model, fine_n, leaf_sizes))

    rng = np.random.default_rng(seed)
    kinds = ["leaf-mode" if i < (num_dirs + 1) // 2 else "mixed"
             for i in range(num_dirs)]
    directions = [_draw_direction(rng, k, coarse.leaf_sizes, kind)
                  for kind in kinds]

    residuals = np.empty((num_dirs, len(grids)))
    basic_dev = 0.0
    for gi, grid in enumerate(grids):
        u_here = _match_quotient(result.u, grid.quotient)
        fv = FullFirstVariation(spec, grid, lift(u_here, grid), lam_star=lam_star)
        for di, direction in enumerate(directions):
            W = direction.sample(grid)
            scale = fv.sobolev_norm(W)
            residuals[di, gi] = abs(fv.apply(W)) / scale
        if gi == 0:
            basic_dev = gradient_is_basic_check(spec, grid, u_here)

    per_direction = []
    orders = []
    floor = CriticalityReport.mixed_floor
    for di, direction in enumerate(directions):
        row = tuple(float(x) for x in residuals[di])
        order = None
        if row[0] > floor and row[-1] > floor:
            order = math.log2(row[0] / row[-1])
            if direction.kind == "mixed":
                orders.append(order)
        per_direction.append(DirectionResidual(kind=direction.kind,
                                               residuals=row, order=order))

    report = CriticalityReport(
        resolutions=tuple((g.quotient.N, g.leaf_sizes) for g in grids),
        residual_per_direction=tuple(per_direction),
        max_nonbasic_residual=float(np.max(residuals[:, -1])),
        refinement_order_estimate=float(np.median(orders)) if orders else math.nan,
        basic_deviation_of_gradient=basic_dev,
    )
    result.full_stationarity_residual = report.max_nonbasic_residual
    return report
