"""Constrained minimization on the discrete mass-constraint manifold.

The solver minimizes a reduced energy over leaf-constant functions with a
prescribed constraint mass (the critical-power mass ``∫ |u|^{p*}`` for
Kirchhoff specs, the potential mass ``∫ F(u, t)`` for general specs with a
homogeneous potential).  The constraint level is

``target(eps) = eps^{1/(r+1)} (r+1)^{1/(r+1)} p*``        (Kirchhoff)
``target(eps) = (a eps)^{1/(r+1)}``                       (general)

and the iteration is projected gradient descent:

1. represent the first variation in the density-weighted Sobolev inner
   product ``<u, v> = ∫ (u v + u' v') V dt`` (one sparse factorization per
   grid, reused across iterations);
2. remove the component along the constraint gradient;
3. take an Armijo backtracking step and re-project onto the constraint by
   multiplicative scaling, which is exact thanks to the homogeneity of the
   constraint mass.

At a converged point the Lagrange multiplier ``theta`` is recovered as the
weighted least-squares ratio of the two gradients, and the effective
eigenvalue is

``lambda* = lam eps^{r/(r+1)} (r+1)^{r/(r+1)} + theta p*``   (Kirchhoff)
``lambda* = (lam/a)(r+1)(a eps)^{r/(r+1)} + theta``          (general)

so that the minimizer satisfies the unconstrained stationarity condition
with ``lambda*`` in place of the nonlocal potential prefactor.

On the built-in models the global minimizers are constants (the gradient
term attains its floor there); the ``deflate`` flag restricts the search to
density-weighted mean-zero functions to probe non-constant constrained
critical points.  That mode is an exploratory device: its end points carry a
second multiplier for the mean constraint and are not stationary for the
original energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import factorized

from .functionals import (GeneralEnergySpec, KirchhoffSpec, energy,
                          first_variation, potential_mass, potential_mass_dual,
                          power_mass, power_mass_dual)
from .grids import BasicFunction, QuotientGrid, derivative_matrix
from .models import FullModel, QuotientModel


class ConstraintDegeneracyError(RuntimeError):
    """The constraint gradient vanished where it must not."""


class NumericalSolveError(RuntimeError):
    """The iteration produced a non-finite energy."""


# ---------------------------------------------------------------------------
# multiplier formulas and constraint levels
# ---------------------------------------------------------------------------

def constraint_target(epsilon: float, r: float, p_star: float) -> float:
    """Prescribed critical-power mass ``eps^{1/(r+1)} (r+1)^{1/(r+1)} p*``."""
    if epsilon <= 0.0 or r <= 0.0 or p_star <= 0.0:
        raise ValueError("epsilon, r and p_star must be positive")
    e = 1.0 / (r + 1.0)
    return epsilon ** e * (r + 1.0) ** e * p_star


def general_constraint_target(epsilon: float, a: float, r: float,
                              negative_branch: bool = False) -> float:
    """Prescribed potential mass ``+-(a eps)^{1/(r+1)}``."""
    if epsilon <= 0.0 or a <= 0.0 or r <= 0.0:
        raise ValueError("epsilon, a and r must be positive")
    value = (a * epsilon) ** (1.0 / (r + 1.0))
    return -value if negative_branch else value


def lambda_star_kirchhoff(epsilon: float, theta: float, lam: float, r: float,
                          p_star: float) -> float:
    """``lam eps^{r/(r+1)} (r+1)^{r/(r+1)} + theta p*``."""
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    e = r / (r + 1.0)
    return lam * epsilon ** e * (r + 1.0) ** e + theta * p_star


def lambda_star_general(epsilon: float, theta: float, lam: float, a: float,
                        r: float) -> float:
    """``(lam/a)(r+1)(a eps)^{r/(r+1)} + theta``."""
    if epsilon <= 0.0 or a <= 0.0:
        raise ValueError("epsilon and a must be positive")
    return (lam / a) * (r + 1.0) * (a * epsilon) ** (r / (r + 1.0)) + theta


# ---------------------------------------------------------------------------
# constraint plumbing shared by the two spec families
# ---------------------------------------------------------------------------

class _Constraint:
    """Mass functional, its dual components, and the scaling retraction."""

    def __init__(self, spec, grid: QuotientGrid):
        self.spec, self.grid = spec, grid
        if isinstance(spec, KirchhoffSpec):
            self.degree = spec.p_star
        else:
            q = spec.potential.homogeneity
            if q is None:
                raise ValueError(
                    "the scaling retraction needs a homogeneous potential; "
                    f"{spec.potential.label!r} declares none")
            self.degree = float(q)

    def mass(self, u: BasicFunction) -> float:
        if isinstance(self.spec, KirchhoffSpec):
            return power_mass(self.grid, u, self.spec.p_star)
        return potential_mass(self.spec, self.grid, u)

    def dual(self, u: BasicFunction) -> np.ndarray:
        if isinstance(self.spec, KirchhoffSpec):
            return power_mass_dual(self.grid, u, self.spec.p_star)
        return potential_mass_dual(self.spec, self.grid, u)

    def target(self, epsilon: float, negative_branch: bool = False) -> float:
        if isinstance(self.spec, KirchhoffSpec):
            if negative_branch:
                raise ValueError("the critical-power mass is non-negative; "
                                 "there is no negative branch")
            return constraint_target(epsilon, self.spec.r, self.spec.p_star)
        return general_constraint_target(epsilon, self.spec.a, self.spec.r,
                                         negative_branch)

    def project(self, u: BasicFunction, target: float) -> BasicFunction:
        return project_to_constraint(self.grid, u, target, self.degree,
                                     mass=self.mass)


def project_to_constraint(grid: QuotientGrid, u: BasicFunction, target: float,
                          degree: float, mass=None) -> BasicFunction:
    """Rescale ``u`` so its constraint mass hits ``target`` exactly.

    Valid because the mass is homogeneous of the given ``degree``; one
    corrective rescale keeps the relative residual at rounding level.
    Raises for a degenerate (zero-mass) input.
    """
    if mass is None:
        from .functionals import power_mass as _pm
        mass = lambda fn: _pm(grid, fn, degree)
    current = mass(u)
    if current == 0.0:
        raise ConstraintDegeneracyError("cannot project the zero function")
    ratio = target / current
    if ratio <= 0.0:
        raise ConstraintDegeneracyError(
            f"constraint branch unreachable by scaling (mass {current:.3e}, "
            f"target {target:.3e})")
    scaled = u.with_values(u.values * ratio ** (1.0 / degree))
    again = mass(scaled)
    if again != 0.0 and again != target:
        scaled = scaled.with_values(
            scaled.values * (target / again) ** (1.0 / degree))
    return scaled


# ---------------------------------------------------------------------------
# configuration and result records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolveConfig:
    epsilon: float
    grid_size: int = 2001
    max_iters: int = 2000
    grad_tol: float = 1e-10
    initial_step: float = 1.0
    backtrack: float = 0.5
    armijo_c: float = 1e-4
    init: str = "constant"            # "constant" | "random" | "supplied"
    init_function: BasicFunction | None = None
    seed: int = 0
    deflate: bool = False
    negative_branch: bool = False
    polish_iters: int = 12

    def __post_init__(self) -> None:
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.grad_tol <= 0.0 or self.initial_step <= 0.0:
            raise ValueError("tolerances and steps must be positive")
        if not 0.0 < self.backtrack < 1.0:
            raise ValueError("backtracking factor must be in (0, 1)")
        if self.init not in ("constant", "random", "supplied"):
            raise ValueError("init must be 'constant', 'random' or 'supplied'")
        if self.init == "supplied" and self.init_function is None:
            raise ValueError("supplied init needs init_function")


@dataclass
class SolveResult:
    u: BasicFunction
    theta: float
    lambda_star: float
    constraint_residual: float
    tangent_grad_norm: float
    energy: float
    iterations: int
    converged: bool
    epsilon: float
    constraint_mass: float
    energy_trace: tuple[float, ...] = ()
    full_stationarity_residual: float | None = None
    model_name: str = ""


class ThetaFit(NamedTuple):
    theta: float
    alignment_residual: float


# ---------------------------------------------------------------------------
# inner product and multiplier extraction
# ---------------------------------------------------------------------------

def sobolev_product_matrix(grid: QuotientGrid) -> sparse.csc_matrix:
    """Matrix of the density-weighted first-order product ``∫ (uv + u'v') V``."""
    D = derivative_matrix(grid)
    W = sparse.diags(grid.weights)
    return (W + D.T @ W @ D).tocsc()


class _InnerProduct:
    """Cached factorization of the weighted Sobolev product on a grid."""

    def __init__(self, grid: QuotientGrid):
        self.grid = grid
        self.matrix = sobolev_product_matrix(grid)
        self.solve = factorized(self.matrix)

    def represent(self, dual: np.ndarray) -> np.ndarray:
        """Riesz representative of the functional ``v -> dual . v``."""
        return self.solve(dual)


def _theta_from_duals(ip: _InnerProduct, d: np.ndarray, e: np.ndarray) -> ThetaFit:
    g = ip.represent(d)
    gG = ip.represent(e)
    denom = float(np.dot(e, gG))
    scale = float(np.dot(e, e))
    if denom <= 0.0 or scale == 0.0:
        raise ConstraintDegeneracyError("constraint gradient vanished")
    theta = float(np.dot(d, gG)) / denom
    resid_dual = d - theta * e
    resid = math.sqrt(max(0.0, float(np.dot(resid_dual, g - theta * gG))))
    return ThetaFit(theta=theta, alignment_residual=resid)


def extract_theta(spec, grid: QuotientGrid, u: BasicFunction) -> ThetaFit:
    """Least-squares Lagrange multiplier at ``u``.

    ``theta`` is the ratio ``<grad J, grad G> / <grad G, grad G>`` in the
    weighted Sobolev product; the alignment residual
    ``‖grad J - theta grad G‖`` quantifies how well the stationarity
    condition holds (small only near constrained critical points).
    """
    ip = _InnerProduct(grid)
    d = first_variation(spec, grid, u).dual_components()
    e = _Constraint(spec, grid).dual(u)
    return _theta_from_duals(ip, d, e)


def lambda_star(spec, epsilon: float, theta: float) -> float:
    if isinstance(spec, KirchhoffSpec):
        return lambda_star_kirchhoff(epsilon, theta, spec.lam, spec.r, spec.p_star)
    return lambda_star_general(epsilon, theta, spec.lam, spec.a, spec.r)


def stationarity_components(spec, grid: QuotientGrid, u: BasicFunction,
                            lam_star: float, D=None) -> np.ndarray:
    """Components of the effective-eigenvalue first variation against the
    nodal basis: the nonlocal potential prefactor is replaced by ``lambda*``.
    """
    if D is None:
        D = derivative_matrix(grid)
    w = grid.weights
    state = first_variation(spec, grid, u)
    if isinstance(spec, KirchhoffSpec):
        from .functionals import odd_power
        return (D.T @ (w * state.q_grad)
                - lam_star * w * odd_power(u.values, spec.p_star))
    fv = np.asarray(spec.potential.f(u.values, grid.nodes), dtype=float)
    return (D.T @ (w * (state.q_stretch + state.q_lgrad))
            + w * state.q_lzero - lam_star * w * fv)


# ---------------------------------------------------------------------------
# the solver
# ---------------------------------------------------------------------------

def _initial_values(config: SolveConfig, grid: QuotientGrid) -> np.ndarray:
    if config.init == "constant":
        return np.ones(grid.N)
    if config.init == "random":
        rng = np.random.default_rng(config.seed)
        return rng.standard_normal(grid.N)
    supplied = config.init_function
    if supplied.grid.N != grid.N:
        raise ValueError("supplied initializer lives on a different grid")
    return supplied.values.copy()


def _deflate_values(grid: QuotientGrid, values: np.ndarray) -> np.ndarray:
    # remove the density-weighted mean; scaling retraction preserves this
    total = float(np.sum(grid.weights))
    return values - float(np.dot(grid.weights, values)) / total


def minimize_on_constraint(spec, model, config: SolveConfig) -> SolveResult:
    """Projected-gradient minimization of the energy on the constraint manifold.

    Deterministic for a fixed configuration (including the random seed).
    Non-convergence within ``max_iters`` is reported, not raised; a
    non-finite energy aborts with :class:`NumericalSolveError`.
    """
    quotient = model.quotient if isinstance(model, FullModel) else model
    if not quotient.eligible or quotient.min_leaf_dim < 1:
        raise ValueError(f"model {quotient.name!r} has a trivial leaf and is "
                         "not eligible for the reduced solver")
    grid = QuotientGrid.build(quotient, config.grid_size)
    constraint = _Constraint(spec, grid)
    target = constraint.target(config.epsilon, config.negative_branch)
    ip = _InnerProduct(grid)
    D = derivative_matrix(grid)

    values = _initial_values(config, grid)
    if config.deflate:
        values = _deflate_values(grid, values)
    u = constraint.project(BasicFunction(grid, values), target)

    def energy_at(fn: BasicFunction) -> float:
        val = energy(spec, grid, fn)
        if not np.isfinite(val):
            raise NumericalSolveError("energy became non-finite; aborting")
        return val

    current_energy = energy_at(u)
    trace = [current_energy]
    iterations = 0
    tangent_norm = math.inf

    def tangent_direction(fn: BasicFunction):
        d = first_variation(spec, grid, fn).dual_components(D)
        e = constraint.dual(fn)
        gG = ip.represent(e)
        denom = float(np.dot(e, gG))
        if denom <= 0.0:
            raise ConstraintDegeneracyError("constraint gradient vanished")
        g = ip.represent(d)
        alpha = float(np.dot(d, gG)) / denom
        direction = g - alpha * gG
        if config.deflate:
            direction = _deflate_values(grid, direction)
            norm_sq = float(direction @ (ip.matrix @ direction))
        else:
            norm_sq = float(np.dot(d - alpha * e, direction))
        return direction, max(norm_sq, 0.0)

    def retract(fn: BasicFunction, step: float, direction) -> BasicFunction:
        vals = fn.values - step * direction
        if config.deflate:
            vals = _deflate_values(grid, vals)
        return constraint.project(BasicFunction(grid, vals), target)

    def armijo_step(fn: BasicFunction, fn_energy: float, direction, norm_sq):
        """Backtracking on the energy, then greedy halving while it improves."""
        step = config.initial_step
        trial = trial_energy = None
        for _ in range(60):
            try:
                cand = retract(fn, step, direction)
            except ConstraintDegeneracyError:
                step *= config.backtrack
                continue
            cand_energy = energy_at(cand)
            if cand_energy <= fn_energy - config.armijo_c * step * norm_sq:
                trial, trial_energy = cand, cand_energy
                break
            step *= config.backtrack
        if trial is None:
            return None, None
        for _ in range(8):
            step *= config.backtrack
            cand = retract(fn, step, direction)
            cand_energy = energy_at(cand)
            if cand_energy < trial_energy:
                trial, trial_energy = cand, cand_energy
            else:
                break
        return trial, trial_energy

    # Phase one descends on the energy with an Armijo search.  Near the
    # minimum the energy differences drop below the floating-point
    # resolution of the (large, nearly constant) energy value, so a second
    # phase accepts steps on tangent-norm decrease instead, which keeps its
    # full relative resolution all the way down.
    energy_phase = True
    norm_step = config.initial_step
    goal = config.grad_tol
    polish_budget = config.polish_iters
    direction, norm_sq = tangent_direction(u)
    tangent_norm = math.sqrt(norm_sq)

    while iterations < config.max_iters:
        if tangent_norm <= goal:
            if goal < config.grad_tol or polish_budget == 0:
                break
            goal = config.grad_tol * 0.02  # polish margin, bounded below
        noise_floor = 4e-15 * (1.0 + abs(current_energy))
        if energy_phase and config.armijo_c * config.initial_step * norm_sq \
                < noise_floor:
            energy_phase = False
        if not energy_phase and tangent_norm <= config.grad_tol:
            if polish_budget <= 0:
                break
            polish_budget -= 1

        if energy_phase:
            trial, trial_energy = armijo_step(u, current_energy, direction,
                                              norm_sq)
            if trial is None:
                energy_phase = False
                continue
            u, current_energy = trial, trial_energy
            trace.append(current_energy)
            iterations += 1
            direction, norm_sq = tangent_direction(u)
            tangent_norm = math.sqrt(norm_sq)
            continue

        # norm-monotone phase
        step = norm_step
        accepted = False
        for _ in range(60):
            try:
                cand = retract(u, step, direction)
            except ConstraintDegeneracyError:
                step *= config.backtrack
                continue
            cand_energy = energy_at(cand)
            cand_dir, cand_norm_sq = tangent_direction(cand)
            if (math.sqrt(cand_norm_sq) < tangent_norm
                    and cand_energy <= current_energy + noise_floor):
                u, current_energy = cand, cand_energy
                direction, norm_sq = cand_dir, cand_norm_sq
                tangent_norm = math.sqrt(norm_sq)
                trace.append(current_energy)
                iterations += 1
                norm_step = min(step * 2.0, config.initial_step)
                accepted = True
                break
            step *= config.backtrack
        if not accepted:
            break  # no measurable progress in either metric

    converged = tangent_norm <= config.grad_tol

    mass = constraint.mass(u)
    fit = _theta_from_duals(ip, first_variation(spec, grid, u).dual_components(D),
                            constraint.dual(u))
    lam_star = lambda_star(spec, config.epsilon, fit.theta)
    quotient_name = quotient.name
    return SolveResult(
        u=u,
        theta=fit.theta,
        lambda_star=lam_star,
        constraint_residual=abs(mass - target) / abs(target),
        tangent_grad_norm=tangent_norm,
        energy=current_energy,
        iterations=iterations,
        converged=converged,
        epsilon=config.epsilon,
        constraint_mass=mass,
        energy_trace=tuple(trace),
        model_name=quotient_name,
    )


# ---------------------------------------------------------------------------
# sequences of solutions over increasing constraint levels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepEntry:
    epsilon: float
    result: SolveResult | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.result is not None and self.result.converged


def solve_sequence(spec, model, epsilons, config: SolveConfig,
                   min_mass_gap: float = 1e-6, workers: int = 1
                   ) -> list[SweepEntry]:
    """Independent solves over strictly increasing constraint levels.

    Distinct levels prescribe distinct constraint masses, so converged
    members are pairwise distinct in the constrained norm; the gap is
    checked and reported.  Individual failures are recorded per member.
    Members are independent and deterministic, so fanning them out over
    ``workers`` threads does not change the results.
    """
    eps = [float(e) for e in epsilons]
    if any(e <= 0.0 for e in eps):
        raise ValueError("all epsilon values must be positive")
    if len(set(eps)) != len(eps):
        raise ValueError("duplicate epsilon values")
    if any(b <= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilon values must be strictly increasing")

    def run_member(e: float) -> SweepEntry:
        member = replace(config, epsilon=e)
        try:
            return SweepEntry(epsilon=e,
                              result=minimize_on_constraint(spec, model, member))
        except (NumericalSolveError, ConstraintDegeneracyError) as exc:
            return SweepEntry(epsilon=e, result=None, error=str(exc))

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(run_member, eps))
    else:
        entries = [run_member(e) for e in eps]

    masses = [en.result.constraint_mass for en in entries if en.ok]
    for i in range(len(masses)):
        for j in range(i + 1, len(masses)):
            if abs(masses[i] - masses[j]) < min_mass_gap:
                raise RuntimeError(
                    "converged members are not distinct in constrained mass "
                    f"({masses[i]:.6e} vs {masses[j]:.6e})")
    return entries
