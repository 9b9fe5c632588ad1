"""Energy functionals on the reduced space and their exact first variations.

Two families are provided.

* :class:`KirchhoffSpec`: a stretched gradient energy minus a power of the
  critical-exponent mass,

  ``J(u) = M(1/p ∫ |u'|^p) - lam/(r+1) * (∫ |u|^{p*}/p*)^{r+1}``,

  whose directional derivative is

  ``dJ(u)[v] = m(1/p ∫ |u'|^p) ∫ |u'|^{p-2} u' v'
             - lam (∫ |u|^{p*}/p*)^r ∫ |u|^{p*-2} u v``.

* :class:`GeneralEnergySpec`: a stretched Lagrangian energy minus a power of
  a potential mass,

  ``J(u) = M(∫ |u'|^p) ∫ L(|u'|^2, u, t) - lam/a * (∫ F(u, t))^{r+1}``,

  whose derivative splits into four terms: the stretch term
  ``p m(‖u‖^p) (∫ |u'|^{p-2} u' v') (∫ L)``, the two Lagrangian terms
  ``M(‖u‖^p) ∫ L_{s1} 2 u' v'`` and ``M(‖u‖^p) ∫ L_{s2} v``, and the
  potential term ``-(lam/a)(r+1) (∫ F)^r ∫ f(u,t) v``.

All integrals are density-weighted quadrature on the quotient grid.  The
nonlocal prefactors (the stretch evaluation and the potential-mass power)
depend only on ``u``, so a first-variation state is built once per ``u`` and
applied to as many directions as needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .grids import (BasicFunction, QuotientGrid, critical_exponent,
                    differentiate_values)


class SpecValidationError(ValueError):
    """An energy specification violates one of its declared properties."""


class GrowthBoundError(RuntimeError):
    """The potential derivative exceeded its declared growth bound."""


def odd_power(x: np.ndarray, q: float) -> np.ndarray:
    """``|x|^{q-2} x`` with the convention that it vanishes at ``x = 0`` (q > 1)."""
    return np.sign(x) * np.abs(x) ** (q - 1.0)


# ---------------------------------------------------------------------------
# stretch weights (m, M) with M(t) = integral of m
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StretchWeight:
    """A consistent pair ``(m, M)`` with ``M(t) = ∫_0^t m(s) ds``.

    ``m`` must be continuous and non-negative; convexity of ``M`` (i.e.
    monotone ``m``) may be declared and is then spot-checked.
    """

    m: Callable[[np.ndarray], np.ndarray]
    M: Callable[[np.ndarray], np.ndarray]
    convex: bool = False
    label: str = "custom"

    def validate(self, t_max: float = 10.0, samples: int = 201,
                 zero_at_origin: bool = True) -> None:
        t = np.linspace(0.0, t_max, samples)
        Mv = np.asarray(self.M(t), dtype=float)
        mv = np.asarray(self.m(t), dtype=float)
        if zero_at_origin and abs(Mv[0]) > 1e-12:
            raise SpecValidationError(f"weight {self.label!r}: M(0) must be 0")
        if np.any(mv < -1e-12):
            raise SpecValidationError(f"weight {self.label!r}: m must be non-negative")
        if np.any(np.diff(Mv) < -1e-9 * (1.0 + np.abs(Mv[:-1]))):
            raise SpecValidationError(f"weight {self.label!r}: M must be non-decreasing")
        if self.convex:
            second = np.diff(Mv, 2)
            if np.any(second < -1e-9 * (1.0 + np.abs(Mv[1:-1]))):
                raise SpecValidationError(f"weight {self.label!r}: M declared convex "
                                          "but sampled second differences are negative")


def power_weight(exponent: float = 0.0) -> StretchWeight:
    """``m(s) = s**exponent``; exponent 0 gives the identity stretch ``M(t) = t``."""
    if exponent < 0.0:
        raise SpecValidationError("power weight needs a non-negative exponent")
    e = float(exponent)

    def m(s, e=e):
        s = np.asarray(s, dtype=float)
        return np.ones_like(s) if e == 0.0 else s ** e

    def M(t, e=e):
        t = np.asarray(t, dtype=float)
        return t ** (e + 1.0) / (e + 1.0)

    return StretchWeight(m=m, M=M, convex=True, label=f"power({e:g})")


def affine_weight(c0: float, c1: float) -> StretchWeight:
    """``m(s) = c0 + c1 s`` with non-negative coefficients."""
    if c0 < 0.0 or c1 < 0.0:
        raise SpecValidationError("affine weight needs non-negative coefficients")

    def m(s, c0=c0, c1=c1):
        return c0 + c1 * np.asarray(s, dtype=float)

    def M(t, c0=c0, c1=c1):
        t = np.asarray(t, dtype=float)
        return c0 * t + 0.5 * c1 * t ** 2

    return StretchWeight(m=m, M=M, convex=True, label=f"affine({c0:g},{c1:g})")


def table_weight(samples, convex: bool = False) -> StretchWeight:
    """Weight from ``[[s, m(s)], ...]`` samples.

    ``m`` is interpolated monotone-cubically and ``M`` is the cached exact
    antiderivative of the interpolant; the pair consistency ``|M' - m|`` is
    re-checked on a fresh 100-point sample.
    """
    table = np.asarray(samples, dtype=float)
    if table.ndim != 2 or table.shape[1] != 2 or table.shape[0] < 4:
        raise SpecValidationError("weight table must be an (m, 2) array with m >= 4")
    s, mv = table[:, 0], table[:, 1]
    if s[0] > 1e-12:
        raise SpecValidationError("weight table must start at s = 0")
    if np.any(mv < 0.0):
        raise SpecValidationError("weight table values must be non-negative")
    m_interp = PchipInterpolator(s, mv)
    M_interp = m_interp.antiderivative()

    probe = np.linspace(s[0], s[-1], 100)
    gap = np.max(np.abs(M_interp.derivative()(probe) - m_interp(probe)))
    if gap > 1e-8:
        raise SpecValidationError(f"cached antiderivative drifts from m by {gap:.2e}")

    w = StretchWeight(m=m_interp, M=M_interp, convex=convex, label="table")
    w.validate(t_max=float(s[-1]))
    return w


def constant_weight(value: float) -> StretchWeight:
    """Constant stretch ``M(t) = value`` (no growth; general energies only)."""

    def m(s, value=value):
        return np.zeros_like(np.asarray(s, dtype=float))

    def M(t, value=value):
        return np.full_like(np.asarray(t, dtype=float), value)

    return StretchWeight(m=m, M=M, convex=True, label=f"constant({value:g})")


# ---------------------------------------------------------------------------
# Lagrangians and potentials
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Lagrangian:
    """``L(s1, s2, t)`` with partial derivatives in the first two slots.

    ``s1`` receives the squared gradient, ``s2`` the function value; any
    ``t`` dependence must factor through the quotient coordinate, which the
    call signature enforces by construction.
    """

    L: Callable
    dL_ds1: Callable
    dL_ds2: Callable
    label: str = "custom"


def dirichlet_lagrangian() -> Lagrangian:
    """``L = s1``: the plain squared-gradient integrand."""
    return Lagrangian(
        L=lambda s1, s2, t: s1,
        dL_ds1=lambda s1, s2, t: np.ones_like(np.asarray(s1, dtype=float)),
        dL_ds2=lambda s1, s2, t: np.zeros_like(np.asarray(s1, dtype=float)),
        label="dirichlet")


def gradient_power_lagrangian(half_power: float) -> Lagrangian:
    """``L = s1**half_power`` (so ``L(|u'|^2) = |u'|^{2*half_power}``)."""
    hp = float(half_power)
    return Lagrangian(
        L=lambda s1, s2, t, hp=hp: np.asarray(s1, dtype=float) ** hp,
        dL_ds1=lambda s1, s2, t, hp=hp: hp * np.asarray(s1, dtype=float) ** (hp - 1.0),
        dL_ds2=lambda s1, s2, t: np.zeros_like(np.asarray(s1, dtype=float)),
        label=f"gradient-power({hp:g})")


NAMED_PROFILES = {
    # smooth positive t-profiles usable as potential weights K(t)
    "one": lambda t, T: np.ones_like(np.asarray(t, dtype=float)),
    "half-cosine": lambda t, T: 1.0 + 0.5 * np.cos(2.0 * np.pi * np.asarray(t, dtype=float) / T),
    "center-bump": lambda t, T: 1.0 + np.exp(-((np.asarray(t, dtype=float) - 0.5 * T) / (0.2 * T)) ** 2),
}


@dataclass(frozen=True, eq=False)
class Potential:
    """``F(s, t)`` with derivative ``f = ∂F/∂s`` and optional homogeneity.

    ``homogeneity`` records a degree ``q`` with ``F(c*s, t) = c**q F(s, t)``
    when that holds; the constrained solver needs it for its scaling
    retraction.
    """

    F: Callable
    f: Callable
    homogeneity: float | None = None
    label: str = "custom"


def power_potential(q: float) -> Potential:
    """``F = |s|^q / q`` with ``f = |s|^{q-2} s``."""
    if q <= 1.0:
        raise SpecValidationError("power potential needs q > 1")

    def F(s, t, q=q):
        return np.abs(np.asarray(s, dtype=float)) ** q / q

    def f(s, t, q=q):
        return odd_power(np.asarray(s, dtype=float), q)

    return Potential(F=F, f=f, homogeneity=q, label=f"power({q:g})")


def weighted_power_potential(q: float, profile: str, domain_length: float) -> Potential:
    """``F = K(t) |s|^q / q`` with ``K`` one of the named smooth profiles."""
    if q <= 1.0:
        raise SpecValidationError("power potential needs q > 1")
    if profile not in NAMED_PROFILES:
        raise SpecValidationError(f"unknown profile {profile!r}; "
                                  f"choose from {sorted(NAMED_PROFILES)}")
    K = NAMED_PROFILES[profile]
    T = float(domain_length)

    def F(s, t, q=q, K=K, T=T):
        return K(t, T) * np.abs(np.asarray(s, dtype=float)) ** q / q

    def f(s, t, q=q, K=K, T=T):
        return K(t, T) * odd_power(np.asarray(s, dtype=float), q)

    return Potential(F=F, f=f, homogeneity=q,
                     label=f"weighted-power({q:g},{profile})")


@dataclass(frozen=True, eq=False)
class GrowthWitness:
    """Sampled guard for ``|f(s, t)| <= a(t) + b |s|^{p_star - 1}``.

    This is a heuristic check on finitely many samples, not a proof.
    """

    a_fn: Callable[[np.ndarray], np.ndarray]
    b: float
    p_star: float

    def check(self, potential: Potential, s: np.ndarray, t: np.ndarray) -> None:
        fv = np.abs(np.asarray(potential.f(s, t), dtype=float))
        bound = np.asarray(self.a_fn(t), dtype=float) \
            + self.b * np.abs(s) ** (self.p_star - 1.0)
        slack = 1e-9 * (1.0 + bound)
        if np.any(fv > bound + slack):
            worst = float(np.max(fv - bound))
            raise GrowthBoundError(
                f"potential derivative exceeds its declared growth bound by {worst:.3e}")


# ---------------------------------------------------------------------------
# specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KirchhoffSpec:
    """Data of the stretched critical-power energy (see module docstring)."""

    p: float
    r: float
    lam: float
    weight: StretchWeight
    n: int

    def __post_init__(self) -> None:
        if not 2.0 <= self.p < self.n:
            raise SpecValidationError(f"need 2 <= p < n, got p={self.p}, n={self.n}")
        if self.r <= 1.0:
            raise SpecValidationError("need r > 1")
        self.weight.validate()

    @property
    def p_star(self) -> float:
        return critical_exponent(self.n, self.p)


@dataclass(frozen=True, eq=False)
class GeneralEnergySpec:
    """Data of the stretched Lagrangian energy (see module docstring)."""

    p: float
    r: float
    lam: float
    a: float
    weight: StretchWeight
    lagrangian: Lagrangian
    potential: Potential
    n: int
    growth: GrowthWitness | None = None

    def __post_init__(self) -> None:
        if not 2.0 <= self.p < self.n:
            raise SpecValidationError(f"need 2 <= p < n, got p={self.p}, n={self.n}")
        if self.r <= 0.0:
            raise SpecValidationError("need r > 0")
        if self.a <= 0.0:
            raise SpecValidationError("need a > 0")
        # the stretch here is any continuous non-negative factor; it need not
        # vanish at the origin (unlike the antiderivative pair above)
        self.weight.validate(zero_at_origin=False)
        if self.growth is not None:
            s = np.linspace(-3.0, 3.0, 41)
            t = np.linspace(0.0, 1.0, 41)
            ss, tt = np.meshgrid(s, t)
            self.growth.check(self.potential, ss.ravel(), tt.ravel())

    @property
    def p_star(self) -> float:
        return critical_exponent(self.n, self.p)

    def guard_growth(self, u_values: np.ndarray, t_nodes: np.ndarray) -> None:
        if self.growth is not None:
            self.growth.check(self.potential, u_values, t_nodes)

    def sampled_coercivity_bound(self, grid: QuotientGrid, trials: int = 50,
                                 seed: int = 0) -> float:
        """Smallest sampled ratio of the stretched Lagrangian part to ``‖u‖_{1,p}^p``.

        A finite random probe of the coercivity constant; it witnesses a
        lower bound on the sampled functions only.
        """
        rng = np.random.default_rng(seed)
        best = math.inf
        for _ in range(trials):
            vals = rng.standard_normal(grid.N)
            u = BasicFunction(grid, vals)
            du = differentiate_values(grid, u.values)
            norm_p = float(np.dot(grid.weights, np.abs(vals) ** self.p
                                  + np.abs(du) ** self.p))
            if norm_p <= 0.0:
                continue
            state = GeneralFirstVariation(self, grid, u)
            best = min(best, state.M_at * state.lagrangian_mass / norm_p)
        return best


@dataclass(frozen=True)
class DirectionalDerivative:
    """Value of a first variation together with its four-term split."""

    value: float
    kirchhoff_term: float
    lagrangian_grad_term: float
    lagrangian_zero_term: float
    potential_term: float

    @property
    def terms(self) -> tuple[float, float, float, float]:
        return (self.kirchhoff_term, self.lagrangian_grad_term,
                self.lagrangian_zero_term, self.potential_term)


# ---------------------------------------------------------------------------
# first-variation states (nonlocal factors cached per u)
# ---------------------------------------------------------------------------

class KirchhoffFirstVariation:
    """First variation of a Kirchhoff energy at a fixed ``u``.

    The state holds the two nonlocal prefactors and the nodal coefficient
    fields, so applying it to a direction only costs two weighted dot
    products.
    """

    def __init__(self, spec: KirchhoffSpec, grid: QuotientGrid, u: BasicFunction):
        self.spec, self.grid, self.u = spec, grid, u
        w = grid.weights
        p, ps = spec.p, spec.p_star
        self.du = differentiate_values(grid, u.values)
        self.gradient_mass = float(np.dot(w, np.abs(self.du) ** p))
        self.potential_mass = float(np.dot(w, np.abs(u.values) ** ps)) / ps
        self.m_at = float(spec.weight.m(self.gradient_mass / p))
        self.pot_factor = spec.lam * self.potential_mass ** spec.r
        # coefficient pairing with v' and with v
        self.q_grad = self.m_at * np.abs(self.du) ** (p - 2.0) * self.du
        self.q_zero = -self.pot_factor * odd_power(u.values, ps)

    def apply(self, v: BasicFunction) -> DirectionalDerivative:
        w = self.grid.weights
        dv = differentiate_values(self.grid, v.values)
        kirch = float(np.dot(w, self.q_grad * dv))
        pot = float(np.dot(w, self.q_zero * v.values))
        return DirectionalDerivative(value=kirch + pot, kirchhoff_term=kirch,
                                     lagrangian_grad_term=0.0,
                                     lagrangian_zero_term=0.0,
                                     potential_term=pot)

    def dual_components(self, D=None) -> np.ndarray:
        """Vector ``d`` with ``dJ(u)[v] = d . v`` for every direction ``v``."""
        from .grids import derivative_matrix
        if D is None:
            D = derivative_matrix(self.grid)
        w = self.grid.weights
        return D.T @ (w * self.q_grad) + w * self.q_zero

    def coefficients(self) -> tuple[BasicFunction, BasicFunction]:
        """Leaf-constant coefficients ``(C1, C2)`` with
        ``dJ(u)[v] = ∫ C1 u' v' + C2 v``."""
        p = self.spec.p
        c1 = self.m_at * np.abs(self.du) ** (p - 2.0)
        return (BasicFunction(self.grid, c1),
                BasicFunction(self.grid, self.q_zero.copy()))


class GeneralFirstVariation:
    """First variation of a general stretched Lagrangian energy at fixed ``u``."""

    def __init__(self, spec: GeneralEnergySpec, grid: QuotientGrid, u: BasicFunction):
        spec.guard_growth(u.values, grid.nodes)
        self.spec, self.grid, self.u = spec, grid, u
        w, t = grid.weights, grid.nodes
        p = spec.p
        self.du = differentiate_values(grid, u.values)
        grad_sq = self.du ** 2
        self.gradient_mass = float(np.dot(w, np.abs(self.du) ** p))
        self.lagrangian_mass = float(np.dot(
            w, np.asarray(spec.lagrangian.L(grad_sq, u.values, t), dtype=float)))
        self.potential_mass = float(np.dot(
            w, np.asarray(spec.potential.F(u.values, t), dtype=float)))
        self.m_at = float(spec.weight.m(self.gradient_mass))
        self.M_at = float(spec.weight.M(self.gradient_mass))
        self.pot_factor = (spec.lam / spec.a) * (spec.r + 1.0) \
            * self.potential_mass ** spec.r

        self.L1 = np.asarray(spec.lagrangian.dL_ds1(grad_sq, u.values, t), dtype=float)
        L2 = np.asarray(spec.lagrangian.dL_ds2(grad_sq, u.values, t), dtype=float)
        fv = np.asarray(spec.potential.f(u.values, t), dtype=float)
        # four coefficient fields: stretch and Lagrangian-gradient pair with v',
        # Lagrangian-zero and potential pair with v
        self.q_stretch = (p * self.m_at * self.lagrangian_mass
                          * np.abs(self.du) ** (p - 2.0) * self.du)
        self.q_lgrad = 2.0 * self.M_at * self.L1 * self.du
        self.q_lzero = self.M_at * L2
        self.q_pot = -self.pot_factor * fv

    def apply(self, v: BasicFunction) -> DirectionalDerivative:
        w = self.grid.weights
        dv = differentiate_values(self.grid, v.values)
        kirch = float(np.dot(w, self.q_stretch * dv))
        lgrad = float(np.dot(w, self.q_lgrad * dv))
        lzero = float(np.dot(w, self.q_lzero * v.values))
        pot = float(np.dot(w, self.q_pot * v.values))
        return DirectionalDerivative(value=kirch + lgrad + lzero + pot,
                                     kirchhoff_term=kirch,
                                     lagrangian_grad_term=lgrad,
                                     lagrangian_zero_term=lzero,
                                     potential_term=pot)

    def dual_components(self, D=None) -> np.ndarray:
        from .grids import derivative_matrix
        if D is None:
            D = derivative_matrix(self.grid)
        w = self.grid.weights
        return (D.T @ (w * (self.q_stretch + self.q_lgrad))
                + w * (self.q_lzero + self.q_pot))

    def coefficients(self) -> tuple[BasicFunction, BasicFunction]:
        p = self.spec.p
        c1 = (p * self.m_at * self.lagrangian_mass * np.abs(self.du) ** (p - 2.0)
              + 2.0 * self.M_at * self.L1)
        return (BasicFunction(self.grid, c1),
                BasicFunction(self.grid, self.q_lzero + self.q_pot))


def first_variation(spec, grid: QuotientGrid, u: BasicFunction):
    """Build the first-variation state matching the spec family."""
    if isinstance(spec, KirchhoffSpec):
        return KirchhoffFirstVariation(spec, grid, u)
    if isinstance(spec, GeneralEnergySpec):
        return GeneralFirstVariation(spec, grid, u)
    raise TypeError(f"unsupported spec type {type(spec).__name__}")


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------

def energy_kirchhoff(spec: KirchhoffSpec, grid: QuotientGrid,
                     u: BasicFunction) -> float:
    w = grid.weights
    du = differentiate_values(grid, u.values)
    gradient_mass = float(np.dot(w, np.abs(du) ** spec.p))
    pot = float(np.dot(w, np.abs(u.values) ** spec.p_star)) / spec.p_star
    return float(spec.weight.M(gradient_mass / spec.p)
                 - spec.lam / (spec.r + 1.0) * pot ** (spec.r + 1.0))


def denergy_kirchhoff(spec: KirchhoffSpec, grid: QuotientGrid, u: BasicFunction,
                      v: BasicFunction) -> DirectionalDerivative:
    """Exact directional derivative of the Kirchhoff energy at ``u`` along ``v``."""
    return KirchhoffFirstVariation(spec, grid, u).apply(v)


def energy_general(spec: GeneralEnergySpec, grid: QuotientGrid,
                   u: BasicFunction) -> float:
    spec.guard_growth(u.values, grid.nodes)
    w, t = grid.weights, grid.nodes
    du = differentiate_values(grid, u.values)
    gradient_mass = float(np.dot(w, np.abs(du) ** spec.p))
    lag = float(np.dot(w, np.asarray(spec.lagrangian.L(du ** 2, u.values, t),
                                     dtype=float)))
    pot = float(np.dot(w, np.asarray(spec.potential.F(u.values, t), dtype=float)))
    return float(spec.weight.M(gradient_mass) * lag
                 - spec.lam / spec.a * pot ** (spec.r + 1.0))


def denergy_general(spec: GeneralEnergySpec, grid: QuotientGrid, u: BasicFunction,
                    v: BasicFunction) -> DirectionalDerivative:
    """Exact directional derivative with the four-term decomposition."""
    return GeneralFirstVariation(spec, grid, u).apply(v)


def energy(spec, grid: QuotientGrid, u: BasicFunction) -> float:
    if isinstance(spec, KirchhoffSpec):
        return energy_kirchhoff(spec, grid, u)
    return energy_general(spec, grid, u)


# ---------------------------------------------------------------------------
# constraint functionals
# ---------------------------------------------------------------------------

def power_mass(grid: QuotientGrid, u: BasicFunction, p_star: float) -> float:
    """``∫ |u|^{p*}``, the raw mass fixed by the critical-power constraint."""
    if p_star <= 1.0:
        raise ValueError("p_star must exceed 1")
    return float(np.dot(grid.weights, np.abs(u.values) ** p_star))


def power_mass_variation(grid: QuotientGrid, u: BasicFunction, v: BasicFunction,
                         p_star: float) -> float:
    """``p* ∫ |u|^{p*-2} u v``, the derivative of :func:`power_mass`."""
    if p_star <= 1.0:
        raise ValueError("p_star must exceed 1")
    return float(p_star * np.dot(grid.weights, odd_power(u.values, p_star) * v.values))


def power_mass_dual(grid: QuotientGrid, u: BasicFunction,
                    p_star: float) -> np.ndarray:
    """Components ``e`` with ``d(power_mass)(u)[v] = e . v``."""
    return p_star * grid.weights * odd_power(u.values, p_star)


def potential_mass(spec: GeneralEnergySpec, grid: QuotientGrid,
                   u: BasicFunction) -> float:
    """``∫ F(u, t)`` for the general constraint."""
    return float(np.dot(grid.weights,
                        np.asarray(spec.potential.F(u.values, grid.nodes),
                                   dtype=float)))


def potential_mass_variation(spec: GeneralEnergySpec, grid: QuotientGrid,
                             u: BasicFunction, v: BasicFunction) -> float:
    return float(np.dot(grid.weights,
                        np.asarray(spec.potential.f(u.values, grid.nodes),
                                   dtype=float) * v.values))


def potential_mass_dual(spec: GeneralEnergySpec, grid: QuotientGrid,
                        u: BasicFunction) -> np.ndarray:
    return grid.weights * np.asarray(spec.potential.f(u.values, grid.nodes),
                                     dtype=float)


def extract_symmetric_coefficients(spec, grid: QuotientGrid, u: BasicFunction
                                   ) -> tuple[BasicFunction, BasicFunction]:
    """Leaf-constant coefficients ``(C1, C2)`` of the first variation.

    For any direction ``v``: ``dJ(u)[v] = ∫ C1(t) u'(t) v'(t) + C2(t) v(t)``,
    both coefficients functions of the quotient coordinate alone.
    """
    return first_variation(spec, grid, u).coefficients()
