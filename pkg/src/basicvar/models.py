"""Cohomogeneity-one manifold models.

Every model here describes a compact Riemannian manifold whose leaf space is
one-dimensional: an interval ``[0, T]`` or a circle of circumference ``T``.
The geometry enters the reduced calculus through a single function, the
leaf-volume density ``V(t)`` (the Riemannian volume of the leaf sitting over
the quotient point ``t``).  The quotient coordinate is arc length, so for a
leaf-constant function ``u`` the reduced gradient is plainly ``u'(t)`` and
every integral over the manifold becomes ``∫ (...) V(t) dt``.

Built-in models:

* ``make_flat_torus_model``     -- flat n-torus with an (n-1)-torus of leaf
  directions; constant density, circle quotient.
* ``make_sphere_clifford_model`` -- the 3-sphere foliated by the family of
  flat 2-tori between the two core circles; interval quotient with the
  density vanishing at both ends.
* ``make_sphere_latitude_model`` -- the n-sphere foliated by latitude
  spheres; carries point leaves at the poles, hence flagged ineligible for
  the reduced solver (geometry checks only).

Full product charts (``FullModel``) cover the torus-leaf case: the metric is
``dt^2 + sum_j g_j(t) dtheta_j^2`` with every coefficient depending on ``t``
alone, so integer-cell shifts in each angle are exact isometries of any
uniform discretization.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

TWO_PI = 2.0 * math.pi

INTERVAL = "interval"
CIRCLE = "circle"

SINGULAR_LEAF = "singular-leaf"
REGULAR_BOUNDARY = "regular-boundary"
PERIODIC = "periodic"


class ExtrapolationError(RuntimeError):
    """The endpoint extrapolation sequence failed to settle (wrong order?)."""


@dataclass(frozen=True)
class Domain:
    """Quotient domain: an interval ``[0, T]`` or a circle of circumference ``T``."""

    kind: str
    length: float

    def __post_init__(self) -> None:
        if self.kind not in (INTERVAL, CIRCLE):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if not self.length > 0.0:
            raise ValueError("domain length must be positive")

    @property
    def is_circle(self) -> bool:
        return self.kind == CIRCLE


@dataclass(frozen=True)
class Endpoint:
    """Endpoint descriptor for interval quotients.

    ``order`` is the leaf-dimension drop exponent at a singular endpoint:
    the density behaves like ``V(t) ~ c * s**order`` in the distance ``s``
    to the endpoint, with ``c`` finite and positive.
    """

    kind: str
    order: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in (SINGULAR_LEAF, REGULAR_BOUNDARY, PERIODIC):
            raise ValueError(f"unknown endpoint kind {self.kind!r}")
        if self.kind == SINGULAR_LEAF:
            if self.order is None or int(self.order) < 1:
                raise ValueError("singular endpoints need a positive integer order")


@dataclass(frozen=True, eq=False)
class QuotientModel:
    """A manifold summarized by its 1-d quotient and leaf-volume density.

    Parameters
    ----------
    name : str
        Identifier used in serialized artifacts.
    ambient_dim : int
        Dimension ``n >= 2`` of the underlying manifold.
    min_leaf_dim : int
        Minimum leaf dimension ``d* >= 0`` over the manifold.  Models with
        ``d* = 0`` (point leaves somewhere) are ineligible for the reduced
        solver and kept for geometry checks only.
    domain : Domain
        Interval or circle quotient.
    density : callable
        ``V(t) > 0`` on the interior; vectorized over numpy arrays.
    density_derivative : callable or None
        ``V'(t)`` in closed form when available; sampled models fall back to
        the interpolant's derivative.
    endpoints : tuple of Endpoint
        Two entries for intervals; empty for circles.
    eligible : bool
        Whether the model qualifies for the reduced variational solver.
    volume_closed_form : float or None
        Known total volume, used by consistency checks and the CLI listing.
    """

    name: str
    ambient_dim: int
    min_leaf_dim: int
    domain: Domain
    density: Callable[[np.ndarray], np.ndarray]
    density_derivative: Callable[[np.ndarray], np.ndarray] | None
    endpoints: tuple[Endpoint, ...]
    eligible: bool = True
    volume_closed_form: float | None = None

    def __post_init__(self) -> None:
        if self.ambient_dim < 2:
            raise ValueError("ambient dimension must be >= 2")
        if self.min_leaf_dim < 0:
            raise ValueError("minimum leaf dimension must be >= 0")
        if self.domain.is_circle:
            if self.endpoints:
                raise ValueError("circle quotients carry no endpoints")
        elif len(self.endpoints) != 2:
            raise ValueError("interval quotients need exactly two endpoints")

    # -- helpers -----------------------------------------------------------

    def density_at(self, t):
        return self.density(np.asarray(t, dtype=float))

    def density_slope_at(self, t):
        if self.density_derivative is None:
            raise ValueError(f"model {self.name!r} has no density derivative")
        return self.density_derivative(np.asarray(t, dtype=float))

    def require_interior(self, t: float) -> float:
        """Return ``t`` normalized into the interior, or raise."""
        T = self.domain.length
        if self.domain.is_circle:
            return float(t) % T
        t = float(t)
        if not (0.0 < t < T):
            raise ValueError(f"t={t} is not strictly inside (0, {T})")
        return t


@dataclass(frozen=True, eq=False)
class FullModel:
    """Product chart for a torus-leaf model.

    The metric is ``dt^2 + sum_j g_j(t) dtheta_j^2`` with ``theta_j`` in
    ``[0, 2*pi)``; every coefficient depends only on ``t``, so coordinate
    shifts along each angle are isometries preserving the leaves.
    """

    quotient: QuotientModel
    leaf_coord_count: int
    metric_coeffs: tuple[Callable[[np.ndarray], np.ndarray], ...]
    symmetry_group: str = "torus-shifts"

    def __post_init__(self) -> None:
        if self.leaf_coord_count < 1:
            raise ValueError("need at least one leaf coordinate")
        if len(self.metric_coeffs) != self.leaf_coord_count:
            raise ValueError("one metric coefficient per leaf coordinate")

    def metric_at(self, t) -> np.ndarray:
        """Stack ``g_j(t)`` values, shape ``(k, len(t))``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.stack([np.broadcast_to(g(t), t.shape).astype(float)
                         for g in self.metric_coeffs])

    def density_from_metric(self, t) -> np.ndarray:
        """``(2*pi)**k * prod_j g_j(t)**(1/2)``, the volume of the leaf over ``t``."""
        g = self.metric_at(t)
        return TWO_PI ** self.leaf_coord_count * np.prod(np.sqrt(g), axis=0)


def full_consistency_deviation(full: FullModel, num_samples: int = 257) -> float:
    """Max relative gap between the metric product volume and ``V(t)``.

    Sampled on interior points; both built-in families satisfy this to
    roughly machine precision by construction.
    """
    T = full.quotient.domain.length
    t = np.linspace(T / (num_samples + 1), T * num_samples / (num_samples + 1),
                    num_samples)
    v_metric = full.density_from_metric(t)
    v = full.quotient.density_at(t)
    return float(np.max(np.abs(v_metric - v) / v))


# ---------------------------------------------------------------------------
# built-in models
# ---------------------------------------------------------------------------

def make_flat_torus_model(n: int = 3, leaf_dim: int | None = None) -> FullModel:
    """Flat n-torus with a torus of leaf directions of dimension ``leaf_dim``.

    The quotient must stay one-dimensional, which forces
    ``leaf_dim = n - 1`` (the default).  The quotient is then a circle of
    circumference ``2*pi`` with the constant density ``(2*pi)**leaf_dim``.
    """
    if n < 2:
        raise ValueError("flat torus needs n >= 2")
    if leaf_dim is None:
        leaf_dim = n - 1
    if not 1 <= leaf_dim <= n - 1:
        raise ValueError(f"leaf_dim must be in [1, {n - 1}], got {leaf_dim}")
    if leaf_dim != n - 1:
        raise ValueError(
            f"leaf_dim={leaf_dim} leaves a {n - leaf_dim}-dimensional quotient; "
            "only 1-d quotients are supported")
    k = leaf_dim
    v0 = TWO_PI ** k
    quotient = QuotientModel(
        name=f"flat-torus-{n}",
        ambient_dim=n,
        min_leaf_dim=k,
        domain=Domain(CIRCLE, TWO_PI),
        density=lambda t, v0=v0: np.full_like(np.asarray(t, dtype=float), v0),
        density_derivative=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        endpoints=(),
        eligible=True,
        volume_closed_form=TWO_PI ** n,
    )
    ones = tuple(
        lambda t: np.ones_like(np.asarray(t, dtype=float)) for _ in range(k)
    )
    return FullModel(quotient=quotient, leaf_coord_count=k, metric_coeffs=ones)


def make_sphere_clifford_model() -> FullModel:
    """The unit 3-sphere foliated by the flat tori ``|z1| = cos t, |z2| = sin t``.

    Interval quotient ``[0, pi/2]``; both endpoints are singular (the torus
    collapses to a core circle, order 1).  Metric coefficients are
    ``cos(t)^2`` and ``sin(t)^2``; the density ``(2*pi)^2 cos(t) sin(t)``
    integrates to ``2*pi^2``, the volume of the 3-sphere.
    """
    amp = TWO_PI ** 2

    def density(t):
        t = np.asarray(t, dtype=float)
        return amp * np.cos(t) * np.sin(t)

    def density_derivative(t):
        t = np.asarray(t, dtype=float)
        return amp * np.cos(2.0 * t)

    quotient = QuotientModel(
        name="clifford",
        ambient_dim=3,
        min_leaf_dim=1,
        domain=Domain(INTERVAL, math.pi / 2.0),
        density=density,
        density_derivative=density_derivative,
        endpoints=(Endpoint(SINGULAR_LEAF, order=1), Endpoint(SINGULAR_LEAF, order=1)),
        eligible=True,
        volume_closed_form=2.0 * math.pi ** 2,
    )
    return FullModel(
        quotient=quotient,
        leaf_coord_count=2,
        metric_coeffs=(
            lambda t: np.cos(np.asarray(t, dtype=float)) ** 2,
            lambda t: np.sin(np.asarray(t, dtype=float)) ** 2,
        ),
    )


def unit_sphere_volume(dim: int) -> float:
    """Riemannian volume of the unit ``dim``-sphere."""
    return 2.0 * math.pi ** ((dim + 1) / 2.0) / math.gamma((dim + 1) / 2.0)


def make_sphere_latitude_model(n: int) -> FullModel:
    """The unit n-sphere foliated by latitude spheres about a fixed axis.

    The poles are point leaves, so the minimum leaf dimension is zero and
    the model is ineligible for the reduced solver; it exists for the
    geometry checks.  Interval quotient ``[0, pi]`` with density
    ``omega * sin(t)**(n-1)`` where ``omega`` is the unit (n-1)-sphere
    volume.

    The product chart uses a single angle whose coefficient is matched to
    the density; it is the literal leaf metric only for ``n = 2`` (where
    latitude leaves really are circles).
    """
    if n < 2:
        raise ValueError("latitude model needs n >= 2")
    omega = unit_sphere_volume(n - 1)

    def density(t):
        t = np.asarray(t, dtype=float)
        return omega * np.sin(t) ** (n - 1)

    def density_derivative(t):
        t = np.asarray(t, dtype=float)
        return omega * (n - 1) * np.sin(t) ** (n - 2) * np.cos(t)

    quotient = QuotientModel(
        name=f"latitude-{n}",
        ambient_dim=n,
        min_leaf_dim=0,
        domain=Domain(INTERVAL, math.pi),
        density=density,
        density_derivative=density_derivative,
        endpoints=(Endpoint(SINGULAR_LEAF, order=n - 1),
                   Endpoint(SINGULAR_LEAF, order=n - 1)),
        eligible=False,
        volume_closed_form=unit_sphere_volume(n),
    )
    return FullModel(
        quotient=quotient,
        leaf_coord_count=1,
        metric_coeffs=(lambda t: (density(t) / TWO_PI) ** 2,),
    )


# ---------------------------------------------------------------------------
# geometric operations
# ---------------------------------------------------------------------------

def mean_curvature(model: QuotientModel, t: float) -> float:
    """Radial mean-curvature component of the leaf over ``t``.

    Computed as ``-V'(t) / V(t)``: leaves shrink in the direction in which
    the leaf volume decays.  ``t`` must be strictly interior for interval
    quotients; circle quotients accept any ``t`` (wrapped).
    """
    t = model.require_interior(t)
    v = float(model.density_at(t))
    dv = float(model.density_slope_at(t))
    return -dv / v


def leaf_volume_asymptotics(model: QuotientModel, endpoint: int,
                            levels: int = 9) -> float:
    """Limit of ``V / s**l`` at a singular endpoint, ``s`` the endpoint distance.

    Evaluates the ratio on the geometric sequence ``s_k = 0.1*T * 2**-k``
    (``k = 0..levels-1``) and accelerates it with a Richardson table of
    integer orders.  The limit must be finite and positive; a sequence that
    refuses to settle means the declared order ``l`` is wrong and raises
    :class:`ExtrapolationError`.
    """
    if model.domain.is_circle:
        raise ValueError("circle quotients have no endpoints")
    if endpoint not in (0, 1):
        raise ValueError("endpoint must be 0 (left) or 1 (right)")
    ep = model.endpoints[endpoint]
    if ep.kind != SINGULAR_LEAF:
        raise ValueError(f"endpoint {endpoint} of {model.name!r} is not singular")
    order = int(ep.order)

    T = model.domain.length
    s = 0.1 * T * 0.5 ** np.arange(levels)
    t = s if endpoint == 0 else T - s
    ratios = np.asarray(model.density_at(t), dtype=float) / s ** order

    # Richardson table assuming an expansion in integer powers of s.
    table = [ratios]
    for j in range(1, levels):
        prev = table[-1]
        fac = 2.0 ** j
        table.append((fac * prev[1:] - prev[:-1]) / (fac - 1.0))
    diagonal = np.array([col[-1] for col in table])

    tail = diagonal[-3:]
    scale = abs(tail[-1])
    if not np.isfinite(tail).all() or scale == 0.0:
        raise ExtrapolationError(
            f"endpoint ratio of {model.name!r} did not produce a finite limit")
    spread = float(np.max(tail) - np.min(tail))
    if spread > 1e-4 * scale:
        raise ExtrapolationError(
            f"endpoint ratio of {model.name!r} did not stabilize "
            f"(last levels spread {spread:.3e} vs scale {scale:.3e}); "
            "is the declared order correct?")
    limit = float(diagonal[-1])
    if limit <= 0.0 or limit <= 1e-8 * float(ratios[0] + 1.0):
        raise ExtrapolationError(
            f"endpoint limit of {model.name!r} is not positive ({limit:.3e})")
    return limit


def total_volume(model: QuotientModel) -> float:
    """Total Riemannian volume ``∫_0^T V(t) dt``.

    Adaptive quadrature for closed-form densities; sampled densities use
    the interpolant's exact antiderivative.
    """
    T = model.domain.length
    if hasattr(model.density, "integrate"):
        return float(model.density.integrate(0.0, T))
    value, _ = quad(lambda t: float(model.density_at(t)), 0.0, T,
                    epsabs=0.0, epsrel=1e-12, limit=200)
    return float(value)


# ---------------------------------------------------------------------------
# custom models (JSON)
# ---------------------------------------------------------------------------

def _endpoint_from_dict(d: dict) -> Endpoint:
    return Endpoint(kind=d["kind"], order=d.get("order"))


def load_model(source) -> FullModel | QuotientModel:
    """Load a custom model from a JSON file path, file object, or dict.

    Schema::

        {"name": str, "n": int, "d_star": int,
         "domain": {"kind": "interval"|"circle", "T": float,
                    "endpoints": [{"kind": ..., "order": ...}, ...]},
         "density_samples": [[t, V], ...],
         "metric_coeff_samples": [[t, g1, g2, ...], ...]}   # optional

    Densities are interpolated monotone-cubically, which keeps ``V > 0``
    between positive samples and provides the derivative used by the
    curvature checks.  When metric samples are present a full product chart
    is returned, otherwise just the quotient model.
    """
    if isinstance(source, dict):
        raw = source
    elif hasattr(source, "read"):
        raw = json.load(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            raw = json.load(fh)

    dom = raw["domain"]
    domain = Domain(kind=dom["kind"], length=float(dom["T"]))
    endpoints: tuple[Endpoint, ...]
    if domain.is_circle:
        endpoints = ()
    else:
        eps = dom.get("endpoints", [])
        if len(eps) != 2:
            raise ValueError("interval domains need two endpoint descriptors")
        endpoints = tuple(_endpoint_from_dict(e) for e in eps)

    samples = np.asarray(raw["density_samples"], dtype=float)
    if samples.ndim != 2 or samples.shape[1] != 2 or samples.shape[0] < 4:
        raise ValueError("density_samples must be an (m, 2) table with m >= 4")
    ts, vs = samples[:, 0], samples[:, 1]
    if np.any(np.diff(ts) <= 0.0):
        raise ValueError("density sample abscissae must be strictly increasing")
    if np.any(vs < 0.0):
        raise ValueError("density samples must be non-negative")
    interp = PchipInterpolator(ts, vs)
    dinterp = interp.derivative()

    quotient = QuotientModel(
        name=str(raw["name"]),
        ambient_dim=int(raw["n"]),
        min_leaf_dim=int(raw["d_star"]),
        domain=domain,
        density=interp,
        density_derivative=dinterp,
        endpoints=endpoints,
        eligible=int(raw["d_star"]) >= 1,
        volume_closed_form=raw.get("volume"),
    )

    metric = raw.get("metric_coeff_samples")
    if metric is None:
        return quotient
    table = np.asarray(metric, dtype=float)
    if table.ndim != 2 or table.shape[1] < 2:
        raise ValueError("metric_coeff_samples must be an (m, 1+k) table")
    k = table.shape[1] - 1
    # data consistency at the sample nodes: the metric product must rebuild
    # the supplied density (interpolants can then only disagree at their
    # own interpolation-error scale between nodes)
    v_from_metric = TWO_PI ** k * np.sqrt(np.prod(table[:, 1:], axis=1))
    v_sampled = np.interp(table[:, 0], ts, vs)
    scale = np.maximum(np.abs(v_sampled), 1e-30)
    worst = float(np.max(np.abs(v_from_metric - v_sampled) / scale))
    if worst > 1e-8:
        raise ValueError("metric_coeff_samples are inconsistent with "
                         f"density_samples (relative gap {worst:.3e})")
    coeffs = tuple(PchipInterpolator(table[:, 0], table[:, 1 + j])
                   for j in range(k))
    return FullModel(quotient=quotient, leaf_coord_count=len(coeffs),
                     metric_coeffs=coeffs)


# ---------------------------------------------------------------------------
# registry used by the CLI and serialized artifacts
# ---------------------------------------------------------------------------

def builtin_models() -> dict[str, FullModel]:
    """Name -> model map of the stock models the CLI lists."""
    return {
        "flat-torus-3": make_flat_torus_model(3),
        "clifford": make_sphere_clifford_model(),
        "latitude-2": make_sphere_latitude_model(2),
    }


def resolve_model(name: str) -> FullModel | QuotientModel:
    """Resolve a model name: built-ins, parametric families, or ``custom:<path>``."""
    if name.startswith("custom:"):
        return load_model(name.split(":", 1)[1])
    stock = builtin_models()
    if name in stock:
        return stock[name]
    if name.startswith("flat-torus-"):
        return make_flat_torus_model(int(name.rsplit("-", 1)[1]))
    if name.startswith("latitude-"):
        return make_sphere_latitude_model(int(name.rsplit("-", 1)[1]))
    raise KeyError(f"unknown model {name!r}")
