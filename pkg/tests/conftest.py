"""Shared fixtures and independent oracles used across the suite."""

import math

import numpy as np
import pytest

from basicvar.functionals import (GeneralEnergySpec, KirchhoffSpec,
                                  affine_weight, dirichlet_lagrangian,
                                  gradient_power_lagrangian, power_potential,
                                  power_weight, table_weight,
                                  weighted_power_potential)
from basicvar.grids import BasicFunction, QuotientGrid
from basicvar.models import (make_flat_torus_model, make_sphere_clifford_model,
                             make_sphere_latitude_model)

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="session")
def flat_torus():
    return make_flat_torus_model(3)


@pytest.fixture(scope="session")
def clifford():
    return make_sphere_clifford_model()


@pytest.fixture(scope="session")
def latitude2():
    return make_sphere_latitude_model(2)


@pytest.fixture(scope="session")
def latitude3():
    return make_sphere_latitude_model(3)


@pytest.fixture
def kirchhoff_spec():
    """Identity stretch, p = 2, r = 2, lam = 1 on a 3-manifold (p* = 6)."""
    return KirchhoffSpec(p=2.0, r=2.0, lam=1.0, weight=power_weight(0.0), n=3)


def spec_presets(n: int = 3, domain_length: float = TWO_PI):
    """The named energy configurations exercised by derivative checks."""
    s_table = np.linspace(0.0, 50.0, 26)
    presets = {
        "kirchhoff-identity": KirchhoffSpec(
            p=2.0, r=2.0, lam=1.0, weight=power_weight(0.0), n=n),
        "kirchhoff-affine": KirchhoffSpec(
            p=2.5, r=1.5, lam=0.7, weight=affine_weight(1.0, 0.3), n=n),
        "kirchhoff-table": KirchhoffSpec(
            p=2.0, r=2.0, lam=-0.4,
            weight=table_weight(np.column_stack([s_table, 1.0 + 0.1 * s_table]),
                                convex=True), n=n),
        "general-dirichlet-power": GeneralEnergySpec(
            p=2.0, r=2.0, lam=1.0, a=3.0, weight=power_weight(1.0),
            lagrangian=dirichlet_lagrangian(), potential=power_potential(6.0),
            n=n),
        "general-gradpower-weighted": GeneralEnergySpec(
            p=2.0, r=1.5, lam=0.8, a=2.0, weight=affine_weight(0.5, 0.1),
            lagrangian=gradient_power_lagrangian(2.0),
            potential=weighted_power_potential(4.0, "half-cosine",
                                               domain_length), n=n),
    }
    return presets


def fd_directional(energy_fn, grid, u, v, scale_hint=None):
    """Symmetric finite-difference oracle for a directional derivative.

    Step scaled by the cube root of machine epsilon, as appropriate for a
    second-order difference of a smooth functional.
    """
    scale = scale_hint or (1.0 + float(np.max(np.abs(u.values))))
    eps = (np.finfo(float).eps ** (1.0 / 3.0)) * scale
    up = BasicFunction(grid, u.values + eps * v.values)
    um = BasicFunction(grid, u.values - eps * v.values)
    return (energy_fn(grid, up) - energy_fn(grid, um)) / (2.0 * eps)


def random_basic(rng, grid, amplitude=1.0):
    return BasicFunction(grid, amplitude * rng.standard_normal(grid.N))


def smooth_basic(rng, grid, modes=3, amplitude=1.0):
    """Random band-limited profile; smooth under refinement studies."""
    T = grid.model.domain.length
    t = grid.nodes
    vals = np.full(grid.N, rng.uniform(-1.0, 1.0))
    for k in range(1, modes + 1):
        a, b = rng.uniform(-1.0, 1.0, size=2)
        if grid.is_circle:
            vals = vals + a * np.cos(2 * np.pi * k * t / T) \
                + b * np.sin(2 * np.pi * k * t / T)
        else:
            vals = vals + a * np.cos(np.pi * k * t / T)
    return BasicFunction(grid, amplitude * vals)
