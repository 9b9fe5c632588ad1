"""Serialization of grids, functions, specs and solve results.

JSON is the primary artifact format; floats pass through Python's shortest
round-trip representation (up to 17 significant digits), so reading a file
back reproduces the exact double-precision values.  Full-grid functions
additionally support a compact binary dump: a small header with the
dimensions followed by little-endian 64-bit floats in row-major order.
"""

from __future__ import annotations

import hashlib
import io as _io
import json
import struct
from typing import Any

import numpy as np

from .averaging import FullGrid, FullGridFunction
from .functionals import (GeneralEnergySpec, GrowthWitness, KirchhoffSpec,
                          Lagrangian, Potential, affine_weight,
                          dirichlet_lagrangian, gradient_power_lagrangian,
                          power_potential, power_weight, table_weight,
                          weighted_power_potential)
from .grids import BasicFunction, QuotientGrid
from .models import FullModel, QuotientModel, resolve_model
from .solver import SolveResult

_BINARY_MAGIC = b"BVFG\x01"


def canonical_digest(payload: Any) -> str:
    """SHA-256 of the canonical JSON encoding of ``payload``."""
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# basic functions
# ---------------------------------------------------------------------------

def basic_function_to_dict(u: BasicFunction) -> dict:
    return {"grid": {"model_name": u.grid.model.name, "N": u.grid.N},
            "values": [float(x) for x in u.values]}


def basic_function_from_dict(data: dict, model=None) -> BasicFunction:
    name = data["grid"]["model_name"]
    if model is None:
        model = resolve_model(name)
    quotient = model.quotient if isinstance(model, FullModel) else model
    if quotient.name != name:
        raise ValueError(f"payload was written for model {name!r}, "
                         f"got {quotient.name!r}")
    grid = QuotientGrid.build(quotient, int(data["grid"]["N"]))
    return BasicFunction(grid, np.asarray(data["values"], dtype=float))


def write_basic_csv(path, u: BasicFunction) -> None:
    """Two-column ``t,u`` export for external plotting."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,u\n")
        for t, v in zip(u.grid.nodes, u.values):
            fh.write(f"{float(t)!r},{float(v)!r}\n")


# ---------------------------------------------------------------------------
# full-grid functions
# ---------------------------------------------------------------------------

def full_function_to_dict(F: FullGridFunction) -> dict:
    grid = F.grid
    return {"model_name": grid.full_model.quotient.name,
            "n_quotient": grid.quotient.N,
            "leaf_sizes": list(grid.leaf_sizes),
            "order": "row-major",
            "values": [float(x) for x in F.values.ravel()]}


def full_function_from_dict(data: dict, full_model: FullModel) -> FullGridFunction:
    grid = FullGrid.build(full_model, int(data["n_quotient"]),
                          [int(m) for m in data["leaf_sizes"]])
    values = np.asarray(data["values"], dtype=float).reshape(grid.shape)
    return FullGridFunction(grid, values)


def write_full_binary(path, F: FullGridFunction) -> None:
    """Binary dump: magic, uint8 rank, little-endian uint64 dims, float64 data."""
    values = F.values
    with open(path, "wb") as fh:
        fh.write(_BINARY_MAGIC)
        fh.write(struct.pack("<B", values.ndim))
        fh.write(struct.pack(f"<{values.ndim}Q", *values.shape))
        fh.write(values.astype("<f8").tobytes(order="C"))


def read_full_binary(path, grid: FullGrid) -> FullGridFunction:
    with open(path, "rb") as fh:
        magic = fh.read(len(_BINARY_MAGIC))
        if magic != _BINARY_MAGIC:
            raise ValueError("not a full-grid binary file")
        (rank,) = struct.unpack("<B", fh.read(1))
        dims = struct.unpack(f"<{rank}Q", fh.read(8 * rank))
        data = np.frombuffer(fh.read(), dtype="<f8").reshape(dims)
    if tuple(dims) != grid.shape:
        raise ValueError(f"file holds shape {dims}, grid expects {grid.shape}")
    return FullGridFunction(grid, np.array(data, dtype=float))


# ---------------------------------------------------------------------------
# energy specs
# ---------------------------------------------------------------------------

def _weight_from_dict(data: dict):
    kind = data.get("kind", "power")
    if kind == "power":
        return power_weight(float(data.get("exponent", 0.0)))
    if kind == "affine":
        return affine_weight(float(data["c0"]), float(data["c1"]))
    if kind == "table":
        return table_weight(data["samples"], convex=bool(data.get("convex", False)))
    raise ValueError(f"unknown weight kind {kind!r}")


def _lagrangian_from_dict(data: dict | None) -> Lagrangian:
    if data is None:
        return dirichlet_lagrangian()
    preset = data.get("preset", "dirichlet")
    if preset == "dirichlet":
        return dirichlet_lagrangian()
    if preset == "gradient-power":
        return gradient_power_lagrangian(float(data["half_power"]))
    raise ValueError(f"unknown lagrangian preset {preset!r}")


def _potential_from_dict(data: dict | None, p_star: float,
                         domain_length: float) -> Potential:
    if data is None:
        return power_potential(p_star)
    preset = data.get("preset", "power-potential")
    q = float(data.get("q", p_star))
    if preset == "power-potential":
        return power_potential(q)
    if preset == "weighted-power":
        return weighted_power_potential(q, data.get("profile", "one"),
                                        domain_length)
    raise ValueError(f"unknown potential preset {preset!r}")


def load_energy_spec(source, n: int, domain_length: float):
    """Build a spec from a JSON file path, file object, or dict.

    ``n`` and ``domain_length`` come from the model the spec will run on.
    Returns ``(spec, digest)`` where the digest fingerprints the canonical
    payload.
    """
    if isinstance(source, dict):
        raw = source
    elif hasattr(source, "read"):
        raw = json.load(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            raw = json.load(fh)

    digest = canonical_digest(raw)
    family = raw.get("type", "kirchhoff")
    weight = _weight_from_dict(raw.get("weight", {"kind": "power", "exponent": 0}))
    p = float(raw.get("p", 2.0))
    r = float(raw.get("r", 2.0))
    lam = float(raw.get("lambda", 1.0))

    if family == "kirchhoff":
        return KirchhoffSpec(p=p, r=r, lam=lam, weight=weight, n=n), digest
    if family != "general":
        raise ValueError(f"unknown spec type {family!r}")

    a = float(raw.get("a", r + 1.0))
    from .grids import critical_exponent
    p_star = critical_exponent(n, p)
    potential = _potential_from_dict(raw.get("potential"), p_star, domain_length)
    lagrangian = _lagrangian_from_dict(raw.get("lagrangian"))
    growth = None
    if "growth" in raw:
        g = raw["growth"]
        a_const = float(g.get("a_const", 1.0))
        growth = GrowthWitness(
            a_fn=lambda t, a_const=a_const: np.full_like(
                np.asarray(t, dtype=float), a_const),
            b=float(g.get("b", 1.0)),
            p_star=float(g.get("p_star", p_star)))
    spec = GeneralEnergySpec(p=p, r=r, lam=lam, a=a, weight=weight,
                             lagrangian=lagrangian, potential=potential,
                             n=n, growth=growth)
    return spec, digest


# ---------------------------------------------------------------------------
# solve results
# ---------------------------------------------------------------------------

def solution_to_dict(result: SolveResult, spec_digest: str = "") -> dict:
    return {
        "model": result.model_name,
        "spec_digest": spec_digest,
        "epsilon": result.epsilon,
        "u": basic_function_to_dict(result.u),
        "theta": result.theta,
        "lambda_star": result.lambda_star,
        "residuals": {
            "constraint": result.constraint_residual,
            "tangent": result.tangent_grad_norm,
            "stationarity": result.full_stationarity_residual,
        },
        "energy": result.energy,
        "constraint_mass": result.constraint_mass,
        "iters": result.iterations,
        "converged": result.converged,
    }


def solution_from_dict(data: dict, model=None) -> SolveResult:
    u = basic_function_from_dict(data["u"], model=model)
    residuals = data.get("residuals", {})
    return SolveResult(
        u=u,
        theta=float(data["theta"]),
        lambda_star=float(data["lambda_star"]),
        constraint_residual=float(residuals.get("constraint", 0.0)),
        tangent_grad_norm=float(residuals.get("tangent", 0.0)),
        energy=float(data["energy"]),
        iterations=int(data.get("iters", 0)),
        converged=bool(data["converged"]),
        epsilon=float(data["epsilon"]),
        constraint_mass=float(data.get("constraint_mass", 0.0)),
        full_stationarity_residual=residuals.get("stationarity"),
        model_name=data.get("model", u.grid.model.name),
    )


def dump_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
