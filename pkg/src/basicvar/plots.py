"""Figure rendering for the CLI report paths.

Every function takes prepared data and a target path, writes a PNG with the
Agg backend, and returns the path, so the CLI can list the file in its run
manifest next to the JSON/CSV artifacts.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_solution_profile(result, path) -> str:
    grid = result.u.grid
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(grid.nodes, result.u.values, lw=1.5)
    ax.set_xlabel("quotient coordinate t")
    ax.set_ylabel("u(t)")
    ax.set_title(f"{result.model_name}: eps={result.epsilon:g}, "
                 f"lambda*={result.lambda_star:.3e}")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def plot_sweep_summary(rows: list[dict], path) -> str:
    eps = np.array([row["epsilon"] for row in rows])
    fig, axes = plt.subplots(2, 2, figsize=(9.0, 6.5))
    panels = [("lambda_star", "lambda*"), ("theta", "theta"),
              ("energy", "energy"), ("constraint_mass", "constraint mass")]
    for ax, (key, label) in zip(axes.ravel(), panels):
        ax.plot(eps, [row[key] for row in rows], "o-")
        ax.set_xscale("log")
        ax.set_xlabel("eps")
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    fig.suptitle("constraint-level sweep")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def plot_verification_residuals(report, path) -> str:
    dirs = report.residual_per_direction
    idx = np.arange(len(dirs))
    width = 0.38
    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    coarse = [max(d.residuals[0], 1e-18) for d in dirs]
    fine = [max(d.residuals[-1], 1e-18) for d in dirs]
    ax.bar(idx - width / 2, coarse, width, label=f"N_t={report.resolutions[0][0]}")
    ax.bar(idx + width / 2, fine, width, label=f"N_t={report.resolutions[-1][0]}")
    ax.set_yscale("log")
    ax.set_xticks(idx)
    ax.set_xticklabels([d.kind for d in dirs], rotation=30, ha="right")
    ax.axhline(report.pure_floor, color="k", ls="--", lw=0.8,
               label="leaf-mode floor")
    ax.set_ylabel("|dJ[W]| / ||W||")
    ax.set_title("first-variation residuals against non-basic directions")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def plot_geometry(model, path) -> str:
    from .models import FullModel, mean_curvature

    quotient = model.quotient if isinstance(model, FullModel) else model
    T = quotient.domain.length
    t = np.linspace(T * 1e-3, T * (1 - 1e-3), 512)
    v = quotient.density_at(t)
    h = np.array([mean_curvature(quotient, ti) for ti in t])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    ax1.plot(t, v)
    ax1.set_xlabel("t")
    ax1.set_ylabel("leaf volume V(t)")
    ax1.grid(alpha=0.3)
    ax2.plot(t, h)
    ax2.set_xlabel("t")
    ax2.set_ylabel("mean curvature -V'/V")
    ax2.grid(alpha=0.3)
    fig.suptitle(quotient.name)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def plot_average_residuals(residuals, path) -> str:
    r = np.maximum(np.asarray(residuals, dtype=float), 1e-20)
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.semilogy(np.arange(len(r)), r, "o", ms=4)
    ax.axhline(1e-12, color="k", ls="--", lw=0.8, label="tolerance scale")
    ax.set_xlabel("case")
    ax.set_ylabel("|l(Av f) - l(f)| / (|l(f)| + 1)")
    ax.set_title("averaging identity residuals")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)
