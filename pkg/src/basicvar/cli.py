"""Command-line interface.

Subcommands: ``models``, ``geometry``, ``solve``, ``sweep``, ``verify``,
``average-demo``.  Outputs are JSON/CSV artifacts plus optional rendered
figures; every run that writes files also writes a ``*.manifest.json``
listing them together with a digest of the effective configuration.

Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 verification
failure.  Failures also emit a machine-readable JSON object on stderr.

Defaults can come from a JSON config file (``--config``) whose keys match
the option names of the chosen subcommand; explicit flags win.  The
environment variable ``BASICVAR_OUT`` sets the default output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .averaging import FullGrid, FullGridFunction, verify_average_identity
from .criticality import verify_symmetric_criticality
from .grids import BasicFunction, QuotientGrid
from .io import (basic_function_to_dict, canonical_digest, dump_json,
                 load_energy_spec, load_json, solution_from_dict,
                 solution_to_dict, write_basic_csv)
from .models import (ExtrapolationError, FullModel, SINGULAR_LEAF,
                     builtin_models, full_consistency_deviation,
                     leaf_volume_asymptotics, mean_curvature, resolve_model,
                     total_volume)
from .solver import (NumericalSolveError, SolveConfig, minimize_on_constraint,
                     solve_sequence)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_VERIFICATION = 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": {"type": kind, "message": message}})
                     + "\n")
    return code


def _out_dir(args) -> Path:
    base = getattr(args, "out_dir", None) or os.environ.get("BASICVAR_OUT", ".")
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_manifest(out_dir: Path, command: str, config: dict, outputs: list,
                    steps: list, started: float, workers: int = 1,
                    stem: str = "run") -> Path:
    import scipy

    manifest = {
        "command": command,
        "config_digest": canonical_digest(config),
        "versions": {
            "basicvar": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": sys.version.split()[0],
        },
        "wall_time_s": time.monotonic() - started,
        "steps": steps,
        "outputs": [str(p) for p in outputs],
        "workers": workers,
    }
    path = out_dir / f"{stem}.manifest.json"
    dump_json(path, manifest)
    return path


def _quotient_of(model):
    return model.quotient if isinstance(model, FullModel) else model


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_models(args) -> int:
    rows = []
    for name, model in builtin_models().items():
        q = model.quotient
        dom = (f"circle T={q.domain.length:.6g}" if q.domain.is_circle
               else f"interval [0, {q.domain.length:.6g}]")
        vol = q.volume_closed_form
        rows.append((name, q.ambient_dim, q.min_leaf_dim, dom,
                     "yes" if q.eligible else "no",
                     f"{vol:.10g}" if vol is not None else "-"))
    header = ("model", "n", "d*", "quotient", "eligible", "volume")
    widths = [max(len(str(r[i])) for r in rows + [header]) for i in range(6)]
    for row in [header] + rows:
        print("  ".join(str(c).ljust(w) for c, w in zip(row, widths)))
    return EXIT_OK


def cmd_geometry(args) -> int:
    started = time.monotonic()
    try:
        model = resolve_model(args.model)
    except (KeyError, FileNotFoundError, ValueError) as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    quotient = _quotient_of(model)
    steps = []
    failed = False

    def record(name: str, ok: bool, detail: str) -> None:
        nonlocal failed
        steps.append({"name": name, "status": "pass" if ok else "fail",
                      "detail": detail})
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        failed = failed or not ok

    try:
        vol = total_volume(quotient)
        if quotient.volume_closed_form is not None:
            rel = abs(vol - quotient.volume_closed_form) / quotient.volume_closed_form
            record("total-volume", rel <= 1e-10,
                   f"quadrature {vol:.12g}, closed form "
                   f"{quotient.volume_closed_form:.12g}, rel err {rel:.3e}")
        else:
            record("total-volume", np.isfinite(vol), f"quadrature {vol:.12g}")

        if isinstance(model, FullModel):
            knots = getattr(quotient.density, "x", None)
            if knots is None:
                dev = full_consistency_deviation(model)
                record("metric-density-consistency", dev <= 1e-12,
                       f"max relative deviation {dev:.3e}")
            else:
                # sampled model: compare the data at its own nodes
                inner = np.asarray(knots)[1:-1]
                vm = model.density_from_metric(inner)
                v = quotient.density_at(inner)
                dev = float(np.max(np.abs(vm - v) / v))
                record("metric-density-consistency", dev <= 1e-8,
                       f"max relative deviation at sample nodes {dev:.3e}")

        order, probe = _curvature_fd_order(quotient)
        ok = (order is None) or (order >= 1.9)
        mid = quotient.domain.length / 2.0
        detail = ("identically matched (flat density)" if order is None
                  else f"observed order {order:.3f} at {len(probe)} probes")
        detail += f"; H({mid:.6g}) = {mean_curvature(quotient, mid):.6g}"
        record("curvature-matches-log-derivative", ok, detail)

        for idx, ep in enumerate(quotient.endpoints):
            if ep.kind != SINGULAR_LEAF:
                continue
            limit = leaf_volume_asymptotics(quotient, idx)
            record(f"leaf-volume-asymptotics-endpoint-{idx}", limit > 0.0,
                   f"V/s^{ep.order} -> {limit:.10g}")
    except ExtrapolationError as exc:
        record("leaf-volume-asymptotics", False, str(exc))
    except Exception as exc:  # numerical breakage
        return _fail("numerical", str(exc), EXIT_NUMERICAL)

    outputs = []
    out_dir = _out_dir(args)
    if args.json:
        path = out_dir / args.json
        dump_json(path, {"model": quotient.name, "steps": steps})
        outputs.append(path)
    if args.plot:
        from .plots import plot_geometry
        outputs.append(plot_geometry(model, out_dir / f"{quotient.name}_geometry.png"))
    if outputs:
        outputs.append(_write_manifest(out_dir, "geometry",
                                       {"model": args.model}, outputs, steps,
                                       started, stem=f"geometry_{quotient.name}"))
    return EXIT_VERIFICATION if failed else EXIT_OK


def _curvature_fd_order(quotient):
    """Observed order of agreement between -V'/V and the difference of -ln V.

    Sampled densities are piecewise polynomials, so the difference stencils
    must stay inside one knot cell to see the asymptotic order.
    """
    T = quotient.domain.length
    knots = getattr(quotient.density, "x", None)
    if knots is None:
        probes = np.linspace(0.15 * T, 0.85 * T, 9)
        h0 = T / 200.0
    else:
        centers = 0.5 * (np.asarray(knots[:-1]) + np.asarray(knots[1:]))
        probes = centers[(centers > 0.1 * T) & (centers < 0.9 * T)][::3]
        h0 = float(np.min(np.diff(knots))) / 4.0
    errors = []
    for h in (h0, h0 / 2.0):
        fd = -(np.log(quotient.density_at(probes + h))
               - np.log(quotient.density_at(probes - h))) / (2.0 * h)
        exact = np.array([mean_curvature(quotient, t) for t in probes])
        errors.append(float(np.max(np.abs(fd - exact))))
    if errors[0] < 1e-13:
        return None, probes
    return float(np.log2(errors[0] / errors[1])), probes


def _load_spec_for(args, model):
    quotient = _quotient_of(model)
    spec_raw = load_json(args.spec) if isinstance(args.spec, str) else args.spec
    spec, digest = load_energy_spec(spec_raw, n=quotient.ambient_dim,
                                    domain_length=quotient.domain.length)
    return spec, digest, spec_raw


def cmd_solve(args) -> int:
    started = time.monotonic()
    try:
        model = resolve_model(args.model)
        spec, digest, spec_raw = _load_spec_for(args, model)
        config = SolveConfig(epsilon=args.eps, grid_size=args.grid,
                             grad_tol=args.grad_tol, seed=args.seed,
                             init="random" if args.random_init else "constant",
                             deflate=args.deflate,
                             negative_branch=args.negative_branch)
    except (KeyError, FileNotFoundError, ValueError, json.JSONDecodeError) as exc:
        return _fail("usage", str(exc), EXIT_USAGE)

    try:
        result = minimize_on_constraint(spec, model, config)
    except NumericalSolveError as exc:
        return _fail("numerical", str(exc), EXIT_NUMERICAL)
    except ValueError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)

    out_dir = _out_dir(args)
    out_path = out_dir / args.out
    payload = solution_to_dict(result, spec_digest=digest)
    payload["spec"] = spec_raw
    dump_json(out_path, payload)
    outputs = [out_path]
    if args.csv:
        csv_path = out_dir / args.csv
        write_basic_csv(csv_path, result.u)
        outputs.append(csv_path)
    if args.plot:
        from .plots import plot_solution_profile
        outputs.append(plot_solution_profile(result,
                                             out_dir / (out_path.stem + "_profile.png")))
    steps = [{"name": "solve", "status": "pass" if result.converged else "fail"}]
    outputs.append(_write_manifest(out_dir, "solve", {
        "model": args.model, "spec": spec_raw, "eps": args.eps,
        "grid": args.grid, "seed": args.seed, "deflate": args.deflate,
    }, outputs, steps, started, stem=out_path.stem))

    print(f"model={result.model_name} eps={result.epsilon:g} "
          f"converged={result.converged} iters={result.iterations} "
          f"tangent={result.tangent_grad_norm:.3e} theta={result.theta:.12g} "
          f"lambda*={result.lambda_star:.12g}")
    if not result.converged:
        return _fail("numerical", "solve did not converge", EXIT_NUMERICAL)
    return EXIT_OK


def cmd_sweep(args) -> int:
    started = time.monotonic()
    try:
        model = resolve_model(args.model)
        spec, digest, spec_raw = _load_spec_for(args, model)
        eps_list = [float(x) for x in args.eps.split(",") if x.strip()]
        config = SolveConfig(epsilon=eps_list[0], grid_size=args.grid,
                             grad_tol=args.grad_tol, seed=args.seed,
                             init="random" if args.random_init else "constant",
                             deflate=args.deflate)
        entries = solve_sequence(spec, model, eps_list, config,
                                 workers=args.workers)
    except (KeyError, FileNotFoundError, ValueError, json.JSONDecodeError) as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    except RuntimeError as exc:
        return _fail("numerical", str(exc), EXIT_NUMERICAL)

    out_dir = _out_dir(args)
    outputs = []
    rows = []
    steps = []
    for i, entry in enumerate(entries):
        if entry.result is None:
            steps.append({"name": f"solve-eps-{entry.epsilon:g}",
                          "status": "fail", "detail": entry.error})
            continue
        res = entry.result
        member_path = out_dir / f"solution_{i:02d}.json"
        payload = solution_to_dict(res, spec_digest=digest)
        payload["spec"] = spec_raw
        dump_json(member_path, payload)
        outputs.append(member_path)
        steps.append({"name": f"solve-eps-{entry.epsilon:g}",
                      "status": "pass" if res.converged else "fail"})
        rows.append({
            "epsilon": res.epsilon, "lambda_star": res.lambda_star,
            "theta": res.theta, "energy": res.energy,
            "constraint_mass": res.constraint_mass,
            "constraint_residual": res.constraint_residual,
            "tangent_residual": res.tangent_grad_norm,
            "converged": res.converged,
        })

    csv_path = out_dir / "sweep_summary.csv"
    cols = ["epsilon", "lambda_star", "theta", "energy", "constraint_mass",
            "constraint_residual", "tangent_residual", "converged"]
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(repr(row[c]) if isinstance(row[c], float)
                              else str(row[c]) for c in cols) + "\n")
    outputs.append(csv_path)
    if args.plot and rows:
        from .plots import plot_sweep_summary
        outputs.append(plot_sweep_summary(rows, out_dir / "sweep_summary.png"))
    outputs.append(_write_manifest(out_dir, "sweep", {
        "model": args.model, "spec": spec_raw, "eps": eps_list,
        "grid": args.grid, "seed": args.seed,
    }, outputs, steps, started, workers=args.workers, stem="sweep"))

    bad = [e for e in entries if not e.ok]
    print(f"sweep: {len(entries) - len(bad)}/{len(entries)} converged; "
          f"summary at {csv_path}")
    if bad:
        return _fail("numerical", f"{len(bad)} sweep member(s) failed",
                     EXIT_NUMERICAL)
    return EXIT_OK


def cmd_verify(args) -> int:
    started = time.monotonic()
    try:
        payload = load_json(args.solution)
        model = resolve_model(payload["model"])
        if not isinstance(model, FullModel):
            raise ValueError("verification needs a full product model")
        spec_raw = payload.get("spec")
        if args.spec:
            spec_raw = load_json(args.spec)
        if spec_raw is None:
            raise ValueError("solution file carries no spec payload; pass --spec")
        spec, digest = load_energy_spec(
            spec_raw, n=model.quotient.ambient_dim,
            domain_length=model.quotient.domain.length)
        if payload.get("spec_digest") and digest != payload["spec_digest"]:
            raise ValueError("spec digest mismatch between solution and spec")
        result = solution_from_dict(payload, model=model)
        parts = [int(x) for x in args.full_grid.split(",")]
        n_t, leaf_sizes = parts[0], parts[1:] or [64]
    except (KeyError, FileNotFoundError, ValueError, json.JSONDecodeError) as exc:
        return _fail("usage", str(exc), EXIT_USAGE)

    try:
        report = verify_symmetric_criticality(spec, model, result,
                                              num_dirs=args.dirs,
                                              seed=args.seed,
                                              n_quotient=n_t,
                                              leaf_sizes=leaf_sizes)
    except ValueError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)

    out_dir = _out_dir(args)
    out_path = out_dir / args.out
    report_payload = {
        "solution": str(args.solution),
        "resolutions": [[n, list(sizes)] for n, sizes in report.resolutions],
        "residual_per_direction": [
            {"kind": d.kind, "residuals": list(d.residuals), "order": d.order}
            for d in report.residual_per_direction],
        "max_nonbasic_residual": report.max_nonbasic_residual,
        "refinement_order_estimate": report.refinement_order_estimate,
        "basic_deviation_of_gradient": report.basic_deviation_of_gradient,
        "passed": report.passed(),
    }
    dump_json(out_path, report_payload)
    outputs = [out_path]
    if args.plot:
        from .plots import plot_verification_residuals
        outputs.append(plot_verification_residuals(
            report, out_dir / (out_path.stem + "_residuals.png")))
    steps = [{"name": "verify", "status": "pass" if report.passed() else "fail"}]
    outputs.append(_write_manifest(out_dir, "verify", {
        "solution": str(args.solution), "full_grid": args.full_grid,
        "dirs": args.dirs, "seed": args.seed,
    }, outputs, steps, started, stem=out_path.stem))

    print(f"verify: max residual {report.max_nonbasic_residual:.3e}, "
          f"gradient leaf spread {report.basic_deviation_of_gradient:.3e}, "
          f"passed={report.passed()}")
    return EXIT_OK if report.passed() else EXIT_VERIFICATION


def cmd_average_demo(args) -> int:
    started = time.monotonic()
    try:
        model = resolve_model(args.model)
        if not isinstance(model, FullModel):
            raise ValueError("averaging demo needs a full product model")
    except (KeyError, FileNotFoundError, ValueError) as exc:
        return _fail("usage", str(exc), EXIT_USAGE)

    grid = FullGrid.build(model, args.grid, args.leaf_grid)
    rng = np.random.default_rng(args.seed)
    residuals = []
    for _ in range(args.cases):
        b = BasicFunction(grid.quotient, rng.standard_normal(grid.quotient.N))
        L1 = BasicFunction(grid.quotient, rng.standard_normal(grid.quotient.N))
        L2 = BasicFunction(grid.quotient, rng.standard_normal(grid.quotient.N))
        F = FullGridFunction(grid, rng.standard_normal(grid.shape))
        from .averaging import symmetric_functional
        l_f = symmetric_functional(b, L1, L2, F)
        residuals.append(verify_average_identity(b, L1, L2, F)
                         / (abs(l_f) + 1.0))
    worst = max(residuals)
    ok = worst <= 1e-12
    print(f"average-demo: {args.cases} cases on {model.quotient.name}, "
          f"max normalized residual {worst:.3e} -> {'PASS' if ok else 'FAIL'}")

    outputs = []
    out_dir = _out_dir(args)
    if args.out:
        path = out_dir / args.out
        dump_json(path, {"model": model.quotient.name, "cases": args.cases,
                         "normalized_residuals": residuals,
                         "max_normalized_residual": worst, "passed": ok})
        outputs.append(path)
    if args.plot:
        from .plots import plot_average_residuals
        outputs.append(plot_average_residuals(
            residuals, out_dir / "average_residuals.png"))
    if outputs:
        steps = [{"name": "average-identity", "status": "pass" if ok else "fail"}]
        outputs.append(_write_manifest(out_dir, "average-demo", {
            "model": args.model, "cases": args.cases, "seed": args.seed,
        }, outputs, steps, started, stem="average_demo"))
    return EXIT_OK if ok else EXIT_VERIFICATION


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="basicvar",
        description="symmetry-reduced variational solver on foliated models")
    parser.add_argument("--config", default=None,
                        help="JSON file with default option values")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("models", help="list built-in models")

    g = sub.add_parser("geometry", help="run the geometric identity checks")
    g.add_argument("--model", required=True)
    g.add_argument("--json", default=None, help="write a JSON report")
    g.add_argument("--plot", action="store_true")
    g.add_argument("--out-dir", default=None)

    s = sub.add_parser("solve", help="one constrained minimization")
    s.add_argument("--model", required=True)
    s.add_argument("--spec", required=True, help="energy spec JSON file")
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--grid", type=int, default=2001)
    s.add_argument("--grad-tol", type=float, default=1e-10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--random-init", action="store_true")
    s.add_argument("--deflate", action="store_true",
                   help="experimental: restrict to weighted mean-zero functions")
    s.add_argument("--negative-branch", action="store_true")
    s.add_argument("--out", default="solution.json")
    s.add_argument("--csv", default=None)
    s.add_argument("--plot", action="store_true")
    s.add_argument("--out-dir", default=None)

    w = sub.add_parser("sweep", help="independent solves over epsilon levels")
    w.add_argument("--model", required=True)
    w.add_argument("--spec", required=True)
    w.add_argument("--eps", required=True, help="comma-separated increasing list")
    w.add_argument("--grid", type=int, default=2001)
    w.add_argument("--grad-tol", type=float, default=1e-10)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--random-init", action="store_true")
    w.add_argument("--deflate", action="store_true")
    w.add_argument("--workers", type=int, default=1)
    w.add_argument("--plot", action="store_true")
    w.add_argument("--out-dir", default=None)

    v = sub.add_parser("verify", help="full-grid criticality verification")
    v.add_argument("--solution", required=True)
    v.add_argument("--spec", default=None,
                   help="override the spec embedded in the solution file")
    v.add_argument("--full-grid", default="401,64,64",
                   help="Nt,Ntheta1[,Ntheta2]")
    v.add_argument("--dirs", type=int, default=8)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", default="report.json")
    v.add_argument("--plot", action="store_true")
    v.add_argument("--out-dir", default=None)

    a = sub.add_parser("average-demo", help="averaging identity suite")
    a.add_argument("--model", default="clifford")
    a.add_argument("--cases", type=int, default=50)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--grid", type=int, default=101)
    a.add_argument("--leaf-grid", type=int, default=16)
    a.add_argument("--out", default=None)
    a.add_argument("--plot", action="store_true")
    a.add_argument("--out-dir", default=None)

    return parser


_HANDLERS = {
    "models": cmd_models,
    "geometry": cmd_geometry,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "average-demo": cmd_average_demo,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()

    # apply config-file defaults for the chosen subcommand before parsing
    if "--config" in argv:
        cfg_path = argv[argv.index("--config") + 1]
        try:
            defaults = load_json(cfg_path)
        except (OSError, json.JSONDecodeError) as exc:
            return _fail("usage", f"bad config file: {exc}", EXIT_USAGE)
        command = next((a for a in argv if not a.startswith("-")
                        and a in _HANDLERS), None)
        if command and command in defaults:
            sub = parser._subparsers._group_actions[0].choices[command]
            for action in sub._actions:
                key = action.dest.replace("_", "-")
                if key in defaults[command]:
                    action.default = defaults[command][key]
                elif action.dest in defaults[command]:
                    action.default = defaults[command][action.dest]
                else:
                    continue
                action.required = False  # satisfied by the config file

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    return _HANDLERS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
