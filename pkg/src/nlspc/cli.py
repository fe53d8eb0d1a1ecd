"""Command line interface: solve / analyze / dipole / validate / sweep.

Exit codes: 0 success, 1 validation failure, 2 usage or configuration error.
Timing is segregated into timing.csv so the scientific outputs are bit-stable
across repeated runs with the same seed.
"""

import argparse
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import variational as var
from .analysis import (count_nodal_domains, decay_metric, dipole_study,
                       nodal_count_scan)
from .config import ConfigError, RunConfig, parse_config
from .grid import Field, build_grid
from .model import check_hypotheses, potential_values, pure_power
from .oracle import dense_operator_matrix, dense_scale_scan, fd_gradient_check
from .serialization import FormatError, read_field, write_field
from .solver import (gradient_residual, linear_ground_eigenpair,
                     solve_constrained_ground_state)
from .symmetry import symmetry_residual

SUMMARY_COLUMNS = ("energy", "h_norm_sq", "nehari_residual", "grad_residual",
                   "iterations", "nodal_total", "symmetry_residual",
                   "decay_metric")


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _axis_label(spec, axis: int) -> str:
    if axis < spec.confined_dims:
        return f"x{axis + 1}"
    return f"y{axis - spec.confined_dims + 1}"


def summary_row(field: Field, report) -> dict:
    return {
        "energy": report.final_energy,
        "h_norm_sq": report.h_norm_sq,
        "nehari_residual": report.nehari_residual,
        "grad_residual": report.grad_residual,
        "iterations": report.iterations,
        "nodal_total": report.nodal_count,
        "symmetry_residual": report.symmetry_residual,
        "decay_metric": report.decay_metric,
    }


def emit_report(field: Field, report, config: RunConfig, out_dir,
                timing: dict | None = None, dipole_results=None) -> None:
    os.makedirs(out_dir, exist_ok=True)
    emit = set(config.output.emit)
    row = summary_row(field, report)

    if "summary" in emit:
        with open(os.path.join(out_dir, "summary.csv"), "w") as fh:
            fh.write(",".join(SUMMARY_COLUMNS) + "\n")
            fh.write(",".join(_fmt(row[c]) for c in SUMMARY_COLUMNS) + "\n")

    if "trace" in emit:
        with open(os.path.join(out_dir, "trace.csv"), "w") as fh:
            fh.write("iteration,energy,residual\n")
            for i, (e, r) in enumerate(report.trace):
                fh.write(f"{i},{_fmt(e)},{_fmt(r)}\n")

    if "slices" in emit:
        _write_slices(field, os.path.join(out_dir, "slices"))

    if "field" in emit:
        write_field(os.path.join(out_dir, "field.nlsf"), field)

    if "dipole" in emit and dipole_results:
        with open(os.path.join(out_dir, "dipole.csv"), "w") as fh:
            fh.write("separation,energy,two_c,gap,overlap\n")
            for res in dipole_results:
                fh.write(",".join(_fmt(v) for v in (
                    res.separation, res.energy, res.two_c, res.gap,
                    res.overlap)) + "\n")

    if "timing" in emit and timing:
        with open(os.path.join(out_dir, "timing.csv"), "w") as fh:
            fh.write("phase,seconds\n")
            for phase, seconds in timing.items():
                fh.write(f"{phase},{seconds:.6f}\n")


def _write_slices(field: Field, slices_dir) -> None:
    spec = field.spec
    m, n = spec.confined_dims, spec.total_dims
    pairs = []
    if m >= 2:
        pairs.append((0, 1))
    if n - m >= 1:
        pairs.append((0, m))
    if n - m >= 2:
        pairs.append((m, m + 1))
    os.makedirs(slices_dir, exist_ok=True)
    for a, b in pairs:
        la, lb = _axis_label(spec, a), _axis_label(spec, b)
        index = [s // 2 for s in spec.shape]
        sl = [slice(None) if ax in (a, b) else index[ax] for ax in range(n)]
        plane = field.values[tuple(sl)]
        if a > b:
            plane = plane.T
        ca, cb = spec.axis_coords(a), spec.axis_coords(b)
        path = os.path.join(slices_dir, f"slice_{la}{lb}.csv")
        with open(path, "w") as fh:
            fh.write(f"{la},{lb},value\n")
            for i in range(plane.shape[0]):
                for j in range(plane.shape[1]):
                    fh.write(f"{_fmt(float(ca[i]))},{_fmt(float(cb[j]))},"
                             f"{_fmt(float(plane[i, j]))}\n")


def _load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([(0, f"cannot read config {path}: {exc}")])
    return text


def _run_solve(config: RunConfig, out_dir) -> int:
    t0 = time.perf_counter()
    field, report = solve_constrained_ground_state(
        config.grid, config.model, config.solver)
    solve_seconds = time.perf_counter() - t0
    dipole_results = None
    if config.analysis.separations:
        V = potential_values(config.grid)
        dipole_results = dipole_study(field, config.model, V,
                                      config.analysis.separations)
    emit_report(field, report, config, out_dir,
                timing={"solve": solve_seconds},
                dipole_results=dipole_results)
    status = "converged" if report.converged else "NOT converged"
    print(f"solve: {status} in {report.iterations} iterations, "
          f"energy {report.final_energy:.10g}, "
          f"nodal domains {report.nodal_count}")
    return 0 if report.converged else 1


def cmd_solve(args) -> int:
    config = parse_config(_load_config(args.config))
    out_dir = args.out or config.output.directory
    return _run_solve(config, out_dir)


def cmd_analyze(args) -> int:
    try:
        field = read_field(args.field)
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    config = parse_config(_load_config(args.config)) if args.config else None

    V = potential_values(field.spec)
    model = config.model if config else None
    if model is not None:
        bd = var.energy(field, model, V)
        nres = var.nehari_residual(field, model, V)
        grad_res = gradient_residual(field, model, V, config.solver.lin_tol)
        energy_cols = {"energy": bd.total, "h_norm_sq": bd.h_norm_sq,
                       "nehari_residual": nres, "grad_residual": grad_res}
    else:
        energy_cols = {"energy": "", "h_norm_sq": "", "nehari_residual": "",
                       "grad_residual": ""}

    max_abs = float(np.max(np.abs(field.values)))
    thresholds = (tuple(args.thresholds) if args.thresholds
                  else (config.analysis.thresholds if config
                        else (1e-4, 1e-6, 1e-8)))
    nodal = count_nodal_domains(field, thresholds[len(thresholds) // 2]
                                * max_abs if max_abs else 0.0)
    sym = (symmetry_residual(field, config.constraint)
           if config and config.constraint.kind != "full" and max_abs > 0
           else 0.0)

    row = dict(energy_cols)
    row.update({"iterations": "", "nodal_total": nodal.total,
                "symmetry_residual": sym, "decay_metric": decay_metric(field)})
    print(",".join(SUMMARY_COLUMNS))
    print(",".join(_fmt(row[c]) for c in SUMMARY_COLUMNS))

    scan = nodal_count_scan(field, thresholds)
    for rel, rep in scan.items():
        print(f"# nodal domains at threshold {rel:g}*max|u|: {rep.total} "
              f"({rep.positive_domains} positive, {rep.negative_domains} "
              "negative)")
    return 0


def cmd_dipole(args) -> int:
    config = parse_config(_load_config(args.config))
    separations = tuple(float(s) for s in args.separations.split(","))
    field, report = solve_constrained_ground_state(
        config.grid, config.model, config.solver)
    if not report.converged:
        print("error: ground-state solve did not converge", file=sys.stderr)
        return 1
    V = potential_values(config.grid)
    results = dipole_study(field, config.model, V, separations)
    out_dir = args.out or config.output.directory
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "dipole.csv"), "w") as fh:
        fh.write("separation,energy,two_c,gap,overlap\n")
        for res in results:
            fh.write(",".join(_fmt(v) for v in (
                res.separation, res.energy, res.two_c, res.gap,
                res.overlap)) + "\n")
    for res in results:
        print(f"separation {res.separation:g}: gap {res.gap:.3e}, "
              f"overlap {res.overlap:.3e}")
    return 0


def cmd_validate(_args) -> int:
    """Oracle agreement and discretization validity; prints one line each."""
    failures = 0

    def check(name, ok, detail=""):
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))
        if not ok:
            failures += 1

    rng = np.random.default_rng(7)
    spec = build_grid(2, 1, (3.0, 4.0), (9, 11))
    V = potential_values(spec)
    u = Field(spec, rng.standard_normal(spec.shape))
    dense = dense_operator_matrix(spec, V)
    from .kernels import apply_operator
    from .grid import _inv_h2
    stencil = apply_operator(u.values, V.values, _inv_h2(spec)).reshape(-1)
    err = float(np.max(np.abs(dense @ u.flat - stencil)))
    check("dense operator vs stencil", err <= 1e-10 * max(1.0, float(np.max(np.abs(stencil)))),
          f"max error {err:.2e}")

    from .grid import dirichlet_energy, integrate, laplacian_apply
    sbp = abs(dirichlet_energy(u) + integrate(
        Field(spec, u.values * laplacian_apply(u).values, validate=False)))
    check("summation by parts", sbp <= 1e-12 * max(1.0, dirichlet_energy(u)),
          f"defect {sbp:.2e}")

    model = pure_power(4.0)
    t_star = var.nehari_scale(u, model, V)
    scan = dense_scale_scan(u, model, V, t_grid=np.logspace(-2, 2, 4001))
    rel = abs(math.log(t_star / scan.t_residual_root))
    check("Nehari scale vs dense scan", rel <= math.log(10) * 4 / 4000 * 2,
          f"log mismatch {rel:.2e}")

    directions = [Field(spec, rng.standard_normal(spec.shape))
                  for _ in range(3)]
    fd = fd_gradient_check(u, model, V, directions)
    check("gradient finite-difference order", fd.observed_order >= 1.9,
          f"order {fd.observed_order:.3f}")

    espec = build_grid(2, 1, (8.0, 8.0), (255, 255))
    lam, _ = linear_ground_eigenpair(espec, potential_values(espec), tol=1e-6)
    target = 1.0 + (math.pi / 16.0) ** 2
    check("harmonic+box ground eigenvalue", abs(lam - target) <= 1e-2,
          f"lambda {lam:.6f} vs {target:.6f}")

    vfull = potential_values(espec, confined_dims=2)
    lam2, _ = linear_ground_eigenpair(espec, vfull, tol=1e-6)
    check("full-confinement ground eigenvalue", abs(lam2 - 2.0) <= 1e-2,
          f"lambda {lam2:.6f} vs 2")

    report = check_hypotheses(pure_power(4.0), 3)
    check("hypothesis checker on the cubic model", report.passed)

    return 1 if failures else 0


def cmd_sweep(args) -> int:
    base_text = _load_config(args.config)
    if "=" not in args.vary:
        print("error: --vary expects key=v1,v2,...", file=sys.stderr)
        return 2
    key, _, values_raw = args.vary.partition("=")
    key = key.strip()
    values = [v.strip() for v in values_raw.split(",") if v.strip()]
    if not values:
        print("error: --vary lists no values", file=sys.stderr)
        return 2

    configs = []
    for v in values:
        configs.append((v, parse_config(base_text, overrides={key: v})))

    def run(item):
        value, cfg = item
        out_dir = os.path.join(args.out or cfg.output.directory,
                               f"{key.replace('.', '_')}={value}")
        code = _run_solve(cfg, out_dir)
        return value, code

    workers = int(os.environ.get("NLS_THREADS", "1"))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, configs))
    else:
        outcomes = [run(item) for item in configs]
    return max(code for _, code in outcomes)


def cli_main(argv) -> int:
    parser = argparse.ArgumentParser(
        prog="nlspc",
        description="Ground states and symmetry-constrained nodal solutions "
                    "of the confined NLS equation on a truncated grid")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run a configured minimization")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("analyze", help="recompute diagnostics from a field file")
    p.add_argument("--field", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--thresholds", type=float, nargs="*", default=None)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("dipole", help="two-translate energy comparison study")
    p.add_argument("--config", required=True)
    p.add_argument("--separations", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_dipole)

    p = sub.add_parser("validate", help="oracle and discretization checks")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("sweep", help="re-run a config over several values of one key")
    p.add_argument("--config", required=True)
    p.add_argument("--vary", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_sweep)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error:\n{exc}", file=sys.stderr)
        return 2
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))
