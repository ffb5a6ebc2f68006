"""Command-line entry point.

Subcommands: solve one case, bench the full suite, bo to tune partitions,
spectra to dump width/bandwidth plot data. Flags override config-file values
which override builtin defaults. Exit codes: 0 success, 1 acceptance
violation, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .assembly import AssemblyError, assemble
from .bench import run_all, run_case, write_case_artifacts
from .geometry import GeometryError, SdfWeightParams
from .problem import (
    BUILTIN_CASES,
    BoundaryConstraint,
    ConfigError,
    LinearOperator,
    OperatorTerm,
    ProblemSpec,
    SOURCES,
    builtin_problem,
)
from .sampling import DomainBounds, PartitionSpec1D, sample_1d, softmax_lengths
from .solver import SolverError, error_metrics, evaluate_solution, solve
from .tuner import OptimizationError, ValidationObjective, optimize

EXIT_OK = 0
EXIT_ACCEPTANCE = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

CONFIG_SCHEMA = """\
Config file (JSON). Either a builtin case with overrides:
  {"case": "tc1", "n": 400, "ksigma": 2.0, "w_bc": 50.0,
   "lengths": [0.5, 0.5], "method": "qr", "grid_size": 2000}
or a custom problem (1D shown; "orders" lists one entry per axis):
  {"problem": {"dimension": 1, "bounds": [[0.0, 1.0]],
               "operator": {"terms": [{"orders": [1], "coeff": 1.0}],
                            "constant_offset": 0.0},
               "source": "cos_15x",            (a named builtin, or a number)
               "constraints": [{"point": [0.0], "kind": "value",
                                "target": 0.0, "weight": 50.0}]},
   "partition": {"lengths": [0.5, 0.5], "n": 400, "ksigma": 2.0}}
Flags take precedence over config values. Named sources: %s.
""" % ", ".join(sorted(SOURCES))


def _add_common(p):
    p.add_argument("--config", type=Path, help="JSON config file (see below)")
    p.add_argument("--case", choices=BUILTIN_CASES, help="builtin case id")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--n", type=int, help="centers per partition (per axis in 2D)")
    p.add_argument("--ksigma", type=float, help="global width scale")
    p.add_argument("--wbc", type=float, help="boundary-constraint weight")
    p.add_argument("--lengths", type=float, nargs="+", help="partition lengths (simplex)")
    p.add_argument("--logits", type=float, nargs="+", help="partition logits (softmax applied)")
    p.add_argument("--method", choices=("qr", "svd_pinv", "auto"), help="least-squares backend")
    p.add_argument("--svd-tol", type=float, default=None, help="relative SVD truncation tolerance")
    p.add_argument("--grid-size", type=int, help="evaluation grid resolution")
    p.add_argument("--no-sdf-weighting", action="store_true", help="disable SDF residual weighting")
    p.add_argument("--dump-system", action="store_true", help="write the assembled system (matrix-market text)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="softrbf",
        description="Soft-partition Gaussian RBF collocation solver for steady linear ODEs/PDEs.",
        epilog=CONFIG_SCHEMA,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run a single case", epilog=CONFIG_SCHEMA, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(p)

    p = sub.add_parser("bench", help="run the full benchmark suite")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--cases", nargs="+", choices=BUILTIN_CASES, default=list(BUILTIN_CASES))

    p = sub.add_parser("bo", help="Bayesian optimization of partition lengths")
    p.add_argument("--case", choices=BUILTIN_CASES, required=True)
    p.add_argument("--budget", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path)
    p.add_argument("--n", type=int, help="centers per partition for the objective")
    p.add_argument("--ksigma", type=float, help="width scale for the objective")
    p.add_argument("--k", type=int, default=2, help="partitions per axis")
    p.add_argument("--wmin", type=float, help="lower bound of the first-partition weight (k=2, 1D)")
    p.add_argument("--wmax", type=float, help="upper bound of the first-partition weight (k=2, 1D)")

    p = sub.add_parser("spectra", help="width histogram and Fourier-magnitude curves")
    p.add_argument("--case", choices=BUILTIN_CASES, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--ksigma", type=float)
    p.add_argument("--lengths", type=float, nargs="+")
    return parser


def _load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _problem_from_config(cfg: dict) -> tuple[ProblemSpec, PartitionSpec1D]:
    """Custom-problem route: explicit operator, source, and constraints."""
    spec = cfg["problem"]
    try:
        dimension = int(spec["dimension"])
        if dimension != 1:
            raise ConfigError("custom problems are 1D only; use builtin cases for 2D")
        bounds_raw = spec["bounds"]
        bounds = DomainBounds(lower=(bounds_raw[0][0],), upper=(bounds_raw[0][1],))
        terms = tuple(
            OperatorTerm(tuple(int(o) for o in t["orders"]), float(t["coeff"]))
            for t in spec["operator"]["terms"]
        )
        operator = LinearOperator(terms=terms, constant_offset=float(spec["operator"].get("constant_offset", 0.0)))
        source_raw = spec["source"]
        if isinstance(source_raw, str):
            if source_raw not in SOURCES:
                raise ConfigError(f"unknown source name {source_raw!r} (known: {sorted(SOURCES)})")
            source = SOURCES[source_raw]
        else:
            source = float(source_raw)
        constraints = []
        for c in spec["constraints"]:
            kind = c.get("kind", "value")
            constraints.append(
                BoundaryConstraint(
                    point=tuple(float(v) for v in c["point"]),
                    target=float(c["target"]),
                    kind=kind,
                    derivative=tuple(int(o) for o in c["derivative"]) if kind == "derivative" else None,
                    weight=float(c.get("weight", 50.0)),
                )
            )
        problem = ProblemSpec(
            dimension=dimension, bounds=bounds, operator=operator,
            source=source, constraints=tuple(constraints),
        )
        part = cfg.get("partition", {})
        lengths = np.asarray(part.get("lengths", [0.5, 0.5]), dtype=float)
        partition = PartitionSpec1D(lengths, int(part.get("n", 400)), float(part.get("ksigma", 2.0)))
        return problem, partition
    except KeyError as exc:
        raise ConfigError(f"config missing required key: {exc.args[0]!r}")
    except (TypeError, IndexError) as exc:
        raise ConfigError(f"malformed config value: {exc}")


def _case_overrides(args, cfg: dict) -> dict:
    """Merged case overrides, flags beating config-file values."""
    merged = {}
    for key in ("n", "ksigma", "w_bc", "lengths", "n_boundary", "sdf_resolution"):
        if key in cfg:
            merged[key] = cfg[key]
    if args.n is not None:
        merged["n"] = args.n
    if args.ksigma is not None:
        merged["ksigma"] = args.ksigma
    if getattr(args, "wbc", None) is not None:
        merged["w_bc"] = args.wbc
    lengths = args.lengths if args.lengths is not None else cfg.get("lengths")
    logits = args.logits if getattr(args, "logits", None) is not None else cfg.get("logits")
    if lengths is not None and logits is not None:
        raise ConfigError("specify partition lengths or logits, not both")
    if logits is not None:
        lengths = softmax_lengths(np.asarray(logits, dtype=float))
    if lengths is not None:
        merged["lengths"] = np.asarray(lengths, dtype=float)
    if getattr(args, "no_sdf_weighting", False) or cfg.get("sdf_weighting") is False:
        merged["sdf_weighting"] = None
    return merged


def _cmd_solve(args) -> int:
    cfg = _load_config(args.config)
    method = args.method or cfg.get("method", "qr")
    svd_tol = args.svd_tol if args.svd_tol is not None else cfg.get("svd_tol", 1e-10)
    grid_size = args.grid_size or cfg.get("grid_size")

    if "problem" in cfg and args.case is None and cfg.get("case") is None:
        problem, partition = _problem_from_config(cfg)
        basis = sample_1d(partition, problem.bounds)
        system = assemble(problem, basis)
        report = solve(system, method=method, svd_tol=svd_tol)
        grid = np.linspace(problem.bounds.lower[0], problem.bounds.upper[0], grid_size or 2000)
        pred = evaluate_solution(basis, report.coefficients, grid)
        print(f"custom problem: basis={basis.size} residual_inf={report.residual_inf:.6e} "
              f"solve={report.solve_seconds:.3f}s method={report.method}")
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            np.savetxt(args.out / "solution.csv",
                       np.column_stack([grid, pred]), delimiter=",",
                       header="x,predicted", comments="", fmt="%.17g")
            if args.dump_system:
                system.dump(args.out / "system.mtx")
        return EXIT_OK

    case = args.case or cfg.get("case")
    if case is None:
        raise ConfigError("solve needs --case or a config with 'case' or 'problem'")
    overrides = _case_overrides(args, cfg)
    report = run_case(case, grid_size=grid_size, method=method, svd_tol=svd_tol, **overrides)
    m = report.metrics
    print(f"{case}: basis={report.counts['basis_size']} residual_inf={m['residual_inf']:.6e} "
          f"mse={m['mse']:.6e} max_abs={m['max_abs']:.6e} passed={report.passed}")
    if args.out:
        case_dir = write_case_artifacts(report, args.out)
        if args.dump_system:
            setup = builtin_problem(case, **overrides)
            from .bench import _sample_case

            basis = _sample_case(setup)
            assemble(setup.problem, basis).dump(case_dir / "system.mtx")
    return EXIT_OK if report.passed else EXIT_ACCEPTANCE


def _cmd_bench(args) -> int:
    reports, ok = run_all(args.out, cases=tuple(args.cases))
    for rep in reports:
        m = rep.metrics
        print(f"{rep.case_id}: residual_inf={m['residual_inf']:.3e} mse={m['mse']:.3e} "
              f"max_abs={m['max_abs']:.3e} passed={rep.passed}")
    print(f"summary written to {Path(args.out) / 'summary.csv'}")
    return EXIT_OK if ok else EXIT_ACCEPTANCE


# BO objective defaults chosen so 40 evaluations finish in minutes on a
# laptop core while the layer stays resolvable (see README)
_BO_DEFAULTS = {
    "tc7a": {"n": 800, "ksigma": 3.0, "wmin": 0.9, "wmax": 0.99},
    "tc7b": {"n": 800, "ksigma": 3.0, "wmin": 0.01, "wmax": 0.1},
}


def _cmd_bo(args) -> int:
    defaults = _BO_DEFAULTS.get(args.case, {})
    n = args.n if args.n is not None else defaults.get("n", 400)
    ksigma = args.ksigma if args.ksigma is not None else defaults.get("ksigma", 2.0)
    setup = builtin_problem(args.case, n=n, ksigma=ksigma)
    if setup.problem.dimension != 1:
        raise ConfigError("bo currently supports the 1D cases")

    expected_basis = 2 * args.k * n + 1
    m = 2 * expected_basis
    vpts = setup.problem.bounds.lower[0] + (np.arange(m) + 0.5) / m * float(setup.problem.bounds.lengths[0])
    objective = ValidationObjective(
        problem=setup.problem, validation_points=vpts,
        points_per_partition=n, width_scale=ksigma,
    )

    logit_box = None
    wmin = args.wmin if args.wmin is not None else defaults.get("wmin")
    wmax = args.wmax if args.wmax is not None else defaults.get("wmax")
    if wmin is not None and wmax is not None and args.k == 2:
        if not (0.0 < wmin < wmax < 1.0):
            raise ConfigError("need 0 < wmin < wmax < 1")
        logit_box = np.array([[math.log(wmin / (1 - wmin)), math.log(wmax / (1 - wmax))]])

    best_lengths, trace = optimize(objective, k=args.k, budget=args.budget, seed=args.seed, logit_box=logit_box)
    best = trace.best_j
    lengths_str = ", ".join(f"{v:.6f}" for v in best_lengths[0])
    print(f"{args.case}: best J={best:.6e} at lengths=({lengths_str}) "
          f"after {len(trace.records)} evaluations (seed {args.seed})")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        trace.export_csv(args.out / "bo_trace.csv")
        meta = {
            "case": args.case, "budget": args.budget, "seed": args.seed,
            "k": args.k, "n": n, "ksigma": ksigma,
            "validation_points": int(m), "includes_constraint_rows": True,
            "best_J": best, "best_lengths": [list(map(float, v)) for v in best_lengths],
        }
        with open(args.out / "bo_meta.json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def _cmd_spectra(args) -> int:
    overrides = {}
    if args.n is not None:
        overrides["n"] = args.n
    if args.ksigma is not None:
        overrides["ksigma"] = args.ksigma
    if args.lengths is not None:
        overrides["lengths"] = np.asarray(args.lengths, dtype=float)
    setup = builtin_problem(args.case, **overrides)
    from .bench import _sample_case, _write_spectra_csv, spectra_report

    basis = _sample_case(setup)
    spectra = spectra_report(basis)
    args.out.mkdir(parents=True, exist_ok=True)
    _write_spectra_csv(args.out / "spectra.csv", spectra)
    print(f"{args.case}: sigma range [{spectra['sigma_min']:.6e}, {spectra['sigma_max']:.6e}], "
          f"median {spectra['sigma_median']:.6e}; wrote {args.out / 'spectra.csv'}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already
        return int(exc.code or 0)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "bo":
            return _cmd_bo(args)
        if args.command == "spectra":
            return _cmd_spectra(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AssemblyError, SolverError, GeometryError, OptimizationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
