#!/usr/bin/env python3
# command-line entry point: python -m src.cli <command> [--config FILE] [flags]
# every command writes <out>/<command>.json plus csv artifacts, then re-reads and validates the json

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.algorithms.deformation import (
    BandSpec,
    LandscapeKind,
    ToyLandscape,
    draw_deformation_samples,
    draw_descent_samples,
    flow,
    verify_deformation,
    verify_descent,
)
from src.algorithms.minimax import SolverSettings, certify_report, mountain_pass_solve
from src.algorithms.oracle import (
    OracleSettings,
    catalog_match,
    embed_ray,
    multistart,
    newton_refine,
    ray_critical_scan,
    residual,
)
from src.discrete_system.config import (
    ProblemConfig,
    apply_overrides,
    desk_problem_config,
    load_problem_config,
)
from src.discrete_system.core import b_eigenvectors, b_spectrum
from src.discrete_system.errors import ConfigError, DiscreteSystemError, OracleError, ReportError
from src.discrete_system.functional import (
    claimed_gradient_mismatch,
    coercivity_check,
    constant_sequence_check,
    estimate_c0,
    phi_eval,
    phi_grad,
    ps_bound_check,
)
from src.discrete_system.models import FunctionalKind
from src.discrete_system.potentials import check_all_conditions
from src.discrete_system.problem import ProblemBuilder
from src.discrete_system.utils import (
    build_envelope,
    component_seeds,
    load_json_report,
    random_ball_samples,
    validate_report,
    write_csv,
    write_json_report,
)

logger = logging.getLogger(__name__)

SEED_NAMES = ("solver", "oracle", "bounds", "deform", "c0")
CONSTANT_SAMPLES = 100
CONSTANT_RANGE = 10.0

Artifacts = Dict[str, pd.DataFrame]


def solver_settings(config: ProblemConfig) -> SolverSettings:
    s = config.solver
    return SolverSettings(knots=s.knots, ensemble=s.ensemble, max_iterations=s.max_iterations,
                          value_tol=s.tol, symmetry=s.symmetry, perturbation=s.perturbation, refine=s.refine)


def oracle_settings(config: ProblemConfig) -> OracleSettings:
    o = config.oracle
    return OracleSettings(box=o.box, starts=o.starts, tol=o.tol, dedup_tol=o.dedup_tol, max_iter=o.max_iter)


def cmd_spectrum(period: int) -> Tuple[Dict[str, Any], Artifacts]:
    spectrum = b_spectrum(period)
    modes = [{"eigenvalue": value, "mode": mode.to_list()} for value, mode in b_eigenvectors(period)]
    frame = pd.DataFrame({"j": np.arange(period), "closed_form": spectrum.eigenvalues,
                          "dense": spectrum.dense_eigenvalues})
    return {"spectrum": spectrum.to_dict(), "modes": modes}, {"eigenvalues": frame}


def cmd_check(config: ProblemConfig) -> Tuple[Dict[str, Any], Artifacts]:
    builder = ProblemBuilder(config)
    p = builder.potential()
    f = builder.functional()
    reports = check_all_conditions(p, builder.condition_grid())
    seeds = component_seeds(config.seed, SEED_NAMES)

    # bound sweeps need certified (A3) constants; failures are recorded, not raised
    c = config.conditions
    rng = np.random.default_rng(seeds["bounds"])
    samples = random_ball_samples(p.period, c.samples, c.radius, rng)
    bounds: Dict[str, Any] = {}
    for name, run in (("coercivity", lambda: coercivity_check(f, samples, reports["A3"])),
                      ("ps_bound", lambda: ps_bound_check(f, c.m1, samples, reports["A3"]))):
        try:
            bounds[name] = run().to_dict()
        except DiscreteSystemError as exc:
            bounds[name] = {"error": str(exc)}

    constants = np.linspace(-CONSTANT_RANGE, CONSTANT_RANGE, CONSTANT_SAMPLES)
    body = {
        "potential": p.to_dict(),
        "functional": f.to_dict(),
        "conditions": {k: v.to_dict() for k, v in reports.items()},
        "bounds": bounds,
        "constant_sequences": {"count": CONSTANT_SAMPLES, "max_phi": constant_sequence_check(f, constants)},
    }
    frame = pd.DataFrame([{"condition": k, "verdict": v.verdict.value, **{f"witness_{wk}": wv for wk, wv in v.witness.items()}}
                          for k, v in reports.items()])
    return body, {"conditions": frame}


def cmd_solve(config: ProblemConfig) -> Tuple[Dict[str, Any], Artifacts]:
    builder = ProblemBuilder(config)
    p = builder.potential()
    f = builder.functional()
    geometry = builder.geometry(f)
    seeds = component_seeds(config.seed, SEED_NAMES)

    report = mountain_pass_solve(f, geometry, config.solver.eps, solver_settings(config), seeds["solver"])
    record = certify_report(report, f)
    artifacts: Artifacts = {"path": report.best_path.to_frame(f)}
    body: Dict[str, Any] = {
        "functional": f.to_dict(),
        "geometry": geometry.to_dict(),
        "minimax": report.to_dict(),
        "certificates": record.to_dict(),
        "seeds": seeds,
    }

    if f.kind == FunctionalKind.STANDARD:
        refined = newton_refine(report.u_hat, p, tol=config.oracle.tol, max_iter=config.oracle.max_iter)
        body["refined"] = {
            **refined.to_dict(),
            "phi": phi_eval(f, refined.u),
            "grad_norm": phi_grad(f, refined.u).norm(),
            "residual_max_norm": residual(refined.u, p),
        }
        catalog = multistart(p, oracle_settings(config), seeds["oracle"])
        try:
            index, distance, matched = catalog_match(catalog, refined.u, p, config.oracle.dedup_tol)
            body["catalog_match"] = {"entry": index, "distance": distance, "matched": matched,
                                     "entry_u": catalog.entries[index].u.to_list(), "catalog_size": len(catalog.entries)}
        except OracleError as exc:
            body["catalog_match"] = {"error": str(exc)}
        artifacts["catalog"] = catalog.to_frame()
    else:
        body["claimed_gradient_mismatch"] = claimed_gradient_mismatch(f, report.u_hat)

    if config.solver.c0_restarts > 0:
        c0 = estimate_c0(f, geometry.r, config.solver.c0_restarts, seeds["c0"])
        body["c0"] = {"estimate": c0, "r": geometry.r, "c1": report.c1, "c0_exceeds_c1": c0 > report.c1}
    return body, artifacts


def _band(entry: Dict[str, Any], h: float, eps: float, index: int) -> BandSpec:
    path = f"config.deformation.fixed_sets[{index}]"
    if not isinstance(entry, dict) or "kind" not in entry:
        raise ConfigError(path, "expected an object with a 'kind'")
    try:
        if entry["kind"] == "empty":
            return BandSpec.empty(h, eps)
        if entry["kind"] == "slab":
            return BandSpec.slab(h, eps, float(entry["lo"]), float(entry["hi"]))
        if entry["kind"] == "level":
            return BandSpec.level(h, eps, float(entry["value"]))
    except KeyError as exc:
        raise ConfigError(f"{path}.{exc.args[0]}", "required") from exc
    raise ConfigError(f"{path}.kind", f"must be one of ['empty', 'slab', 'level'], got {entry['kind']!r}")


def cmd_deform(config: ProblemConfig) -> Tuple[Dict[str, Any], Artifacts]:
    d = config.deformation
    land = ToyLandscape(LandscapeKind(d.landscape), d.dimension)
    seeds = component_seeds(config.seed, SEED_NAMES)
    rng = np.random.default_rng(seeds["deform"])

    runs: List[Dict[str, Any]] = []
    traces: List[pd.DataFrame] = []
    for index, entry in enumerate(d.fixed_sets):
        band = _band(entry, d.h, d.eps, index)
        samples = draw_deformation_samples(land, band, d.samples, rng)
        verdict = verify_deformation(land, band, samples)
        runs.append(verdict.to_dict())
        trace = flow(land, band, samples["lower"][0], 2.0 * band.eps).to_frame()
        trace.insert(0, "run", index)
        traces.append(trace)

    c = d.h if d.descent_c is None else d.descent_c
    descent = verify_descent(land, c, d.eps, draw_descent_samples(land, c, d.eps, d.samples, rng))
    body = {"landscape": land.to_dict(), "runs": runs, "descent": descent.to_dict()}
    return body, {"traces": pd.concat(traces, ignore_index=True)}


def cmd_oracle(config: ProblemConfig) -> Tuple[Dict[str, Any], Artifacts]:
    builder = ProblemBuilder(config)
    p = builder.potential()
    seeds = component_seeds(config.seed, SEED_NAMES)
    catalog = multistart(p, oracle_settings(config), seeds["oracle"])
    body: Dict[str, Any] = {"potential": p.to_dict(), "catalog": catalog.to_dict()}

    # the scalar ray reduction is optional: it needs an autonomous, odd system
    try:
        direction = builder.direction()
        roots = ray_critical_scan(p, direction, config.functional.geometry.t_max)
        body["ray_scan"] = {
            "direction": direction.to_list(),
            "roots": roots,
            "residuals": [residual(embed_ray(direction, t), p) for t in roots],
        }
    except (OracleError, ConfigError) as exc:
        body["ray_scan"] = {"error": str(exc)}
    return body, {"catalog": catalog.to_frame()}


COMMANDS: Dict[str, Callable[[ProblemConfig], Tuple[Dict[str, Any], Artifacts]]] = {
    "check": cmd_check,
    "solve": cmd_solve,
    "deform": cmd_deform,
    "oracle": cmd_oracle,
}


# write the envelope and csvs, then re-read the json and validate it
def emit(command: str, body: Dict[str, Any], artifacts: Artifacts, out_dir: Path, elapsed: float,
         write_csvs: bool = True) -> Path:
    out_dir = Path(out_dir)
    meta = {"execution_time": elapsed, "artifacts": sorted(f"{command}_{k}.csv" for k in artifacts) if write_csvs else []}
    path = write_json_report(out_dir / f"{command}.json", build_envelope(command, body, meta))
    if write_csvs:
        for name, frame in artifacts.items():
            write_csv(out_dir / f"{command}_{name}.csv", frame)
    problems = validate_report(load_json_report(path))
    if problems:
        raise ReportError(f"{path} failed validation after writing: {problems}")
    return path


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="problem config (JSON); the desk instance when omitted")
    common.add_argument("--seed", type=int, help="override config.seed")
    common.add_argument("--out", help="output directory (overrides config.output.dir)")
    common.add_argument("--ensemble", type=int, help="override config.solver.ensemble")
    common.add_argument("--eps", type=float, help="override config.solver.eps")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = argparse.ArgumentParser(prog="python -m src.cli",
                                     description="Periodic solutions of second-order difference equations via mountain-pass search")
    sub = parser.add_subparsers(dest="command", required=True)
    spectrum = sub.add_parser("spectrum", parents=[common], help="spectrum of the second-difference matrix B")
    spectrum.add_argument("--period", type=int, help="period M (defaults to config.period)")
    sub.add_parser("check", parents=[common], help="sample conditions (A1)-(A3), (W1), (W2) and the bound sweeps")
    sub.add_parser("solve", parents=[common], help="mountain-pass solve, Newton polish and catalog match")
    sub.add_parser("deform", parents=[common], help="deformation verdicts on a toy landscape")
    sub.add_parser("oracle", parents=[common], help="multistart Newton catalog and ray scan")
    return parser


def _load_config(args: argparse.Namespace) -> ProblemConfig:
    config = load_problem_config(args.config) if args.config else desk_problem_config()
    return apply_overrides(config, seed=args.seed, ensemble=args.ensemble, eps=args.eps, out=args.out)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        config = _load_config(args)
        start = time.time()
        if args.command == "spectrum":
            body, artifacts = cmd_spectrum(args.period if args.period is not None else config.period)
        else:
            body, artifacts = COMMANDS[args.command](config)
            body["config"] = {k: v for k, v in config.to_dict().items() if k != "output"}
        path = emit(args.command, body, artifacts, Path(config.output.dir), time.time() - start, config.output.csv)
    except (DiscreteSystemError, OSError) as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 2
    print(f"{args.command} complete! Report saved to: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
