"""
comparison_analysis.py
Compares the three routes to the nontrivial desk solution on runtime and agreement
"""

import sys
import time
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from src.algorithms.minimax import mountain_pass_solve
from src.algorithms.oracle import embed_ray, multistart, newton_refine, orbit_distance, ray_critical_scan
from src.cli import oracle_settings, solver_settings
from src.discrete_system.config import ProblemConfig, desk_problem_config, load_problem_config
from src.discrete_system.functional import phi_eval
from src.discrete_system.problem import ProblemBuilder
from src.discrete_system.utils import component_seeds


def run_comparison(config: Optional[ProblemConfig] = None) -> List[Dict]:
    config = config or desk_problem_config()
    builder = ProblemBuilder(config)
    p = builder.potential()
    f = builder.functional()
    direction = builder.direction()
    seeds = component_seeds(config.seed, ("solver", "oracle"))

    print("\nPERIODIC SOLUTIONS: ROUTE COMPARISON\n")

    # Route 1: scalar equation on the invariant ray
    t0 = time.time()
    roots = [t for t in ray_critical_scan(p, direction, config.functional.geometry.t_max) if t > 0]
    ray_time = (time.time() - t0) * 1000
    if not roots:
        print("No nontrivial root on the ray; nothing to compare against")
        return []
    reference = embed_ray(direction, roots[0])

    # Route 2: multistart Newton, nontrivial entry nearest the ray solution
    t0 = time.time()
    catalog = multistart(p, oracle_settings(config), seeds["oracle"])
    nontrivial = catalog.by_class("nontrivial")
    multistart_time = (time.time() - t0) * 1000
    nearest = min(nontrivial, key=lambda e: orbit_distance(p, e.u, reference)) if nontrivial else None

    # Route 3: mountain pass followed by Newton polishing
    t0 = time.time()
    geometry = builder.geometry(f)
    report = mountain_pass_solve(f, geometry, config.solver.eps, solver_settings(config), seeds["solver"])
    refined = newton_refine(report.u_hat, p)
    minimax_time = (time.time() - t0) * 1000

    rows = [{"route": "ray scan", "runtime_ms": ray_time, "u": reference}]
    if nearest is not None:
        rows.append({"route": "multistart", "runtime_ms": multistart_time, "u": nearest.u})
    rows.append({"route": "mountain pass", "runtime_ms": minimax_time, "u": refined.u})
    for row in rows:
        u = row.pop("u")
        row["amplitude"] = float(np.max(np.abs(u.values)))
        row["phi"] = phi_eval(f, u)
        row["distance_to_ray"] = orbit_distance(p, u, reference)

    table = pd.DataFrame(rows)
    print("1. RUNTIME AND AGREEMENT\n")
    print(table.to_string(index=False, float_format=lambda x: f"{x:.10g}"))
    print(f"\nCatalog: {len(catalog.entries)} distinct solutions, {len(nontrivial)} nontrivial, "
          f"{catalog.dropped} starts dropped")
    print(f"Mountain pass: c_hat = {report.c_hat:.10g}, certificates (i) {report.certificate_i}, "
          f"(ii) {report.certificate_ii}")
    return table.to_dict("records")


if __name__ == "__main__":
    run_comparison(load_problem_config(sys.argv[1]) if len(sys.argv) > 1 else None)
