"""Command-line entry point.

Subcommands: check-topology, check-preferences, solve, trace,
scenario {sugar|slavery|veblen}, sweep. Exit codes: 0 success,
2 verification failure, 3 solver non-convergence, 4 configuration error.

Every run writes its CSV artifacts plus a manifest into the output
directory and prints the main table to stdout. Identical config and seed
give byte-identical CSV output.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import equilibrium, output, preferences, scenarios, topology
from .config import RunConfig, parse_and_validate
from .errors import DutyModelError, ParseError, SingularJacobian, ValidationErrors

EXIT_OK = 0
EXIT_VERIFICATION = 2
EXIT_NO_CONVERGENCE = 3
EXIT_CONFIG = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dutybound",
        description="Duty-constrained exchange economies over ethical regimes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-topology", help="verify the base-space topology axioms")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("check-preferences", help="check rationality axioms of a relation")
    p.add_argument("--relation", required=True, help="relation file (points + pairs or utility)")
    p.add_argument("--out", default=None)

    p = sub.add_parser("solve", help="solve one fiber's equilibrium")
    p.add_argument("--config", required=True)
    p.add_argument("--fiber", default=None, help="base point id (default: first)")
    p.add_argument("--out", default=None)

    p = sub.add_parser("trace", help="run the configured path and trace equilibria")
    p.add_argument("--config", required=True)
    p.add_argument("--svg", default=None, help="write an allocation-vs-step chart here")
    p.add_argument("--out", default=None)

    p = sub.add_parser("scenario", help="run a packaged experiment")
    p.add_argument("which", choices=["sugar", "slavery", "veblen"])
    p.add_argument("--config", required=True)
    p.add_argument("--estimate-critical-mass", action="store_true")
    p.add_argument("--svg", default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("sweep", help="sugar-share sweep over a phi x premium lattice")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        if args.command == "check-preferences":
            return _cmd_check_preferences(args, started)
        config = parse_and_validate(args.config)
        if args.out:
            config.output_dir = args.out
        if args.command == "check-topology":
            return _cmd_check_topology(args, config, started)
        if args.command == "solve":
            return _cmd_solve(args, config, started)
        if args.command == "trace":
            return _cmd_trace(args, config, started, command="trace")
        if args.command == "scenario":
            if args.which == "sugar":
                return _cmd_sugar(args, config, started)
            if args.which == "slavery":
                return _cmd_trace(args, config, started, command="scenario slavery")
            return _cmd_veblen(args, config, started)
        if args.command == "sweep":
            return _cmd_sweep(args, config, started)
        raise AssertionError(args.command)
    except (ParseError, ValidationErrors) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DutyModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _emit(config_or_dir, name: str, header, rows) -> tuple[Path, str]:
    outdir = Path(config_or_dir.output_dir if isinstance(config_or_dir, RunConfig)
                  else config_or_dir)
    text = output.csv_text(header, rows)
    path = outdir / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, newline="")
    return path, text


def _finish(config: RunConfig, command: str, outputs: list[Path], started: float) -> None:
    output.write_manifest(config.output_dir, command, config.source_path,
                          config.seed, [p.name for p in outputs], started)


def _cmd_check_topology(args, config: RunConfig, started: float) -> int:
    if config.base is None:
        print("config error: check-topology needs a base_space section", file=sys.stderr)
        return EXIT_CONFIG
    base = config.base
    if config.opens is not None:
        family = topology.OpenFamily.from_subsets(base, config.opens)
    else:
        family = topology.discrete_topology(base)
    axioms = topology.verify_topology_axioms(family, base)
    fiber_dims = max((len(s.goods) + len(s.duties) for s in config.fiber_specs.values()),
                     default=1)
    continuity = topology.projection_continuous(base, family, fiber_dims)

    rows = [
        ["open-set-count", True, len(family.masks),
         f"power set would have 2^{base.m} = {2 ** base.m}"],
        ["topology-axioms", axioms.passed, axioms.checked,
         axioms.detail if not axioms.passed else "closed under union/intersection"],
        ["projection-continuity", continuity.passed, continuity.checked, continuity.detail],
    ]
    path, text = _emit(config, "topology_report.csv", ["check", "passed", "checked", "detail"], rows)
    print(str(axioms))
    print(str(continuity))
    print(text, end="")
    _finish(config, "check-topology", [path], started)
    return EXIT_OK if axioms.passed and continuity.passed else EXIT_VERIFICATION


def _load_relation(path: str) -> preferences.PreferenceRelation:
    try:
        tree = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ParseError(path, str(exc)) from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}", exc.msg) from None
    grid = preferences.ChoiceGrid(coords=np.asarray(tree["points"], dtype=float))
    if "pairs" in tree:
        holds = np.zeros((grid.size, grid.size), dtype=bool)
        for a, b in tree["pairs"]:
            holds[int(a), int(b)] = True
        return preferences.PreferenceRelation(grid=grid, holds=holds)
    if "utility" in tree:
        spec = tree["utility"]
        alpha = np.asarray(spec.get("alpha", []), dtype=float)
        beta = np.asarray(spec.get("beta", []), dtype=float)
        lam = float(spec.get("lambda", 1.0))
        n = alpha.size

        def u(point):
            return preferences.axiom1_utility(point[:n], point[n:], alpha, beta, lam)

        return preferences.induced_relation(u, grid)
    raise ParseError(path, "relation file needs 'pairs' or 'utility'")


def _cmd_check_preferences(args, started: float) -> int:
    rel = _load_relation(args.relation)
    reports = [preferences.check_reflexive(rel), preferences.check_complete(rel),
               preferences.check_transitive(rel), preferences.check_monotone(rel)]
    for report in reports:
        print(str(report))
    rational = reports[1].passed and reports[2].passed

    outdir = args.out or "out"
    rows = [[r.name, r.passed, r.checked, r.detail] for r in reports]
    path, _ = _emit(outdir, "preference_report.csv",
                    ["check", "passed", "checked", "detail"], rows)
    outputs = [path]
    if rational:
        ranks = preferences.construct_ordinal_utility(rel)
        rank_rows = [[i] + [c for c in rel.grid.coords[i]] + [ranks.ranks[i]]
                     for i in range(rel.grid.size)]
        header = ["point"] + [f"coord_{d}" for d in range(rel.grid.dims)] + ["rank"]
        rank_path, text = _emit(outdir, "preference_ranks.csv", header, rank_rows)
        print(text, end="")
        outputs.append(rank_path)
    output.write_manifest(outdir, "check-preferences", args.relation, 0,
                          [p.name for p in outputs], started)
    return EXIT_OK if all(r.passed for r in reports[:3]) else EXIT_VERIFICATION


def _solve_economy(config: RunConfig, y_id: str):
    template = config.template()
    economy = template.economy_at(y_id, [a for a in template.agents])
    result = equilibrium.solve_tatonnement(
        economy, step=config.solver_step, tol=config.solver_tol,
        max_iter=config.solver_max_iter)
    try:
        result.index = equilibrium.equilibrium_index(economy, result.prices) \
            if result.converged else None
    except SingularJacobian:
        result.index = None
    return economy, result


def _cmd_solve(args, config: RunConfig, started: float) -> int:
    if config.base is None:
        print("config error: solve needs base_space/fibers/agents sections", file=sys.stderr)
        return EXIT_CONFIG
    y_id = args.fiber or config.base.points[0]
    economy, result = _solve_economy(config, y_id)
    for warning in economy.warnings:
        print(f"warning: {warning}", file=sys.stderr)

    rows = [["price", "", dim, float(v)]
            for dim, v in zip(economy.dims, result.prices.values)]
    for agent in economy.agents:
        bundle = result.allocations[agent.id]
        for dim, q in zip(economy.dims, bundle.coords):
            rows.append(["allocation", agent.id, dim, float(q)])
    rows.append(["residual", "", "", result.residual])
    rows.append(["iterations", "", "", result.iterations])
    rows.append(["converged", "", "", result.converged])
    rows.append(["index", "", "", "" if result.index is None else result.index])
    path, text = _emit(config, f"solve_{y_id}.csv",
                       ["record", "agent", "dimension", "value"], rows)
    print(text, end="")
    _finish(config, f"solve --fiber {y_id}", [path], started)
    return EXIT_OK if result.converged else EXIT_NO_CONVERGENCE


def _cmd_trace(args, config: RunConfig, started: float, command: str) -> int:
    if config.path is None or config.profile is None:
        print("config error: trace needs path and profile sections", file=sys.stderr)
        return EXIT_CONFIG
    template = config.template()
    records = scenarios.run_slavery_eras(template, config.path, config.profile)

    rows = []
    for rec in records:
        dims = template.fiber_specs[rec.y_id].goods + template.fiber_specs[rec.y_id].duties
        for agent_id in sorted(rec.allocations):
            for dim, q in zip(dims, rec.allocations[agent_id].coords):
                rows.append([rec.t, rec.y_id, agent_id, dim, float(q)])
    path, text = _emit(config, "trace.csv",
                       ["t", "y_id", "agent", "dimension", "quantity"], rows)

    summary = []
    for rec in records:
        volume_note = ";".join(f"{g}={output.fmt(v)}" for g, v in sorted(rec.volumes.items()))
        summary.append([rec.t, rec.y_id, rec.result.residual, rec.result.converged,
                        rec.duty_share, volume_note])
    spath, stext = _emit(config, "trace_summary.csv",
                         ["t", "y_id", "residual", "converged", "duty_share", "volumes"],
                         summary)
    print(stext, end="")
    outputs = [path, spath]

    if args.svg or "svg" in config.output_formats:
        series = []
        ts = [rec.t for rec in records]
        agent_ids = sorted(records[0].allocations)
        dims_by_step = [template.fiber_specs[rec.y_id].goods
                        + template.fiber_specs[rec.y_id].duties for rec in records]
        all_dims = sorted({d for dims in dims_by_step for d in dims})
        for agent_id in agent_ids:
            for dim in all_dims:
                ys = []
                for rec, dims in zip(records, dims_by_step):
                    coords = rec.allocations[agent_id].coords
                    ys.append(float(coords[dims.index(dim)]) if dim in dims else 0.0)
                series.append((f"{agent_id}:{dim}", ts, ys))
        svg = output.svg_line_chart(series, title="allocations along the path",
                                    xlabel="t", ylabel="quantity")
        svg_path = Path(args.svg) if args.svg else Path(config.output_dir) / "trace.svg"
        output.write_svg(svg_path, svg)
        outputs.append(svg_path)

    _finish(config, command, outputs, started)
    ok = all(rec.result.converged for rec in records)
    return EXIT_OK if ok else EXIT_NO_CONVERGENCE


def _cmd_sugar(args, config: RunConfig, started: float) -> int:
    if config.sugar is None:
        print("config error: scenario sugar needs a scenarios.sugar section", file=sys.stderr)
        return EXIT_CONFIG
    report = scenarios.run_sugar(config.sugar)
    phi_star = None
    if args.estimate_critical_mass:
        estimate = scenarios.estimate_critical_mass(config.sugar)
        phi_star = estimate.phi_star

    rows = [[t, share, share >= config.sugar.viability_threshold]
            for t, share in enumerate(report.shares)]
    path, text = _emit(config, "sugar_shares.csv", ["period", "share", "viable"], rows)
    summary_header = ["survived", "collapse_period", "phi", "phi_star"]
    summary_rows = [[report.survived,
                     "" if report.collapse_period is None else report.collapse_period,
                     config.sugar.phi,
                     "" if phi_star is None else phi_star]]
    spath, stext = _emit(config, "sugar_summary.csv", summary_header, summary_rows)
    print(text, end="")
    print(stext, end="")
    outputs = [path, spath]

    if args.svg or "svg" in config.output_formats:
        svg = output.svg_line_chart(
            [("ethical share", list(range(len(report.shares))), report.shares)],
            title="ethical market share", xlabel="period", ylabel="share")
        svg_path = Path(args.svg) if args.svg else Path(config.output_dir) / "sugar.svg"
        output.write_svg(svg_path, svg)
        outputs.append(svg_path)

    _finish(config, "scenario sugar", outputs, started)
    return EXIT_OK


def _cmd_veblen(args, config: RunConfig, started: float) -> int:
    if config.veblen is None:
        print("config error: scenario veblen needs a scenarios.veblen section", file=sys.stderr)
        return EXIT_CONFIG
    probe = config.veblen
    template = config.template()
    fiber = template.fiber_at(probe.y_id)
    agent = next(a for a in template.agents if a.id == probe.agent_id)
    spec = template.fiber_specs[probe.y_id]
    base_prices = np.ones(len(spec.goods) + len(spec.duties))
    for j, d in enumerate(spec.duties):
        base_prices[len(spec.goods) + j] = spec.duty_prices.get(d, 1.0)
    sweep = np.linspace(probe.sweep_lo, probe.sweep_hi, probe.sweep_count)
    curve = scenarios.veblen_demand_curve(agent, fiber, probe.duty_id, sweep, base_prices)

    rows = list(zip(curve.prices, curve.quantities))
    path, text = _emit(config, "veblen_demand.csv", ["price", "quantity"], rows)
    seg_rows = [[lo, hi] for lo, hi in curve.increasing_segments]
    spath, stext = _emit(config, "veblen_segments.csv", ["price_lo", "price_hi"], seg_rows)
    print(text, end="")
    print(stext, end="")
    outputs = [path, spath]

    if args.svg or "svg" in config.output_formats:
        svg = output.svg_line_chart([(probe.duty_id, curve.prices, curve.quantities)],
                                    title="duty demand vs own price",
                                    xlabel="price", ylabel="quantity")
        svg_path = Path(args.svg) if args.svg else Path(config.output_dir) / "veblen.svg"
        output.write_svg(svg_path, svg)
        outputs.append(svg_path)

    _finish(config, "scenario veblen", outputs, started)
    return EXIT_OK


def _cmd_sweep(args, config: RunConfig, started: float) -> int:
    if config.sugar is None or config.sweep is None:
        print("config error: sweep needs scenarios.sugar and scenarios.sweep sections",
              file=sys.stderr)
        return EXIT_CONFIG
    base = config.sugar
    rows = []
    for phi in config.sweep.phis:
        for premium in config.sweep.premiums:
            cfg = scenarios.SugarMarketConfig(
                population=base.population, phi=phi, w_max=base.w_max,
                price_ethical=base.price_conventional + premium,
                price_conventional=base.price_conventional,
                shock_period=base.shock_period,
                price_conventional_after=base.price_conventional_after,
                viability_threshold=base.viability_threshold,
                exit_consecutive=base.exit_consecutive,
                horizon=base.horizon, seed=base.seed)
            report = scenarios.run_sugar(cfg)
            rows.append([phi, premium, report.shares[0], report.survived])
    path, text = _emit(config, "sugar_sweep.csv",
                       ["phi", "premium", "share_pre_shock", "survived"], rows)
    print(text, end="")
    _finish(config, "sweep", [path], started)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
