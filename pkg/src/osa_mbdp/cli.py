"""Command-line interface: ``osa-mbdp {solve,simulate,oracle,compare}``.

Exit codes: 0 success, 2 validation error, 3 QoS infeasible, 4 resource guard.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from dataclasses import dataclass

import numpy as np

from .config import RunConfig, load_config
from .errors import ConfigError, ResourceGuardError, StructureError
from .oracle import MAX_ORACLE_HORIZON, brute_force_optimum
from .persistence import LibraryEntry, PolicyLibrary, scenario_hash, stats_rows, write_results_csv
from .qos import QosSpec, Selection, select_policy
from .radio import build_scenario, genie_rmax
from .simulator import CoopStrategy, MHStrategy, PartitionStrategy, SimConfig, TreeStrategy, run_comparison, simulate
from .solver import CandidatePool, mbdp_solve

log = logging.getLogger(__name__)

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_RESOURCE = 0, 2, 3, 4


@dataclass
class SolveReport:
    pool: CandidatePool
    selection: Selection
    r_max: float
    library: PolicyLibrary


def run_solve(cfg: RunConfig, horizon: int | None = None, weights=None) -> SolveReport:
    """MBDP candidate generation followed by QoS-constrained selection."""
    solver_cfg = cfg.solver if horizon is None else dataclasses.replace(cfg.solver, horizon=horizon)
    sc = cfg.scenario
    b0 = sc.initial_belief
    model = build_scenario(sc)
    pool = mbdp_solve(model, b0, solver_cfg)
    r_max = genie_rmax(sc, solver_cfg.horizon)
    weights = tuple(weights) if weights is not None else cfg.qos_weights()
    spec = QosSpec(weights, cfg.qos.zeta, r_max)
    selection = select_policy(pool, spec, b0)
    entries = [
        LibraryEntry(
            identity=e.identity,
            horizon=solver_cfg.horizon,
            qos_weights=weights,
            zeta=cfg.qos.zeta,
            policy=e.policy,
            agent_values=tuple(float(x) for x in e.agent_values_at(b0)),
            joint_value=e.value_at(b0),
        )
        for e in pool
    ]
    selected = selection.entry.identity if selection.ok else None
    library = PolicyLibrary(scenario_hash(sc), entries, selected)
    return SolveReport(pool, selection, r_max, library)


def _fmt(xs) -> str:
    return ", ".join(f"{x:.6g}" for x in xs)


def cmd_solve(cfg: RunConfig, args) -> int:
    report = run_solve(cfg)
    path = args.library or cfg.library_path
    report.library.save(path)
    sel = report.selection
    b0 = cfg.scenario.initial_belief
    print(f"library: {path} ({len(report.pool)} candidates)")
    print(f"horizon: {cfg.solver.horizon}")
    print(f"r_max: {report.r_max:.6g}")
    print(f"best_joint_value: {report.pool.best_entry.value_at(b0):.6g}")
    if not sel.ok:
        closest = sel.closest
        print(
            f"QoS infeasible; closest identity {closest.identity} with per-SU values "
            f"({_fmt(closest.agent_values_at(b0))}) misses by {sel.check.gap:.4g}",
            file=sys.stderr,
        )
        return EXIT_INFEASIBLE
    print(f"selected_identity: {sel.entry.identity}")
    print(f"per_su_values: {_fmt(sel.agent_values)}")
    print(f"witness_t: {sel.check.witness:.6g}")
    print(f"joint_value: {sel.joint_value:.6g}")
    return EXIT_OK


def _baseline(name: str, num_sus: int):
    if name == "mh":
        return MHStrategy()
    if name == "coop":
        return CoopStrategy()
    return PartitionStrategy()


def cmd_simulate(cfg: RunConfig, args) -> int:
    sc = cfg.scenario
    seed = cfg.sim.seed if args.seed is None else args.seed
    if args.baseline:
        strategy = _baseline(args.baseline, sc.num_sus)
        horizon = cfg.solver.horizon
    else:
        if args.policy_id is None:
            raise ConfigError("simulate needs --policy-id or --baseline")
        library = PolicyLibrary.load(args.library or cfg.library_path)
        library.check_scenario(sc)
        try:
            entry = library.get(args.policy_id)
        except KeyError as exc:
            raise ConfigError(exc.args[0]) from exc
        strategy = TreeStrategy(entry.policy, name=f"policy-{entry.identity}")
        horizon = entry.horizon
    stats = simulate(sc, SimConfig(horizon, cfg.sim.trials, seed, strategy))
    out = args.out or cfg.results_path
    write_results_csv(out, stats_rows(strategy.name, horizon, stats))
    print(f"wrote {out}: network_mean={stats.network_mean:.6g} normalized={stats.normalized_network:.6g}")
    return EXIT_OK


def cmd_oracle(cfg: RunConfig, args) -> int:
    T = cfg.solver.horizon
    if T > MAX_ORACLE_HORIZON:
        print(
            f"refusing: horizon {T} > {MAX_ORACLE_HORIZON}; exhaustive enumeration of joint policies "
            "is doubly exponential in the horizon",
            file=sys.stderr,
        )
        return EXIT_INVALID
    sc = cfg.scenario
    model = build_scenario(sc)
    result = brute_force_optimum(model, sc.initial_belief, T)
    pool = mbdp_solve(model, sc.initial_belief, cfg.solver)
    mbdp_best = pool.best_entry.value_at(sc.initial_belief)
    print(f"horizon: {T}")
    print(f"joint_policies_enumerated: {result.n_enumerated}")
    print(f"optimum: {result.optimum:.12g}")
    print(f"mbdp_best: {mbdp_best:.12g}")
    print(f"gap: {result.optimum - mbdp_best:.3g}")
    return EXIT_OK


def cmd_compare(cfg: RunConfig, args) -> int:
    sc = cfg.scenario
    seed = cfg.sim.seed if args.seed is None else args.seed
    policies = {}
    for T in cfg.compare_horizons:
        report = run_solve(cfg, horizon=T)
        entry = report.selection.entry or report.pool.best_entry
        if not report.selection.ok:
            log.warning("T=%d: QoS infeasible, comparing the throughput-best policy instead", T)
        policies[T] = entry.policy
    strategies = {
        "mbdp": lambda T: TreeStrategy(policies[T]),
        "coop": lambda T: CoopStrategy(),
        "mh": lambda T: MHStrategy(),
    }
    rows = run_comparison(sc, cfg.compare_horizons, strategies, cfg.sim.trials, seed)
    out = args.out or cfg.results_path
    write_results_csv(out, [r for row in rows for r in stats_rows(row.strategy, row.horizon, row.stats)])
    for row in rows:
        st = row.stats
        print(f"{row.strategy:>5} T={row.horizon:<3} normalized={st.normalized_network:.4f} per_su=({_fmt(st.per_su_mean)})")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "simulate": cmd_simulate, "oracle": cmd_oracle, "compare": cmd_compare}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="osa-mbdp", description="QoS-aware MBDP sensing policies for two-SU spectrum access")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--seed", type=int, default=None, help="override the relevant seed")
        p.add_argument("--out", default=None, help="output path (CSV for simulate/compare)")
        if name in ("solve", "simulate"):
            p.add_argument("--library", default=None, help="policy library JSON")
        if name == "simulate":
            p.add_argument("--policy-id", type=int, default=None)
            p.add_argument("--baseline", choices=("mh", "coop", "partition"), default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None and args.command in ("solve", "oracle"):
            cfg = dataclasses.replace(cfg, solver=dataclasses.replace(cfg.solver, seed=args.seed))
        return COMMANDS[args.command](cfg, args)
    except ResourceGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ConfigError, StructureError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
