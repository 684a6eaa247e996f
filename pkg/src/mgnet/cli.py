"""Command line front end: run campaigns, generate topologies, check weights.

Exit codes: 0 success (unanimous decisions for resilient runs), 1 for
configuration problems (missing or malformed files, bad values), 2 when
the request is mathematically infeasible or decoding fails.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    DecodeError,
    InfeasibleTopologyError,
    InternalInvariantError,
    SynthesisError,
)
from .graph import Graph, LinkAttackSet, generate_preventive, generate_responsive, vertex_connectivity
from .consensus import WeightMatrix, verify_rank_condition
from .scenario import golden_scenario_path, load_scenario
from .simulator import CommunicationAgent, run_campaign, write_run_artifacts

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2

_MODE_MAP = {
    "resilient-known": "known_faults",
    "resilient-unknown": "unknown_faults",
    "baseline": "baseline",
}

SEED_ENV_VAR = "MGNET_SEED"


def _env_seed() -> int | None:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV_VAR}={raw!r} is not an integer seed") from None


def _resolve_seed(cli_seed: int | None, fallback: int | None = None) -> int | None:
    if cli_seed is not None:
        return cli_seed
    env = _env_seed()
    if env is not None:
        return env
    return fallback


def _parse_attacked_links(raw: str | None) -> LinkAttackSet:
    if not raw:
        return LinkAttackSet()
    pairs = []
    for chunk in raw.split(","):
        part = chunk.strip()
        if not part:
            continue
        bits = part.split("-")
        if len(bits) != 2 or not all(b.strip().isdigit() for b in bits):
            raise ConfigError(f"--attacked-links: expected 'i-j' pairs, got {part!r}")
        pairs.append((int(bits[0]), int(bits[1])))
    try:
        return LinkAttackSet.from_pairs(pairs)
    except ValueError as exc:
        raise ConfigError(f"--attacked-links: {exc}") from None


def cmd_run(args: argparse.Namespace) -> int:
    scenario_path = golden_scenario_path() if args.scenario == "golden" else args.scenario
    scenario = load_scenario(scenario_path)
    seed = _resolve_seed(args.seed, scenario.seed)
    scenario = scenario.with_seed(seed)

    fixed_graph = None
    if args.fixed_graph is not None:
        try:
            fixed_graph = Graph.from_edge_list_text(Path(args.fixed_graph).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read fixed graph {args.fixed_graph}: {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"fixed graph {args.fixed_graph}: {exc}") from None

    agent = CommunicationAgent(scenario.graph.strategy, scenario.f, seed)
    records = run_campaign(scenario, args.periods, agent, _MODE_MAP[args.mode], fixed_graph)

    out = Path(args.out)
    failed = False
    for record in records:
        target = out if len(records) == 1 else out / f"period_{record.period.index:03d}"
        write_run_artifacts(record, target)
        error = record.diagnostics.get("error")
        verdicts = sorted(set(record.per_controller_verdict.values()))
        if error is not None:
            failed = True
            print(f"period {record.period.index}: FAILED ({error})")
        else:
            print(f"period {record.period.index}: verdicts={verdicts} "
                  f"supply_total={record.recovered_supply_total:.4f} "
                  f"demand_total={record.recovered_demand_total:.4f}")
    print(f"artifacts written under {out}")
    if failed:
        return EXIT_INFEASIBLE
    if args.mode != "baseline" and any(not r.unanimous() for r in records):
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_graph(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args.seed, 0)
    attacks = _parse_attacked_links(args.attacked_links)
    rng = np.random.default_rng(seed)
    if args.strategy == "preventive":
        g = generate_preventive(args.n, args.f, rng)
    else:
        g = generate_responsive(args.n, args.f, attacks, rng)
    if g.node_count >= 2:
        cert = vertex_connectivity(g)
        kappa = cert.kappa
        witness = None if cert.witness_cut is None else sorted(cert.witness_cut)
    else:
        kappa, witness = 0, None

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "graph.edges").write_text(g.to_edge_list_text())
    (out / "graph.dot").write_text(g.to_dot())
    (out / "certificate.json").write_text(
        json.dumps({"kappa": kappa, "witness_cut": witness}, indent=2) + "\n")
    print(f"{args.strategy} graph on {g.node_count} nodes, {len(g.edges)} edges, "
          f"certified kappa={kappa}")
    print(f"artifacts written under {out}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        text = Path(args.weights).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read weights file {args.weights}: {exc}") from None
    try:
        w = WeightMatrix.from_csv_text(text)
    except ValueError as exc:
        raise ConfigError(f"weights file {args.weights}: {exc}") from None
    k_max = args.k_max if args.k_max is not None else w.n + 2
    k = verify_rank_condition(w, args.f, k_max)
    if k is None:
        print(f"rank condition FAILS for f={args.f} at every K <= {k_max}")
        return EXIT_INFEASIBLE
    print(f"rank condition holds for f={args.f}; smallest feasible horizon K={k}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgnet",
        description="Attack-resilient interconnection decisions for networked microgrids")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a decision campaign from a scenario file")
    run_p.add_argument("--scenario", required=True,
                       help="path to a scenario JSON file, or the literal 'golden'")
    run_p.add_argument("--mode", choices=sorted(_MODE_MAP), default="resilient-unknown")
    run_p.add_argument("--out", default="out", help="output directory (default: out)")
    run_p.add_argument("--seed", type=int, default=None,
                       help=f"master seed; falls back to ${SEED_ENV_VAR}, then the scenario")
    run_p.add_argument("--periods", type=int, default=1)
    run_p.add_argument("--fixed-graph", default=None,
                       help="edge-list file overriding the scenario topology")
    run_p.set_defaults(func=cmd_run)

    graph_p = sub.add_parser("graph", help="generate and certify a communication topology")
    graph_p.add_argument("--n", type=int, required=True)
    graph_p.add_argument("--f", type=int, required=True)
    graph_p.add_argument("--strategy", choices=("preventive", "responsive"), default="preventive")
    graph_p.add_argument("--attacked-links", default=None, help="comma list of i-j pairs")
    graph_p.add_argument("--seed", type=int, default=None)
    graph_p.add_argument("--out", default="out")
    graph_p.set_defaults(func=cmd_graph)

    verify_p = sub.add_parser("verify", help="check a weight matrix against the rank condition")
    verify_p.add_argument("--weights", required=True, help="dense CSV weight matrix")
    verify_p.add_argument("--f", type=int, required=True)
    verify_p.add_argument("--k-max", type=int, default=None)
    verify_p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleTopologyError, SynthesisError, DecodeError, InternalInvariantError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
