"""Command line entry point: ``elasticdue solve|validate|oracle <scenario>``.

Exit status: 0 converged, 3 finished without converging, 2 invalid input,
1 internal or I/O error. Errors are also written to stderr as one JSON
object per line.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .discretization import TimeGrid, make_grid
from .effective_delay import SchedulePenaltySpec
from .errors import DueError, InvalidArgumentError, ParseError, ValidationError
from .network import Network, load_network
from .oracle import ORACLE_SEEDS, brute_force_vi
from .report import emit_report, payload_to_csv, write_documents
from .solver import SolverConfig, evaluate, gap_report, solve_due

EXIT_OK, EXIT_INTERNAL, EXIT_INVALID, EXIT_NOT_CONVERGED = 0, 1, 2, 3

log = logging.getLogger("elasticdue")

_SCENARIO_KEYS = {"network", "grid", "penalty", "solver", "output", "oracle"}
_REQUIRED = {"network", "grid", "penalty"}
_GRID_KEYS = {"t0", "tf", "n_bins"}
_PENALTY_KEYS = {"T_A", "gamma_early", "gamma_late", "T_A_by_od"}
_SOLVER_KEYS = {
    "alpha": "step_size",
    "tol_gap": "tol_gap",
    "tol_change": "tol_change",
    "max_iters": "max_iters",
    "step_halving": "step_halving",
    "min_step": "min_step",
    "tol_flow": "tol_flow",
    "horizon_multiple": "horizon_multiple",
}
_ORACLE_KEYS = {"iters", "initial_step"}


@dataclass(frozen=True)
class Scenario:
    path: Path
    network: Network
    grid: TimeGrid
    penalty: SchedulePenaltySpec
    config: SolverConfig
    output_format: str = "json"
    oracle_iters: int = 3000
    oracle_initial_step: float | None = None


def _section(doc: dict, name: str, allowed: set[str], required: set[str] = frozenset()) -> dict:
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        raise ParseError("expected an object", f"$.{name}")
    unknown = set(sec) - allowed
    if unknown:
        raise ParseError(f"unknown key(s) {sorted(unknown)}", f"$.{name}")
    missing = required - set(sec)
    if missing:
        raise ParseError(f"missing key(s) {sorted(missing)}", f"$.{name}")
    return sec


def scenario_from_dict(doc: Any, path: str | Path = "scenario.json") -> Scenario:
    path = Path(path)
    if not isinstance(doc, dict):
        raise ParseError("expected an object", "$")
    unknown = set(doc) - _SCENARIO_KEYS
    if unknown:
        raise ParseError(f"unknown key(s) {sorted(unknown)}", "$")
    missing = _REQUIRED - set(doc)
    if missing:
        raise ParseError(f"missing key(s) {sorted(missing)}", "$")

    net_path = Path(doc["network"])
    if not net_path.is_absolute():
        net_path = path.parent / net_path
    if not net_path.is_file():
        raise ValidationError(f"network file {str(net_path)!r} does not exist")
    network = load_network(net_path)

    g = _section(doc, "grid", _GRID_KEYS, _GRID_KEYS)
    try:
        grid = make_grid(g["t0"], g["tf"], g["n_bins"])
    except (InvalidArgumentError, TypeError) as exc:
        raise ValidationError(f"grid: {exc}") from exc

    p = _section(doc, "penalty", _PENALTY_KEYS, {"T_A"})
    overrides = p.get("T_A_by_od", {})
    if not isinstance(overrides, dict):
        raise ParseError("expected an object mapping OD index to T_A", "$.penalty.T_A_by_od")
    try:
        by_od = {int(k): float(v) for k, v in overrides.items()}
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc), "$.penalty.T_A_by_od") from exc
    for od in by_od:
        if not 0 <= od < len(network.od_pairs):
            raise ValidationError(f"penalty.T_A_by_od names unknown OD index {od}")
    kwargs = {"od_desired_arrival": by_od}
    if "gamma_early" in p:
        kwargs["early_coef"] = float(p["gamma_early"])
    if "gamma_late" in p:
        kwargs["late_coef"] = float(p["gamma_late"])
    try:
        penalty = SchedulePenaltySpec(float(p["T_A"]), **kwargs)
        penalty.check_grid(grid)
    except InvalidArgumentError as exc:
        raise ValidationError(f"penalty: {exc}") from exc

    s = _section(doc, "solver", set(_SOLVER_KEYS))
    try:
        config = SolverConfig(**{_SOLVER_KEYS[k]: v for k, v in s.items()})
    except (InvalidArgumentError, TypeError) as exc:
        raise ValidationError(f"solver: {exc}") from exc

    out = _section(doc, "output", {"format"})
    fmt = out.get("format", "json")
    if fmt not in ("json", "csv"):
        raise ValidationError(f"output.format must be 'json' or 'csv', got {fmt!r}")

    o = _section(doc, "oracle", _ORACLE_KEYS)
    return Scenario(
        path, network, grid, penalty, config, fmt, int(o.get("iters", 3000)), o.get("initial_step")
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"scenario file {str(path)!r} does not exist")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"{path}: line {exc.lineno} column {exc.colno}") from exc
    return scenario_from_dict(doc, path)


def _diagnostic(kind: str, message: str, **fields) -> None:
    print(json.dumps({"level": "error", "kind": kind, "message": message, **fields}), file=sys.stderr)


def _oracle_payload(scenario: Scenario, seeds: tuple[int, ...]) -> tuple[dict, bool]:
    run = brute_force_vi(
        scenario.network,
        scenario.grid,
        scenario.penalty,
        iters=scenario.oracle_iters,
        seeds=seeds,
        initial_step=scenario.oracle_initial_step,
    )
    # re-certify through the main pipeline
    _, psi = evaluate(run.flows, scenario.network, scenario.grid, scenario.penalty, 1000.0)
    gap = gap_report(run.flows, psi, scenario.network, scenario.grid)
    ok = run.max_residual <= scenario.config.tol_gap
    payload = {
        "converged": ok,
        "iterations": scenario.oracle_iters,
        "gap": {"dual": run.dual, "complementarity": run.complementarity},
        "pipeline_gap": {"dual": gap.dual, "complementarity": gap.complementarity},
        "demand": [
            {"od": od.label, "Q": float(gap.demand[i]), "theta_at_Q": float(gap.theta[i]),
             "min_effective_delay": float(gap.min_effective_delay[i]), "multiplier": float(gap.multipliers[i])}
            for i, od in enumerate(scenario.network.od_pairs)
        ],
        "flows": [{"path": p.id, "bins": [float(v) for v in row]} for p, row in zip(scenario.network.paths, run.flows)],
        "effective_delay": [{"path": p.id, "bins": [float(v) for v in row]} for p, row in zip(scenario.network.paths, psi)],
        "trace": [],
        "loading": {},
        "seeds": list(seeds),
        "best_seed": run.seed,
        "seed_residuals": {str(k): v for k, v in run.runs.items()},
    }
    return payload, ok


def run_scenario(
    scenario_path: str | Path,
    out_dir: str | Path | None = None,
    fmt: str | None = None,
    seed: int | None = None,
    command: str = "solve",
) -> int:
    try:
        scenario = load_scenario(scenario_path)
    except (ValidationError, InvalidArgumentError) as exc:
        _diagnostic(type(exc).__name__, str(exc), scenario=str(scenario_path))
        return EXIT_INVALID
    if command == "validate":
        print(json.dumps({"valid": True, "paths": len(scenario.network.paths), "bins": scenario.grid.n_bins}))
        return EXIT_OK

    fmt = fmt or scenario.output_format
    out_dir = Path(out_dir) if out_dir is not None else Path("out")
    try:
        if command == "oracle":
            seeds = ORACLE_SEEDS if seed is None else tuple(seed + i for i in range(len(ORACLE_SEEDS)))
            payload, ok = _oracle_payload(scenario, seeds)
            docs = (
                {"oracle.json": json.dumps(payload, indent=2) + "\n"}
                if fmt == "json"
                else {f"oracle_{k}": v for k, v in payload_to_csv(payload).items()}
            )
        else:
            solution = solve_due(scenario.network, scenario.grid, scenario.penalty, scenario.config)
            extra = {"seed": seed} if seed is not None else None
            docs = emit_report(solution, scenario.network, fmt, extra)
            ok = solution.converged
        write_documents(out_dir, docs)
    except DueError as exc:
        _diagnostic(type(exc).__name__, str(exc), scenario=str(scenario_path))
        return EXIT_INTERNAL
    except OSError as exc:
        _diagnostic("IOError", str(exc), out=str(out_dir))
        return EXIT_INTERNAL
    if not ok:
        log.warning("%s did not meet its tolerances; report written to %s", command, out_dir)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="elasticdue", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "compute an equilibrium and write the report"),
        ("validate", "check the scenario and network documents"),
        ("oracle", "run the brute-force reference solver"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("scenario")
        cmd.add_argument("--out", default="out", help="output directory (default: ./out)")
        cmd.add_argument("--format", choices=("json", "csv"), default=None)
        cmd.add_argument("--seed", type=int, default=None, help="u64 seed recorded in the report")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        _diagnostic("InvalidArgumentError", "--seed must be an unsigned 64-bit integer")
        return EXIT_INVALID
    try:
        return run_scenario(args.scenario, args.out, args.format, args.seed, args.command)
    except Exception as exc:  # noqa: BLE001 - last-resort contract: exit 1 with a diagnostic
        _diagnostic(type(exc).__name__, str(exc))
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
