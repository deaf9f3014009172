"""Solution reports as JSON or a set of CSV tables."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .network import Network
from .solver import Solution

TRACE_FIELDS = ("iteration", "dual", "complementarity", "change", "step", "clamp_count")


def _floats(values) -> list[float]:
    return [float(v) for v in np.asarray(values, dtype=float).ravel()]


def solution_payload(solution: Solution, network: Network, extra: dict | None = None) -> dict:
    gap = solution.gap
    grid_tf = solution.loading.grid.tf
    payload = {
        "converged": bool(solution.converged),
        "iterations": int(solution.iterations),
        "gap": {"dual": float(gap.dual), "complementarity": float(gap.complementarity)},
        "demand": [
            {
                "od": od.label,
                "Q": float(gap.demand[i]),
                "theta_at_Q": float(gap.theta[i]),
                "min_effective_delay": float(gap.min_effective_delay[i]),
                "multiplier": float(gap.multipliers[i]),
            }
            for i, od in enumerate(network.od_pairs)
        ],
        "flows": [{"path": p.id, "bins": _floats(row)} for p, row in zip(network.paths, solution.flows)],
        "effective_delay": [
            {"path": p.id, "bins": _floats(row)} for p, row in zip(network.paths, solution.effective_delay)
        ],
        "trace": [{k: row[k] for k in TRACE_FIELDS} for row in solution.trace],
        "loading": {
            "clamp_count": int(solution.loading.clamp_count),
            "max_arrival_time": float(solution.loading.max_arrival_time),
            "arrivals_after_tf": int((solution.loading.arrival_times > grid_tf).sum()),
        },
        "support_violation": solution.support_violation(),
        "tol_flow": float(solution.tol_flow),
        "final_step": float(solution.step_size),
    }
    if extra:
        payload.update(extra)
    return payload


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def payload_to_csv(payload: dict) -> dict[str, str]:
    """Split a JSON report payload into CSV tables keyed by file name."""
    n_bins = len(payload["flows"][0]["bins"]) if payload["flows"] else 0
    bin_cols = [f"bin_{k}" for k in range(n_bins)]
    summary = [
        ["converged", payload["converged"]],
        ["iterations", payload["iterations"]],
        ["dual", payload["gap"]["dual"]],
        ["complementarity", payload["gap"]["complementarity"]],
    ]
    summary += [[k, v] for k, v in payload.items() if isinstance(v, (int, float, str)) and k not in ("converged", "iterations")]
    summary += [[k, v] for k, v in payload["loading"].items()]
    return {
        "summary.csv": _csv(["key", "value"], summary),
        "demand.csv": _csv(
            ["od", "Q", "theta_at_Q", "min_effective_delay", "multiplier"],
            [[d["od"], d["Q"], d["theta_at_Q"], d["min_effective_delay"], d["multiplier"]] for d in payload["demand"]],
        ),
        "flows.csv": _csv(["path", *bin_cols], [[f["path"], *f["bins"]] for f in payload["flows"]]),
        "effective_delay.csv": _csv(
            ["path", *bin_cols], [[f["path"], *f["bins"]] for f in payload["effective_delay"]]
        ),
        "trace.csv": _csv(list(TRACE_FIELDS), [[row[k] for k in TRACE_FIELDS] for row in payload["trace"]]),
    }


def emit_report(solution: Solution, network: Network, fmt: str = "json", extra: dict | None = None) -> dict[str, str]:
    payload = solution_payload(solution, network, extra)
    if fmt == "json":
        return {"report.json": json.dumps(payload, indent=2) + "\n"}
    if fmt == "csv":
        return payload_to_csv(payload)
    raise ValueError(f"unknown report format {fmt!r}")


def write_documents(out_dir: str | Path, documents: dict[str, str]) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in documents.items():
        target = out / name
        target.write_text(text, encoding="utf-8")
        written.append(target)
    return written
