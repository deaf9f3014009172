from __future__ import annotations

import json
from pathlib import Path

import pytest

from elasticdue.network import load_network, network_from_dict

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"
NETWORKS = SCENARIOS / "networks"


def single_link(alpha=1.0, beta=0.0, a=20.0, b=0.5):
    return network_from_dict(
        {
            "nodes": ["A", "B"],
            "links": [{"id": "L1", "from": "A", "to": "B", "alpha": alpha, "beta": beta}],
            "od_pairs": [
                {"origin": "A", "destination": "B", "inverse_demand": {"type": "linear", "a": a, "b": b}}
            ],
        }
    )


@pytest.fixture(scope="session")
def parallel2():
    return load_network(NETWORKS / "parallel2.json")


@pytest.fixture(scope="session")
def diamond():
    return load_network(NETWORKS / "diamond.json")


@pytest.fixture(scope="session")
def scenario_doc():
    def _load(name: str) -> dict:
        return json.loads((SCENARIOS / f"{name}.json").read_text())

    return _load


ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record (and print) one PASS/FAIL line for an acceptance criterion."""

    def _record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
