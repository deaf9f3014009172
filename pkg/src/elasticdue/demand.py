"""Cumulative OD demand and the linear inverse/forward demand pair."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .discretization import TimeGrid
from .errors import InvalidArgumentError

if TYPE_CHECKING:
    from .network import Network


@dataclass(frozen=True)
class InverseDemandSpec:
    """Separable linear inverse demand ``theta(Q) = a - b*Q``."""

    a: float
    b: float
    kind: str = "linear"

    def __post_init__(self):
        if self.kind != "linear":
            raise InvalidArgumentError(f"unsupported inverse demand type {self.kind!r}")
        if not np.isfinite(self.a) or self.a <= 0:
            raise InvalidArgumentError(f"inverse demand intercept a must be > 0, got {self.a}")
        if not np.isfinite(self.b) or self.b <= 0:
            raise InvalidArgumentError(f"inverse demand slope b must be > 0, got {self.b}")

    @property
    def choke_demand(self) -> float:
        return self.a / self.b


def inverse_demand_value(spec: InverseDemandSpec, q: float) -> float:
    if q < 0:
        raise InvalidArgumentError(f"cumulative demand must be nonnegative, got {q}")
    return spec.a - spec.b * q


def forward_demand_value(spec: InverseDemandSpec, v: float) -> float:
    return max(0.0, (spec.a - v) / spec.b)


@dataclass(frozen=True)
class DemandState:
    """Per-OD cumulative demand.

    ``path`` holds Q_ij at every bin edge (explicit Euler from Q(t0) = 0), so
    ``path[:, -1]`` is the terminal demand.
    """

    path: np.ndarray

    @property
    def terminal(self) -> np.ndarray:
        return self.path[:, -1]

    @property
    def total(self) -> float:
        return float(self.terminal.sum())


def check_flows(h: np.ndarray, network: Network, grid: TimeGrid) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    expected = (len(network.paths), grid.n_bins)
    if h.shape != expected:
        raise InvalidArgumentError(f"path flow matrix has shape {h.shape}, expected {expected}")
    if not np.all(np.isfinite(h)):
        raise InvalidArgumentError("path flow matrix contains non-finite entries")
    if np.any(h < 0):
        p, k = np.argwhere(h < 0)[0]
        raise InvalidArgumentError(f"negative departure rate {h[p, k]} on path {p}, bin {k}")
    return h


def cumulative_demand(h: np.ndarray, network: Network, grid: TimeGrid) -> DemandState:
    h = check_flows(h, network, grid)
    od_rates = np.zeros((len(network.od_pairs), grid.n_bins))
    np.add.at(od_rates, network.path_od, h)
    path = np.zeros((len(network.od_pairs), grid.n_bins + 1))
    # left-Riemann accumulation of dQ/dt = sum of path rates
    path[:, 1:] = np.cumsum(od_rates * grid.dt, axis=1)
    return DemandState(path)


def theta_values(network: Network, q_terminal: np.ndarray) -> np.ndarray:
    return np.array(
        [inverse_demand_value(od.inverse_demand, float(q)) for od, q in zip(network.od_pairs, q_terminal)]
    )
