"""Independent ground truth for small instances.

Two routes that share nothing with the main solver loop except the delay
operator itself:

* ``frozen_delay_equilibrium`` solves the exogenous-delay case in closed form.
* ``brute_force_vi`` runs projected descent with diminishing steps from
  several seeded random starts and keeps the best run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .demand import InverseDemandSpec
from .discretization import TimeGrid
from .effective_delay import SchedulePenaltySpec, effective_delay_field
from .errors import DivergenceError, InvalidArgumentError
from .loading import path_delay_field, propagate_path_cohorts
from .network import Network

ORACLE_SEEDS = (11, 23, 37, 41, 53)
MAX_CELLS = 64


@dataclass(frozen=True)
class FrozenDelayInstance:
    """Exogenous effective delays ``psi`` (rows = paths) grouped by OD."""

    psi: np.ndarray
    demand: tuple[InverseDemandSpec, ...]
    path_od: np.ndarray
    grid: TimeGrid

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=float)
        if psi.ndim != 2 or psi.shape[1] != self.grid.n_bins or not np.all(psi > 0):
            raise InvalidArgumentError("frozen delay field must be positive with one column per bin")
        if len(self.path_od) != psi.shape[0]:
            raise InvalidArgumentError("path_od must have one entry per row of psi")
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "path_od", np.asarray(self.path_od, dtype=int))


@dataclass(frozen=True)
class FrozenDelayEquilibrium:
    demand: np.ndarray  # Q* per OD
    min_delay: np.ndarray
    argmin_cells: tuple[frozenset[tuple[int, int]], ...]  # (path row, bin) per OD


def frozen_delay_equilibrium(instance: FrozenDelayInstance) -> FrozenDelayEquilibrium:
    q, vmin, cells = [], [], []
    for i, spec in enumerate(instance.demand):
        rows = np.flatnonzero(instance.path_od == i)
        block = instance.psi[rows]
        low = float(block.min())
        vmin.append(low)
        q.append((spec.a - low) / spec.b if spec.a > low else 0.0)
        cells.append(frozenset((int(rows[r]), int(k)) for r, k in np.argwhere(block == low)))
    return FrozenDelayEquilibrium(np.array(q), np.array(vmin), tuple(cells))


@dataclass(frozen=True)
class OracleRun:
    flows: np.ndarray
    dual: float
    complementarity: float
    seed: int
    runs: dict[int, float] = field(default_factory=dict)  # seed -> final max residual

    @property
    def max_residual(self) -> float:
        return float(max(self.dual, abs(self.complementarity)))


def _residuals(h, psi, a, b, path_od, dt):
    """Dual and normalized complementarity residuals, recomputed from scratch."""
    n_od = len(a)
    q = np.zeros(n_od)
    for p in range(h.shape[0]):
        q[path_od[p]] += h[p].sum() * dt
    theta = a - b * q
    dual = 0.0
    comp = 0.0
    for p in range(h.shape[0]):
        slack = psi[p] - theta[path_od[p]]
        dual = max(dual, -float(slack.min()))
        comp += float(np.dot(h[p], slack)) * dt
    total = q.sum()
    return theta, dual, (float(comp / total) if total > 0 else 0.0)


def brute_force_vi(
    network: Network,
    grid: TimeGrid,
    penalty: SchedulePenaltySpec,
    iters: int = 20000,
    seeds: tuple[int, ...] = ORACLE_SEEDS,
    initial_step: float | None = None,
    horizon_multiple: float = 1000.0,
) -> OracleRun:
    n_paths = len(network.paths)
    if n_paths * grid.n_bins > MAX_CELLS:
        raise InvalidArgumentError(f"oracle limited to {MAX_CELLS} path-bin cells, got {n_paths * grid.n_bins}")
    a = np.array([od.inverse_demand.a for od in network.od_pairs])
    b = np.array([od.inverse_demand.b for od in network.od_pairs])
    path_od = np.array([p.od_index for p in network.paths])
    dt = grid.dt
    if initial_step is None:
        # stable demand feedback once each OD is down to a single used cell
        initial_step = float(1.0 / np.max(b * dt))

    def psi_of(h):
        loading = propagate_path_cohorts(network, grid, h, horizon_multiple)
        return effective_delay_field(path_delay_field(loading), penalty, grid, path_od)

    best: OracleRun | None = None
    finals: dict[int, float] = {}
    for seed in seeds:
        rng = np.random.default_rng(seed)
        scale = (a / b)[path_od][:, None] / (grid.n_bins * dt * np.bincount(path_od)[path_od][:, None])
        h = rng.uniform(0.0, 2.0, size=(n_paths, grid.n_bins)) * scale
        try:
            for k in range(iters):
                psi = psi_of(h)
                theta, _, _ = _residuals(h, psi, a, b, path_od, dt)
                step = initial_step / np.sqrt(k + 1.0)
                h = np.clip(h - step * (psi - theta[path_od][:, None]), 0.0, None)
            psi = psi_of(h)
        except DivergenceError:
            finals[seed] = float("inf")
            continue
        _, dual, comp = _residuals(h, psi, a, b, path_od, dt)
        run = OracleRun(h, dual, comp, seed)
        finals[seed] = run.max_residual
        if best is None or run.max_residual < best.max_residual:
            best = run
    if best is None:
        raise DivergenceError("every oracle start diverged")
    return OracleRun(best.flows, best.dual, best.complementarity, best.seed, finals)
