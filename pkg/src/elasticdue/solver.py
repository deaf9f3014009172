"""Fixed-point projection solver for elastic-demand dynamic user equilibrium.

The iteration is

    h <- max(0, h - step * (Psi(h) - Theta(Q(h))))

with a full network loading per iteration. Its fixed points are exactly the
flows whose complementarity residuals vanish, which is what ``gap_report``
measures.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .demand import DemandState, check_flows, cumulative_demand, forward_demand_value, theta_values
from .discretization import TimeGrid
from .effective_delay import SchedulePenaltySpec, effective_delay_field
from .errors import InvalidArgumentError, NumericFailureError
from .loading import DEFAULT_HORIZON_MULTIPLE, LoadingResult, path_delay_field, propagate_path_cohorts
from .network import Network, OdPair

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    step_size: float = 0.5
    tol_gap: float = 1e-6
    tol_change: float = 1e-9
    max_iters: int = 5000
    step_halving: bool = False
    # halving never goes below this; None means step_size / 64
    min_step: float | None = None
    # None means 1e-6 * total demand / horizon, decided at the end of the solve
    tol_flow: float | None = None
    horizon_multiple: float = DEFAULT_HORIZON_MULTIPLE

    def __post_init__(self):
        if not self.step_size > 0:
            raise InvalidArgumentError(f"step_size must be > 0, got {self.step_size}")
        if not (self.tol_gap > 0 and self.tol_change > 0):
            raise InvalidArgumentError("tolerances must be > 0")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise InvalidArgumentError(f"max_iters must be a positive integer, got {self.max_iters}")
        if self.tol_flow is not None and self.tol_flow < 0:
            raise InvalidArgumentError("tol_flow must be >= 0")
        if self.min_step is not None and not 0 < self.min_step <= self.step_size:
            raise InvalidArgumentError("min_step must lie in (0, step_size]")
        if not self.horizon_multiple > 1:
            raise InvalidArgumentError("horizon_multiple must be > 1")


@dataclass(frozen=True)
class GapReport:
    dual: float
    complementarity: float
    demand: np.ndarray  # Q_ij(t_f)
    theta: np.ndarray  # inverse demand at Q_ij(t_f)
    min_effective_delay: np.ndarray
    multipliers: np.ndarray = field(init=False)

    def __post_init__(self):
        # costate of the demand dynamics is constant and equal to -Theta
        object.__setattr__(self, "multipliers", -self.theta)

    @property
    def merit(self) -> float:
        return max(self.dual, abs(self.complementarity))


@dataclass(frozen=True)
class Solution:
    flows: np.ndarray
    demand: DemandState
    effective_delay: np.ndarray
    gap: GapReport
    iterations: int
    converged: bool
    trace: list[dict]
    loading: LoadingResult
    tol_flow: float
    step_size: float
    path_od: np.ndarray = field(repr=False)

    def support_violation(self) -> float:
        """Largest |Psi - Theta| over cells carrying more than ``tol_flow``."""
        rho = self.effective_delay - self.gap.theta[self.path_od][:, None]
        used = self.flows > self.tol_flow
        return float(np.abs(rho[used]).max()) if used.any() else 0.0


def min_effective_delay(psi: np.ndarray, od: OdPair | int, network: Network) -> float:
    od_index = od if isinstance(od, int) else network.od_pairs.index(od)
    rows = network.paths_of(od_index)
    if not rows:
        raise InvalidArgumentError(f"OD pair {od_index} has no paths")
    return float(np.asarray(psi)[rows].min())


def project_nonnegative(g: np.ndarray) -> np.ndarray:
    return np.maximum(np.asarray(g, dtype=float), 0.0)


def fixed_point_step(
    h: np.ndarray, psi: np.ndarray, theta: np.ndarray, step: float, path_od: np.ndarray
) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    psi = np.asarray(psi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    path_od = np.asarray(path_od, dtype=int)
    if h.shape != psi.shape or h.ndim != 2:
        raise InvalidArgumentError(f"flow shape {h.shape} does not match delay shape {psi.shape}")
    if path_od.shape != (h.shape[0],) or (path_od.size and path_od.max() >= theta.shape[0]):
        raise InvalidArgumentError("path-to-OD map does not match the flow rows and theta values")
    if not step > 0:
        raise InvalidArgumentError(f"step must be > 0, got {step}")
    return project_nonnegative(h - step * (psi - theta[path_od][:, None]))


def gap_report(h: np.ndarray, psi: np.ndarray, network: Network, grid: TimeGrid) -> GapReport:
    h = check_flows(h, network, grid)
    psi = np.asarray(psi, dtype=float)
    if psi.shape != h.shape or not np.all(psi > 0):
        raise InvalidArgumentError("effective delay field must be strictly positive and match the flows")
    q = cumulative_demand(h, network, grid).terminal
    theta = theta_values(network, q)
    rho = psi - theta[network.path_od][:, None]
    dual = max(0.0, float(-rho.min()))
    total = float(q.sum())
    comp = float((h * rho).sum() * grid.dt / total) if total > 0 else 0.0
    vmin = np.array([min_effective_delay(psi, i, network) for i in range(len(network.od_pairs))])
    return GapReport(dual, comp, q, theta, vmin)


def evaluate(
    h: np.ndarray, network: Network, grid: TimeGrid, penalty: SchedulePenaltySpec, horizon_multiple: float
) -> tuple[LoadingResult, np.ndarray]:
    """Load the network under ``h`` and return the loading and Psi(h)."""
    loading = propagate_path_cohorts(network, grid, h, horizon_multiple)
    psi = effective_delay_field(path_delay_field(loading), penalty, grid, network.path_od)
    return loading, psi


def initial_flows(network: Network, grid: TimeGrid, penalty: SchedulePenaltySpec) -> np.ndarray:
    """Spread the free-flow demand of each OD evenly over its on-time cells."""
    free = network.free_flow_times()
    d_free = np.repeat(free[:, None], grid.n_bins, axis=1)
    psi = effective_delay_field(d_free, penalty, grid, network.path_od)
    h = np.zeros((len(network.paths), grid.n_bins))
    for i, od in enumerate(network.od_pairs):
        rows = network.paths_of(i)
        q0 = forward_demand_value(od.inverse_demand, float(psi[rows].min()))
        if q0 == 0:
            continue
        on_time = grid.starts[None, :] + free[rows][:, None] <= penalty.target_for(i)
        if not on_time.any():
            on_time[:] = True
        block = np.where(on_time, q0 / (on_time.sum() * grid.dt), 0.0)
        h[rows] = block
    return h


def solve_due(
    network: Network,
    grid: TimeGrid,
    penalty: SchedulePenaltySpec,
    config: SolverConfig | None = None,
    h0: np.ndarray | None = None,
) -> Solution:
    config = config or SolverConfig()
    penalty.check_grid(grid)
    h = initial_flows(network, grid, penalty) if h0 is None else check_flows(h0, network, grid).copy()
    step = config.step_size
    min_step = config.min_step if config.min_step is not None else config.step_size / 64
    trace: list[dict] = []
    prev_merit = np.inf
    converged = False

    for it in range(1, config.max_iters + 1):
        loading, psi = evaluate(h, network, grid, penalty, config.horizon_multiple)
        if not np.all(np.isfinite(psi)):
            raise NumericFailureError("non-finite effective delay", it)
        gap = gap_report(h, psi, network, grid)
        h_next = fixed_point_step(h, psi, gap.theta, step, network.path_od)
        if not np.all(np.isfinite(h_next)):
            raise NumericFailureError("non-finite path flow", it)
        scale = max(np.linalg.norm(h), np.linalg.norm(h_next))
        change = float(np.linalg.norm(h_next - h) / scale) if scale > 0 else 0.0
        trace.append(
            {
                "iteration": it,
                "dual": gap.dual,
                "complementarity": gap.complementarity,
                "change": change,
                "step": step,
                "clamp_count": loading.clamp_count,
            }
        )
        if gap.merit <= config.tol_gap and change <= config.tol_change:
            converged = True
            break
        if it == config.max_iters:
            break
        if config.step_halving and gap.merit > prev_merit and step > min_step:
            step = max(0.5 * step, min_step)
            log.debug("iteration %d: merit rose to %g, step halved to %g", it, gap.merit, step)
        prev_merit = gap.merit
        h = h_next

    demand = cumulative_demand(h, network, grid)
    tol_flow = config.tol_flow
    if tol_flow is None:
        tol_flow = 1e-6 * demand.total / grid.horizon
    return Solution(h, demand, psi, gap, it, converged, trace, loading, tol_flow, step, network.path_od)
