"""Dynamic network loading with an occupancy-based affine link delay.

Every (path, departure bin) pair is one cohort of ``h[p, k] * dt`` vehicles
that leaves the origin at the bin's left endpoint. Cohorts are pushed through
their links in global time order. A cohort entering link ``a`` at time ``t``
sees occupancy ``x = U_a(t) - W_a(t)`` (vehicles that entered and have not
yet left) and its head is scheduled to leave at

    max(t + alpha_a + beta_a * x, latest exit already issued on a)

The running max keeps each link first-in-first-out; every time it binds the
link's ``clamp_count`` goes up. Simultaneous events run exits first, then
by link id and path id.

Both cumulative curves are piecewise linear. A cohort's mass sits on the
segment between its own breakpoint and the next cohort's, so the exit curve
passes through ``(exit time of cohort j, entries before cohort j)``, which
makes ``W_a(tau(t)) = U_a(t)`` at every breakpoint. The newest cohort's exit
segment is not closed yet; it is drawn with the cohort's own head delay.
Both choices keep delays continuous in the departure rates.
"""

from __future__ import annotations

import heapq
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .discretization import TimeGrid
from .errors import DivergenceError, InvalidArgumentError
from .network import Network

DEFAULT_HORIZON_MULTIPLE = 10.0

# exits sort before entries at equal times so occupancy never counts leavers
_EXIT, _ENTRY = 0, 1


@dataclass(frozen=True)
class LinkState:
    """Cumulative entry/exit curves as breakpoints ``(time, vehicles)``.

    Breakpoints are recorded in processing order; between breakpoints the
    curves are linearly interpolated and they are flat outside them.
    ``exit_issue_times`` lists scheduled exit times in the order they were
    issued, which is what the FIFO guarantee is about.
    """

    link_id: str
    entry_times: np.ndarray
    entry_cumulative: np.ndarray
    exit_times: np.ndarray
    exit_cumulative: np.ndarray
    exit_issue_times: np.ndarray
    clamp_count: int

    @staticmethod
    def _curve(times: np.ndarray, cum: np.ndarray, t) -> np.ndarray:
        if times.size == 0:
            return np.zeros_like(np.asarray(t, dtype=float))
        return np.interp(t, times, cum, left=0.0, right=cum[-1])

    def entries(self, t) -> np.ndarray:
        return self._curve(self.entry_times, self.entry_cumulative, t)

    def exits(self, t) -> np.ndarray:
        return self._curve(self.exit_times, self.exit_cumulative, t)

    @property
    def total_entered(self) -> float:
        return float(self.entry_cumulative[-1]) if self.entry_cumulative.size else 0.0

    @property
    def total_exited(self) -> float:
        return float(self.exit_cumulative[-1]) if self.exit_cumulative.size else 0.0


@dataclass(frozen=True)
class LoadingResult:
    grid: TimeGrid
    links: tuple[LinkState, ...]
    arrival_times: np.ndarray  # |P| x n_bins, clock time at destination

    @property
    def clamp_count(self) -> int:
        return sum(ls.clamp_count for ls in self.links)

    @property
    def max_arrival_time(self) -> float:
        return float(self.arrival_times.max())

    def link_state(self, link_id: str) -> LinkState:
        for ls in self.links:
            if ls.link_id == link_id:
                return ls
        raise KeyError(link_id)


class _LinkRecorder:
    __slots__ = ("entered", "exited", "clamps", "entry_t", "entry_u", "issued", "exit_u")

    def __init__(self):
        self.entered = 0.0
        self.exited = 0.0  # mass credited by exit events, kept for the conservation check
        self.clamps = 0
        self.entry_t: list[float] = []
        self.entry_u: list[float] = []
        self.issued: list[float] = []
        self.exit_u: list[float] = []

    def exits_at(self, t: float) -> float:
        times = self.issued
        i = bisect_right(times, t)
        if i == 0:
            return 0.0
        if i == len(times):
            # newest cohort: its segment is still open, assume its head's delay holds
            start, head = self.entry_t[-1], times[-1]
            frac = min(1.0, (t - head) / (t - start)) if t > start else 0.0
            return self.exit_u[-1] + frac * (self.entered - self.exit_u[-1])
        t0, t1 = times[i - 1], times[i]
        w0, w1 = self.exit_u[i - 1], self.exit_u[i]
        return w0 + (w1 - w0) * (t - t0) / (t1 - t0)

    def freeze(self, link_id: str) -> LinkState:
        entry_t, entry_u = list(self.entry_t), list(self.entry_u)
        exit_t, exit_u = list(self.issued), list(self.exit_u)
        if entry_t:
            # the last cohort has no successor to close its segment
            entry_t.append(entry_t[-1])
            entry_u.append(self.entered)
            exit_t.append(exit_t[-1])
            exit_u.append(self.exited)
        return LinkState(
            link_id,
            np.array(entry_t, dtype=float),
            np.array(entry_u, dtype=float),
            np.array(exit_t, dtype=float),
            np.array(exit_u, dtype=float),
            np.array(self.issued, dtype=float),
            self.clamps,
        )


def propagate_path_cohorts(
    network: Network,
    grid: TimeGrid,
    h: np.ndarray,
    horizon_multiple: float = DEFAULT_HORIZON_MULTIPLE,
) -> LoadingResult:
    h = np.asarray(h, dtype=float)
    n_paths = len(network.paths)
    if h.shape != (n_paths, grid.n_bins):
        raise InvalidArgumentError(f"path flow matrix has shape {h.shape}, expected {(n_paths, grid.n_bins)}")
    if not np.all(np.isfinite(h)) or np.any(h < 0):
        raise InvalidArgumentError("departure rates must be finite and nonnegative")

    limit = grid.t0 + horizon_multiple * grid.horizon
    path_links = [[network.link_index[a] for a in p.links] for p in network.paths]
    alpha = [lk.alpha for lk in network.links]
    beta = [lk.beta for lk in network.links]
    link_ids = [lk.id for lk in network.links]
    rec = [_LinkRecorder() for _ in network.links]
    arrival = np.empty((n_paths, grid.n_bins))
    mass = h * grid.dt
    starts = grid.starts

    path_ids = [p.id for p in network.paths]
    # event: (time, kind, link id, path id, path index, bin, position along path);
    # keying on the path id keeps results independent of path list order
    events: list[tuple[float, int, str, str, int, int, int]] = []
    for p, seq in enumerate(path_links):
        first = link_ids[seq[0]]
        for k in range(grid.n_bins):
            events.append((float(starts[k]), _ENTRY, first, path_ids[p], p, k, 0))
    heapq.heapify(events)

    while events:
        t, kind, _, _, p, k, pos = heapq.heappop(events)
        a = path_links[p][pos]
        r = rec[a]
        m = mass[p, k]
        if kind == _ENTRY:
            tau = t + alpha[a] + beta[a] * max(0.0, r.entered - r.exits_at(t))
            if r.issued and tau < r.issued[-1]:
                tau = r.issued[-1]
                r.clamps += 1
            r.entry_t.append(t)
            r.entry_u.append(r.entered)
            r.issued.append(tau)
            r.exit_u.append(r.entered)
            r.entered += m
            if tau > limit:
                raise DivergenceError(
                    f"cohort on path {network.paths[p].id!r} departing at {starts[k]} leaves link "
                    f"{link_ids[a]!r} at {tau}, beyond {limit} ({horizon_multiple}x horizon)"
                )
            heapq.heappush(events, (tau, _EXIT, link_ids[a], path_ids[p], p, k, pos))
        else:
            r.exited += m
            if pos + 1 < len(path_links[p]):
                heapq.heappush(events, (t, _ENTRY, link_ids[path_links[p][pos + 1]], path_ids[p], p, k, pos + 1))
            else:
                arrival[p, k] = t

    links = tuple(r.freeze(lid) for r, lid in zip(rec, link_ids))
    arrival.setflags(write=False)
    return LoadingResult(grid, links, arrival)


def path_delay_field(result: LoadingResult) -> np.ndarray:
    """Delay ``tau_p(t_k) - t_k`` experienced by each departure cohort."""
    return result.arrival_times - result.grid.starts[None, :]
