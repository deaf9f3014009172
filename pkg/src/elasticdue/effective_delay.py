"""Schedule-delay penalty and the effective path delay field."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .discretization import TimeGrid
from .errors import InvalidArgumentError, InvariantViolationError


@dataclass(frozen=True)
class SchedulePenaltySpec:
    """Piecewise-linear arrival penalty around a desired arrival time.

    ``od_desired_arrival`` optionally overrides ``desired_arrival`` for
    individual OD indices.
    """

    desired_arrival: float
    early_coef: float = 0.5
    late_coef: float = 2.0
    od_desired_arrival: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.early_coef < 0 or self.late_coef < 0:
            raise InvalidArgumentError("penalty coefficients must be nonnegative")
        for value in (self.desired_arrival, *self.od_desired_arrival.values()):
            if not np.isfinite(value):
                raise InvalidArgumentError("desired arrival time must be finite")

    def check_grid(self, grid: TimeGrid) -> None:
        for od, value in [(None, self.desired_arrival), *self.od_desired_arrival.items()]:
            if not value < grid.tf:
                who = "" if od is None else f" for OD {od}"
                raise InvalidArgumentError(f"desired arrival time{who} T_A={value} must be < tf={grid.tf}")

    def target_for(self, od_index: int) -> float:
        return self.od_desired_arrival.get(od_index, self.desired_arrival)


def schedule_penalty(spec: SchedulePenaltySpec, deviation):
    """Cost of arriving ``deviation`` time units late (negative means early)."""
    s = np.asarray(deviation, dtype=float)
    out = spec.early_coef * np.maximum(0.0, -s) + spec.late_coef * np.maximum(0.0, s)
    return float(out) if out.ndim == 0 else out


def effective_delay_field(
    delays: np.ndarray,
    spec: SchedulePenaltySpec,
    grid: TimeGrid,
    path_od: np.ndarray | None = None,
) -> np.ndarray:
    """Travel delay plus the schedule penalty at arrival ``t_k + D``.

    ``path_od`` maps rows to OD indices; it is only needed when the penalty
    carries per-OD desired arrival overrides.
    """
    delays = np.asarray(delays, dtype=float)
    if delays.ndim != 2 or delays.shape[1] != grid.n_bins:
        raise InvalidArgumentError(f"delay field has shape {delays.shape}, grid has {grid.n_bins} bins")
    if not np.all(delays > 0):
        p, k = np.argwhere(~(delays > 0))[0]
        raise InvariantViolationError(f"path delay must be strictly positive, got {delays[p, k]} at ({p}, {k})")
    if path_od is None:
        target = np.full((delays.shape[0], 1), spec.desired_arrival)
    else:
        target = np.array([spec.target_for(int(i)) for i in path_od])[:, None]
    arrival = grid.starts[None, :] + delays
    psi = delays + schedule_penalty(spec, arrival - target)
    if not np.all(psi > 0):
        raise InvariantViolationError("effective delay field is not strictly positive")
    return psi
