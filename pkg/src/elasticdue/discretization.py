"""Uniform time grid and piecewise-constant trajectories on it."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    tf: float
    n_bins: int
    dt: float = field(init=False)

    def __post_init__(self):
        if not (np.isfinite(self.t0) and np.isfinite(self.tf)) or self.tf <= self.t0:
            raise InvalidArgumentError(f"horizon must satisfy tf > t0, got [{self.t0}, {self.tf}]")
        if int(self.n_bins) != self.n_bins or self.n_bins < 1:
            raise InvalidArgumentError(f"n_bins must be a positive integer, got {self.n_bins}")
        object.__setattr__(self, "n_bins", int(self.n_bins))
        object.__setattr__(self, "dt", (self.tf - self.t0) / self.n_bins)

    @property
    def horizon(self) -> float:
        return self.tf - self.t0

    @property
    def starts(self) -> np.ndarray:
        """Left endpoints t_k of every bin."""
        return self.t0 + self.dt * np.arange(self.n_bins)

    @property
    def edges(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_bins + 1)

    def refine(self, factor: int = 2) -> TimeGrid:
        return TimeGrid(self.t0, self.tf, self.n_bins * factor)


def make_grid(t0: float, tf: float, n_bins: int) -> TimeGrid:
    return TimeGrid(float(t0), float(tf), n_bins)


@dataclass(frozen=True)
class BinTrajectory:
    """Bin-wise constant rate or cost; ``values[k]`` holds on bin k."""

    values: np.ndarray
    grid: TimeGrid

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.shape[0] != self.grid.n_bins:
            raise InvalidArgumentError(
                f"trajectory has shape {values.shape}, grid expects ({self.grid.n_bins},)"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def integrate_left_riemann(traj: BinTrajectory) -> float:
    return float(np.sum(traj.values) * traj.grid.dt)


def bin_integrals(values: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Row-wise left Riemann integrals of a ``(..., n_bins)`` array."""
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != grid.n_bins:
        raise InvalidArgumentError(
            f"last axis has length {values.shape[-1]}, grid expects {grid.n_bins}"
        )
    return values.sum(axis=-1) * grid.dt
