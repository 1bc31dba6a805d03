"""Uniform 1D finite-volume mesh, immutable cell-averaged states and initial data.

Cell j covers [x_min + j*dx, x_min + (j+1)*dx]; values live at cell centers
x_j = x_min + (j + 1/2)*dx.  States are frozen and carry their grid, so they can
be shared freely across threads and worker processes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform mesh over [x_min, x_max] with n_cells cells."""

    x_min: float
    x_max: float
    n_cells: int

    def __post_init__(self) -> None:
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise ConfigError("grid bounds must be finite")
        if self.x_max <= self.x_min:
            raise ConfigError(f"x_max ({self.x_max}) must exceed x_min ({self.x_min})")
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise ConfigError(f"n_cells must be an integer >= 2, got {self.n_cells}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx

    def compatible_with(self, other: "SpatialGrid") -> bool:
        return (
            self.n_cells == other.n_cells
            and self.x_min == other.x_min
            and self.x_max == other.x_max
        )


class BoundaryKind(Enum):
    """Ghost-cell closure at the domain ends (one ghost cell per side)."""

    ZERO_DIRICHLET = "zero_dirichlet"
    PERIODIC = "periodic"

    def pad(self, values: np.ndarray) -> np.ndarray:
        """Return values extended by one ghost cell on each side."""
        if self is BoundaryKind.ZERO_DIRICHLET:
            return np.concatenate(([0.0], values, [0.0]))
        return np.concatenate((values[-1:], values, values[:1]))

    @classmethod
    def from_name(cls, name: str) -> "BoundaryKind":
        try:
            return cls(name)
        except ValueError:
            raise ConfigError(f"unknown boundary kind {name!r}") from None


@dataclass(frozen=True)
class FieldState:
    """Cell-averaged solution values at one time level.

    `blown_up` marks a diverged state; it is set automatically whenever a
    non-finite entry is present, so finite-valued states are the invariant
    everywhere else.
    """

    grid: SpatialGrid
    values: np.ndarray
    time: float = 0.0
    blown_up: bool = False

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=np.float64)  # copy: never alias caller buffers
        if vals.shape != (self.grid.n_cells,):
            raise ValueError(
                f"expected {self.grid.n_cells} cell values, got shape {vals.shape}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if not bool(np.isfinite(vals).all()):
            object.__setattr__(self, "blown_up", True)

    def with_values(
        self, values, time: float | None = None, blown_up: bool = False
    ) -> "FieldState":
        return FieldState(
            self.grid, values, self.time if time is None else time, blown_up
        )


_IC_KINDS = ("sine_bump", "riemann_step", "constant", "table")


@dataclass(frozen=True)
class InitialCondition:
    """Selector for the initial profile sampled at cell centers.

    Kinds:
        sine_bump          sin(pi * (x - x_min) / L), one arch over the domain
        riemann_step       u_left for x below the domain midpoint, u_right from it on
        constant           the single value everywhere
        table              linear interpolation of sampled (x, u) pairs
    """

    kind: str
    value: float = 0.0
    u_left: float = 0.0
    u_right: float = 0.0
    x_table: tuple = ()
    u_table: tuple = ()

    def __post_init__(self) -> None:
        if self.kind not in _IC_KINDS:
            raise ConfigError(f"unknown initial condition {self.kind!r}")
        if self.kind == "table":
            if len(self.x_table) != len(self.u_table) or len(self.x_table) < 2:
                raise ConfigError("table initial condition needs >= 2 (x, u) pairs")
            if np.any(np.diff(self.x_table) <= 0):
                raise ConfigError("table x samples must be strictly increasing")

    @classmethod
    def sine_bump(cls) -> "InitialCondition":
        return cls("sine_bump")

    @classmethod
    def riemann_step(cls, u_left: float, u_right: float) -> "InitialCondition":
        return cls("riemann_step", u_left=u_left, u_right=u_right)

    @classmethod
    def constant(cls, value: float) -> "InitialCondition":
        return cls("constant", value=value)

    @classmethod
    def table(cls, x, u) -> "InitialCondition":
        return cls("table", x_table=tuple(x), u_table=tuple(u))

    def sample(self, grid: SpatialGrid) -> np.ndarray:
        x = grid.centers
        if self.kind == "sine_bump":
            return np.sin(np.pi * (x - grid.x_min) / grid.length)
        if self.kind == "riemann_step":
            mid = grid.x_min + 0.5 * grid.length
            return np.where(x < mid, self.u_left, self.u_right).astype(np.float64)
        if self.kind == "constant":
            return np.full(grid.n_cells, float(self.value))
        return np.interp(x, self.x_table, self.u_table)


def make_initial_state(grid: SpatialGrid, ic: InitialCondition) -> FieldState:
    """Sample the selected profile at cell centers; time starts at 0."""
    return FieldState(grid, ic.sample(grid), time=0.0)


def l1_distance(a: FieldState, b: FieldState) -> float:
    """Mean of |a_j - b_j| over cells (the spatial part of the seed-averaged errors)."""
    if not a.grid.compatible_with(b.grid):
        raise ValueError("states live on different grids")
    return float(np.mean(np.abs(a.values - b.values)))
