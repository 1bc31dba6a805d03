"""Explicit finite-volume transport for the inviscid Burgers equation.

One step of u_t + f(u)_x = 0 on a uniform mesh with the Engquist-Osher
interface flux, plus step-size recommendations for the explicit stability
bounds (deterministic wave-speed bound, noise-amplitude bound, and their
combination).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import CflViolation, ConfigError
from .grid import BoundaryKind, FieldState

#: cells with |u| at or below this are excluded from state-dependent bounds;
#: dt_max governs when every cell is excluded
VELOCITY_FLOOR = 1e-12

_FLUX_KINDS = ("burgers_half", "burgers_square", "zero")


@dataclass(frozen=True)
class FluxFunction:
    """Convex flux with minimum at 0 (the form the Engquist-Osher split needs).

    burgers_half:   f(u) = u^2 / 2   (advection speed f'(u) = u)
    burgers_square: f(u) = u^2       (advection speed f'(u) = 2u)
    zero:           f(u) = 0         (transport switched off; test hook)
    """

    kind: str = "burgers_half"

    def __post_init__(self) -> None:
        if self.kind not in _FLUX_KINDS:
            raise ConfigError(f"unknown flux kind {self.kind!r}")

    def __call__(self, u):
        if self.kind == "burgers_half":
            return 0.5 * u * u
        if self.kind == "burgers_square":
            return u * u
        return np.zeros_like(np.asarray(u, dtype=np.float64))

    def deriv(self, u):
        if self.kind == "burgers_half":
            return u
        if self.kind == "burgers_square":
            return 2.0 * u
        return np.zeros_like(np.asarray(u, dtype=np.float64))

    def max_speed(self, u) -> float:
        """Largest |f'(u)| over the given values."""
        d = np.abs(self.deriv(u))
        return float(np.max(d)) if np.size(d) else 0.0


def engquist_osher_flux(u_left, u_right, flux: FluxFunction = FluxFunction()):
    """Interface flux F(a, b) = f(max(a, 0)) + f(min(b, 0)).

    Closed form of the Engquist-Osher flux for a convex flux whose minimum
    sits at 0; accepts scalars or arrays elementwise.
    """
    return flux(np.maximum(u_left, 0.0)) + flux(np.minimum(u_right, 0.0))


def _eo_step(values: np.ndarray, dt: float, flux: FluxFunction,
             bc: BoundaryKind, dx: float) -> np.ndarray:
    """One conservative update of raw cell values; asserts the wave-speed bound."""
    speed = flux.max_speed(values)
    if speed > 0.0:
        admissible = dx / speed
        if dt > admissible * (1.0 + 1e-12):
            raise CflViolation(dt, admissible)
    with np.errstate(over="ignore", invalid="ignore"):
        padded = bc.pad(values)
        interface = engquist_osher_flux(padded[:-1], padded[1:], flux)
        return values - (dt / dx) * (interface[1:] - interface[:-1])


def scl_step(state: FieldState, dt: float, flux: FluxFunction,
             bc: BoundaryKind) -> FieldState:
    """Advance a state by one explicit conservation-law step of size dt.

    Rejects dt above the deterministic stability bound dx / max|f'(u)| with a
    CflViolation naming the admissible step.
    """
    if dt <= 0.0:
        raise ConfigError(f"dt must be positive, got {dt}")
    new = _eo_step(state.values, dt, flux, bc, state.grid.dx)
    return state.with_values(new, time=state.time + dt)


class CflMode(Enum):
    DETERMINISTIC_ONLY = "deterministic_only"
    STOCHASTIC_ONLY = "stochastic_only"
    COMBINED = "combined"

    @classmethod
    def from_name(cls, name: str) -> "CflMode":
        try:
            return cls(name)
        except ValueError:
            raise ConfigError(f"unknown CFL mode {name!r}") from None


@dataclass(frozen=True)
class CflPolicy:
    """Which stability bound to apply and how much headroom to keep.

    xi_bound is the number of increment standard deviations the stochastic
    bounds guard against; dt_max caps the recommendation and is the fallback
    when the state carries no usable information (all cells floored).
    """

    mode: CflMode = CflMode.COMBINED
    safety: float = 0.9
    xi_bound: float = 3.0
    dt_max: float | None = None

    def __post_init__(self) -> None:
        if not (0.0 < self.safety <= 1.0):
            raise ConfigError(f"safety must lie in (0, 1], got {self.safety}")
        if self.xi_bound <= 0.0:
            raise ConfigError(f"xi_bound must be positive, got {self.xi_bound}")
        if self.dt_max is not None and self.dt_max <= 0.0:
            raise ConfigError(f"dt_max must be positive, got {self.dt_max}")


def cfl_dt(state: FieldState, sigma, policy: CflPolicy,
           flux: FluxFunction | None = None,
           t_remaining: float | None = None) -> float:
    """Recommended step size for the policy's stability bound.

    deterministic_only:  safety * dx / max|u|
    stochastic_only:     safety * min_j u_j^2 / (sigma(u_j)^2 * xi^2)
    combined:            safety * min_j (1 / (|u_j|/dx + |sigma(u_j)|*xi/|u_j|))^2

    With a flux supplied the deterministic speed is max|f'(u)| instead of
    max|u| (identical for the default flux).  Cells with |u| below the
    velocity floor are excluded; when nothing survives, dt_max is returned
    unscaled.  The result never exceeds dt_max or t_remaining.
    """
    u = state.values
    dx = state.grid.dx
    absu = np.abs(u)
    mask = absu > VELOCITY_FLOOR
    xi = policy.xi_bound
    bound = math.inf

    if policy.mode is CflMode.DETERMINISTIC_ONLY:
        speed = flux.max_speed(u) if flux is not None else float(np.max(absu))
        if speed > VELOCITY_FLOOR:
            bound = dx / speed
    elif policy.mode is CflMode.STOCHASTIC_ONLY:
        if mask.any():
            amp = np.abs(np.asarray(sigma(u[mask]), dtype=np.float64))
            with np.errstate(divide="ignore"):
                cell = np.where(amp > 0.0, (absu[mask] / (amp * xi)) ** 2, math.inf)
            bound = float(np.min(cell))
    else:
        if mask.any():
            au = absu[mask]
            amp = np.abs(np.asarray(sigma(u[mask]), dtype=np.float64))
            cell = (1.0 / (au / dx + amp * xi / au)) ** 2
            bound = float(np.min(cell))

    if math.isinf(bound):
        if policy.dt_max is None:
            raise ConfigError(
                "state gives no usable stability bound; set dt_max for the fallback"
            )
        dt = policy.dt_max
    else:
        dt = policy.safety * bound
        if policy.dt_max is not None:
            dt = min(dt, policy.dt_max)

    if t_remaining is not None:
        if t_remaining <= 0.0:
            raise ConfigError(f"t_remaining must be positive, got {t_remaining}")
        dt = min(dt, t_remaining)
    if dt <= 0.0:
        raise ConfigError("stability bound collapsed to a non-positive step")
    return dt
