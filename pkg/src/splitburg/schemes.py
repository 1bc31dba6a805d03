"""Time integrators composing transport and noise for the stochastic Burgers
equation dc + f(c)_x dt = sigma(c) dW.

Non-iterative one-step maps:

    ab   transport over dt, then the noise substep with the full increment
    aba  half transport, noise substep (full increment), half transport
    bab  half-increment noise, full transport, second half-increment noise

Iterative one-step maps:

    iter_after             fixed-point sweeps of the Milstein update around the
                           transported state; sweep i re-evaluates the noise
                           amplitude at iterate i-1 (sweep 1 is exactly the
                           one-shot Milstein-composed step)
    iter_before            variation-of-constants form: the transport propagator
                           is also applied to the noise-amplitude fields; the
                           second iterate refreshes the linearization state from
                           an aba companion solution (whole step) or from an aba
                           half-step and the two half increments (half steps)
    iter_before_trapezoid  averaged-amplitude variant: after the first
                           variation-of-constants pass, subsequent iterates use
                           sigma evaluated at the midpoint of the previous
                           iterate and the start state

`integrate` drives any of these along a reproducible noise path, with either a
fixed step size or a stability-bound-governed one, truncating on blow-up.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .burgers import CflPolicy, FluxFunction, _eo_step, cfl_dt
from .errors import CflViolation, ConfigError
from .grid import BoundaryKind, FieldState
from .noise import NoiseAmplitude, NoisePath

_SCHEMES = ("ab", "aba", "bab", "iter_after", "iter_before", "iter_before_trapezoid")
_SUBSTEPS = ("em", "milstein")
_INNER_MODES = ("whole_step", "half_steps")

#: hard cap on fixed-point sweeps
MAX_ITERATIONS = 8

DEFAULT_BLOWUP_THRESHOLD = 1e6


class ContractionWarning(RuntimeWarning):
    """Iterate residuals stopped decreasing; dt likely exceeds the contraction range."""


@dataclass(frozen=True)
class SchemeConfig:
    """Everything a one-step map needs besides the state and the increments."""

    scheme: str
    flux: FluxFunction = FluxFunction()
    sigma: NoiseAmplitude = NoiseAmplitude()
    bc: BoundaryKind = BoundaryKind.ZERO_DIRICHLET
    iterations: int = 2
    stochastic_substep: str = "milstein"
    inner_mode: str = "whole_step"
    blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD

    def __post_init__(self) -> None:
        if self.scheme not in _SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.stochastic_substep not in _SUBSTEPS:
            raise ConfigError(f"unknown stochastic substep {self.stochastic_substep!r}")
        if self.inner_mode not in _INNER_MODES:
            raise ConfigError(f"unknown inner mode {self.inner_mode!r}")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ConfigError(f"iterations must be a positive integer, got {self.iterations}")
        if self.iterations > MAX_ITERATIONS:
            raise ConfigError(f"iterations capped at {MAX_ITERATIONS}, got {self.iterations}")
        if self.scheme == "iter_before" and self.iterations not in (1, 2):
            raise ConfigError("iter_before supports iterations 1 or 2")
        if self.scheme == "iter_before_trapezoid" and self.iterations < 2:
            raise ConfigError("iter_before_trapezoid needs iterations >= 2")
        if self.blowup_threshold <= 0.0:
            raise ConfigError(f"blowup_threshold must be positive, got {self.blowup_threshold}")

    @property
    def is_iterative(self) -> bool:
        return self.scheme in ("iter_after", "iter_before", "iter_before_trapezoid")

    @property
    def needs_half_increments(self) -> bool:
        return self.scheme == "bab" or (
            self.scheme == "iter_before" and self.inner_mode == "half_steps"
        )

    @property
    def tracks_companion(self) -> bool:
        """Whole-step second iterates carry an aba solution alongside."""
        return (
            self.scheme == "iter_before"
            and self.inner_mode == "whole_step"
            and self.iterations == 2
        )


@dataclass(frozen=True)
class StepRecord:
    """Outcome of one step: the new state, what was consumed, and the
    iterate residuals (one entry per sweep beyond the first; empty for
    non-iterative schemes)."""

    state_after: FieldState
    dt_used: float
    dw_used: tuple[float, ...]
    iterate_residuals: tuple[float, ...] = ()


@dataclass(frozen=True)
class StepNoise:
    """Increments one step may consume: the full-interval one, and the two
    half-interval ones where the scheme needs them."""

    full: float
    first_half: float | None = None
    second_half: float | None = None


def _stoch(values: np.ndarray, sigma: NoiseAmplitude, dw: float, dt: float,
           kind: str) -> np.ndarray:
    if kind == "em":
        return values + sigma(values) * dw
    amp = sigma(values)
    return values + amp * dw + 0.5 * amp * sigma.deriv(values) * (dw * dw - dt)


def _mean_abs(diff: np.ndarray) -> float:
    return float(np.mean(np.abs(diff)))


def _check_contraction(residuals: list[float]) -> None:
    for a, b in zip(residuals, residuals[1:]):
        if b >= a and b > 0.0:
            warnings.warn(
                "iterate residuals are not decreasing; the step size likely "
                "exceeds the contraction range",
                ContractionWarning,
                stacklevel=3,
            )
            return


def ab_step(state: FieldState, dt: float, dw: float, cfg: SchemeConfig) -> StepRecord:
    """Transport over dt, then the configured noise substep with increment dw."""
    v = _eo_step(state.values, dt, cfg.flux, cfg.bc, state.grid.dx)
    v = _stoch(v, cfg.sigma, dw, dt, cfg.stochastic_substep)
    return StepRecord(state.with_values(v, time=state.time + dt), dt, (dw,))


def aba_step(state: FieldState, dt: float, dw: float, cfg: SchemeConfig) -> StepRecord:
    """Symmetrized transport around a single noise substep consuming the
    full-interval increment."""
    h = 0.5 * dt
    dx = state.grid.dx
    v = _eo_step(state.values, h, cfg.flux, cfg.bc, dx)
    v = _stoch(v, cfg.sigma, dw, dt, cfg.stochastic_substep)
    v = _eo_step(v, h, cfg.flux, cfg.bc, dx)
    return StepRecord(state.with_values(v, time=state.time + dt), dt, (dw,))


def bab_step(state: FieldState, dt: float, dw_first: float, dw_second: float,
             cfg: SchemeConfig) -> StepRecord:
    """Symmetrized noise around a full transport step; the two noise substeps
    consume the genuine increments of the two half intervals."""
    h = 0.5 * dt
    dx = state.grid.dx
    v = _stoch(state.values, cfg.sigma, dw_first, h, cfg.stochastic_substep)
    v = _eo_step(v, dt, cfg.flux, cfg.bc, dx)
    v = _stoch(v, cfg.sigma, dw_second, h, cfg.stochastic_substep)
    return StepRecord(
        state.with_values(v, time=state.time + dt), dt, (dw_first, dw_second)
    )


def iter_after_step(state: FieldState, dt: float, dw: float,
                    cfg: SchemeConfig) -> StepRecord:
    """Fixed-point sweeps of the Milstein update around the transported state.

    Sweep i:  c_i = T(dt) c  +  sigma(c_{i-1}) dW
                           +  (1/2) sigma(c_{i-1}) sigma'(c_{i-1}) (dW^2 - dt)
    with c_0 = c, so one sweep is exactly the one-shot Milstein-composed step.
    The transported state is computed once; only the noise linearization is
    refreshed, which is what contracts (or fails to, above the admissible dt).
    """
    base = _eo_step(state.values, dt, cfg.flux, cfg.bc, state.grid.dx)
    lin = state.values
    residuals: list[float] = []
    for sweep in range(1, cfg.iterations + 1):
        amp = cfg.sigma(lin)
        nxt = base + amp * dw + 0.5 * amp * cfg.sigma.deriv(lin) * (dw * dw - dt)
        if sweep >= 2:
            residuals.append(_mean_abs(nxt - lin))
        lin = nxt
    _check_contraction(residuals)
    return StepRecord(
        state.with_values(lin, time=state.time + dt), dt, (dw,), tuple(residuals)
    )


def _voc_milstein(values: np.ndarray, dw: float, dt: float, cfg: SchemeConfig,
                  dx: float) -> np.ndarray:
    """Variation-of-constants Milstein form built from one linearization field:
    propagate the field, the amplitude, and (twice) the correction product."""
    def prop(v: np.ndarray) -> np.ndarray:
        return _eo_step(v, dt, cfg.flux, cfg.bc, dx)

    amp = np.asarray(cfg.sigma(values), dtype=np.float64)
    corr = amp * np.asarray(cfg.sigma.deriv(values), dtype=np.float64)
    return prop(values) + prop(amp) * dw + 0.5 * prop(prop(corr)) * (dw * dw - dt)


def iter_before_step(state: FieldState, dt: float, noise: StepNoise,
                     cfg: SchemeConfig, aba_state: FieldState | None = None) -> StepRecord:
    """One or two variation-of-constants iterates.

    iterations=1: the Milstein form linearized at the start state.
    iterations=2, whole_step: the same form re-evaluated from the aba
        companion state carried alongside the trajectory (the start state on
        the first step or standalone use).
    iterations=2, half_steps: the two-half-interval sum, pairing the start
        state with the first half increment and an aba half-step solution with
        the second.
    """
    u = state.values
    dx = state.grid.dx
    c1 = _voc_milstein(u, noise.full, dt, cfg, dx)

    if cfg.iterations == 1:
        after, residuals = c1, ()
    elif cfg.inner_mode == "whole_step":
        companion = state if aba_state is None else aba_state
        c2 = _voc_milstein(companion.values, noise.full, dt, cfg, dx)
        after, residuals = c2, (_mean_abs(c2 - c1),)
    else:
        if noise.first_half is None or noise.second_half is None:
            raise ConfigError("half_steps mode needs both half-interval increments")
        h = 0.5 * dt
        dw1, dw2 = noise.first_half, noise.second_half
        mid = aba_step(state, h, dw1, cfg).state_after.values

        def prop(v: np.ndarray) -> np.ndarray:
            return _eo_step(v, h, cfg.flux, cfg.bc, dx)

        amp_u = np.asarray(cfg.sigma(u), dtype=np.float64)
        amp_m = np.asarray(cfg.sigma(mid), dtype=np.float64)
        corr_u = amp_u * np.asarray(cfg.sigma.deriv(u), dtype=np.float64)
        corr_m = amp_m * np.asarray(cfg.sigma.deriv(mid), dtype=np.float64)
        c2 = (
            prop(u) + prop(mid)
            + prop(amp_u) * dw1 + prop(amp_m) * dw2
            + 0.5 * prop(prop(corr_u)) * (dw1 * dw1 - h)
            + 0.5 * prop(prop(corr_m)) * (dw2 * dw2 - h)
        )
        after, residuals = c2, (_mean_abs(c2 - c1),)

    dw_used = (
        (noise.full,)
        if cfg.inner_mode == "whole_step" or cfg.iterations == 1
        else (noise.first_half, noise.second_half)
    )
    return StepRecord(
        state.with_values(after, time=state.time + dt), dt, dw_used, residuals
    )


def iter_before_trapezoid_step(state: FieldState, dt: float, dw: float,
                               cfg: SchemeConfig) -> StepRecord:
    """Averaged-amplitude iterates on top of one variation-of-constants pass.

    Iterate i (i >= 2):
        c_i = T(dt) c  -  (1/2) sigma(c_1)^2 dt  +  sigma((c_{i-1} + c) / 2) dW
    with the quadratic term frozen at the first pass c_1.
    """
    u = state.values
    dx = state.grid.dx
    base = _eo_step(u, dt, cfg.flux, cfg.bc, dx)
    c1 = _voc_milstein(u, dw, dt, cfg, dx)
    quad = 0.5 * np.asarray(cfg.sigma(c1), dtype=np.float64) ** 2 * dt

    prev = c1
    residuals: list[float] = []
    for _ in range(2, cfg.iterations + 1):
        nxt = base - quad + cfg.sigma(0.5 * (prev + u)) * dw
        residuals.append(_mean_abs(nxt - prev))
        prev = nxt
    _check_contraction(residuals)
    return StepRecord(
        state.with_values(prev, time=state.time + dt), dt, (dw,), tuple(residuals)
    )


def detect_blowup(state: FieldState,
                  threshold: float = DEFAULT_BLOWUP_THRESHOLD) -> bool:
    """True when the state is flagged, non-finite, or any |value| exceeds the
    threshold (strictly)."""
    if threshold <= 0.0:
        raise ConfigError(f"threshold must be positive, got {threshold}")
    if state.blown_up:
        return True
    return bool(np.any(np.abs(state.values) > threshold))


@dataclass(frozen=True)
class Trajectory:
    """Ordered step records of one integration; truncated on blow-up."""

    initial_state: FieldState
    records: tuple[StepRecord, ...]
    blowup_time: float | None = None
    blowup_reason: str | None = None

    @property
    def final_state(self) -> FieldState:
        return self.records[-1].state_after if self.records else self.initial_state

    @property
    def blown_up(self) -> bool:
        return self.blowup_time is not None

    @property
    def n_steps(self) -> int:
        return len(self.records)


def _one_step(state: FieldState, step_dt: float, cfg: SchemeConfig,
              path: NoisePath, k: int, m: int,
              companion: FieldState | None) -> StepRecord:
    dw_full = path.increment_over(k, k + m)
    if cfg.scheme == "ab":
        return ab_step(state, step_dt, dw_full, cfg)
    if cfg.scheme == "aba":
        return aba_step(state, step_dt, dw_full, cfg)
    if cfg.scheme == "bab":
        half = m // 2
        dw1 = path.increment_over(k, k + half)
        dw2 = path.increment_over(k + half, k + m)
        return bab_step(state, step_dt, dw1, dw2, cfg)
    if cfg.scheme == "iter_after":
        return iter_after_step(state, step_dt, dw_full, cfg)
    if cfg.scheme == "iter_before":
        if cfg.inner_mode == "half_steps":
            half = m // 2
            noise = StepNoise(
                dw_full,
                path.increment_over(k, k + half),
                path.increment_over(k + half, k + m),
            )
        else:
            noise = StepNoise(dw_full)
        return iter_before_step(state, step_dt, noise, cfg, aba_state=companion)
    return iter_before_trapezoid_step(state, step_dt, dw_full, cfg)


def integrate(c0: FieldState, t_end: float, cfg: SchemeConfig, path: NoisePath,
              dt: float | None = None, cfl: CflPolicy | None = None) -> Trajectory:
    """Drive one trajectory from c0 to t_end along the given noise path.

    Exactly one of `dt` (fixed step, must be a path-aligned multiple of the
    fine resolution dividing t_end) or `cfl` (stability-governed step, snapped
    down to the path resolution) selects the stepping mode.  Blow-up (by
    threshold, non-finite values, a rejected explicit step, or an admissible
    step below the path resolution) truncates the trajectory and is flagged
    with its time and reason.
    """
    if (dt is None) == (cfl is None):
        raise ConfigError("provide exactly one of dt (fixed) or cfl (governed)")
    if t_end < 0.0:
        raise ConfigError(f"t_end must be non-negative, got {t_end}")
    fine = path.dt_fine
    n_total = round(t_end / fine)
    if abs(n_total * fine - t_end) > 1e-9 * max(t_end, fine):
        raise ConfigError(f"t_end {t_end} is not a multiple of the path resolution {fine}")
    if n_total > path.n_steps:
        raise ConfigError(f"path covers only [0, {path.t_end}], t_end {t_end} is beyond it")
    quantum = 2 if cfg.needs_half_increments else 1
    if n_total % quantum:
        raise ConfigError("t_end must cover a whole number of half-interval pairs")

    m_fixed = None
    if dt is not None:
        m_fixed = round(dt / fine)
        if m_fixed < 1 or abs(m_fixed * fine - dt) > 1e-9 * dt:
            raise ConfigError(f"dt {dt} is not a multiple of the path resolution {fine}")
        if m_fixed % quantum:
            raise ConfigError(f"dt {dt} cannot be split into aligned half intervals")
        if n_total % m_fixed:
            raise ConfigError(f"t_end {t_end} is not a multiple of dt {dt}")

    state = c0
    companion = c0 if cfg.tracks_companion else None
    records: list[StepRecord] = []
    blowup_time: float | None = None
    blowup_reason: str | None = None
    k = 0
    while k < n_total:
        if m_fixed is not None:
            m = m_fixed
        else:
            bound = cfl_dt(
                state, cfg.sigma, cfl, flux=cfg.flux,
                t_remaining=(n_total - k) * fine,
            )
            m = int(bound / fine * (1.0 + 1e-12))
            m -= m % quantum
            m = min(m, n_total - k)
            if m <= 0:
                blowup_time = state.time
                blowup_reason = "dt_underflow"
                break
        step_dt = m * fine
        try:
            rec = _one_step(state, step_dt, cfg, path, k, m, companion)
            if companion is not None:
                dw_full = path.increment_over(k, k + m)
                companion = aba_step(companion, step_dt, dw_full, cfg).state_after
        except CflViolation:
            blowup_time = state.time
            blowup_reason = "cfl_rejected"
            break
        records.append(rec)
        state = rec.state_after
        k += m
        if detect_blowup(state, cfg.blowup_threshold):
            blowup_time = state.time
            blowup_reason = "non_finite" if state.blown_up else "threshold"
            break
    return Trajectory(c0, tuple(records), blowup_time, blowup_reason)
