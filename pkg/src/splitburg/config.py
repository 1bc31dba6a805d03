"""Run configuration: a strict, picklable description of an ensemble study.

The document is YAML (JSON-style flow syntax also parses).  Unknown keys are
rejected by name at every level, numeric fields must parse as numbers (plain
scientific notation like `1e6` is fine even though YAML 1.1 tokenizes it as a
string), and the dt ladder, path resolution, seeds and horizon are
cross-checked here so every downstream step can assume an aligned, well-formed
study.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .burgers import CflMode, CflPolicy, FluxFunction
from .errors import ConfigError
from .grid import (
    BoundaryKind,
    FieldState,
    InitialCondition,
    SpatialGrid,
    make_initial_state,
)
from .noise import NoiseAmplitude
from .schemes import MAX_ITERATIONS, SchemeConfig, _SCHEMES

_ITERATIVE = ("iter_after", "iter_before", "iter_before_trapezoid")

DEFAULT_SEED_BASE = 1
DEFAULT_SEED_COUNT = 50


@dataclass(frozen=True)
class SchemeSpec:
    """One scheme entry of the study matrix; iterative schemes expand to one
    cell per iteration count."""

    name: str
    iterations: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.name not in _SCHEMES:
            raise ConfigError(f"unknown scheme {self.name!r}")
        if self.name not in _ITERATIVE:
            if self.iterations:
                raise ConfigError(
                    f"scheme {self.name!r} takes no iteration counts"
                )
            return
        iters = self.iterations or (2,)
        object.__setattr__(self, "iterations", tuple(iters))
        for i in self.iterations:
            if int(i) != i or not (1 <= i <= MAX_ITERATIONS):
                raise ConfigError(
                    f"iteration counts must be integers in 1..{MAX_ITERATIONS}, got {i}"
                )
        if len(set(self.iterations)) != len(self.iterations):
            raise ConfigError(f"duplicate iteration counts for {self.name!r}")

    def cells(self) -> tuple[tuple[str, int], ...]:
        if self.name in _ITERATIVE:
            return tuple((self.name, int(i)) for i in self.iterations)
        return ((self.name, 0),)


def _is_multiple(value: float, base: float) -> bool:
    k = round(value / base)
    return k >= 1 and abs(k * base - value) <= 1e-9 * max(value, base)


@dataclass(frozen=True)
class RunConfig:
    """Plain-data study description; builder methods make the runtime objects."""

    x_min: float = 0.0
    x_max: float = 1.0
    n_cells: int = 100
    ic: InitialCondition = field(default_factory=InitialCondition.sine_bump)
    flux_kind: str = "burgers_half"
    boundary: str = "zero_dirichlet"
    noise_kind: str = "linear"
    lam: float = 0.5
    schemes: tuple[SchemeSpec, ...] = (SchemeSpec("ab"),)
    dt_ladder: tuple[float, ...] = (0.005,)
    dt_fine: float = 0.0025
    t_end: float = 0.1
    seeds: tuple[int, ...] = tuple(range(DEFAULT_SEED_BASE, DEFAULT_SEED_BASE + DEFAULT_SEED_COUNT))
    cfl_mode: str = "combined"
    safety: float = 0.9
    xi_bound: float = 3.0
    dt_max: float | None = None
    adaptive_dt: bool = False
    blowup_threshold: float = 1e6
    stochastic_substep: str = "milstein"
    inner_mode: str = "whole_step"
    output_dir: str = "results"

    def __post_init__(self) -> None:
        # constructing the runtime objects validates the enumerated kinds
        self.make_grid()
        self.make_flux()
        self.make_sigma()
        self.make_bc()
        self.make_policy()
        if not self.schemes:
            raise ConfigError("at least one scheme is required")
        for name, iters in self.cells():
            self.make_scheme(name, iters)

        if not self.dt_ladder:
            raise ConfigError("dt ladder must not be empty")
        for dt in self.dt_ladder:
            if dt <= 0.0:
                raise ConfigError(f"dt ladder entries must be positive, got {dt}")
        if any(b >= a for a, b in zip(self.dt_ladder, self.dt_ladder[1:])):
            raise ConfigError("dt ladder must be strictly decreasing")
        finest = self.dt_ladder[-1]
        for dt in self.dt_ladder:
            if not _is_multiple(dt, finest):
                raise ConfigError(
                    f"dt ladder entry {dt} is not an integer multiple of the finest {finest}"
                )
        if self.dt_fine <= 0.0:
            raise ConfigError(f"dt_fine must be positive, got {self.dt_fine}")
        quantum = 2 * self.dt_fine if self._needs_half_increments() else self.dt_fine
        for dt in self.dt_ladder:
            if not _is_multiple(dt, quantum):
                raise ConfigError(
                    f"dt ladder entry {dt} is not path-aligned: it must be an "
                    f"integer multiple of {quantum:g} "
                    f"({'2 * ' if quantum != self.dt_fine else ''}dt_fine)"
                )
        if self.t_end <= 0.0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}")
        for dt in self.dt_ladder:
            if not _is_multiple(self.t_end, dt):
                raise ConfigError(
                    f"t_end {self.t_end} is not an integer multiple of dt {dt}"
                )

        if not self.seeds:
            raise ConfigError("at least one seed is required")
        for s in self.seeds:
            if int(s) != s or s < 0:
                raise ConfigError(f"seeds must be non-negative integers, got {s}")
        if len(set(self.seeds)) != len(self.seeds):
            dupes = sorted({s for s in self.seeds if list(self.seeds).count(s) > 1})
            raise ConfigError(f"duplicate seeds {dupes}")

    def _needs_half_increments(self) -> bool:
        return any(
            name == "bab" or (name == "iter_before" and self.inner_mode == "half_steps")
            for name, _ in self.cells()
        )

    def cells(self) -> tuple[tuple[str, int], ...]:
        out: list[tuple[str, int]] = []
        for spec in self.schemes:
            out.extend(spec.cells())
        return tuple(out)

    def make_grid(self) -> SpatialGrid:
        return SpatialGrid(self.x_min, self.x_max, self.n_cells)

    def make_state(self) -> FieldState:
        return make_initial_state(self.make_grid(), self.ic)

    def make_flux(self) -> FluxFunction:
        return FluxFunction(self.flux_kind)

    def make_sigma(self) -> NoiseAmplitude:
        return NoiseAmplitude(self.noise_kind, self.lam)

    def make_bc(self) -> BoundaryKind:
        return BoundaryKind.from_name(self.boundary)

    def make_policy(self, dt_max: float | None = None) -> CflPolicy:
        cap = dt_max if dt_max is not None else self.dt_max
        return CflPolicy(
            CflMode.from_name(self.cfl_mode), self.safety, self.xi_bound, cap
        )

    def make_scheme(self, name: str, iterations: int) -> SchemeConfig:
        return SchemeConfig(
            scheme=name,
            flux=self.make_flux(),
            sigma=self.make_sigma(),
            bc=self.make_bc(),
            iterations=max(iterations, 1),
            stochastic_substep=self.stochastic_substep,
            inner_mode=self.inner_mode,
            blowup_threshold=self.blowup_threshold,
        )


def _reject_unknown(section: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {where}")


def _as_float(value, name: str) -> float:
    # YAML 1.1 reads unsigned exponents ("1e6") as strings; coerce those
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"{name} must be a number, got {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def _as_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return value


def _as_bool(value, name: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{name} must be true or false, got {value!r}")
    return value


def _as_str(value, name: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{name} must be a string, got {value!r}")
    return value


def _parse_ic(section) -> InitialCondition:
    if not isinstance(section, dict):
        raise ConfigError("initial_condition must be a mapping with a 'kind'")
    kind = _as_str(section.get("kind", ""), "initial_condition.kind")
    if kind == "sine_bump":
        _reject_unknown(section, {"kind"}, "initial_condition")
        return InitialCondition.sine_bump()
    if kind == "riemann_step":
        _reject_unknown(section, {"kind", "u_left", "u_right"}, "initial_condition")
        return InitialCondition.riemann_step(
            _as_float(section.get("u_left", 1.0), "u_left"),
            _as_float(section.get("u_right", 0.0), "u_right"),
        )
    if kind == "constant":
        _reject_unknown(section, {"kind", "value"}, "initial_condition")
        return InitialCondition.constant(_as_float(section.get("value", 0.0), "value"))
    if kind == "table":
        _reject_unknown(section, {"kind", "x", "values"}, "initial_condition")
        xs = section.get("x")
        us = section.get("values")
        if not isinstance(xs, list) or not isinstance(us, list):
            raise ConfigError("table initial_condition needs 'x' and 'values' lists")
        return InitialCondition.table(
            [_as_float(v, "initial_condition.x") for v in xs],
            [_as_float(v, "initial_condition.values") for v in us],
        )
    raise ConfigError(f"unknown initial condition {kind!r}")


def _parse_schemes(section) -> tuple[SchemeSpec, ...]:
    if not isinstance(section, list) or not section:
        raise ConfigError("schemes must be a non-empty list")
    specs = []
    for entry in section:
        if isinstance(entry, str):
            specs.append(SchemeSpec(entry))
            continue
        if not isinstance(entry, dict):
            raise ConfigError(f"scheme entry must be a name or mapping, got {entry!r}")
        _reject_unknown(entry, {"name", "iterations"}, "schemes entry")
        name = _as_str(entry.get("name", ""), "schemes.name")
        iters = entry.get("iterations", [])
        if isinstance(iters, int):
            iters = [iters]
        if not isinstance(iters, list):
            raise ConfigError("schemes.iterations must be an integer or a list")
        specs.append(
            SchemeSpec(name, tuple(_as_int(i, "schemes.iterations") for i in iters))
        )
    return tuple(specs)


def _parse_ladder(section) -> tuple[float, ...]:
    if isinstance(section, list):
        if not section:
            raise ConfigError("dt_ladder must not be empty")
        return tuple(_as_float(v, "dt_ladder") for v in section)
    if isinstance(section, dict):
        _reject_unknown(section, {"base", "levels"}, "dt_ladder")
        base = _as_float(section.get("base", 0.0), "dt_ladder.base")
        levels = _as_int(section.get("levels", 1), "dt_ladder.levels")
        if levels < 1:
            raise ConfigError(f"dt_ladder.levels must be >= 1, got {levels}")
        return tuple(base / 2**k for k in range(levels))
    raise ConfigError("dt_ladder must be a list or a {base, levels} mapping")


def _parse_seeds(section) -> tuple[int, ...]:
    if isinstance(section, list):
        return tuple(_as_int(s, "seeds") for s in section)
    if isinstance(section, dict):
        if "list" in section:
            _reject_unknown(section, {"list"}, "seeds")
            entries = section["list"]
            if not isinstance(entries, list):
                raise ConfigError("seeds.list must be a list")
            return tuple(_as_int(s, "seeds.list") for s in entries)
        _reject_unknown(section, {"base", "count"}, "seeds")
        base = _as_int(section.get("base", DEFAULT_SEED_BASE), "seeds.base")
        count = _as_int(section.get("count", DEFAULT_SEED_COUNT), "seeds.count")
        if count < 1:
            raise ConfigError(f"seeds.count must be >= 1, got {count}")
        return tuple(range(base, base + count))
    raise ConfigError("seeds must be a list or a {base, count} / {list} mapping")


_TOP_KEYS = {
    "grid", "initial_condition", "flux", "boundary", "noise", "schemes",
    "dt_ladder", "dt_fine", "t_end", "seeds", "cfl", "adaptive_dt",
    "blowup_threshold", "stochastic_substep", "inner_mode", "output_dir",
}


def parse_config(doc) -> RunConfig:
    """Build a RunConfig from a YAML string or an already-loaded mapping."""
    if isinstance(doc, str):
        try:
            doc = yaml.safe_load(doc)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config document is not well-formed: {exc}") from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a mapping")
    _reject_unknown(doc, _TOP_KEYS, "top level")

    kwargs: dict = {}

    grid = doc.get("grid", {})
    if not isinstance(grid, dict):
        raise ConfigError("grid must be a mapping")
    _reject_unknown(grid, {"x_min", "x_max", "n_cells"}, "grid")
    if "x_min" in grid:
        kwargs["x_min"] = _as_float(grid["x_min"], "grid.x_min")
    if "x_max" in grid:
        kwargs["x_max"] = _as_float(grid["x_max"], "grid.x_max")
    if "n_cells" in grid:
        kwargs["n_cells"] = _as_int(grid["n_cells"], "grid.n_cells")

    if "initial_condition" in doc:
        kwargs["ic"] = _parse_ic(doc["initial_condition"])
    if "flux" in doc:
        kwargs["flux_kind"] = _as_str(doc["flux"], "flux")
    if "boundary" in doc:
        kwargs["boundary"] = _as_str(doc["boundary"], "boundary")

    noise = doc.get("noise", {})
    if not isinstance(noise, dict):
        raise ConfigError("noise must be a mapping")
    _reject_unknown(noise, {"kind", "lam"}, "noise")
    if "kind" in noise:
        kwargs["noise_kind"] = _as_str(noise["kind"], "noise.kind")
    if "lam" in noise:
        kwargs["lam"] = _as_float(noise["lam"], "noise.lam")

    if "schemes" in doc:
        kwargs["schemes"] = _parse_schemes(doc["schemes"])
    if "dt_ladder" in doc:
        kwargs["dt_ladder"] = _parse_ladder(doc["dt_ladder"])
        kwargs["dt_fine"] = kwargs["dt_ladder"][-1] / 2.0
    if "dt_fine" in doc:
        kwargs["dt_fine"] = _as_float(doc["dt_fine"], "dt_fine")
    if "t_end" in doc:
        kwargs["t_end"] = _as_float(doc["t_end"], "t_end")
    if "seeds" in doc:
        kwargs["seeds"] = _parse_seeds(doc["seeds"])

    cfl = doc.get("cfl", {})
    if not isinstance(cfl, dict):
        raise ConfigError("cfl must be a mapping")
    _reject_unknown(cfl, {"mode", "safety", "xi_bound", "dt_max"}, "cfl")
    if "mode" in cfl:
        kwargs["cfl_mode"] = _as_str(cfl["mode"], "cfl.mode")
    if "safety" in cfl:
        kwargs["safety"] = _as_float(cfl["safety"], "cfl.safety")
    if "xi_bound" in cfl:
        kwargs["xi_bound"] = _as_float(cfl["xi_bound"], "cfl.xi_bound")
    if "dt_max" in cfl:
        kwargs["dt_max"] = _as_float(cfl["dt_max"], "cfl.dt_max")

    if "adaptive_dt" in doc:
        kwargs["adaptive_dt"] = _as_bool(doc["adaptive_dt"], "adaptive_dt")
    if "blowup_threshold" in doc:
        kwargs["blowup_threshold"] = _as_float(doc["blowup_threshold"], "blowup_threshold")
    if "stochastic_substep" in doc:
        kwargs["stochastic_substep"] = _as_str(doc["stochastic_substep"], "stochastic_substep")
    if "inner_mode" in doc:
        kwargs["inner_mode"] = _as_str(doc["inner_mode"], "inner_mode")
    if "output_dir" in doc:
        kwargs["output_dir"] = _as_str(doc["output_dir"], "output_dir")

    return RunConfig(**kwargs)


def parse_config_file(path) -> RunConfig:
    """Read and parse a config document from disk."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {p} does not exist")
    return parse_config(p.read_text())
