"""Built-in scenarios, run configuration and the scenario runner."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .analytic import random_form, random_metric, random_scalar
from .evolution import (EvolutionState, Problem, RunResult, evolve, snapshot_records,
                        write_csv)
from .frames import transform_slice_data
from .gauge import (analytic_background, background_fields, flat_background,
                    modified_residuals)
from .grid import Grid, build_grid
from .hypersurface import SliceData
from .initial_data import (constraint_norms, constraint_tolerance, initial_jet,
                           lambda_family, lambda_root, pulse_family)

SCENARIOS = ("flat", "mms-wave", "dilaton-pulse", "gauge-probe")


class ConstraintViolation(ValueError):
    """Initial data violate the constraints beyond tolerance in strict mode."""


@dataclass
class ScenarioConfig:
    scenario: str = "flat"
    params: dict = field(default_factory=dict)
    dimension: int = 4
    n_active: int = 1
    points_per_axis: int = 64
    axis_length: float = 2.0 * np.pi
    cfl: float = 0.25
    t_end: float = 0.5
    steps: int | None = None
    stencil_order: int = 4
    strict_constraints: bool = True
    dissipation: float = 0.0
    output_path: str | None = None
    cadence: int = 1
    snapshots: bool = False
    snapshot_path: str | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {', '.join(SCENARIOS)}")
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if self.steps is None and not self.t_end > 0:
            raise ValueError("t_end must be positive")

    def grid(self) -> Grid:
        return build_grid(self.dimension, self.n_active, self.points_per_axis,
                          self.axis_length, self.stencil_order)

    @classmethod
    def from_dict(cls, cfg: dict) -> "ScenarioConfig":
        sc = cfg.get("scenario", "flat")
        name, params = (sc, {}) if isinstance(sc, str) else (sc.get("name", "flat"), dict(sc.get("params", {})))
        out = cfg.get("output", {}) or {}
        kw = dict(scenario=name, params=params)
        for key in ("dimension", "n_active", "points_per_axis", "axis_length", "cfl", "t_end",
                    "steps", "stencil_order", "dissipation"):
            if key in cfg:
                kw[key] = cfg[key]
        if "strict_constraints" in cfg:
            kw["strict_constraints"] = _onoff(cfg["strict_constraints"])
        kw["output_path"] = out.get("path")
        kw["cadence"] = int(out.get("cadence", 1))
        snaps = out.get("snapshots", False)
        if isinstance(snaps, str):
            kw["snapshots"], kw["snapshot_path"] = True, snaps
        else:
            kw["snapshots"] = bool(snaps)
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _onoff(x) -> bool:
    if isinstance(x, str):
        if x.lower() not in ("on", "off", "true", "false"):
            raise ValueError(f"expected on/off, got {x!r}")
        return x.lower() in ("on", "true")
    return bool(x)


@dataclass(eq=False)
class Setup:
    state: EvolutionState
    problem: Problem
    data: SliceData | None
    constraints: tuple[float, float, float] | None = None


def _flat(grid: Grid, params: dict) -> Setup:
    d = grid.dim
    g = np.zeros((d, d) + grid.shape)
    g[0, 0] = -1.0
    for i in range(1, d):
        g[i, i] = 1.0
    zB = np.zeros((d, d) + grid.shape)
    zp = np.zeros(grid.shape)
    u = (g, zB, zp)
    v = (np.zeros_like(g), zB.copy(), zp.copy())

    def exact(t):
        return u, v
    prob = Problem(grid, flat_background(grid), exact=exact)
    return Setup(EvolutionState(0.0, tuple(a.copy() for a in u), tuple(a.copy() for a in v)), prob, None)


def _mms(grid: Grid, params: dict) -> Setup:
    """Trigonometric manufactured tuple on an analytic background."""
    rng = np.random.default_rng(int(params.get("seed", 1)))
    amp = float(params.get("amplitude", 0.05))
    omega = float(params.get("max_omega", 1.0))
    d, na = grid.dim, grid.n_active
    gA = random_metric(rng, d, amp, na, max_omega=omega)
    BA = random_form(rng, d, 2, 2 * amp, na, max_omega=omega)
    pA = random_scalar(rng, 2 * amp, na, max_omega=omega)
    g0 = random_metric(rng, d - 1, amp, na, spatial=True)
    p0 = random_scalar(rng, 2 * amp, na, spatial=True)
    H0 = random_form(rng, d - 1, 3, 2 * amp, na, spatial=True)
    h0 = random_form(rng, d - 1, 2, 2 * amp, na, spatial=True)
    bg = analytic_background(grid, g0, p0, H0, h0)
    fields = (gA, BA, pA)

    @lru_cache(maxsize=16)
    def exact(t):
        u = tuple(f.component_array(grid, t) for f in fields)
        v = tuple(f.component_array(grid, t, (0,)) for f in fields)
        return u, v

    @lru_cache(maxsize=16)
    def source(t):
        parts = [f.partials(grid, t) for f in fields]
        u = tuple(p[0] for p in parts)
        du = tuple(p[1] for p in parts)
        ddu = tuple(p[2] for p in parts)
        return modified_residuals(u, du, ddu, bg.at(t), grid.kappa)

    u, v = exact(0.0)
    state = EvolutionState(0.0, tuple(a.copy() for a in u), tuple(a.copy() for a in v))
    return Setup(state, Problem(grid, bg, source=source, exact=exact), None)


def _from_data(grid: Grid, data: SliceData) -> Setup:
    bg = background_fields(data)
    jet = initial_jet(data, bg)
    state = EvolutionState(0.0, tuple(a.copy() for a in jet.u), tuple(a.copy() for a in jet.v))
    return Setup(state, Problem(grid, bg), data, constraint_norms(data))


def pulse_data(grid: Grid, params: dict) -> SliceData:
    lam = float(params.get("lambda", 0.1))
    return pulse_family(grid, lam, float(params.get("epsilon", 0.05)), float(params.get("beta", 0.05)))


def _pulse(grid: Grid, params: dict) -> Setup:
    return _from_data(grid, pulse_data(grid, params))


def _probe(grid: Grid, params: dict) -> Setup:
    """Lambda-family data with x0 scaled off the constraint surface."""
    lam = float(params.get("lambda", 0.1))
    factor = float(params.get("x0_factor", 1.1))
    data = lambda_family(grid, lam, factor * lambda_root(grid.n, lam))
    return _from_data(grid, transform_slice_data(data))


_BUILDERS = {"flat": _flat, "mms-wave": _mms, "dilaton-pulse": _pulse, "gauge-probe": _probe}


def build_scenario(name: str, grid: Grid, params: dict | None = None) -> Setup:
    if name not in _BUILDERS:
        raise ValueError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    return _BUILDERS[name](grid, params or {})


def run_scenario(cfg: ScenarioConfig) -> tuple[RunResult, Setup]:
    """Build, check and evolve a scenario; writes CSV / JSON output when configured."""
    grid = cfg.grid()
    setup = build_scenario(cfg.scenario, grid, cfg.params)
    if setup.constraints is not None:
        scale = max(1.0, float(np.max(np.abs(setup.data.k.data))))
        tol = constraint_tolerance(grid, scale)
        worst = max(setup.constraints)
        if worst > tol:
            msg = (f"initial data violate the constraints: max residual {worst:.3e} "
                   f"> tolerance {tol:.3e}")
            if cfg.strict_constraints:
                raise ConstraintViolation(msg)
            import warnings
            warnings.warn(msg, stacklevel=2)
    setup.problem.dissipation = cfg.dissipation
    res = evolve(setup.state, setup.problem, cfg.cfl, cfg.t_end if cfg.steps is None else None,
                 cfg.steps, cfg.cadence, cfg.snapshots)
    if cfg.output_path:
        Path(cfg.output_path).parent.mkdir(parents=True, exist_ok=True)
        write_csv(cfg.output_path, res.records)
    if cfg.snapshots:
        path = cfg.snapshot_path or (str(Path(cfg.output_path).with_suffix(".json"))
                                     if cfg.output_path else None)
        if path:
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(res.snapshots, fh)
    return res, setup


__all__ = ["SCENARIOS", "ConstraintViolation", "ScenarioConfig", "Setup", "build_scenario",
           "pulse_data", "run_scenario", "snapshot_records"]
