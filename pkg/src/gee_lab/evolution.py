"""Method-of-lines evolution of the modified Einstein-frame system.

The state holds u = (g, B, phi) and v = d_t u on one slice. Each rate
evaluation rebuilds H = Hbar(t) + dB and xi = dphi from the state and solves
the modified system for d_t^2 u.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .forms import exterior_derivative
from .frames import stress_divergence
from .gauge import BackgroundFields, accelerations, inv_array
from .geometry import SignatureError, check_signature, metric_geometry
from .grid import Grid, NonFiniteError, TensorField, ko_dissipation
from .hypersurface import induced_initial_data
from .initial_data import constraint_residuals, extend_jet, gauge_fields

CSV_COLUMNS = ("t", "c1_linf", "c2_linf", "c3_linf", "deturck_linf", "dC_linf",
               "divT_linf", "err_linf", "g00_min", "spatial_eig_min")

Fields = tuple  # (g, B, phi) arrays


@dataclass(frozen=True, eq=False)
class EvolutionState:
    t: float
    u: Fields
    v: Fields

    def copy(self) -> "EvolutionState":
        return EvolutionState(self.t, tuple(a.copy() for a in self.u), tuple(a.copy() for a in self.v))


@dataclass(eq=False)
class Problem:
    """Everything the integrator needs besides the state."""

    grid: Grid
    bg: BackgroundFields
    source: Callable[[float], Fields] | None = None
    exact: Callable[[float], tuple[Fields, Fields]] | None = None
    dissipation: float = 0.0


def _check_finite(arrs, what: str) -> None:
    for a in arrs:
        if not np.all(np.isfinite(a)):
            bad = tuple(int(i) for i in np.argwhere(~np.isfinite(a))[0])
            raise NonFiniteError(f"non-finite {what} at index {bad}")


def rates(state: EvolutionState, prob: Problem) -> tuple[Fields, Fields]:
    """(d_t u, d_t v) of the first-order system."""
    src = prob.source(state.t) if prob.source is not None else None
    a = accelerations(prob.grid, state.u, state.v, prob.bg.at(state.t), src)
    _check_finite(a, "rate")
    if prob.dissipation:
        s = prob.dissipation
        du = tuple(x + ko_dissipation(u, prob.grid, s) for x, u in zip(state.v, state.u))
        dv = tuple(x + ko_dissipation(v, prob.grid, s) for x, v in zip(a, state.v))
        return du, dv
    return state.v, a


def _axpy(base: Fields, c: float, inc: Fields) -> Fields:
    return tuple(b + c * i for b, i in zip(base, inc))


def time_step(state: EvolutionState, prob: Problem, dt: float) -> EvolutionState:
    """One classical RK4 step; the metric signature is re-validated after it."""
    t = state.t
    k1 = rates(state, prob)
    s2 = EvolutionState(t + dt / 2, _axpy(state.u, dt / 2, k1[0]), _axpy(state.v, dt / 2, k1[1]))
    k2 = rates(s2, prob)
    s3 = EvolutionState(t + dt / 2, _axpy(state.u, dt / 2, k2[0]), _axpy(state.v, dt / 2, k2[1]))
    k3 = rates(s3, prob)
    s4 = EvolutionState(t + dt, _axpy(state.u, dt, k3[0]), _axpy(state.v, dt, k3[1]))
    k4 = rates(s4, prob)
    u = tuple(x + dt / 6 * (a + 2 * b + 2 * c + d)
              for x, a, b, c, d in zip(state.u, k1[0], k2[0], k3[0], k4[0]))
    v = tuple(x + dt / 6 * (a + 2 * b + 2 * c + d)
              for x, a, b, c, d in zip(state.v, k1[1], k2[1], k3[1], k4[1]))
    _check_finite(u + v, "state")
    new = EvolutionState(t + dt, u, v)
    check_signature(_metric_field(prob.grid, u[0]))
    return new


def _metric_field(grid: Grid, g: np.ndarray) -> TensorField:
    return TensorField(grid, g[None], "dd", False, False, "sym")


def characteristic_speed(grid: Grid, g: np.ndarray) -> float:
    """sqrt of the largest eigenvalue of -g^{ij} / g^{00} over the grid."""
    gi = inv_array(g)
    m = -gi[1:, 1:] / gi[0, 0]
    ev = np.linalg.eigvalsh(np.moveaxis(m, (0, 1), (-2, -1)))
    return float(np.sqrt(max(np.max(ev), 1e-300)))


def stable_dt(grid: Grid, g: np.ndarray, cfl: float) -> float:
    return cfl * grid.h / characteristic_speed(grid, g)


# diagnostics ------------------------------------------------------------------


@dataclass
class Diagnostics:
    t: float
    c1_linf: float
    c2_linf: float
    c3_linf: float
    deturck_linf: float
    dC_linf: float
    divT_linf: float
    err_linf: float
    g00_min: float
    spatial_eig_min: float

    def row(self) -> tuple[float, ...]:
        return tuple(getattr(self, c) for c in CSV_COLUMNS)

    def norms(self) -> dict:
        return {c: getattr(self, c) for c in CSV_COLUMNS[1:8]}


def _linf(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def monitors(state: EvolutionState, prob: Problem) -> Diagnostics:
    grid, bg = prob.grid, prob.bg
    src = prob.source(state.t) if prob.source is not None else None
    g, B, phi = extend_jet(grid, state.u, state.v, bg, state.t, src)
    geom = metric_geometry(g)
    gf = gauge_fields(g, B, bg, geom)
    H = bg.H_field(state.t, 2) + exterior_derivative(B)
    divT = stress_divergence(g, H, phi, geom)
    data = induced_initial_data(g, H, phi, "einstein", geom)
    c1, c2, c3 = (_linf(r.data[0]) for r in constraint_residuals(data))
    err = math.nan
    if prob.exact is not None:
        ue, _ = prob.exact(state.t)
        err = max(_linf(a - b) for a, b in zip(state.u, ue))
    g0 = state.u[0]
    spat = np.linalg.eigvalsh(np.moveaxis(g0[1:, 1:], (0, 1), (-2, -1)))[..., 0]
    return Diagnostics(state.t, c1, c2, c3, _linf(gf["D"].data[0]), _linf(gf["dC"].data[0]),
                       _linf(divT.data[0]), err, float(np.min(g0[0, 0])), float(np.min(spat)))


# runs -----------------------------------------------------------------------


@dataclass
class RunResult:
    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    status: str = "ok"
    message: str = ""
    state: EvolutionState | None = None
    steps: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def snapshot_records(state: EvolutionState) -> list[dict]:
    out = []
    for name, arr, val in (("g", state.u[0], "dd"), ("B", state.u[1], "dd"), ("phi", state.u[2], ""),
                           ("dt_g", state.v[0], "dd"), ("dt_B", state.v[1], "dd"),
                           ("dt_phi", state.v[2], "")):
        out.append({"t": state.t, "field": name, "valence": val,
                    "shape": list(arr.shape), "components": arr.ravel(order="C").tolist()})
    return out


def evolve(state: EvolutionState, prob: Problem, cfl: float, t_end: float | None = None,
           steps: int | None = None, cadence: int = 1, snapshots: bool = False) -> RunResult:
    """Integrate to ``t_end`` (last step clipped) or for a fixed number of steps."""
    if not 0 < cfl <= 1:
        raise ValueError("CFL factor must lie in (0, 1]")
    if steps is None and (t_end is None or t_end <= 0):
        raise ValueError("end time must be positive")
    res = RunResult()
    res.records.append(monitors(state, prob))
    if snapshots:
        res.snapshots.extend(snapshot_records(state))
    n = 0
    while True:
        if steps is not None and n >= steps:
            break
        if steps is None and state.t >= t_end * (1 - 1e-14):
            break
        dt = stable_dt(prob.grid, state.u[0], cfl)
        if steps is None:
            dt = min(dt, t_end - state.t)
        try:
            state = time_step(state, prob, dt)
        except (SignatureError, NonFiniteError, FloatingPointError) as exc:
            res.status = "aborted"
            res.message = f"aborted at t = {state.t:.6g}: {exc}"
            res.state = state
            res.steps = n
            return res
        n += 1
        last = (steps is not None and n >= steps) or (steps is None and state.t >= t_end * (1 - 1e-14))
        if n % max(cadence, 1) == 0 or last:
            try:
                res.records.append(monitors(state, prob))
            except (SignatureError, NonFiniteError) as exc:
                res.status = "aborted"
                res.message = f"aborted at t = {state.t:.6g}: {exc}"
                res.state = state
                res.steps = n
                return res
            if snapshots:
                res.snapshots.extend(snapshot_records(state))
    res.state = state
    res.steps = n
    return res


def write_csv(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for r in records:
            fh.write(",".join("%.17g" % x for x in r.row()) + "\n")


def read_csv(path) -> list[dict]:
    import csv
    with open(path, encoding="utf-8") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def shifted_state(state: EvolutionState, kappa: float, c: float) -> EvolutionState:
    """Frame shift (exp(-2 kappa c) g, B, phi + c) of a state."""
    s = math.exp(-2 * kappa * c)
    g, B, phi = state.u
    vg, vB, vphi = state.v
    return replace(state, u=(s * g, B, phi + c), v=(s * vg, vB, vphi))
