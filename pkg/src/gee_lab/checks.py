"""Verification suites shared by ``gee-lab verify`` and the acceptance tests.

Every suite returns a ``CheckResult`` whose ``line()`` is a one-line
PASS/FAIL summary. Convergence is judged on the finest resolution pair:
the fitted order must lie within ``p +- 0.3`` unless every norm already
sits below the roundoff floor of 1e-12.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .analytic import random_form, random_metric, random_scalar
from .evolution import EvolutionState, Problem, shifted_state, stable_dt, time_step
from .forms import (codifferential, deturck_vector, exterior_derivative, k_dot,
                    modified_codifferential)
from .frames import (FrameTuple, conformal_convert, cross_frame_predictions,
                     einstein_residuals, shift_slice_data, string_residuals,
                     transform_slice_data)
from .gauge import analytic_background, background_fields, hodge_hat, ricci_hat
from .geometry import covariant_derivative, metric_geometry, ricci, symmetrize
from .grid import build_grid, field_norms, make_field
from .hypersurface import (ambient_exterior_ops, form_jet_data, induced_initial_data,
                           restricted_exterior_ops, second_fundamental_form, slice_frame)
from .initial_data import (constraint_norms, initial_gauge_check, initial_jet,
                           lambda_family, lambda_root, pulse_family)
from .scenarios import ScenarioConfig, run_scenario

FLOOR = 1e-12
ORDER_TOL = 0.3


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    values: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def fitted_order(points, errs) -> float:
    """Order from the finest pair of a refinement sequence."""
    (n0, n1), (e0, e1) = points[-2:], errs[-2:]
    if e1 <= 0 or e0 <= 0:
        return math.inf
    return math.log(e0 / e1) / math.log(n1 / n0)


def pair_orders(points, errs) -> list[float]:
    return [fitted_order(points[i:i + 2], errs[i:i + 2]) for i in range(len(points) - 1)]


def converges(points, errs, p: float, tol: float = ORDER_TOL, floor: float = FLOOR) -> bool:
    if max(errs) < floor:
        return True
    return abs(fitted_order(points, errs) - p) <= tol


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def _timed(fn):
    def run(*args, **kw):
        t0 = time.perf_counter()
        res = fn(*args, **kw)
        res.seconds = time.perf_counter() - t0
        return res
    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


def _fmt(xs) -> str:
    return "[" + ", ".join(f"{x:.2e}" for x in xs) + "]"


# 1 ---------------------------------------------------------------------------

@_timed
def check_flat(points: int = 64, steps: int = 200, limit: float = 1e-11,
               budget: float = 10.0) -> CheckResult:
    """Flat tuple stays a fixed point; every monitored norm stays tiny."""
    t0 = time.perf_counter()
    res, _ = run_scenario(ScenarioConfig("flat", points_per_axis=points, steps=steps))
    wall = time.perf_counter() - t0
    worst = max(max(abs(v) for v in r.norms().values()) for r in res.records)
    ok = res.ok and res.steps == steps and worst < limit and wall < budget
    return CheckResult("flat fixed point", ok,
                       f"{res.steps} steps, max norm {worst:.2e} < {limit:g}, runtime {wall:.2f}s < {budget:g}s",
                       {"max_norm": worst, "runtime": wall, "records": len(res.records)})


# 2 ---------------------------------------------------------------------------

def _operator_errors(seed: int, points, p: int = 4):
    rng = np.random.default_rng(seed)
    gA = random_metric(rng, 4, 0.2)
    BA = random_form(rng, 4, 2, 0.4)
    g0A = random_metric(rng, 3, 0.2, spatial=True)
    p0A = random_scalar(rng, 0.3, spatial=True)
    H0A = random_form(rng, 3, 3, 0.3, spatial=True)
    h0A = random_form(rng, 3, 2, 0.3, spatial=True)
    e_ric, e_hodge = [], []
    for n in points:
        grid = build_grid(4, 2, n, order=p)
        bg = analytic_background(grid, g0A, p0A, H0A, h0A)
        g, B = gA.jet(grid, 0.1, 3), BA.jet(grid, 0.1, 3)
        geom = metric_geometry(g)
        Gb = bg.christoffel_field()
        D = deturck_vector(geom, Gb)
        oracle_r = ricci(geom) + symmetrize(covariant_derivative(D, geom))
        e_ric.append(field_norms(ricci_hat(g, bg) - oracle_r)[0])
        dC = exterior_derivative(modified_codifferential(B, geom, Gb))
        oracle_h = (codifferential(exterior_derivative(B), geom).truncate(1) + dC) * -1.0
        e_hodge.append(field_norms(hodge_hat(B, g, bg) - oracle_h)[0])
    return e_ric, e_hodge


@_timed
def check_operators(families: int = 5, points=(32, 64), p: int = 4, tol: float = 0.2) -> CheckResult:
    """Modified Ricci and modified Hodge operators against covariant oracles."""
    target = 2.0 ** p
    ratios, ok = [], True
    for seed in range(families):
        for errs in _operator_errors(100 + seed, points, p):
            if max(errs) < FLOOR:
                ratios.append(math.nan)
                continue
            r = errs[-2] / errs[-1]
            ratios.append(r)
            ok &= abs(r / target - 1.0) <= tol
    finite = [r for r in ratios if not math.isnan(r)]
    return CheckResult("operator oracles", ok,
                       f"{families} families, error ratios in [{min(finite):.2f}, {max(finite):.2f}], "
                       f"target {target:g} +- {100 * tol:g}%", {"ratios": ratios})


# 3 ---------------------------------------------------------------------------

@_timed
def check_cross_frame(dims=(4, 10), points: int = 32, p: int = 4, factor: float = 5.0) -> CheckResult:
    """Einstein residuals of converted tuples against the string-frame prediction."""
    worst, ok = {}, True
    for d in dims:
        rng = np.random.default_rng(40 + d)
        gA = random_metric(rng, d, 0.15)
        HA = random_form(rng, d, 3, 0.4)
        pA = random_scalar(rng, 0.3)
        grid = build_grid(d, 2, points, order=p)
        g, H, phi = gA.jet(grid, 0.1, 3), HA.jet(grid, 0.1, 3), pA.jet(grid, 0.1, 3)
        rs = string_residuals(g, H, phi)
        gt = conformal_convert(FrameTuple("string", g, H, phi), "einstein").g
        re = einstein_residuals(gt, H, phi)
        pr = cross_frame_predictions(rs, phi, g)
        for key in ("H", "phi", "Rc"):
            scale = max(1.0, field_norms(re[key])[0])
            rel = field_norms(re[key] - pr[key])[0] / scale
            thr = factor * grid.h ** p
            worst[f"d{d}:{key}"] = rel
            ok &= rel < thr
    thr = factor * build_grid(4, 2, points, order=p).h ** p
    return CheckResult("cross-frame identities", ok,
                       f"max relative error {max(worst.values()):.2e} < {thr:.2e} for d in {tuple(dims)}",
                       worst)


# 4 ---------------------------------------------------------------------------

@_timed
def check_invariances(shifts=(-1.0, 0.3), points: int = 16, limit: float = 1e-12) -> CheckResult:
    """D under g -> e^{-2 kappa c} g and C scaling by e^{2 kappa c}."""
    rng = np.random.default_rng(7)
    grid = build_grid(4, 2, points)
    gA = random_metric(rng, 4, 0.2)
    BA = random_form(rng, 4, 2, 0.4)
    bg = analytic_background(grid, random_metric(rng, 3, 0.2, spatial=True),
                             random_scalar(rng, 0.3, spatial=True),
                             random_form(rng, 3, 3, 0.3, spatial=True),
                             random_form(rng, 3, 2, 0.3, spatial=True))
    g, B = gA.jet(grid, 0.0, 3), BA.jet(grid, 0.0, 3)
    Gb = bg.christoffel_field()
    geom = metric_geometry(g)
    D = deturck_vector(geom, Gb)
    C = modified_codifferential(B, geom, Gb)
    errs = {}
    for c in shifts:
        s = math.exp(-2 * grid.kappa * c)
        bgs = bg.scaled_metric(s)
        geoms = metric_geometry(g * s)
        Ds = deturck_vector(geoms, bgs.christoffel_field())
        Cs = modified_codifferential(B, geoms, bgs.christoffel_field())
        errs[f"D c={c:g}"] = _rel(Ds.data, D.data)
        errs[f"C c={c:g}"] = _rel(Cs.data, C.data / s)
    worst = max(errs.values())
    return CheckResult("algebraic invariances", worst < limit,
                       f"max relative error {worst:.2e} < {limit:g} for c in {tuple(shifts)}", errs)


# 5 ---------------------------------------------------------------------------

@_timed
def check_hypersurface(degrees=(2, 3), points=(16, 32, 64), p: int = 4) -> CheckResult:
    """Slice decompositions of dA and d*A against ambient evaluation."""
    rng = np.random.default_rng(21)
    gA = random_metric(rng, 4, 0.3)
    orders, ok = {}, True
    for deg in degrees:
        AA = random_form(rng, 4, deg, 0.5)
        errs: dict[str, list] = {}
        for n in points:
            grid = build_grid(4, 2, n, order=p)
            g, A = gA.jet(grid, 0.2, 2), AA.jet(grid, 0.2, 2)
            fr = slice_frame(g)
            k = second_fundamental_form(fr)
            lem = restricted_exterior_ops(*form_jet_data(A, fr), k, fr.sigma)
            amb = ambient_exterior_ops(A, fr)
            for key, val in lem.items():
                if val is not None:
                    errs.setdefault(key, []).append(field_norms(val - amb[key])[0])
        for key, e in errs.items():
            orders[f"deg{deg}:{key}"] = fitted_order(points, e) if max(e) >= FLOOR else math.nan
            ok &= converges(points, e, p)
    fin = [o for o in orders.values() if not math.isnan(o)]
    return CheckResult("hypersurface decompositions", ok,
                       f"degrees {tuple(degrees)}, fitted orders in [{min(fin):.2f}, {max(fin):.2f}], "
                       f"target {p} +- {ORDER_TOL}", orders)


# 6 ---------------------------------------------------------------------------

def _jet_norms(family, points, p):
    keys = ("deturck", "deturck_rate", "C_par", "dC")
    norms = {k: [] for k in keys}
    cons = []
    for n in points:
        data, cons_n = family(build_grid(4, 1, n, order=p))
        cons.append(cons_n)
        bg = background_fields(data)
        chk = initial_gauge_check(initial_jet(data, bg), bg, data)
        for k in keys:
            norms[k].append(chk[k])
    return cons, norms


def _lambda_case(lam):
    def family(grid):
        data = lambda_family(grid, lam, lambda_root(grid.n, lam))
        ein = transform_slice_data(data)
        return ein, max(constraint_norms(data) + constraint_norms(ein))
    return family


def _pulse_case(grid):
    data = pulse_family(grid)
    return data, max(constraint_norms(data))


@_timed
def check_initial_jet(points=(16, 32, 64), lam: float = 0.1, p: int = 4,
                      limit: float = 1e-10) -> CheckResult:
    """Lambda-family data: constraints and convergence of the setup jet's gauge norms.

    The lambda-family jet is gauge-exact up to roundoff, so a pulse
    perturbation of it is measured as well to see a genuine order.
    """
    cons, norms = _jet_norms(_lambda_case(lam), points, p)
    _, pnorms = _jet_norms(_pulse_case, points, p)
    ok = (max(cons) < limit and all(converges(points, v, p) for v in norms.values())
          and all(converges(points, v, p) for v in pnorms.values()))
    worst = max(max(v) for v in norms.values())
    porders = {k: fitted_order(points, v) for k, v in pnorms.items() if max(v) >= FLOOR}
    txt = ", ".join(f"{k} {o:.2f}" for k, o in porders.items()) or "all at roundoff"
    return CheckResult("initial jet", ok,
                       f"constraints {max(cons):.2e} < {limit:g}; gauge norms <= {worst:.2e} "
                       f"(below {FLOOR:g}); pulse orders {txt}",
                       {"constraints": cons, **norms, "pulse": pnorms})


# 7 ---------------------------------------------------------------------------

PROPAGATION_KEYS = ("deturck_linf", "dC_linf", "c1_linf", "c2_linf", "c3_linf", "divT_linf")


@_timed
def check_propagation(points=(32, 64, 128), t_end: float = 0.5, p: int = 4,
                      budget: float = 120.0) -> CheckResult:
    """dilaton-pulse evolution: gauge, constraint and stress norms converge."""
    t0 = time.perf_counter()
    finals = []
    for n in points:
        res, _ = run_scenario(ScenarioConfig("dilaton-pulse", points_per_axis=n, t_end=t_end,
                                             stencil_order=p, cadence=10 ** 9))
        if not res.ok:
            return CheckResult("gauge and constraint propagation", False, res.message)
        finals.append(res.records[-1].norms())
    wall = time.perf_counter() - t0
    orders, ok = {}, wall < budget
    for k in PROPAGATION_KEYS:
        e = [f[k] for f in finals]
        orders[k] = fitted_order(points, e) if max(e) >= FLOOR else math.nan
        ok &= converges(points, e, p)
    txt = ", ".join(f"{k.replace('_linf', '')} {'floor' if math.isnan(o) else f'{o:.2f}'}"
                    for k, o in orders.items())
    return CheckResult("gauge and constraint propagation", ok,
                       f"orders {txt}; runtime {wall:.1f}s < {budget:g}s", orders)


# 8 ---------------------------------------------------------------------------

@_timed
def check_mms(points=(16, 32, 64), t_end: float = 0.5, p: int = 4) -> CheckResult:
    """mms-wave solution error over two refinements."""
    errs = []
    for n in points:
        res, _ = run_scenario(ScenarioConfig("mms-wave", points_per_axis=n, t_end=t_end,
                                             stencil_order=p, cadence=10 ** 9))
        if not res.ok:
            return CheckResult("MMS convergence", False, res.message)
        errs.append(res.records[-1].err_linf)
    target = min(p, 4)
    orders = pair_orders(points, errs)
    ok = all(abs(o - target) <= ORDER_TOL for o in orders)
    return CheckResult("MMS convergence", ok,
                       f"errors {_fmt(errs)}, orders {', '.join(f'{o:.2f}' for o in orders)}, "
                       f"target {target} +- {ORDER_TOL}", {"errors": errs, "orders": orders})


# 9 ---------------------------------------------------------------------------

_DATA_FIELDS = ("g0", "k", "H0", "h0", "phi1", "phi0", "B0", "b0", "B1", "b1")


def _data_rel(a, b) -> float:
    out = 0.0
    for f in _DATA_FIELDS:
        x, y = getattr(a, f), getattr(b, f)
        if x is None or y is None:
            continue
        out = max(out, _rel(x.data[0], y.data[0]) if np.any(y.data[0]) else float(np.max(np.abs(x.data[0]))))
    return out


def _random_string_data(grid, seed: int):
    rng = np.random.default_rng(seed)
    d = grid.dim
    g = random_metric(rng, d, 0.15).jet(grid, 0.1, 3)
    H = random_form(rng, d, 3, 0.4).jet(grid, 0.1, 3)
    phi = random_scalar(rng, 0.3).jet(grid, 0.1, 3)
    B = random_form(rng, d, 2, 0.4).jet(grid, 0.1, 3)
    data = induced_initial_data(g, H, phi, "string")
    B0, b0, B1, b1 = form_jet_data(B, slice_frame(g))
    return data.replace(B0=B0, b0=b0, B1=B1, b1=b1)


def _pulse_with_B(grid):
    data = pulse_family(grid)
    n = grid.n
    x, y = grid.coords()[:2]
    B0 = np.zeros((n, n) + grid.shape)
    B0[0, 1] = 0.2 * np.sin(y)
    B0[1, 2] = 0.1 * np.cos(x)
    B0 = B0 - np.swapaxes(B0, 0, 1)
    B0 = make_field(grid, B0, "dd", spatial=True, symmetry="antisym")
    return data.replace(B0=B0, B1=k_dot(data.k, B0, data.geometry()))


@_timed
def check_round_trips(shifts=(-1.0, 0.3), points: int = 24, limit: float = 1e-12) -> CheckResult:
    """Frame round trip of slice data and the constant-shift commutation square."""
    grid = build_grid(4, 2, points)
    errs = {}
    sd = _random_string_data(grid, 5)
    errs["string round trip"] = _data_rel(
        transform_slice_data(transform_slice_data(sd), "einstein->string"), sd)
    ed = transform_slice_data(sd)
    errs["einstein round trip"] = _data_rel(
        transform_slice_data(transform_slice_data(ed, "einstein->string")), ed)
    lam = lambda_family(build_grid(4, 1, points), 0.1)
    errs["lambda round trip"] = _data_rel(
        transform_slice_data(transform_slice_data(lam), "einstein->string"), lam)
    data = _pulse_with_B(grid)
    bg = background_fields(data)
    jet = initial_jet(data, bg)
    state = EvolutionState(0.0, jet.u, jet.v)
    prob = Problem(grid, bg)
    stepped = time_step(state, prob, stable_dt(grid, state.u[0], 0.25))
    for c in shifts:
        sdata = shift_slice_data(data, c)
        sbg = background_fields(sdata)
        sjet = initial_jet(sdata, sbg)
        lhs = EvolutionState(0.0, sjet.u, sjet.v)
        rhs = shifted_state(state, grid.kappa, c)
        errs[f"setup square c={c:g}"] = max(_rel(a, b) if np.any(b) else float(np.max(np.abs(a)))
                                            for a, b in zip(lhs.u + lhs.v, rhs.u + rhs.v))
        lstep = time_step(lhs, Problem(grid, sbg), stable_dt(grid, lhs.u[0], 0.25))
        rstep = shifted_state(stepped, grid.kappa, c)
        errs[f"step square c={c:g}"] = max(_rel(a, b) if np.any(b) else float(np.max(np.abs(a)))
                                           for a, b in zip(lstep.u + lstep.v, rstep.u + rstep.v))
    worst = max(errs.values())
    return CheckResult("data round trips", worst < limit,
                       f"max relative error {worst:.2e} < {limit:g}", errs)


SUITES = {
    "flat": check_flat,
    "operators": check_operators,
    "cross-frame": check_cross_frame,
    "invariances": check_invariances,
    "hypersurface": check_hypersurface,
    "initial-jet": check_initial_jet,
    "propagation": check_propagation,
    "mms": check_mms,
    "round-trips": check_round_trips,
}


def run_suite(name: str):
    """Yield the results of one suite, or of every suite for ``"all"``."""
    if name != "all" and name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from all, {', '.join(SUITES)}")
    for fn in SUITES.values() if name == "all" else (SUITES[name],):
        yield fn()


__all__ = ["CheckResult", "SUITES", "converges", "fitted_order", "pair_orders", "run_suite"]
