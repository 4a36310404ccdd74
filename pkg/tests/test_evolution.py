from __future__ import annotations

import json

import numpy as np
import pytest

from conftest import order
from gee_lab import cli
from gee_lab.evolution import (CSV_COLUMNS, EvolutionState, Problem, RunResult, evolve, read_csv,
                               stable_dt, time_step, write_csv)
from gee_lab.gauge import flat_background, modified_residuals
from gee_lab.geometry import flat_metric
from gee_lab.grid import build_grid
from gee_lab.scenarios import ConstraintViolation, ScenarioConfig, build_scenario, run_scenario


def _flat_state(grid):
    d = grid.dim
    g = flat_metric(grid).data[0]
    zB, zp = np.zeros((d, d) + grid.shape), np.zeros(grid.shape)
    return EvolutionState(0.0, (g, zB, zp), (0 * g, zB.copy(), zp.copy()))


def test_flat_state_is_stationary():
    grid = build_grid(4, 2, 16)
    state = _flat_state(grid)
    prob = Problem(grid, flat_background(grid))
    s = state
    for _ in range(100):
        s = time_step(s, prob, 0.05)
    for a, b in zip(s.u + s.v, state.u + state.v):
        assert np.max(np.abs(a - b)) < 1e-13


def _scalar_wave(grid):
    """Exact tuple (flat g, B = 0, phi = sin(x - t)) and its source.

    Only the metric equation needs a source (it cancels the scalar stress),
    so the scalar obeys the free wave equation on a frozen flat background.
    """
    d = grid.dim
    x = grid.coords()[0]
    g = flat_metric(grid).data[0]
    zB = np.zeros((d, d) + grid.shape)

    def exact(t):
        u = (g, zB, np.sin(x - t))
        v = (0 * g, zB, -np.cos(x - t))
        return u, v

    def source(t):
        phi = np.sin(x - t)
        dphi = np.zeros((d,) + grid.shape)
        dphi[0], dphi[1] = -np.cos(x - t), np.cos(x - t)
        ddphi = np.zeros((d, d) + grid.shape)
        ddphi[0, 0] = ddphi[1, 1] = -phi
        ddphi[0, 1] = ddphi[1, 0] = phi
        du = (np.zeros((d,) + g.shape), np.zeros((d,) + zB.shape), dphi)
        ddu = (np.zeros((d, d) + g.shape), np.zeros((d, d) + zB.shape), ddphi)
        return modified_residuals((g, zB, phi), du, ddu, flat_background(grid).at(t), grid.kappa)

    return exact, source


def test_scalar_wave_source_leaves_scalar_free():
    grid = build_grid(4, 1, 16)
    _, source = _scalar_wave(grid)
    s = source(0.3)
    assert np.max(np.abs(s[2])) < 1e-15 and np.max(np.abs(s[0])) > 1e-3


def test_scalar_advection_converges():
    errs, pts = [], (16, 32, 64)
    for n in pts:
        grid = build_grid(4, 1, n)
        exact, source = _scalar_wave(grid)
        u, v = exact(0.0)
        prob = Problem(grid, flat_background(grid), source=source, exact=exact)
        res = evolve(EvolutionState(0.0, u, v), prob, 0.25, t_end=0.5, cadence=10**9)
        assert res.ok
        errs.append(res.records[-1].err_linf)
    assert abs(order(pts, errs) - 4) < 0.3


def test_rk4_time_order():
    grid = build_grid(4, 1, 32)
    exact, source = _scalar_wave(grid)
    u, v = exact(0.0)
    prob = Problem(grid, flat_background(grid), source=source)
    finals = []
    for m in (4, 8, 16):
        s = EvolutionState(0.0, u, v)
        for _ in range(m):
            s = time_step(s, prob, 0.8 / m)
        finals.append(s.u[2])
    ratio = np.max(np.abs(finals[0] - finals[1])) / np.max(np.abs(finals[1] - finals[2]))
    assert 16 * 0.8 < ratio < 16 * 1.2


def test_flat_tuple_needs_no_source():
    grid = build_grid(4, 1, 16)
    setup = build_scenario("flat", grid)
    d = grid.dim
    u = setup.state.u
    du = tuple(np.zeros((d,) + x.shape) for x in u)
    ddu = tuple(np.zeros((d, d) + x.shape) for x in u)
    for s in modified_residuals(u, du, ddu, setup.problem.bg.at(0.0), grid.kappa):
        assert not np.any(s)


def test_accelerations_solve_the_discrete_system():
    from gee_lab.gauge import accelerations, slice_partials, system_terms
    grid = build_grid(4, 2, 16)
    setup = build_scenario("mms-wave", grid)
    u, v = setup.problem.exact(0.2)
    acc = accelerations(grid, u, v, setup.problem.bg.at(0.2))
    # a source built from the discrete operators with these accelerations has zero residual
    snap = setup.problem.bg.at(0.2)
    parts = [slice_partials(grid, a, b) for a, b in zip(u, v)]
    f = system_terms(u[0], parts[0][0], u[1], parts[1][0], u[2], parts[2][0], snap, grid.kappa)
    from gee_lab.gauge import inv_array
    g00 = inv_array(u[0])[0, 0]
    for j, (a, p) in enumerate(zip(acc, parts)):
        dd = p[1].copy()
        dd[0, 0] = a
        gi = inv_array(u[0])
        extra = dd.ndim - gi.ndim
        prin = np.sum(gi.reshape(gi.shape[:2] + (1,) * extra + gi.shape[2:]) * dd, axis=(0, 1))
        r = prin - f[j]
        if j == 0:
            r = 0.5 * (r + np.swapaxes(r, 0, 1))
        elif j == 1:
            r = 0.5 * (r - np.swapaxes(r, 0, 1))
        assert np.max(np.abs(r)) < 1e-12 * max(1.0, np.max(np.abs(f[j])))
    assert np.all(g00 < 0)


def test_records_ordered_and_csv_format(tmp_path):
    cfg = ScenarioConfig("flat", points_per_axis=16, steps=5, output_path=str(tmp_path / "d.csv"))
    res, _ = run_scenario(cfg)
    ts = [r.t for r in res.records]
    assert all(b > a for a, b in zip(ts, ts[1:])) and len(ts) == 6
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1].split(",")[0] == "0"
    row = read_csv(tmp_path / "d.csv")[-1]
    assert row["t"] == res.records[-1].t
    assert "%.17g" % res.records[-1].t in lines[-1]


def test_runs_are_deterministic(tmp_path):
    out = []
    for name in ("a", "b"):
        cfg = ScenarioConfig("mms-wave", points_per_axis=16, steps=3,
                             output_path=str(tmp_path / f"{name}.csv"))
        run_scenario(cfg)
        out.append((tmp_path / f"{name}.csv").read_bytes())
    assert out[0] == out[1]


def test_cadence_and_snapshots(tmp_path):
    cfg = ScenarioConfig("flat", points_per_axis=8, n_active=1, steps=4, cadence=2, snapshots=True,
                         output_path=str(tmp_path / "d.csv"))
    res, _ = run_scenario(cfg)
    assert [r.t > 0 for r in res.records] == [False, True, True]
    snaps = json.loads((tmp_path / "d.json").read_text())
    assert {s["field"] for s in snaps} == {"g", "B", "phi", "dt_g", "dt_B", "dt_phi"}
    g = [s for s in snaps if s["field"] == "g"][0]
    assert g["valence"] == "dd" and len(g["components"]) == int(np.prod(g["shape"]))


def test_signature_loss_aborts():
    grid = build_grid(4, 1, 8)
    state = _flat_state(grid)
    g = state.u[0].copy()
    g[0, 0] = -0.05
    vg = np.zeros_like(g)
    vg[0, 0] = 1.0
    prob = Problem(grid, flat_background(grid))
    res = evolve(EvolutionState(0.0, (g,) + state.u[1:], (vg,) + state.v[1:]), prob, 0.5, steps=200)
    assert res.status == "aborted" and not res.ok
    assert "aborted at t" in res.message
    assert res.state.t > 0


def test_evolve_validates_arguments():
    grid = build_grid(4, 1, 8)
    prob = Problem(grid, flat_background(grid))
    with pytest.raises(ValueError):
        evolve(_flat_state(grid), prob, 1.5, t_end=1.0)
    with pytest.raises(ValueError):
        evolve(_flat_state(grid), prob, 0.5, t_end=-1.0)


def test_stable_dt_flat():
    grid = build_grid(4, 2, 16)
    assert stable_dt(grid, flat_metric(grid).data[0], 0.25) == pytest.approx(0.25 * grid.h, rel=1e-14)


def test_config_from_dict_and_validation(tmp_path):
    cfg = ScenarioConfig.from_dict({
        "dimension": 5, "n_active": 2, "points_per_axis": 24, "axis_length": 3.0, "cfl": 0.5,
        "t_end": 1.5, "stencil_order": 2, "strict_constraints": "off",
        "scenario": {"name": "dilaton-pulse", "params": {"epsilon": 0.01}},
        "output": {"path": "x.csv", "cadence": 3, "snapshots": True}})
    assert (cfg.dimension, cfg.n_active, cfg.points_per_axis, cfg.stencil_order) == (5, 2, 24, 2)
    assert cfg.scenario == "dilaton-pulse" and cfg.params == {"epsilon": 0.01}
    assert not cfg.strict_constraints and cfg.cadence == 3 and cfg.snapshots
    assert cfg.grid().h == pytest.approx(3.0 / 24)
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"scenario": "flat", "t_end": 0.1}))
    assert ScenarioConfig.load(path).t_end == 0.1
    for bad in ({"scenario": "nope"}, {"cfl": 0.0}, {"cfl": 1.5}, {"t_end": 0.0},
                {"strict_constraints": "maybe"}):
        with pytest.raises(ValueError):
            ScenarioConfig.from_dict(bad)


def test_strict_mode_rejects_probe_data():
    with pytest.raises(ConstraintViolation):
        run_scenario(ScenarioConfig("gauge-probe", points_per_axis=32, steps=1))
    with pytest.warns(UserWarning):
        res, _ = run_scenario(ScenarioConfig("gauge-probe", points_per_axis=32, steps=1,
                                             strict_constraints=False))
    assert res.ok


def test_cli_run_and_exit_codes(tmp_path, capsys):
    out = tmp_path / "o.csv"
    assert cli.main(["run", "--scenario", "flat", "--points", "16", "--steps", "3",
                     "--output", str(out)]) == 0
    assert out.exists() and "ok after 3 steps" in capsys.readouterr().out
    assert cli.main(["run", "--scenario", "gauge-probe", "--points", "32", "--steps", "1"]) == 2
    assert cli.main(["run", "--config", str(tmp_path / "missing.json")]) == 2
    assert cli.main(["run", "--cfl", "2"]) == 2
    with pytest.raises(SystemExit):
        cli.main(["run", "--scenario", "unknown"])


def test_cli_reports_abort(monkeypatch, capsys):
    from gee_lab.evolution import Diagnostics
    rec = Diagnostics(*([0.0] * len(CSV_COLUMNS)))

    def fake(cfg):
        return RunResult(records=[rec], status="aborted", message="aborted at t = 0: test"), None
    monkeypatch.setattr(cli, "run_scenario", fake)
    assert cli.main(["run"]) == 1
    assert "aborted" in capsys.readouterr().err


def test_cli_verify(capsys):
    assert cli.main(["verify", "invariances"]) == 0
    assert capsys.readouterr().out.startswith("PASS")


def test_write_csv_round_trip(tmp_path):
    from gee_lab.evolution import Diagnostics
    recs = [Diagnostics(0.1 * i, 1 / 3, 2e-300, 0, 0, 0, 0, float("nan"), -1, 1) for i in range(3)]
    write_csv(tmp_path / "x.csv", recs)
    rows = read_csv(tmp_path / "x.csv")
    assert rows[1]["t"] == 0.1 and rows[0]["c1_linf"] == 1 / 3 and rows[2]["c2_linf"] == 2e-300
    assert np.isnan(rows[0]["err_linf"])
