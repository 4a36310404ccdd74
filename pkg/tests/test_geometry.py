from __future__ import annotations

import numpy as np
import pytest

from conftest import order
from gee_lab.analytic import random_metric, random_scalar
from gee_lab.geometry import (SignatureError, box, conformal_ricci, covariant_derivative,
                              divergence, einstein_tensor, flat_metric, hessian,
                              metric_geometry, ricci, scalar_curvature)
from gee_lab.grid import build_grid, contract, field_norms, jexp, make_field


def test_minkowski_christoffels_vanish():
    grid = build_grid(4, 2, 16)
    geo = metric_geometry(flat_metric(grid, levels=3))
    assert not np.any(geo.christoffel.data)
    assert not np.any(geo.contracted.data)


def test_block_toy_christoffel():
    # d = 3 stand-in for the two-dimensional toy: g = diag(-1, a(x)^2, 1)
    errs, pts = [], (16, 32, 64)
    for n in pts:
        grid = build_grid(3, 1, n)
        x = grid.coords()[0]
        a = 1.0 + 0.3 * np.sin(x)
        g = np.zeros((3, 3) + grid.shape)
        g[0, 0], g[1, 1], g[2, 2] = -1.0, a**2, 1.0
        geo = metric_geometry(make_field(grid, [g, np.zeros_like(g)], "dd", symmetry="sym"))
        exact = 0.3 * np.cos(x) / a
        errs.append(np.max(np.abs(geo.christoffel.data[0, 1, 1, 1] - exact)))
    assert abs(order(pts, errs) - 4) < 0.3


def test_signature_error_reports_point():
    grid = build_grid(4, 1, 8)
    g = flat_metric(grid).data[0].copy()
    g[0, 0, 5] = 1.0
    with pytest.raises(SignatureError, match=r"\(5,\)"):
        metric_geometry(make_field(grid, g, "dd", symmetry="sym"))


def test_flat_ricci_vanishes():
    grid = build_grid(4, 2, 16)
    geo = metric_geometry(flat_metric(grid, levels=3))
    assert field_norms(ricci(geo))[0] < 1e-14
    assert field_norms(scalar_curvature(geo))[0] < 1e-14


def test_conformally_flat_torus_scalar_curvature():
    errs, pts = [], (16, 32, 64)
    for n in pts:
        grid = build_grid(3, 2, n)
        x, y = grid.coords()
        psi = 0.2 * np.sin(x) * np.cos(y)
        lap = -0.4 * np.sin(x) * np.cos(y)
        e = np.exp(2 * psi)
        g = np.zeros((2, 2) + grid.shape)
        g[0, 0] = g[1, 1] = e
        geo = metric_geometry(make_field(grid, g, "dd", spatial=True, symmetry="sym"))
        sc = scalar_curvature(geo).data[0]
        errs.append(np.max(np.abs(sc + 2 * np.exp(-2 * psi) * lap)))
    assert abs(order(pts, errs) - 4) < 0.3


def test_ricci_symmetric(rng):
    grid = build_grid(4, 2, 16)
    geo = metric_geometry(random_metric(rng, 4, 0.2).jet(grid, 0.0, 3))
    r = ricci(geo).data
    assert np.max(np.abs(r - np.swapaxes(r, 1, 2))) < 1e-14


def test_metric_compatibility(rng):
    # the discrete connection annihilates the discrete metric identically
    grid = build_grid(4, 2, 16)
    geo = metric_geometry(random_metric(rng, 4, 0.2).jet(grid, 0.2, 2))
    assert field_norms(covariant_derivative(geo.g, geo))[0] < 1e-12


def test_inverse_times_metric_is_identity(rng):
    grid = build_grid(4, 2, 12)
    geo = metric_geometry(random_metric(rng, 4, 0.2).jet(grid, 0.0, 2))
    prod = contract("ab,bc->ac", geo.g, geo.ginv.with_data(geo.ginv.data, indices="dd")).data[0]
    assert np.max(np.abs(prod - np.eye(4)[:, :, None, None])) < 1e-13


def test_flat_box_is_laplacian():
    errs, pts = [], (16, 32, 64)
    for n in pts:
        grid = build_grid(4, 2, n)
        x, y = grid.coords()
        f = np.sin(x) * np.cos(2 * y)
        phi = make_field(grid, [f, np.zeros_like(f), np.zeros_like(f)])
        geo = metric_geometry(flat_metric(grid, levels=3))
        errs.append(np.max(np.abs(box(phi, geo).data[0] + 5 * f)))
    assert abs(order(pts, errs) - 4) < 0.3


def test_hessian_symmetric(rng):
    grid = build_grid(4, 2, 16)
    geo = metric_geometry(random_metric(rng, 4, 0.2).jet(grid, 0.0, 3))
    phi = random_scalar(rng, 0.3).jet(grid, 0.0, 3)
    H = hessian(phi, geo).data
    assert np.max(np.abs(H - np.swapaxes(H, 1, 2))) == 0.0


def test_divergence_of_metric_and_zero(rng):
    grid = build_grid(4, 2, 16)
    geo = metric_geometry(random_metric(rng, 4, 0.2).jet(grid, 0.1, 2))
    assert field_norms(divergence(geo.g, geo))[0] < 1e-12
    geo = metric_geometry(flat_metric(build_grid(4, 1, 16), levels=2))
    assert not np.any(divergence(geo.g * 0.0, geo).data)


def test_contracted_bianchi(rng):
    gA = random_metric(rng, 4, 0.2)
    errs, pts = [], (16, 32, 64)
    for n in pts:
        grid = build_grid(4, 2, n)
        geo = metric_geometry(gA.jet(grid, 0.1, 4))
        errs.append(field_norms(divergence(einstein_tensor(geo), geo))[0])
    assert abs(order(pts, errs) - 4) < 0.3


def test_conformal_ricci_identity(rng):
    gA, vA = random_metric(rng, 4, 0.2), random_scalar(rng, 0.2)
    errs, pts = [], (16, 32, 64)
    for n in pts:
        grid = build_grid(4, 2, n)
        g, v = gA.jet(grid, 0.3, 3), vA.jet(grid, 0.3, 3)
        geo = metric_geometry(g)
        gt = contract(",ab->ab", jexp(v, 2.0), g)
        direct = ricci(metric_geometry(gt))
        errs.append(field_norms(direct - conformal_ricci(ricci(geo), geo, v))[0])
    assert abs(order(pts, errs) - 4) < 0.3
