from __future__ import annotations

import numpy as np
import pytest

from conftest import order
from gee_lab.analytic import AnalyticTensor, random_form, random_metric, wave
from gee_lab.forms import (c_contraction, codifferential, deturck_vector, exterior_derivative,
                           form_norm2, h_square, interior_covector, k_dot,
                           modified_codifferential, modified_codifferential_split)
from gee_lab.geometry import flat_metric, metric_geometry, trace
from gee_lab.grid import GridError, antisymmetrize, build_grid, field_norms, make_field


def _spatial_form(rng, grid, degree):
    return random_form(rng, grid.n, degree, 0.3, grid.n_active, spatial=True).jet(grid)


@pytest.mark.parametrize("degree", [1, 2])
def test_dd_vanishes_on_spatial_forms(rng, degree):
    grid = build_grid(4, 2, 16)
    A = _spatial_form(rng, grid, degree)
    assert field_norms(exterior_derivative(exterior_derivative(A)))[0] < 1e-12


def test_constant_form_is_closed():
    grid = build_grid(4, 2, 8)
    A = make_field(grid, np.ones((3, 3) + grid.shape) * np.array([[0, 1, 0], [-1, 0, 0], [0, 0, 0]])[:, :, None, None],
                   "dd", spatial=True, symmetry="antisym")
    assert not np.any(exterior_derivative(A).data)


def test_dA_matches_hand_derivative():
    # A = f(x) dx^2, dA = d_1 f dx^1 ^ dx^2
    errs, pts = [], (16, 32, 64)
    for n in pts:
        grid = build_grid(4, 2, n)
        x = grid.coords()[0]
        f = np.sin(x) ** 2
        a = np.zeros((3,) + grid.shape)
        a[1] = f
        dA = exterior_derivative(make_field(grid, a, "d", spatial=True)).data[0]
        errs.append(np.max(np.abs(dA[0, 1] - np.sin(2 * x))) + np.max(np.abs(dA[1, 0] + np.sin(2 * x))))
    assert abs(order(pts, errs) - 4) < 0.3


def test_codifferential_of_zero_and_zero_form():
    grid = build_grid(4, 1, 8)
    geo = metric_geometry(flat_metric(grid, levels=3))
    Z = make_field(grid, [np.zeros((4, 4) + grid.shape)] * 3, "dd", symmetry="antisym")
    assert not np.any(codifferential(Z, geo).data)
    with pytest.raises(GridError):
        codifferential(make_field(grid, np.zeros(grid.shape)), geo)


def test_codifferential_squared_converges(rng):
    gA, BA = random_metric(rng, 4, 0.15), random_form(rng, 4, 2, 0.3)
    errs, pts = [], (16, 32, 64)
    for n in pts:
        grid = build_grid(4, 2, n)
        geo = metric_geometry(gA.jet(grid, 0.1, 4))
        B = BA.jet(grid, 0.1, 4)
        errs.append(field_norms(codifferential(codifferential(B, geo), geo))[0])
    assert abs(order(pts, errs) - 4) < 0.3


def test_codifferential_of_interior_with_closed_covector(rng):
    # xi = d f is closed; d*(i_xi H) = -i_xi(d*H)
    gA, HA = random_metric(rng, 4, 0.15), random_form(rng, 4, 3, 0.3)
    fA = AnalyticTensor(0, {(): wave(0.4, (1, 1), omega=0.5)}, "")
    errs, pts = [], (16, 32, 64)
    for n in pts:
        grid = build_grid(4, 2, n)
        geo = metric_geometry(gA.jet(grid, 0.0, 4))
        H = HA.jet(grid, 0.0, 4)
        xi = exterior_derivative(fA.jet(grid, 0.0, 4))
        lhs = codifferential(interior_covector(xi, H, geo), geo)
        rhs = interior_covector(xi.truncate(2), codifferential(H, geo), geo) * -1.0
        errs.append(field_norms(lhs - rhs)[0])
    assert abs(order(pts, errs) - 4) < 0.3


def test_interior_with_zero_covector(rng):
    grid = build_grid(4, 2, 8)
    geo = metric_geometry(flat_metric(grid, levels=2))
    H = random_form(rng, 4, 3, 0.3).jet(grid, 0.0, 1)
    xi = make_field(grid, np.zeros((4,) + grid.shape), "d")
    assert not np.any(interior_covector(xi, H, geo).data)


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_k_dot_identity_endomorphism(rng, degree):
    grid = build_grid(4, 2, 8)
    sigma = metric_geometry(random_metric(rng, 3, 0.2, spatial=True).jet(grid), check=False)
    lam = 0.37
    k = sigma.g * lam
    A = _spatial_form(rng, grid, degree)
    assert field_norms(k_dot(k, A, sigma) + A * (degree * lam))[0] < 1e-13


def test_c_contraction_with_zero_h(rng):
    grid = build_grid(4, 2, 8)
    sigma = metric_geometry(random_metric(rng, 3, 0.2, spatial=True).jet(grid), check=False)
    H = _spatial_form(rng, grid, 3)
    h = _spatial_form(rng, grid, 2) * 0.0
    assert not np.any(c_contraction(h, H, sigma).data)


def test_h_square_trace_is_norm(rng):
    grid = build_grid(4, 2, 12)
    geo = metric_geometry(random_metric(rng, 4, 0.2).jet(grid, 0.0, 2))
    H = random_form(rng, 4, 3, 0.5).jet(grid, 0.0, 1)
    Hs = h_square(H, geo)
    assert not np.any(Hs.data - np.swapaxes(Hs.data, 1, 2))
    assert field_norms(trace(Hs, geo) - form_norm2(H, geo))[0] < 1e-13
    assert not np.any(h_square(H * 0.0, geo).data)


def test_single_component_norm():
    grid = build_grid(4, 1, 8)
    geo = metric_geometry(flat_metric(grid, levels=2))
    c = 0.7
    h = np.zeros((4, 4, 4) + grid.shape)
    h[0, 1, 2] = c
    H = antisymmetrize(make_field(grid, h, "ddd"), 6.0)
    assert np.allclose(form_norm2(H, geo).data[0], -6 * c**2, atol=1e-15)


def test_modified_codifferential_reduces_to_codifferential(rng):
    gA, BA = random_metric(rng, 4, 0.15), random_form(rng, 4, 2, 0.3)
    errs, pts = [], (16, 32, 64)
    for n in pts:
        grid = build_grid(4, 2, n)
        geo = metric_geometry(gA.jet(grid, 0.0, 3))
        B = BA.jet(grid, 0.0, 3)
        C = modified_codifferential(B, geo, geo.christoffel.truncate(2))
        errs.append(field_norms(C - codifferential(B, geo).truncate(C.levels))[0])
        assert field_norms(deturck_vector(geo, geo.christoffel))[0] < 1e-14
    assert max(errs) < 1e-12 or abs(order(pts, errs) - 4) < 0.3


def test_modified_codifferential_split_agrees(rng):
    gA, bA, BA = random_metric(rng, 4, 0.15), random_metric(rng, 4, 0.15), random_form(rng, 4, 2, 0.3)
    errs, pts = [], (16, 32, 64)
    for n in pts:
        grid = build_grid(4, 2, n)
        geo = metric_geometry(gA.jet(grid, 0.0, 3))
        Gb = metric_geometry(bA.jet(grid, 0.0, 3)).christoffel
        B = BA.jet(grid, 0.0, 3)
        a = modified_codifferential(B, geo, Gb)
        b = modified_codifferential_split(B, geo, Gb)
        k = min(a.levels, b.levels)
        errs.append(field_norms(a.truncate(k) - b.truncate(k))[0])
    assert max(errs) < 1e-12 or abs(order(pts, errs) - 4) < 0.3
    assert modified_codifferential(B * 0.0, geo, Gb).data.max() == 0.0


def test_modified_codifferential_frame_shift_scaling(rng):
    grid = build_grid(4, 2, 16)
    gA, bA, BA = random_metric(rng, 4, 0.15), random_metric(rng, 4, 0.15), random_form(rng, 4, 2, 0.3)
    g, gb, B = gA.jet(grid, 0.0, 3), bA.jet(grid, 0.0, 3), BA.jet(grid, 0.0, 3)
    kappa, c = grid.kappa, 0.4
    s = np.exp(-2 * kappa * c)
    C0 = modified_codifferential(B, metric_geometry(g), metric_geometry(gb).christoffel)
    C1 = modified_codifferential(B, metric_geometry(g * s), metric_geometry(gb * s).christoffel)
    assert field_norms(C1 - C0 * np.exp(2 * kappa * c))[0] < 1e-13
