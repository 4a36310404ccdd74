from __future__ import annotations

import numpy as np
import pytest

from conftest import order
from gee_lab.grid import (GridError, NonFiniteError, TensorField, antisymmetrize, build_grid,
                          contract, field_norms, grad, inverse, jexp, make_field,
                          partial_derivative)


def test_build_grid_spacing():
    g = build_grid(4, 1, 64, 2 * np.pi, 4)
    assert g.h == pytest.approx(2 * np.pi / 64)
    assert g.shape == (64,)
    assert g.kappa == pytest.approx(0.5)


def test_build_grid_rejects_two_dimensions():
    with pytest.raises(GridError, match="dimension must be >= 3"):
        build_grid(2, 1, 32)


def test_build_grid_ten_dimensions():
    g = build_grid(10, 2, 32)
    assert g.shape == (32, 32)
    assert g.kappa == pytest.approx(1 / 8)


@pytest.mark.parametrize("kw", [dict(length=0.0), dict(points=3), dict(order=3)])
def test_build_grid_rejects_bad_parameters(kw):
    args = dict(d=4, n_active=1, points=32, length=1.0, order=4)
    args.update(kw)
    with pytest.raises(GridError):
        build_grid(**args)


def test_build_grid_rejects_n_active():
    with pytest.raises(GridError):
        build_grid(4, 3, 32)


def _scalar(grid, arr, levels=1):
    return make_field(grid, [arr] + [np.zeros_like(arr)] * (levels - 1), spatial=True)


def test_derivative_of_constant_vanishes():
    grid = build_grid(4, 2, 32)
    f = _scalar(grid, np.full(grid.shape, 3.7))
    for ax in (1, 2, 3):
        assert np.max(np.abs(partial_derivative(f, ax).data)) < 1e-13 * 3.7


@pytest.mark.parametrize("p", [2, 4])
def test_derivative_of_sine_converges_at_order_p(p):
    errs, pts = [], (16, 32, 64)
    for n in pts:
        grid = build_grid(4, 1, n, 2.0, p)
        x = grid.coords()[0]
        f = _scalar(grid, np.sin(2 * np.pi * x / 2.0))
        exact = np.pi * np.cos(np.pi * x)
        errs.append(np.max(np.abs(partial_derivative(f, 1).data[0] - exact)))
    assert abs(errs[-2] / errs[-1] / 2**p - 1) < 0.15
    assert abs(order(pts, errs) - p) < 0.3


def test_derivative_along_inactive_axis_is_zero():
    grid = build_grid(4, 1, 16)
    x = grid.coords()[0]
    f = _scalar(grid, np.sin(x))
    assert not np.any(partial_derivative(f, 2).data)


def test_time_derivative_needs_levels():
    grid = build_grid(4, 1, 16)
    f = make_field(grid, np.ones(grid.shape))
    with pytest.raises(GridError):
        partial_derivative(f, 0)
    f2 = make_field(grid, [np.ones(grid.shape), 2 * np.ones(grid.shape)])
    assert np.all(partial_derivative(f2, 0).data[0] == 2.0)


def test_derivatives_commute():
    grid = build_grid(4, 2, 24)
    x, y = grid.coords()
    f = _scalar(grid, np.sin(x) * np.cos(2 * y) + np.exp(np.sin(x + y)))
    a = partial_derivative(partial_derivative(f, 1), 2).data
    b = partial_derivative(partial_derivative(f, 2), 1).data
    assert np.max(np.abs(a - b)) < 1e-12


def test_field_norms_examples():
    grid = build_grid(4, 1, 16, 1.0)
    z = make_field(grid, np.zeros(grid.shape))
    assert field_norms(z) == (0.0, 0.0)
    c = make_field(grid, np.full(grid.shape, -2.5))
    assert field_norms(c) == pytest.approx((2.5, 2.5))


def test_field_norms_single_spike():
    grid = build_grid(4, 1, 16, 1.0)
    a = np.zeros((3,) + grid.shape)
    a[1, 5] = 1.0
    f = make_field(grid, a, "d", spatial=True)
    linf, l2 = field_norms(f)
    assert linf == 1.0
    # root mean square over points and components
    assert l2 == pytest.approx(1 / np.sqrt(16 * 3))


def test_field_norms_rejects_nan():
    grid = build_grid(4, 1, 16)
    a = np.zeros(grid.shape)
    a[3] = np.nan
    with pytest.raises(NonFiniteError, match=r"\(3,\)"):
        field_norms(make_field(grid, a))


def test_symmetry_declaration_is_checked():
    grid = build_grid(4, 1, 8)
    a = np.zeros((4, 4) + grid.shape)
    a[0, 1] = 1.0
    with pytest.raises(GridError):
        TensorField(grid, a[None], "dd", symmetry="sym")
    with pytest.raises(GridError):
        TensorField(grid, a[None], "dd", symmetry="antisym")


def test_leibniz_levels_of_product(rng):
    grid = build_grid(4, 1, 8)
    f = make_field(grid, [rng.normal(size=grid.shape) for _ in range(3)])
    g = make_field(grid, [rng.normal(size=grid.shape) for _ in range(3)])
    fg = contract(",->", f, g)
    a, b = f.data, g.data
    assert np.allclose(fg.data[1], a[1] * b[0] + a[0] * b[1])
    assert np.allclose(fg.data[2], a[2] * b[0] + 2 * a[1] * b[1] + a[0] * b[2])


def test_jexp_levels(rng):
    grid = build_grid(4, 1, 8)
    x = [rng.normal(size=grid.shape) * 0.3 for _ in range(3)]
    e = jexp(make_field(grid, x), -2.0)
    ex = np.exp(-2 * x[0])
    assert np.allclose(e.data[0], ex)
    assert np.allclose(e.data[1], -2 * x[1] * ex)
    assert np.allclose(e.data[2], (4 * x[1] ** 2 - 2 * x[2]) * ex)


def test_inverse_levels(rng):
    grid = build_grid(4, 1, 6)
    m = np.eye(4)[:, :, None] * np.ones(grid.shape) + 0.1 * rng.normal(size=(4, 4) + grid.shape)
    levels = [m, rng.normal(size=m.shape), rng.normal(size=m.shape)]
    gi = inverse(make_field(grid, levels, "dd"))
    eye = contract("ab,bc->ac", make_field(grid, levels, "dd"),
                   gi.with_data(gi.data, indices="dd"))
    target = np.zeros_like(eye.data)
    target[0] = np.eye(4)[:, :, None]
    assert np.max(np.abs(eye.data - target)) < 1e-12


def test_grad_of_spacetime_field_uses_time_level():
    grid = build_grid(4, 1, 16)
    x = grid.coords()[0]
    f = make_field(grid, [np.sin(x), np.cos(x)])
    df = grad(f)
    assert np.allclose(df.data[0, 0], np.cos(x))
    assert df.levels == 1


def test_antisymmetrize_idempotent(rng):
    grid = build_grid(4, 1, 6)
    a = antisymmetrize(make_field(grid, rng.normal(size=(4, 4, 4) + grid.shape), "ddd"))
    b = antisymmetrize(a)
    assert np.max(np.abs(a.data - b.data)) < 1e-14
