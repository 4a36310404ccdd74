"""Constraint residuals, explicit initial jets and the initial gauge check."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forms import (c_contraction, codifferential, deturck_vector, exterior_derivative,
                    interior_covector, modified_codifferential)
from .gauge import BackgroundFields, accelerations
from .geometry import divergence, metric_geometry, norm2, scalar_curvature, trace
from .grid import Grid, TensorField, contract, field_norms, grad, make_field
from .hypersurface import SliceData, decompose, slice_frame

# constraints ------------------------------------------------------------------


def _kk(k: TensorField, sigma) -> tuple[TensorField, TensorField]:
    trk = trace(k, sigma)
    return trk, norm2(k, sigma)


def _ik(xi: TensorField, k: TensorField, sigma) -> TensorField:
    return contract("ab,a,bn->n", sigma.ginv, xi, k)


def string_constraint_residuals(data: SliceData):
    """(r1, r2, r3) of the string-frame constraints, zero on admissible data.

    r1 = Sc + (tr k)^2 - |k|^2 - [|H0|^2/12 + |h0|^2/4 + 2 d*xi0 + 2 tr(k) x0 + |xi0|^2 - x0^2]
    r2 = div k - d tr k - [C(h0, H0)/4 - d x0 + i_xi0 k]
    r3 = d*h0 + i_xi0 h0
    """
    if data.frame != "string":
        raise ValueError("string constraints need string-frame data")
    sigma = data.geometry()
    k, x0, xi = data.k, data.x0, data.xi0
    trk, k2 = _kk(k, sigma)
    sc = scalar_curvature(sigma)
    rhs1 = (norm2(data.H0, sigma) / 12.0 + norm2(data.h0, sigma) * 0.25
            + codifferential(xi, sigma) * 2.0 + contract(",->", trk, x0) * 2.0
            + norm2(xi, sigma) - contract(",->", x0, x0))
    r1 = sc + contract(",->", trk, trk) - k2 - rhs1
    rhs2 = c_contraction(data.h0, data.H0, sigma) * 0.25 - grad(x0) + _ik(xi, k, sigma)
    r2 = divergence(k, sigma) - grad(trk) - rhs2
    r3 = codifferential(data.h0, sigma) + interior_covector(xi, data.h0, sigma)
    return r1, r2, r3


def einstein_constraint_residuals(data: SliceData):
    """(r1, r2, r3) of the Einstein-frame constraints.

    r1 = Sc + (tr k)^2 - |k|^2 - kappa (|dphi0|^2 + phi1^2) - e^{-4 kappa phi0} (|H0|^2 + 3|h0|^2)/12
    r2 = div k - d tr k - kappa phi1 dphi0 - e^{-4 kappa phi0} C(h0, H0)/4
    r3 = d*h0 + 4 kappa i_{dphi0} h0
    """
    if data.frame != "einstein":
        raise ValueError("Einstein constraints need Einstein-frame data")
    kap = data.grid.kappa
    sigma = data.geometry()
    k, phi0, phi1 = data.k, data.phi0, data.phi1
    trk, k2 = _kk(k, sigma)
    dphi = grad(phi0)
    e4 = phi0.with_data(np.exp(-4 * kap * phi0.data))
    sc = scalar_curvature(sigma)
    mat = norm2(data.H0, sigma) + norm2(data.h0, sigma) * 3.0
    r1 = (sc + contract(",->", trk, trk) - k2
          - (norm2(dphi, sigma) + contract(",->", phi1, phi1)) * kap
          - contract(",->", e4, mat) / 12.0)
    r2 = (divergence(k, sigma) - grad(trk) - contract(",a->a", phi1, dphi) * kap
          - contract(",a->a", e4, c_contraction(data.h0, data.H0, sigma)) * 0.25)
    r3 = codifferential(data.h0, sigma) + interior_covector(dphi, data.h0, sigma) * (4 * kap)
    return r1, r2, r3


def constraint_residuals(data: SliceData):
    if data.frame == "string":
        return string_constraint_residuals(data)
    return einstein_constraint_residuals(data)


def constraint_norms(data: SliceData) -> tuple[float, float, float]:
    return tuple(field_norms(r)[0] for r in constraint_residuals(data))


def constraint_tolerance(grid: Grid, scale: float = 1.0) -> float:
    return max(1e-10, 10.0 * grid.h ** grid.order * scale)


# data families ------------------------------------------------------------------


def _spatial(grid: Grid, value, indices: str, symmetry=None) -> TensorField:
    return make_field(grid, value, indices, spatial=True, symmetry=symmetry)


def lambda_root(n: int, lam: float, sign: float = 1.0) -> float:
    """x0 solving the first string constraint for flat g0, k = lam * id."""
    return n * lam + sign * lam * np.sqrt(n)


def lambda_family(grid: Grid, lam: float = 0.1, x0: float | None = None) -> SliceData:
    """String-frame data: flat torus, k = lam delta, H = xi = h = 0, constant x0."""
    n = grid.n
    x0 = lambda_root(n, lam) if x0 is None else x0
    eye = np.eye(n).reshape((n, n) + (1,) * grid.n_active) * np.ones(grid.shape)
    return SliceData(
        "string",
        _spatial(grid, eye, "dd", "sym"),
        _spatial(grid, lam * eye, "dd", "sym"),
        _spatial(grid, np.zeros((n, n, n) + grid.shape), "ddd", "antisym"),
        _spatial(grid, np.zeros((n, n) + grid.shape), "dd", "antisym"),
        _spatial(grid, np.full(grid.shape, float(x0)), ""),
        phi0=_spatial(grid, np.zeros(grid.shape), ""),
    )


def pulse_family(grid: Grid, lam: float = 0.1, eps: float = 0.05, beta: float = 0.05,
                 x0: float | None = None) -> SliceData:
    """Einstein-frame data with a dilaton pulse along the first axis.

    Flat g0, H0 = 0, h0 = beta dx2^dx3 (constant), phi0 = eps sin(2 pi x1 / L),
    phi1 = x0 and k = diag(k11, a, ..., a) with

        a   = mu - kappa x0 phi0 / (n - 1),   mu = lam - kappa x0
        k11 = [kappa (phi0'^2 + x0^2) + e^{-4 kappa phi0} |h0|^2 / 4 - (n-1)(n-2) a^2] / (2 (n-1) a)

    which solves the Einstein constraints exactly. For eps = beta = 0 this is
    the lambda family transformed to the Einstein frame.
    """
    n = grid.n
    if n < 3:
        raise ValueError("the pulse family needs at least three spatial dimensions")
    kap = grid.kappa
    x0 = lambda_root(n, lam) if x0 is None else x0
    x = grid.coords()[0]
    w = 2.0 * np.pi / grid.length
    phi0 = eps * np.sin(w * x)
    dphi = eps * w * np.cos(w * x)
    mu = lam - kap * x0
    a = mu - kap * x0 * phi0 / (n - 1)
    h2 = 2.0 * beta**2
    k11 = (kap * (dphi**2 + x0**2) + np.exp(-4 * kap * phi0) * h2 / 4
           - (n - 1) * (n - 2) * a**2) / (2 * (n - 1) * a)
    k = np.zeros((n, n) + grid.shape)
    k[0, 0] = k11
    for i in range(1, n):
        k[i, i] = a
    eye = np.eye(n).reshape((n, n) + (1,) * grid.n_active) * np.ones(grid.shape)
    h0 = np.zeros((n, n) + grid.shape)
    h0[1, 2], h0[2, 1] = beta, -beta
    return SliceData(
        "einstein",
        _spatial(grid, eye, "dd", "sym"),
        _spatial(grid, k, "dd", "sym"),
        _spatial(grid, np.zeros((n, n, n) + grid.shape), "ddd", "antisym"),
        _spatial(grid, h0, "dd", "antisym"),
        _spatial(grid, np.full(grid.shape, float(x0)), ""),
        phi0=_spatial(grid, phi0, ""),
    )


# initial jets ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class InitialJet:
    """Cauchy data (value and d_t) of g, B and phi on the t = 0 slice."""

    g: TensorField
    B: TensorField
    phi: TensorField

    @property
    def grid(self) -> Grid:
        return self.g.grid

    @property
    def u(self):
        return self.g.data[0], self.B.data[0], self.phi.data[0]

    @property
    def v(self):
        return self.g.data[1], self.B.data[1], self.phi.data[1]


def _spacetime(grid: Grid, levels, indices: str, symmetry=None) -> TensorField:
    return TensorField(grid, np.stack(levels), indices, False, False, symmetry)


def setup_metric_dilaton(data: SliceData, bg: BackgroundFields) -> InitialJet:
    """Metric and dilaton jet fixed by the unit normal, the data and D = 0.

    g_mn = g0, g_00 = -e^{-2 kappa phi0}, g_0n = 0,
    d_t g_mn = 2 e^{-kappa phi0} k_mn,
    d_t g_00 = -2 e^{-2 kappa phi0} [F_0 + e^{-kappa phi0} tr k],
    d_t g_0k = e^{-2 kappa phi0} [Gamma_k(g0) - F_k + kappa d_k phi0],
    phi = phi0, d_t phi = e^{-kappa phi0} phi1.
    The B-field part is left at zero.
    """
    if data.frame != "einstein":
        raise ValueError("the initial jet is built from Einstein-frame data")
    grid = data.grid
    d, kap = grid.dim, grid.kappa
    p0 = data.phi0.data[0]
    e1, e2 = np.exp(-kap * p0), np.exp(-2 * kap * p0)
    g = np.zeros((d, d) + grid.shape)
    g[0, 0] = -e2
    g[1:, 1:] = data.g0.data[0]
    sigma = data.geometry()
    gi = np.zeros_like(g)
    gi[0, 0] = -1.0 / e2
    gi[1:, 1:] = sigma.ginv.data[0]
    F = np.einsum("nm...,ab...,mab...->n...", g, gi, bg.Gbar)
    trk = trace(data.k, sigma).data[0]
    dphi = grad(data.phi0).data[0]
    gam = sigma.contracted.data[0]
    vg = np.zeros_like(g)
    vg[1:, 1:] = 2 * e1 * data.k.data[0]
    vg[0, 0] = -2 * e2 * (F[0] + e1 * trk)
    vg[0, 1:] = vg[1:, 0] = e2 * (gam - F[1:] + kap * dphi)
    zero_B = np.zeros((d, d) + grid.shape)
    return InitialJet(
        _spacetime(grid, [g, vg], "dd", "sym"),
        _spacetime(grid, [zero_B, zero_B.copy()], "dd", "antisym"),
        _spacetime(grid, [p0.copy(), e1 * data.phi1.data[0]], ""),
    )


def _B_jet(grid, geom, e1, B0, b1, B1):
    d = grid.dim
    B = np.zeros((d, d) + grid.shape)
    B[1:, 1:] = B0
    G = geom.christoffel.data[0]
    vB = np.zeros_like(B)
    Bs = B[1:, 1:]
    Gs = G[1:, 0, 1:]  # Gamma^l_{0m}
    vB[1:, 1:] = (e1 * B1 + np.einsum("lm...,ln...->mn...", Gs, Bs)
                  + np.einsum("ln...,ml...->mn...", Gs, Bs))
    G00 = G[1:, 0, 0]  # Gamma^m_{00}
    v0 = e1**2 * b1 + np.einsum("m...,mn...->n...", G00, Bs)
    vB[0, 1:] = v0
    vB[1:, 0] = -v0
    return B, vB


def setup_bfield(data: SliceData, jet: InitialJet, bg: BackgroundFields) -> InitialJet:
    """B jet with B^par = B0, (nabla_N B)^par = B1, B(N) = 0 and C^par = 0.

    With N = e^{kappa phi0} d_t, b0 = 0 and

        d_t B_mn = e^{-kappa phi0} B1_mn + Gamma^l_0m B_ln + Gamma^l_0n B_ml
        d_t B_0n = e^{-2 kappa phi0} b1_n + Gamma^m_00 B_mn

    b1 is fixed by evaluating C^par with b1 = 0 and subtracting, since C^par
    depends on b1 with unit coefficient.
    """
    grid = jet.grid
    n = grid.n
    kap = grid.kappa
    e1 = np.exp(-kap * data.phi0.data[0])
    zero2 = np.zeros((n, n) + grid.shape)
    B0 = zero2 if data.B0 is None else data.B0.data[0]
    B1 = zero2 if data.B1 is None else data.B1.data[0]
    geom = metric_geometry(jet.g)
    Gb = bg.christoffel_field()
    zero1 = np.zeros((n,) + grid.shape)
    B, vB = _B_jet(grid, geom, e1, B0, zero1, B1)
    trial = _spacetime(grid, [B, vB], "dd", "antisym")
    C = modified_codifferential(trial, geom, Gb).data[0]
    b1 = -C[1:]
    B, vB = _B_jet(grid, geom, e1, B0, b1, B1)
    return InitialJet(jet.g, _spacetime(grid, [B, vB], "dd", "antisym"), jet.phi)


def initial_jet(data: SliceData, bg: BackgroundFields) -> InitialJet:
    return setup_bfield(data, setup_metric_dilaton(data, bg), bg)


# three-level jets and gauge quantities -------------------------------------------


def extend_jet(grid: Grid, u, v, bg: BackgroundFields, t: float = 0.0, source=None):
    """(g, B, phi) as three-level fields, d_t^2 taken from the modified system."""
    a = accelerations(grid, u, v, bg.at(t), source)
    g = _spacetime(grid, [u[0], v[0], a[0]], "dd", "sym")
    B = _spacetime(grid, [u[1], v[1], a[1]], "dd", "antisym")
    phi = _spacetime(grid, [u[2], v[2], a[2]], "")
    return g, B, phi


def gauge_fields(g: TensorField, B: TensorField, bg: BackgroundFields, geom=None) -> dict:
    """D (with d_t D), C and dC for jets carrying at least two time derivatives."""
    geom = metric_geometry(g) if geom is None else geom
    Gb = bg.christoffel_field()
    D = deturck_vector(geom, Gb)
    C = modified_codifferential(B, geom, Gb)
    dC = exterior_derivative(C)
    return {"D": D, "C": C, "dC": dC, "geom": geom}


def initial_gauge_check(jet: InitialJet, bg: BackgroundFields, data: SliceData | None = None,
                        factor: float = 100.0) -> dict:
    """Norms of D, d_t D, C^par and dC on the initial slice with a verdict."""
    grid = jet.grid
    g, B, _ = extend_jet(grid, jet.u, jet.v, bg)
    gf = gauge_fields(g, B, bg)
    D, C, dC = gf["D"], gf["C"], gf["dC"]
    C_par = decompose(C.truncate(1), slice_frame(g.truncate(2)))[0]
    out = {
        "deturck": field_norms(D.level(0))[0],
        "deturck_rate": field_norms(D.level(1))[0],
        "C_par": field_norms(C_par)[0],
        "dC": field_norms(dC.level(0))[0],
    }
    if data is not None:
        scale = max(1.0, float(np.max(np.abs(data.k.data))), float(np.max(np.abs(data.phi1.data))))
    else:
        scale = 1.0
    thr = max(1e-12, factor * grid.h ** grid.order * scale)
    out["threshold"] = thr
    out["passed"] = all(out[k] <= thr for k in ("deturck", "deturck_rate", "C_par", "dC"))
    return out
