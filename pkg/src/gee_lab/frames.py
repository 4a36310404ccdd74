"""String and Einstein frame field equations, stress tensor and data maps.

Residual orientation: every residual is "left-hand side minus right-hand
side" of the equation as written below, so it vanishes on solutions.

String frame (xi the closed dilaton 1-form, box phi := -d*xi):
    res_H   = d*H + i_xi H
    res_Rc  = Rc - H^2/4 + sym(nabla xi)
    res_phi = -d*xi - |xi|^2 + |H|^2/6

Einstein frame (kappa = 1/(d-2), xi = dphi):
    res_H   = d*H + 4 kappa i_xi H
    res_Rc  = Rc - kappa (xi xi - e^{-4 kappa phi} |H|^2 g / 6) - e^{-4 kappa phi} H^2 / 4
    res_phi = box phi + e^{-4 kappa phi} |H|^2 / 6
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forms import codifferential, exterior_derivative, h_square, interior_covector, wedge
from .geometry import (MetricGeometry, box, covariant_derivative, divergence,
                       metric_geometry, norm2, ricci, symmetrize)
from .grid import TensorField, contract, grad, jexp
from .hypersurface import SliceData


@dataclass(frozen=True, eq=False)
class FrameTuple:
    frame: str
    g: TensorField
    H: TensorField
    dilaton: TensorField  # phi (scalar) or, in the string frame, possibly xi (1-form)

    def __post_init__(self):
        if self.frame not in ("string", "einstein"):
            raise ValueError(f"unknown frame {self.frame!r}")
        if self.frame == "einstein" and self.dilaton.rank != 0:
            raise ValueError("the Einstein frame needs the dilaton itself")


def _scale(s: TensorField, T: TensorField) -> TensorField:
    letters = "abcdefgh"[:T.rank]
    k = min(s.levels, T.levels) if not (s.static or T.static) else None
    return contract(f",{letters}->{letters}", s, T, levels=k)


def conformal_convert(ft: FrameTuple, to: str) -> FrameTuple:
    """g~ = exp(-2 kappa phi) g between the frames; H and phi are unchanged."""
    if ft.frame == to:
        return ft
    if ft.dilaton.rank != 0:
        raise ValueError("frame conversion needs a potential for xi")
    kap = ft.g.grid.kappa
    c = -2 * kap if to == "einstein" else 2 * kap
    g = _scale(jexp(ft.dilaton, c), ft.g)
    return FrameTuple(to, g.with_data(g.data, symmetry="sym"), ft.H, ft.dilaton)


def string_residuals(g: TensorField, H: TensorField, dilaton: TensorField,
                     geom: MetricGeometry | None = None) -> dict:
    geom = metric_geometry(g) if geom is None else geom
    if dilaton.rank == 0:
        xi = grad(dilaton)
    else:
        xi = dilaton
        check_closed(xi)
    rc = ricci(geom)
    k = rc.levels
    res_H = codifferential(H, geom) + interior_covector(xi.truncate(1), H.truncate(1), geom)
    nxi = symmetrize(covariant_derivative(xi, geom)).truncate(k)
    H2 = h_square(H.truncate(k), geom)
    res_Rc = rc - H2 * 0.25 + nxi
    dsxi = codifferential(xi, geom).truncate(k)
    res_phi = dsxi * -1.0 - norm2(xi.truncate(k), geom) + norm2(H.truncate(k), geom) / 6.0
    return {"H": res_H.truncate(1), "Rc": res_Rc.truncate(1), "phi": res_phi.truncate(1)}


def einstein_residuals(g: TensorField, H: TensorField, phi: TensorField,
                       geom: MetricGeometry | None = None) -> dict:
    geom = metric_geometry(g) if geom is None else geom
    kap = g.grid.kappa
    xi = grad(phi)
    rc = ricci(geom)
    k = rc.levels
    e4 = jexp(phi, -4 * kap).truncate(k)
    res_H = (codifferential(H, geom)
             + interior_covector(xi.truncate(1), H.truncate(1), geom) * (4 * kap))
    Hn = norm2(H.truncate(k), geom)
    H2 = h_square(H.truncate(k), geom)
    xx = contract("a,b->ab", xi.truncate(k), xi.truncate(k))
    src = (xx - _scale(contract(",->", e4, Hn), geom.g.truncate(k)) / 6.0) * kap \
        + _scale(e4, H2) * 0.25
    res_Rc = rc - src
    res_phi = box(phi, geom).truncate(k) + contract(",->", e4, Hn) / 6.0
    return {"H": res_H.truncate(1), "Rc": res_Rc.truncate(1), "phi": res_phi.truncate(1)}


def cross_frame_predictions(string_res: dict, phi: TensorField, g: TensorField) -> dict:
    """Einstein residuals predicted from the string ones (``g`` the string metric).

    res~_H = e^{2 kappa phi} res_H, res~_phi = e^{2 kappa phi} res_phi,
    res~_Rc = res_Rc + kappa res_phi g.
    """
    kap = phi.grid.kappa
    e2 = jexp(phi.truncate(1), 2 * kap)
    return {"H": _scale(e2, string_res["H"]), "phi": _scale(e2, string_res["phi"]),
            "Rc": string_res["Rc"] + _scale(string_res["phi"], g.truncate(1)) * kap}


def check_closed(xi: TensorField, factor: float = 10.0) -> None:
    """Raise if the spatial part of d xi exceeds factor * h^p * scale(xi)."""
    grid = xi.grid
    dxi = exterior_derivative(xi.truncate(1) if xi.spatial else xi)
    block = dxi.data[0] if xi.spatial else dxi.data[0][1:, 1:]
    val = float(np.max(np.abs(block))) if block.size else 0.0
    scale = max(float(np.max(np.abs(xi.data[0]))), 1.0)
    if val > max(factor * grid.h ** grid.order * scale, 1e-12):
        raise ValueError(f"dilaton not closed: |d xi| = {val:.3e}")


def stress_tensor(g: TensorField, H: TensorField, phi: TensorField,
                  geom: MetricGeometry | None = None, form: str = "grouped") -> TensorField:
    """T = kappa (xi xi - |xi|^2 g / 2) + e^{-4 kappa phi} (H^2 - |H|^2 g / 6) / 4.

    ``form="split"`` evaluates the algebraically equal
    kappa (xi xi - |xi|^2 g / 2) + e^{-4 kappa phi} H^2 / 4 - e^{-4 kappa phi} |H|^2 g / 24.
    """
    geom = metric_geometry(g) if geom is None else geom
    kap = g.grid.kappa
    xi = grad(phi)
    k = min(xi.levels, H.levels, g.levels)
    xi, Ht, gt = xi.truncate(k), H.truncate(k), g.truncate(k)
    e4 = jexp(phi.truncate(k), -4 * kap)
    xx = contract("a,b->ab", xi, xi)
    x2 = norm2(xi, geom)
    H2 = h_square(Ht, geom)
    Hn = norm2(Ht, geom)
    scal = (xx - _scale(x2, gt) * 0.5) * kap
    if form == "grouped":
        T = scal + _scale(e4, H2 - _scale(Hn, gt) / 6.0) * 0.25
    else:
        T = scal + _scale(e4, H2) * 0.25 - _scale(contract(",->", e4, Hn), gt) / 24.0
    return T.with_data(0.5 * (T.data + np.swapaxes(T.data, 1, 2)), symmetry="sym")


def stress_divergence(g: TensorField, H: TensorField, phi: TensorField,
                      geom: MetricGeometry | None = None) -> TensorField:
    geom = metric_geometry(g) if geom is None else geom
    return divergence(stress_tensor(g, H, phi, geom), geom)


# slice data maps ---------------------------------------------------------------

def _sexp(f: TensorField, c: float) -> TensorField:
    return jexp(f, c)


def _mul(s: TensorField, T: TensorField | None) -> TensorField | None:
    if T is None:
        return None
    return _scale(s, T)


def transform_slice_data(data: SliceData, direction: str = "string->einstein") -> SliceData:
    """Map slice data between frames with the dilaton potential phi0."""
    if data.phi0 is None:
        raise ValueError("frame transformation needs the dilaton potential phi0")
    kap = data.grid.kappa
    phi = data.phi0
    if direction == "string->einstein":
        if data.frame != "string":
            raise ValueError("expected string-frame data")
        gs = data.geometry()
        dphi = grad(phi)
        e1, e2 = _sexp(phi, kap), _sexp(phi, 2 * kap)
        g0 = _mul(_sexp(phi, -2 * kap), data.g0)
        k = _mul(_sexp(phi, -kap), data.k - _scale(data.phi1, data.g0) * kap)
        phi1 = _mul(e1, data.phi1)
        out = SliceData("einstein", g0.with_data(g0.data, symmetry="sym"),
                        k.with_data(k.data, symmetry="sym"), data.H0, _mul(e1, data.h0), phi1, phi)
        if data.B0 is not None:
            b0 = data.b0 if data.b0 is not None else data.B0 * 0.0
            B1 = _mul(e1, data.B1 + _scale(data.phi1, data.B0) * (2 * kap)
                      - wedge(b0, dphi) * kap)
            iB = interior_covector(dphi, data.B0, gs)
            b1 = data.b1 if data.b1 is not None else b0 * 0.0
            b1t = _mul(e2, b1 + _scale(data.phi1, b0) * (2 * kap) + iB * kap)
            out = out.replace(B0=data.B0, b0=_mul(e1, b0), B1=B1, b1=b1t)
        return out
    if direction == "einstein->string":
        if data.frame != "einstein":
            raise ValueError("expected Einstein-frame data")
        dphi = grad(phi)
        em1, em2 = _sexp(phi, -kap), _sexp(phi, -2 * kap)
        g0 = _mul(_sexp(phi, 2 * kap), data.g0)
        phi1 = _mul(em1, data.phi1)
        k = _mul(_sexp(phi, kap), data.k) + _scale(phi1, g0) * kap
        out = SliceData("string", g0.with_data(g0.data, symmetry="sym"),
                        k.with_data(k.data, symmetry="sym"), data.H0, _mul(em1, data.h0),
                        phi1, phi, dphi)
        if data.B0 is not None:
            gs = metric_geometry(g0)
            b0 = _mul(em1, data.b0 if data.b0 is not None else data.B0 * 0.0)
            B1 = (_mul(em1, data.B1) - _scale(phi1, data.B0) * (2 * kap)
                  + wedge(b0, dphi) * kap)
            iB = interior_covector(dphi, data.B0, gs)
            b1 = data.b1 if data.b1 is not None else b0 * 0.0
            b1s = _mul(em2, b1) - _scale(phi1, b0) * (2 * kap) - iB * kap
            out = out.replace(B0=data.B0, b0=b0, B1=B1, b1=b1s)
        return out
    raise ValueError(f"unknown direction {direction!r}")


def shift_slice_data(data: SliceData, c: float) -> SliceData:
    """Einstein-frame data of (exp(-2 kappa c) g, B, phi + c)."""
    if data.frame != "einstein":
        raise ValueError("the constant shift acts on Einstein-frame data")
    kap = data.grid.kappa
    e = np.exp(kap * c)
    out = data.replace(g0=data.g0 * e**-2, k=data.k / e, h0=data.h0 * e,
                       phi0=data.phi0 + c, phi1=data.phi1 * e)
    if data.B0 is not None:
        out = out.replace(b0=None if data.b0 is None else data.b0 * e,
                          B1=None if data.B1 is None else data.B1 * e,
                          b1=None if data.b1 is None else data.b1 * e**2)
    return out


def shift_fields(g: TensorField, B: TensorField | None, phi: TensorField, c: float):
    kap = g.grid.kappa
    return g * np.exp(-2 * kap * c), B, phi + c
