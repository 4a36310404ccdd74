"""Christoffel symbols, curvature and covariant derivatives on a slice."""
from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np

from .grid import (GridError, TensorField, contract, grad, inverse, make_field)

EPS_SIGNATURE = 1e-10


class SignatureError(ValueError):
    """Metric leaves the canonical Lorentzian (or Riemannian) class."""


@dataclass(frozen=True, eq=False)
class MetricGeometry:
    g: TensorField
    ginv: TensorField
    christoffel: TensorField  # G[l, m, n] = Gamma^l_{mn}
    contracted: TensorField   # Gamma_m = g_{mn} g^{ab} Gamma^n_{ab}

    @property
    def grid(self):
        return self.g.grid

    @property
    def spatial(self) -> bool:
        return self.g.spatial


def check_signature(g: TensorField, eps: float = EPS_SIGNATURE) -> None:
    """Raise ``SignatureError`` at the worst point if ``g`` is not canonical.

    Spacetime metrics need ``g_00 < -eps`` and a spatial block with smallest
    eigenvalue above ``eps``; spatial metrics need to be positive definite.
    """
    a = np.moveaxis(g.data[0], (0, 1), (-2, -1))
    if g.spatial:
        margin = np.linalg.eigvalsh(a)[..., 0] - eps
        what = "spatial metric eigenvalue"
    else:
        g00 = a[..., 0, 0]
        eig = np.linalg.eigvalsh(a[..., 1:, 1:])[..., 0]
        margin = np.minimum(-g00 - eps, eig - eps)
        what = "g00 / spatial eigenvalue"
    if not np.all(np.isfinite(margin)):
        raise SignatureError("metric has non-finite entries")
    worst = np.unravel_index(np.argmin(margin), margin.shape)
    if margin[worst] <= 0:
        if g.spatial:
            detail = f"min eigenvalue {np.linalg.eigvalsh(a[worst])[0]:.6e}"
        else:
            detail = (f"g00 {a[worst][0, 0]:.6e}, min spatial eigenvalue "
                      f"{np.linalg.eigvalsh(a[worst][1:, 1:])[0]:.6e}")
        raise SignatureError(f"{what} check failed at grid point {tuple(int(i) for i in worst)}: {detail}")


def christoffel_from(g: TensorField, ginv: TensorField) -> TensorField:
    dg = grad(g)  # dg[a, m, n] = d_a g_mn
    low = (contract("mkn->kmn", dg) + contract("nkm->kmn", dg) - dg) * 0.5
    return contract("lk,kmn->lmn", ginv, low, symmetry="sym")


def metric_geometry(g: TensorField, eps: float = EPS_SIGNATURE, check: bool = True) -> MetricGeometry:
    if g.rank != 2 or g.indices != "dd":
        raise GridError("metric must be a covariant rank-2 field")
    if check:
        check_signature(g, eps)
    ginv = inverse(g)
    G = christoffel_from(g, ginv)
    gl = g.truncate(G.levels)
    gi = ginv.truncate(G.levels)
    contracted = contract("mn,ab,nab->m", gl, gi, G)
    return MetricGeometry(g, ginv, G, contracted)


def ricci(geom: MetricGeometry) -> TensorField:
    """R_mn = d_l G^l_mn - d_n G^l_ml + G^l_ls G^s_mn - G^l_ns G^s_lm."""
    G = geom.christoffel
    dG = grad(G)
    Gt = G.truncate(dG.levels)
    R = (contract("llmn->mn", dG) - contract("nlml->mn", dG)
         + contract("lls,smn->mn", Gt, Gt) - contract("lns,slm->mn", Gt, Gt))
    return symmetrize(R)


def symmetrize(T: TensorField) -> TensorField:
    return T.with_data(0.5 * (T.data + np.swapaxes(T.data, 1, 2)), symmetry="sym")


def scalar_curvature(geom: MetricGeometry, rc: TensorField | None = None) -> TensorField:
    rc = ricci(geom) if rc is None else rc
    return contract("ab,ab->", geom.ginv, rc)


def covariant_derivative(T: TensorField, geom: MetricGeometry) -> TensorField:
    """Prepend the covariant derivative index: (nabla T)[a, ...] = nabla_a T_..."""
    dT = grad(T)
    G = geom.christoffel
    Tt = T.truncate(dT.levels) if not T.static else T
    Gt = G.truncate(dT.levels)
    r = T.rank
    letters = string.ascii_letters[:r]
    out = dT
    for i, v in enumerate(T.indices):
        rep = letters[:i] + "z" + letters[i + 1:]
        if v == "u":
            spec = f"{letters[i]}yz,{rep}->y{letters}"
            out = out + contract(spec, Gt, Tt)
        else:
            spec = f"zy{letters[i]},{rep}->y{letters}"
            out = out - contract(spec, Gt, Tt)
    return out.with_data(out.data, indices="d" + T.indices, symmetry=None)


def hessian(phi: TensorField, geom: MetricGeometry) -> TensorField:
    return symmetrize(covariant_derivative(grad(phi), geom))


def box(phi: TensorField, geom: MetricGeometry) -> TensorField:
    H = hessian(phi, geom)
    return contract("ab,ab->", geom.ginv.truncate(H.levels), H)


def trace(T: TensorField, geom: MetricGeometry) -> TensorField:
    return contract("ab,ab->", geom.ginv.truncate(T.levels), T)


def raise_first(T: TensorField, geom: MetricGeometry) -> TensorField:
    r = T.rank
    rest = string.ascii_letters[1:r]
    return contract(f"za,a{rest}->z{rest}", geom.ginv, T)


def divergence(T: TensorField, geom: MetricGeometry) -> TensorField:
    """(div T)_n = g^{ma} nabla_a T_mn for a covariant 2-tensor."""
    nT = covariant_derivative(T, geom)
    return contract("am,amn->n", geom.ginv.truncate(nT.levels), nT)


def einstein_tensor(geom: MetricGeometry) -> TensorField:
    rc = ricci(geom)
    sc = scalar_curvature(geom, rc)
    return rc - contract(",ab->ab", sc, geom.g.truncate(rc.levels)) * 0.5


def norm2(T: TensorField, geom: MetricGeometry) -> TensorField:
    """Full contraction T_{a..} T^{a..} of a covariant tensor."""
    r = T.rank
    if r == 0:
        return contract(",->", T, T)
    a = string.ascii_letters[:r]
    b = string.ascii_letters[r:2 * r]
    gi = geom.ginv.truncate(T.levels) if not T.static else geom.ginv
    ops = ",".join(x + y for x, y in zip(a, b))
    return contract(f"{ops},{a},{b}->", *([gi] * r), T, T)


def conformal_ricci(rc: TensorField, geom: MetricGeometry, varphi: TensorField) -> TensorField:
    """Ricci tensor of exp(2 varphi) g from that of g.

    Rc~ = Rc - (d-2)(hess varphi - dvarphi (x) dvarphi) - (box varphi + (d-2)|dvarphi|^2) g
    """
    dim = geom.g.index_dim
    H = hessian(varphi, geom)
    k = min(H.levels, rc.levels)
    H = H.truncate(k)
    dv = grad(varphi).truncate(k)
    gi = geom.ginv.truncate(k)
    outer = contract("a,b->ab", dv, dv)
    bx = contract("ab,ab->", gi, H)
    sq = contract("ab,a,b->", gi, dv, dv)
    scal = bx + sq * (dim - 2)
    return (rc.truncate(k) - (H - outer) * (dim - 2)
            - contract(",ab->ab", scal, geom.g.truncate(k)))


def flat_metric(grid, spatial: bool = False, levels: int = 1) -> TensorField:
    dim = grid.n if spatial else grid.dim
    eta = np.eye(dim)
    if not spatial:
        eta[0, 0] = -1.0
    arr = eta.reshape(eta.shape + (1,) * grid.n_active) * np.ones(grid.shape)
    return make_field(grid, [arr] + [np.zeros_like(arr)] * (levels - 1), "dd",
                      spatial=spatial, symmetry="sym")
