"""Hypersurface decomposition of forms and induced slice data.

A p-form on the slice {t = const} is split as ``A = A_par - N_flat ^ A_perp``
with ``A_par`` tangential and ``A_perp = (i_N A)`` restricted to the slice,
where ``N`` is the future unit normal.
"""
from __future__ import annotations

import dataclasses
import string
from dataclasses import dataclass

import numpy as np

from .forms import codifferential, exterior_derivative, interior, k_dot, wedge
from .geometry import (MetricGeometry, covariant_derivative, metric_geometry, trace)
from .grid import GridError, TensorField, contract, einsum, grad, scalar_function


@dataclass(frozen=True, eq=False)
class SliceFrame:
    geom: MetricGeometry
    lapse: TensorField        # 1 / sqrt(-g^00)
    normal: TensorField       # N^mu
    normal_flat: TensorField  # N_mu = -lapse dt
    sigma: MetricGeometry     # induced metric on the slice

    @property
    def grid(self):
        return self.geom.grid


def spatial_part(A: TensorField, level: int | None = 1) -> TensorField:
    """Restriction of a covariant spacetime tensor to the slice."""
    if A.spatial:
        return A
    data = A.data if level is None else A.data[:level]
    sl = (slice(None),) + (slice(1, None),) * A.rank
    return TensorField(A.grid, np.ascontiguousarray(data[sl]), A.indices, True, False,
                       A.symmetry if A.rank > 1 else None)


def _inv_sqrt(x, n):
    out = [x**-0.5]
    c = -0.5
    for j in range(1, n + 1):
        out.append(out[-1] / x * (c - j + 1))
    return out


def slice_frame(g: TensorField, geom: MetricGeometry | None = None) -> SliceFrame:
    geom = metric_geometry(g) if geom is None else geom
    gi = geom.ginv
    g00 = gi.with_data(-gi.data[:, 0, 0], indices="", symmetry=None)
    lapse = scalar_function(g00, _inv_sqrt)
    col = gi.with_data(gi.data[:, :, 0], indices="u", symmetry=None)
    normal = contract(",a->a", lapse, col) * -1.0
    nf = np.zeros_like(col.data)
    nf[:, 0] = -lapse.data
    normal_flat = col.with_data(nf, indices="d")
    sigma = metric_geometry(spatial_part(g))
    return SliceFrame(geom, lapse, normal, normal_flat, sigma)


def decompose(A: TensorField, frame: SliceFrame) -> tuple[TensorField, TensorField | None]:
    """(A_par, A_perp) of an ambient form at the slice."""
    par = spatial_part(A)
    if A.rank == 0:
        return par, None
    perp = spatial_part(interior(frame.normal.truncate(1), A.truncate(1)))
    return par, perp


def projector(frame: SliceFrame) -> np.ndarray:
    """P[mu, j] with P^j_i = delta, P^j_0 = -N^j / N^0 (level 0)."""
    N = frame.normal.data[0]
    grid = frame.grid
    d, n = grid.dim, grid.n
    P = np.zeros((d, n) + grid.shape)
    for j in range(n):
        P[j + 1, j] = 1.0
        P[0, j] = -N[j + 1] / N[0]
    return P


def extend_tangential(alpha: TensorField, frame: SliceFrame) -> TensorField:
    """Ambient form that restricts to ``alpha`` and is annihilated by N."""
    P = projector(frame)
    p = alpha.rank
    out = alpha.data[0]
    lett = string.ascii_letters
    if p:
        mus = lett[:p]
        js = lett[p:2 * p]
        ops = ",".join(m + j + "..." for m, j in zip(mus, js))
        out = einsum(f"{ops},{js}...->{mus}...", *([P] * p), alpha.data[0])
    return TensorField(alpha.grid, out[None], alpha.indices, False, False,
                       "antisym" if p > 1 else None)


def reconstruct(par: TensorField, perp: TensorField | None, frame: SliceFrame) -> TensorField:
    A = extend_tangential(par, frame)
    if perp is None:
        return A
    return A - wedge(frame.normal_flat.truncate(1), extend_tangential(perp, frame))


def second_fundamental_form(frame: SliceFrame, method: str = "general") -> TensorField:
    """k = [nabla N_flat]_par (spatial, symmetric).

    ``general`` uses k_mn = lapse * Gamma^0_mn; ``adapted`` uses
    k_mn = |g_00|^{-1/2} d_t g_mn / 2 and assumes vanishing shift.
    """
    grid = frame.grid
    if method == "general":
        G0 = frame.geom.christoffel.data[0, 0][1:, 1:]
        data = frame.lapse.data[0] * G0
    elif method == "adapted":
        g = frame.geom.g
        if g.levels < 2:
            raise GridError("adapted second fundamental form needs d_t g")
        data = 0.5 * np.abs(g.data[0, 0, 0]) ** -0.5 * g.data[1][1:, 1:]
    else:
        raise ValueError(f"unknown method {method!r}")
    data = 0.5 * (data + np.swapaxes(data, 0, 1))
    return TensorField(grid, data[None], "dd", True, False, "sym")


def normal_derivative(A: TensorField, frame: SliceFrame) -> TensorField:
    """nabla_N A at the slice (level 0)."""
    nA = covariant_derivative(A, frame.geom)
    r = A.rank
    lett = string.ascii_letters[:r]
    return contract(f"z,z{lett}->{lett}", frame.normal.truncate(1), nA.truncate(1))


def form_jet_data(A: TensorField, frame: SliceFrame):
    """(A0_par, A0_perp, A1_par, A1_perp) with A1 = nabla_N A."""
    a0, a0p = decompose(A, frame)
    A1 = normal_derivative(A, frame)
    if A.rank > 1:
        A1 = A1.with_data(A1.data, symmetry="antisym")
    a1, a1p = decompose(A1, frame)
    return a0, a0p, a1, a1p


def restricted_exterior_ops(a0, a0p, a1, a1p, k: TensorField, sigma: MetricGeometry) -> dict:
    """Slice decomposition of dA and d*A from the slice data of A.

    (dA)_par   = d a0
    (dA)_perp  = a1 - d a0p - k.a0
    (d*A)_par  = d* a0 + a1p + tr(k) a0p + k.a0p
    (d*A)_perp = -d* a0p
    """
    p = a0.rank
    out = {"dA_par": exterior_derivative(a0)}
    perp = a1 - k_dot(k, a0, sigma)
    if a0p is not None:
        perp = perp - exterior_derivative(a0p)
    out["dA_perp"] = perp
    if p >= 1:
        trk = trace(k, sigma)
        par = a1p + contract("," + string.ascii_letters[:p - 1] + "->" + string.ascii_letters[:p - 1],
                             trk, a0p) + k_dot(k, a0p, sigma)
        par = par + codifferential(a0, sigma)
        out["dsA_par"] = par
        out["dsA_perp"] = codifferential(a0p, sigma) * -1.0 if p >= 2 else None
    return out


def ambient_exterior_ops(A: TensorField, frame: SliceFrame) -> dict:
    """The same quantities computed directly from the ambient dA and d*A."""
    dA = exterior_derivative(A)
    par, perp = decompose(dA, frame)
    out = {"dA_par": par, "dA_perp": perp}
    if A.rank >= 1:
        ds = codifferential(A, frame.geom)
        par, perp = decompose(ds, frame)
        out["dsA_par"] = par
        out["dsA_perp"] = perp
    return out


def antisymm_terms(A: TensorField, frame: SliceFrame, k: TensorField):
    """Both sides of [(nabla A)(N)]_par = D(A_perp) - A(k)."""
    nA = covariant_derivative(A, frame.geom)
    r = A.rank
    rest = string.ascii_letters[:r - 1]
    lhs = contract(f"z,mz{rest}->m{rest}", frame.normal.truncate(1), nA.truncate(1))
    lhs = spatial_part(lhs)
    a0, a0p = decompose(A, frame)
    from .geometry import covariant_derivative as cd
    Dp = cd(a0p, frame.sigma)
    kmix = contract("lc,cm->ml", frame.sigma.ginv, k)
    rhs = Dp - contract(f"ml,l{rest}->m{rest}", kmix, a0)
    return lhs, rhs


@dataclass(frozen=True, eq=False)
class SliceData:
    """Initial data on the slice; all members are spatial one-level fields.

    ``phi1`` is the normal derivative N(phi) of the dilaton, written x0 in the
    string frame. ``xi0`` (string frame) is the tangential part of the closed
    dilaton 1-form; ``phi0`` is its potential when one is known.
    """

    frame: str
    g0: TensorField
    k: TensorField
    H0: TensorField
    h0: TensorField
    phi1: TensorField
    phi0: TensorField | None = None
    xi0: TensorField | None = None
    B0: TensorField | None = None
    b0: TensorField | None = None
    B1: TensorField | None = None
    b1: TensorField | None = None

    def __post_init__(self):
        if self.frame not in ("string", "einstein"):
            raise ValueError(f"unknown frame {self.frame!r}")
        if self.frame == "einstein" and self.phi0 is None:
            raise ValueError("Einstein-frame data need the dilaton phi0")
        if self.frame == "string" and self.xi0 is None:
            if self.phi0 is None:
                raise ValueError("string-frame data need xi0 or a potential phi0")
            object.__setattr__(self, "xi0", grad(self.phi0))

    @property
    def x0(self) -> TensorField:
        return self.phi1

    @property
    def grid(self):
        return self.g0.grid

    def replace(self, **kw) -> "SliceData":
        return dataclasses.replace(self, **kw)

    def geometry(self) -> MetricGeometry:
        return metric_geometry(self.g0)


def induced_initial_data(g: TensorField, H: TensorField, dilaton: TensorField,
                         frame: str = "einstein", geom: MetricGeometry | None = None) -> SliceData:
    """Slice data induced by ambient (g, H, dilaton).

    ``dilaton`` is the scalar phi (Einstein frame, or string frame with a
    potential) or the closed 1-form xi (string frame).
    """
    fr = slice_frame(g, geom)
    k = second_fundamental_form(fr)
    H0, h0 = decompose(H, fr)
    N = fr.normal.truncate(1)
    if dilaton.rank == 0:
        dphi = grad(dilaton).truncate(1)
        phi1 = contract("a,a->", N, dphi)
        phi0 = spatial_part(dilaton)
        xi0 = spatial_part(dphi) if frame == "string" else None
    else:
        if frame != "string":
            raise ValueError("a dilaton 1-form only makes sense in the string frame")
        phi1 = contract("a,a->", N, dilaton.truncate(1))
        phi0 = None
        xi0 = spatial_part(dilaton)
    phi1 = TensorField(g.grid, phi1.data[:1], "", True)
    return SliceData(frame, spatial_part(g), k, H0, h0, phi1, phi0, xi0)


def potential_slice_data(B0: TensorField, b0: TensorField, B1: TensorField, k: TensorField,
                         sigma: MetricGeometry) -> tuple[TensorField, TensorField]:
    """(H0, h0) of H = dB from the slice data of the potential."""
    H0 = exterior_derivative(B0)
    h0 = B1 - exterior_derivative(b0) - k_dot(k, B0, sigma)
    return H0, h0
