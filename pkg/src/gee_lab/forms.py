"""Exterior calculus on jet fields: d, d*, interior products, wedge.

Conventions: ``(dA)_{m0..mp} = (p+1) d_[m0 A_{m1..mp]}``,
``(d*A)_{m2..mp} = -nabla^l A_{l m2..mp}`` and ``|H|^2`` is the full
(unnormalized) contraction.
"""
from __future__ import annotations

import itertools
import string
from math import factorial

import numpy as np

from .geometry import MetricGeometry, covariant_derivative
from .grid import (GridError, TensorField, antisymmetrize, contract, grad,
                   permutation_parity)


def _is_form(A: TensorField) -> None:
    if set(A.indices) - {"d"}:
        raise GridError("differential forms must be covariant")


def exterior_derivative(A: TensorField) -> TensorField:
    """dA via the alternating sum of partial derivatives."""
    _is_form(A)
    p = A.rank
    dA = grad(A)
    acc = np.zeros_like(dA.data)
    for i in range(p + 1):
        acc += (-1) ** i * np.moveaxis(dA.data, 1, 1 + i)
    return dA.with_data(acc, symmetry="antisym" if p + 1 > 1 else None)


def codifferential(A: TensorField, geom: MetricGeometry) -> TensorField:
    _is_form(A)
    p = A.rank
    if p == 0:
        raise GridError("codifferential of a 0-form")
    nA = covariant_derivative(A, geom)
    rest = string.ascii_letters[2:p + 1]
    gi = geom.ginv.truncate(nA.levels)
    out = contract(f"ab,ab{rest}->{rest}", gi, nA) * -1.0
    return out.with_data(out.data, symmetry="antisym" if p - 1 > 1 else None)


def raise_covector(xi: TensorField, geom: MetricGeometry) -> TensorField:
    k = xi.levels if not xi.static else geom.ginv.levels
    return contract("ab,b->a", geom.ginv.truncate(k), xi)


def interior(X: TensorField, A: TensorField) -> TensorField:
    """i_X A for a vector field X (index 'u')."""
    p = A.rank
    if p == 0:
        raise GridError("interior product of a 0-form")
    rest = string.ascii_letters[1:p]
    out = contract(f"a,a{rest}->{rest}", X, A)
    return out.with_data(out.data, symmetry="antisym" if p - 1 > 1 else None)


def interior_covector(xi: TensorField, A: TensorField, geom: MetricGeometry) -> TensorField:
    """i_xi A with the 1-form xi raised by ``geom``."""
    return interior(raise_covector(xi, geom), A)


def wedge(a: TensorField, b: TensorField) -> TensorField:
    p, q = a.rank, b.rank
    if p == 0 or q == 0:
        s = a if p == 0 else b
        f = b if p == 0 else a
        letters = string.ascii_letters[:f.rank]
        return contract(f",{letters}->{letters}", s, f)
    la = string.ascii_letters[:p]
    lb = string.ascii_letters[p:p + q]
    prod = contract(f"{la},{lb}->{la}{lb}", a, b)
    return antisymmetrize(prod, factorial(p + q) / (factorial(p) * factorial(q)))


def k_dot(k: TensorField, A: TensorField, geom: MetricGeometry) -> TensorField:
    """(k.A)_{i1..ip} = (-1)^p p k^j_[i1 A_{i2..ip]j} with k covariant, raised by geom."""
    p = A.rank
    if p == 0:
        return A * 0.0
    kk = min(k.levels, A.levels)
    kup = contract("jc,ca->aj", geom.ginv.truncate(kk), k.truncate(kk))  # [a, j] = k^j_a
    rest = string.ascii_letters[2:p + 1]
    T = contract(f"aj,{rest}j->a{rest}", kup, A.truncate(kk))
    return antisymmetrize(T, (-1) ** p * p)


def c_contraction(h: TensorField, H: TensorField, geom: MetricGeometry) -> TensorField:
    """C(h, H)_i = g^{kl} g^{mn} h_{km} H_{lni}."""
    gi = geom.ginv
    return contract("kl,mn,km,lni->i", gi, gi, h, H)


def h_square(H: TensorField, geom: MetricGeometry) -> TensorField:
    """H^2_{mn} = g^{kl} g^{rp} H_{mkr} H_{nlp}."""
    gi = geom.ginv
    out = contract("kl,rp,mkr,nlp->mn", gi, gi, H, H)
    return out.with_data(0.5 * (out.data + np.swapaxes(out.data, 1, 2)), symmetry="sym")


def form_norm2(A: TensorField, geom: MetricGeometry) -> TensorField:
    from .geometry import norm2
    return norm2(A, geom)


def modified_codifferential(B: TensorField, geom: MetricGeometry,
                            bg_christoffel: TensorField) -> TensorField:
    """C_n = -g^{kl} nabla-bar_k B_{ln} with the background connection."""
    dB = grad(B)
    k = dB.levels
    Gb = bg_christoffel
    Bt = B.truncate(k)
    nb = dB - contract("akl,an->kln", Gb, Bt) - contract("akn,la->kln", Gb, Bt)
    return contract("kl,kln->n", geom.ginv.truncate(k), nb) * -1.0


def deturck_vector(geom: MetricGeometry, bg_christoffel: TensorField) -> TensorField:
    """D_n = F_n - Gamma_n with F_n = g_{nm} g^{ab} Gamma-bar^m_{ab}."""
    G = geom.christoffel
    k = G.levels
    g = geom.g.truncate(k)
    gi = geom.ginv.truncate(k)
    F = contract("nm,ab,mab->n", g, gi, bg_christoffel)
    return F - geom.contracted


def modified_codifferential_split(B: TensorField, geom: MetricGeometry,
                                  bg_christoffel: TensorField) -> TensorField:
    """Same covector as ``modified_codifferential`` from d*B, D and A = Gamma - Gamma-bar.

    C_n = d*B_n + D^m B_mn + g^{kl} A^m_{kn} B_{ml}
    """
    G = geom.christoffel
    k = G.levels
    A = G - bg_christoffel
    D = deturck_vector(geom, bg_christoffel)
    gi = geom.ginv.truncate(k)
    Bt = B.truncate(k)
    return (codifferential(B, geom)
            + contract("ma,a,mn->n", gi, D, Bt)
            + contract("kl,mkn,ml->n", gi, A, Bt))


def alternating_components(dim: int, p: int):
    """Index tuples with strictly increasing entries."""
    return list(itertools.combinations(range(dim), p))


def is_closed(A: TensorField, tol: float) -> bool:
    dA = exterior_derivative(A)
    return float(np.max(np.abs(dA.data[0]))) <= tol if dA.data.size else True


__all__ = [
    "alternating_components", "c_contraction", "codifferential", "deturck_vector",
    "exterior_derivative", "form_norm2", "h_square", "interior", "interior_covector",
    "is_closed", "k_dot", "modified_codifferential", "modified_codifferential_split",
    "permutation_parity", "raise_covector", "wedge",
]
