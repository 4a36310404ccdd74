"""Background fields, gauge covectors and the modified (hyperbolic) system.

The local operators here work on plain arrays of values and partial
derivatives (``d[a]`` and ``dd[a, b]`` with a spacetime derivative index in
front, grid axes trailing), so the same code serves stencil derivatives and
exact analytic ones. The principal part of each equation is
``g^{ab} d_a d_b u`` and ``system_terms`` returns the remaining right-hand
side ``f[u]`` (first derivatives only).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, TensorField, d1, d2, einsum, second_partials


def E(spec: str, *ops):
    ins, out = spec.split("->")
    full = ",".join(o + "..." for o in ins.split(",")) + "->" + out + "..."
    return einsum(full, *ops)


def inv_array(g: np.ndarray) -> np.ndarray:
    return np.moveaxis(np.linalg.inv(np.moveaxis(g, (0, 1), (-2, -1))), (-2, -1), (0, 1))


def _low(dg):
    # low[k, m, n] = (d_m g_kn + d_n g_km - d_k g_mn) / 2
    return 0.5 * (np.swapaxes(dg, 0, 1) + np.transpose(dg, (1, 2, 0) + tuple(range(3, dg.ndim))) - dg)


def christoffel_arrays(g, dg, ddg=None):
    """Gamma^l_mn (and d_a Gamma^l_mn when ``ddg`` is given)."""
    gi = inv_array(g)
    low = _low(dg)
    G = E("lk,kmn->lmn", gi, low)
    if ddg is None:
        return gi, G, None
    dgi = -E("ab,cbd,de->cae", gi, dg, gi)
    dlow = np.stack([_low(ddg[a]) for a in range(ddg.shape[0])])
    dG = E("alk,kmn->almn", dgi, low) + E("lk,akmn->almn", gi, dlow)
    return gi, G, dG


def ext3(dB):
    """(dB)_{lmn} from d[l] B_mn."""
    perm1 = (1, 2, 0) + tuple(range(3, dB.ndim))
    perm2 = (2, 0, 1) + tuple(range(3, dB.ndim))
    return dB + np.transpose(dB, perm1) + np.transpose(dB, perm2)


@dataclass(frozen=True, eq=False)
class BackgroundFields:
    """Static background metric and the closed background 3-form.

    Hbar(t) = H0 + t * Hrate; spatial derivatives are stored separately so
    the analytic construction can carry exact values.
    """

    grid: Grid
    gbar: np.ndarray
    Gbar: np.ndarray
    dGbar: np.ndarray
    H0: np.ndarray
    Hrate: np.ndarray
    dH0: np.ndarray
    dHrate: np.ndarray

    def at(self, t: float):
        Hb = self.H0 + t * self.Hrate
        dHb = self.dH0 + t * self.dHrate
        return BgSnapshot(self.gbar, self.Gbar, self.dGbar, Hb, dHb)

    def gbar_field(self) -> TensorField:
        return TensorField(self.grid, self.gbar[None], "dd", False, True, "sym")

    def christoffel_field(self) -> TensorField:
        return TensorField(self.grid, self.Gbar[None], "udd", False, True)

    def H_field(self, t: float, levels: int = 3) -> TensorField:
        data = np.zeros((levels,) + self.H0.shape)
        data[0] = self.H0 + t * self.Hrate
        if levels > 1:
            data[1] = self.Hrate
        return TensorField(self.grid, data, "ddd", False, False, "antisym")

    def scaled_metric(self, factor: float) -> "BackgroundFields":
        """Background for the metric factor * gbar (same connection)."""
        return BackgroundFields(self.grid, factor * self.gbar, self.Gbar, self.dGbar,
                                self.H0, self.Hrate, self.dH0, self.dHrate)


@dataclass(frozen=True)
class BgSnapshot:
    gbar: np.ndarray
    Gbar: np.ndarray
    dGbar: np.ndarray
    Hbar: np.ndarray
    dHbar: np.ndarray


def _embed_metric(grid, g0, dg0, ddg0, phi, dphi, ddphi):
    d = grid.dim
    kap = grid.kappa
    e = np.exp(-2 * kap * phi)
    gb = np.zeros((d, d) + grid.shape)
    gb[0, 0] = -e
    gb[1:, 1:] = g0
    dgb = np.zeros((d,) + gb.shape)
    dgb[:, 0, 0] = 2 * kap * e * dphi
    dgb[:, 1:, 1:] = dg0
    ddgb = np.zeros((d,) + dgb.shape)
    ddgb[:, :, 0, 0] = 2 * kap * e * (ddphi - 2 * kap * dphi[:, None] * dphi[None, :])
    ddgb[:, :, 1:, 1:] = ddg0
    return gb, dgb, ddgb


def _embed_H(grid, H3, w):
    d = grid.dim
    H = np.zeros((d, d, d) + grid.shape)
    H[1:, 1:, 1:] = H3
    H[0, 1:, 1:] = w
    H[1:, 0, 1:] = -w
    H[1:, 1:, 0] = w
    return H


def _background_from_partials(grid, g0, dg0, ddg0, phi, dphi, ddphi, H0, dH0, h0, dh0, ddh0):
    """Assemble background arrays from spatial fields and their partials.

    Partials carry a spacetime derivative index of length dim with a vanishing
    time component. The 2-form part of Hbar uses w = exp(-kappa phi0) h0 so
    that Hbar induces (H0, h0) for the unit normal of gbar.
    """
    kap = grid.kappa
    gb, dgb, ddgb = _embed_metric(grid, g0, dg0, ddg0, phi, dphi, ddphi)
    _, Gb, dGb = christoffel_arrays(gb, dgb, ddgb)
    ef = np.exp(-kap * phi)
    w = ef * h0
    dw = ef * (dh0 - kap * dphi[:, None, None] * h0[None])
    ddw = ef * (ddh0
                - kap * ddphi[:, :, None, None] * h0[None, None]
                - kap * dphi[:, None, None, None] * dh0[None]
                - kap * dphi[None, :, None, None] * dh0[:, None]
                + kap**2 * dphi[:, None, None, None] * dphi[None, :, None, None] * h0[None, None])
    # spatial exterior derivative of w and of its partials
    dws = dw[1:]
    dw3 = ext3(dws)
    d_dw3 = np.stack([ext3(ddw[a, 1:]) for a in range(grid.dim)])
    Hb0 = _embed_H(grid, H0, w)
    Hrate = _embed_H(grid, dw3, np.zeros_like(w))
    dHb0 = np.stack([Hrate if a == 0 else _embed_H(grid, dH0[a], dw[a]) for a in range(grid.dim)])
    dHrate = np.stack([np.zeros_like(Hrate) if a == 0 else
                       _embed_H(grid, d_dw3[a], np.zeros_like(w)) for a in range(grid.dim)])
    return BackgroundFields(grid, gb, Gb, dGb, Hb0, Hrate, dHb0, dHrate)


def _stencil_partials(grid, arr):
    return np.stack([np.zeros_like(arr)] + [d1(arr, grid, m) for m in range(1, grid.dim)])


def _stencil_second(grid, arr):
    d = grid.dim
    out = np.zeros((d, d) + arr.shape)
    for a in range(1, d):
        out[a, a] = d2(arr, grid, a)
        for b in range(a + 1, d):
            out[a, b] = out[b, a] = d1(d1(arr, grid, a), grid, b)
    return out


def background_fields(data) -> BackgroundFields:
    """Background from Einstein-frame slice data (stencil derivatives)."""
    if data.frame != "einstein":
        raise ValueError("background fields are built from Einstein-frame data")
    grid = data.grid
    g0 = data.g0.data[0]
    phi = data.phi0.data[0]
    H0 = data.H0.data[0]
    h0 = data.h0.data[0]
    return _background_from_partials(
        grid, g0, _stencil_partials(grid, g0), _stencil_second(grid, g0),
        phi, _stencil_partials(grid, phi), _stencil_second(grid, phi),
        H0, _stencil_partials(grid, H0),
        h0, _stencil_partials(grid, h0), _stencil_second(grid, h0))


def _analytic_spacetime_partials(field, grid):
    """Spatial analytic tensor -> value, d[a], dd[a, b] with spacetime derivative axes."""
    v, ds, dds = field.partials(grid, 0.0)
    d = grid.dim
    dfull = np.zeros((d,) + v.shape)
    dfull[1:] = ds
    ddfull = np.zeros((d, d) + v.shape)
    ddfull[1:, 1:] = dds
    return v, dfull, ddfull


def analytic_background(grid, g0, phi0, H0, h0) -> BackgroundFields:
    """Background with exact derivatives from spatial ``AnalyticTensor`` fields."""
    g, dg, ddg = _analytic_spacetime_partials(g0, grid)
    p, dp, ddp = _analytic_spacetime_partials(phi0, grid)
    H, dH, _ = _analytic_spacetime_partials(H0, grid)
    h, dh, ddh = _analytic_spacetime_partials(h0, grid)
    return _background_from_partials(grid, g, dg, ddg, p, dp, ddp, H, dH, h, dh, ddh)


def flat_background(grid) -> BackgroundFields:
    d = grid.dim
    gb = np.zeros((d, d) + grid.shape)
    gb[0, 0] = -1.0
    for i in range(1, d):
        gb[i, i] = 1.0
    z3 = np.zeros((d, d, d) + grid.shape)
    return BackgroundFields(grid, gb, z3.copy(), np.zeros((d,) + z3.shape), z3.copy(), z3.copy(),
                            np.zeros((d,) + z3.shape), np.zeros((d,) + z3.shape))


# local operators -----------------------------------------------------------

def _ricci_hat_lower(g, gi, dg, dgi, G, bg):
    """R^c + g^{ab} d_a d_b g / 2: grad of F plus the quadratic Christoffel terms."""
    Gb, dGb = bg.Gbar, bg.dGbar
    F = E("mn,ab,nab->m", g, gi, Gb)
    dF = (E("cmn,ab,nab->cm", dg, gi, Gb) + E("mn,cab,nab->cm", g, dgi, Gb)
          + E("mn,ab,cnab->cm", g, gi, dGb))
    nF = dF - E("lmn,l->mn", G, F)
    GL = E("bm,mac->abc", g, G)  # Gamma_{abc} = g_{bm} Gamma^m_{ac}
    Q = (E("ab,cd,acm,bdn->mn", gi, gi, GL, GL) + E("ab,cd,acm,bnd->mn", gi, gi, GL, GL)
         + E("ab,cd,acn,bmd->mn", gi, gi, GL, GL))
    return 0.5 * (nF + np.swapaxes(nF, 0, 1)) + Q


def ricci_hat_arrays(g, dg, ddg, bg):
    """R^c = -g^{ab} d_a d_b g / 2 + nabla_(m F_n) + quadratic terms."""
    gi, G, _ = christoffel_arrays(g, dg)
    dgi = -E("ab,cbd,de->cae", gi, dg, gi)
    return -0.5 * E("ab,abmn->mn", gi, ddg) + _ricci_hat_lower(g, gi, dg, dgi, G, bg)


def _hodge_hat_lower(g, gi, dgi, G, B, dB, bg):
    Gb, dGb = bg.Gbar, bg.dGbar
    Hb = ext3(dB)
    Gup = E("lk,alk->a", gi, G)
    L = (-E("a,amn->mn", Gup, Hb)
         - E("lk,akm,lan->mn", gi, G, Hb)
         - E("lk,akn,lma->mn", gi, G, Hb)
         + E("mkl,kln->mn", dgi, dB) - E("nkl,klm->mn", dgi, dB))
    dY = (E("mkl,akl,an->mn", dgi, Gb, B) + E("kl,makl,an->mn", gi, dGb, B)
          + E("kl,akl,man->mn", gi, Gb, dB)
          + E("mkl,akn,la->mn", dgi, Gb, B) + E("kl,makn,la->mn", gi, dGb, B)
          + E("kl,akn,mla->mn", gi, Gb, dB))
    return L - (dY - np.swapaxes(dY, 0, 1))


def hodge_hat_arrays(g, dg, B, dB, ddB, bg):
    """Box-hat B = -d*dB - dC in local form: g^{ab} d_a d_b B + lower order."""
    gi, G, _ = christoffel_arrays(g, dg)
    dgi = -E("ab,cbd,de->cae", gi, dg, gi)
    return E("ab,abmn->mn", gi, ddB) + _hodge_hat_lower(g, gi, dgi, G, B, dB, bg)


def codiff_H_arrays(gi, G, H, dH):
    """d*H_{mn} = -g^{la} nabla_a H_{lmn}."""
    nH = (dH - E("bal,bmn->almn", G, H) - E("bam,lbn->almn", G, H)
          - E("ban,lmb->almn", G, H))
    return -E("la,almn->mn", gi, nH)


def sources(g, gi, phi, dphi, H, kappa):
    """Right-hand sides of the modified system (without the gauge-free parts)."""
    e4 = np.exp(-4 * kappa * phi)
    H2 = E("kl,rp,mkr,nlp->mn", gi, gi, H, H)
    Hn = E("ma,nb,kc,mnk,abc->", gi, gi, gi, H, H)
    xx = dphi[:, None] * dphi[None, :]
    S_rc = kappa * (xx - e4 * Hn * g / 6.0) + e4 * H2 / 4.0
    S_phi = -e4 * Hn / 6.0
    return S_rc, S_phi, Hn


def system_terms(g, dg, B, dB, phi, dphi, bg, kappa):
    """f[u] with g^{ab} d_a d_b u = f[u] for u = (g, B, phi).

    Needs values and first partials only; ``bg`` is a ``BgSnapshot``.
    """
    gi, G, _ = christoffel_arrays(g, dg)
    dgi = -E("ab,cbd,de->cae", gi, dg, gi)
    H = bg.Hbar + ext3(dB)
    S_rc, S_phi, _ = sources(g, gi, phi, dphi, H, kappa)
    f_g = 2.0 * (_ricci_hat_lower(g, gi, dg, dgi, G, bg) - S_rc)
    xi_up = E("ab,b->a", gi, dphi)
    S_B = codiff_H_arrays(gi, G, bg.Hbar, bg.dHbar) + 4 * kappa * E("a,amn->mn", xi_up, H)
    f_B = S_B - _hodge_hat_lower(g, gi, dgi, G, B, dB, bg)
    Gup = E("lk,alk->a", gi, G)
    f_phi = E("a,a->", Gup, dphi) + S_phi
    return f_g, f_B, f_phi


def _principal_tensor(gi, dd):
    extra = dd.ndim - gi.ndim
    gi_b = gi.reshape(gi.shape[:2] + (1,) * extra + gi.shape[2:])
    return np.sum(gi_b * dd, axis=(0, 1))


def modified_residuals(u, du, ddu, bg, kappa):
    """(E_g, E_B, E_phi) = g^{ab} d_a d_b u - f[u] from full derivative arrays."""
    g, B, phi = u
    dg, dB, dphi = du
    ddg, ddB, ddphi = ddu
    f_g, f_B, f_phi = system_terms(g, dg, B, dB, phi, dphi, bg, kappa)
    gi = inv_array(g)
    return (_principal_tensor(gi, ddg) - f_g, _principal_tensor(gi, ddB) - f_B,
            _principal_tensor(gi, ddphi) - f_phi)


# jet-field interfaces ---------------------------------------------------------

def _jet_arrays(f: TensorField):
    from .grid import grad
    return f.data[0], grad(f).data[0], second_partials(f)


def ricci_hat(g: TensorField, bg: BackgroundFields, t: float = 0.0) -> TensorField:
    """R^c on the slice; ``g`` must carry two time derivatives."""
    a, da, dda = _jet_arrays(g)
    out = ricci_hat_arrays(a, da, dda, bg.at(t))
    out = 0.5 * (out + np.swapaxes(out, 0, 1))
    return TensorField(g.grid, out[None], "dd", False, False, "sym")


def hodge_hat(B: TensorField, g: TensorField, bg: BackgroundFields, t: float = 0.0) -> TensorField:
    """Box-hat_Hd B on the slice; ``B`` carries two time derivatives, ``g`` one."""
    from .grid import grad
    gv, dg = g.data[0], grad(g).data[0]
    b, db, ddb = _jet_arrays(B)
    out = hodge_hat_arrays(gv, dg, b, db, ddb, bg.at(t))
    out = 0.5 * (out - np.swapaxes(out, 0, 1))
    return TensorField(g.grid, out[None], "dd", False, False, "antisym")


# second time derivatives from the modified system ----------------------------

def slice_partials(grid: Grid, u: np.ndarray, v: np.ndarray):
    """First and second partials of a slice unknown with ``v = d_t u``.

    The time-time entry of the second partials is left at zero; it is the
    quantity the system solves for.
    """
    d = grid.dim
    du = np.empty((d,) + u.shape)
    du[0] = v
    ddu = np.zeros((d, d) + u.shape)
    for a in range(1, d):
        du[a] = d1(u, grid, a)
        dv = d1(v, grid, a)
        ddu[0, a] = ddu[a, 0] = dv
        ddu[a, a] = d2(u, grid, a)
        for b in range(a + 1, d):
            ddu[a, b] = ddu[b, a] = d1(du[a], grid, b)
    return du, ddu


def accelerations(grid: Grid, u, v, snap: BgSnapshot, source=None):
    """d_t^2 (g, B, phi) = (f + s - g^{ab} d_a d_b u |_{tt excluded}) / g^00."""
    g, B, phi = u
    (dg, ddg), (dB, ddB), (dphi, ddphi) = (slice_partials(grid, x, y) for x, y in zip(u, v))
    f = system_terms(g, dg, B, dB, phi, dphi, snap, grid.kappa)
    gi = inv_array(g)
    g00 = gi[0, 0]
    out = []
    for j, (fj, dd) in enumerate(zip(f, (ddg, ddB, ddphi))):
        rhs = fj - _principal_tensor(gi, dd)
        if source is not None:
            rhs = rhs + source[j]
        out.append(rhs / g00)
    ag, aB, aphi = out
    ag = 0.5 * (ag + np.swapaxes(ag, 0, 1))
    aB = 0.5 * (aB - np.swapaxes(aB, 0, 1))
    return ag, aB, aphi

