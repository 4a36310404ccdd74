"""Periodic grids, time-jet tensor fields and centered stencils.

A field on a time slice is stored as a stack of time-derivative levels:
``data[k]`` holds the k-th partial time derivative. Spatial derivatives
come from centered stencils on active axes, time derivatives come from the
stored levels (they are never differenced). Products follow the Leibniz
rule level by level, so time derivatives of composite expressions are exact
up to the number of levels carried.
"""
from __future__ import annotations

import itertools
import string
from dataclasses import dataclass
from functools import lru_cache
from math import factorial, prod

import numpy as np

__all__ = [
    "Grid",
    "GridError",
    "NonFiniteError",
    "TensorField",
    "build_grid",
    "contract",
    "d1",
    "d2",
    "einsum",
    "field_norms",
    "grad",
    "inverse",
    "ko_dissipation",
    "partial_derivative",
    "second_partials",
    "scalar_function",
]

SYM_TOL = 1e-10


class GridError(ValueError):
    """Invalid grid or field layout."""


class NonFiniteError(FloatingPointError):
    """A field contains NaN or Inf."""


_D1 = {2: ((1, 1.0 / 2.0),), 4: ((1, 2.0 / 3.0), (2, -1.0 / 12.0))}
_D2 = {2: (-2.0, ((1, 1.0),)), 4: (-5.0 / 2.0, ((1, 4.0 / 3.0), (2, -1.0 / 12.0)))}


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid in ``n_active`` of the ``dim - 1`` spatial axes.

    Spatial axis ``m`` (1-based spacetime index) is active when
    ``m <= n_active``; inactive axes carry no grid points and every
    derivative along them vanishes.
    """

    dim: int
    n_active: int
    points: int
    length: float = 2.0 * np.pi
    order: int = 4

    def __post_init__(self):
        if self.dim < 3:
            raise GridError(f"dimension must be >= 3, got {self.dim}")
        if self.n_active not in (1, 2) or self.n_active > self.dim - 1:
            raise GridError(f"n_active must be 1 or 2 and <= dim-1, got {self.n_active}")
        if self.order not in (2, 4):
            raise GridError(f"stencil order must be 2 or 4, got {self.order}")
        if self.points < self.order + 1:
            raise GridError(
                f"{self.points} points cannot hold an order-{self.order} stencil"
            )
        if not self.length > 0:
            raise GridError("axis length must be positive")

    @property
    def h(self) -> float:
        return self.length / self.points

    @property
    def n(self) -> int:
        return self.dim - 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.n_active

    @property
    def kappa(self) -> float:
        return 1.0 / (self.dim - 2)

    def is_active(self, m: int) -> bool:
        return 1 <= m <= self.n_active

    def coords(self) -> tuple[np.ndarray, ...]:
        x = np.arange(self.points) * self.h
        return tuple(np.meshgrid(*([x] * self.n_active), indexing="ij"))

    def zeros(self, *index_shape) -> np.ndarray:
        return np.zeros(tuple(index_shape) + self.shape)


def build_grid(d: int, n_active: int, points: int, length: float = 2.0 * np.pi,
               order: int = 4) -> Grid:
    return Grid(d, n_active, points, float(length), order)


def _grid_axis(arr: np.ndarray, grid: Grid, m: int) -> int:
    return arr.ndim - grid.n_active + (m - 1)


def d1(arr: np.ndarray, grid: Grid, m: int) -> np.ndarray:
    """Centered first derivative along spacetime axis ``m`` (grid axes trailing)."""
    if not grid.is_active(m):
        return np.zeros_like(arr)
    ax = _grid_axis(arr, grid, m)
    out = np.zeros_like(arr)
    for s, c in _D1[grid.order]:
        out += c * (np.roll(arr, -s, ax) - np.roll(arr, s, ax))
    return out / grid.h


def d2(arr: np.ndarray, grid: Grid, m: int) -> np.ndarray:
    """Compact centered second derivative along axis ``m``."""
    if not grid.is_active(m):
        return np.zeros_like(arr)
    ax = _grid_axis(arr, grid, m)
    c0, taps = _D2[grid.order]
    out = c0 * arr
    for s, c in taps:
        out = out + c * (np.roll(arr, -s, ax) + np.roll(arr, s, ax))
    return out / grid.h**2


def ko_dissipation(arr: np.ndarray, grid: Grid, sigma: float = 0.1) -> np.ndarray:
    """Kreiss-Oliger dissipation of order ``order + 2`` summed over active axes."""
    r = grid.order // 2 + 1
    out = np.zeros_like(arr)
    for m in range(1, grid.n_active + 1):
        ax = _grid_axis(arr, grid, m)
        w = arr
        for _ in range(r):
            w = np.roll(w, -1, ax) - 2.0 * w + np.roll(w, 1, ax)
        out += w
    return (-1) ** (r - 1) * sigma / (2 ** (2 * r) * grid.h) * out


@dataclass(frozen=True, eq=False)
class TensorField:
    """Tensor field on a slice, with time-derivative levels.

    ``data`` has shape ``(levels, *index_dims, *grid.shape)``. ``indices`` is a
    string of ``'u'``/``'d'`` giving the valence of each index in storage
    order. Spatial fields (``spatial=True``) have index dimension ``dim - 1``
    and index ``i`` refers to spacetime axis ``i + 1``. A ``static`` field has
    vanishing time derivatives of every order and stores one level.
    ``symmetry`` is ``"sym"`` (last two indices) or ``"antisym"`` (all
    indices); it is checked on construction.
    """

    grid: Grid
    data: np.ndarray
    indices: str = ""
    spatial: bool = False
    static: bool = False
    symmetry: str | None = None

    def __post_init__(self):
        g = self.grid
        dim = g.n if self.spatial else g.dim
        want = (dim,) * len(self.indices) + g.shape
        if self.data.ndim != 1 + len(want) or self.data.shape[1:] != want:
            raise GridError(f"field data shape {self.data.shape} does not match {want}")
        if set(self.indices) - {"u", "d"}:
            raise GridError(f"bad valence string {self.indices!r}")
        if self.static and self.data.shape[0] != 1:
            raise GridError("static fields store exactly one level")
        if self.symmetry is not None:
            self._check_symmetry()

    def _check_symmetry(self):
        r = self.rank
        a = self.data
        scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
        if self.symmetry == "sym":
            if r < 2:
                raise GridError("symmetric declaration needs rank >= 2")
            pairs = [(r - 1, r)]
            sign = 1.0
        elif self.symmetry == "antisym":
            pairs = [(i, i + 1) for i in range(1, r)]
            sign = -1.0
        else:
            raise GridError(f"unknown symmetry {self.symmetry!r}")
        for i, j in pairs:
            err = np.max(np.abs(a - sign * np.swapaxes(a, i, j))) if a.size else 0.0
            if err > SYM_TOL * scale:
                raise GridError(f"declared {self.symmetry} field violates it by {err:.3e}")

    @property
    def rank(self) -> int:
        return len(self.indices)

    @property
    def levels(self) -> int:
        return self.data.shape[0]

    @property
    def index_dim(self) -> int:
        return self.grid.n if self.spatial else self.grid.dim

    @property
    def valence(self) -> tuple[int, int]:
        return self.indices.count("u"), self.indices.count("d")

    @property
    def value(self) -> np.ndarray:
        return self.data[0]

    def level(self, k: int) -> np.ndarray:
        if k < self.levels:
            return self.data[k]
        if self.static:
            return np.zeros_like(self.data[0])
        raise GridError(f"time level {k} requested from a field carrying {self.levels}")

    def with_data(self, data, **kw) -> "TensorField":
        opts = dict(indices=self.indices, spatial=self.spatial, static=self.static,
                    symmetry=self.symmetry)
        opts.update(kw)
        return TensorField(self.grid, data, **opts)

    def truncate(self, levels: int) -> "TensorField":
        if self.static:
            return self
        if levels > self.levels:
            raise GridError(f"cannot extend a {self.levels}-level field to {levels}")
        return self.with_data(self.data[:levels])

    def padded(self, levels: int) -> np.ndarray:
        if self.static:
            out = np.zeros((levels,) + self.data.shape[1:])
            out[0] = self.data[0]
            return out
        return self.data[:levels]

    def _combine(self, other, op):
        if isinstance(other, TensorField):
            if other.indices != self.indices or other.spatial != self.spatial:
                raise GridError("adding fields of different layout")
            if self.static and other.static:
                data, static = op(self.data, other.data), True
            else:
                k = min(f.levels for f in (self, other) if not f.static)
                data, static = op(self.padded(k), other.padded(k)), False
            sym = self.symmetry if self.symmetry == other.symmetry else None
            return self.with_data(data, static=static, symmetry=sym)
        return self.with_data(op(self.data, _level0_only(self.data, other)))

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return self.with_data(-self.data)

    def __mul__(self, c):
        if isinstance(c, TensorField):
            if c.rank:
                raise GridError("field products need contract()")
            return contract("," + _letters(self.rank) + "->" + _letters(self.rank), c, self)
        return self.with_data(self.data * c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self.with_data(self.data / c)


def _level0_only(data, c):
    out = np.zeros_like(data)
    out[0] = c
    return out


def _letters(n, start=0):
    return string.ascii_letters[start:start + n]


def _compositions(n: int, m: int):
    if m == 0:
        if n == 0:
            yield ()
        return
    if m == 1:
        yield (n,)
        return
    for k in range(n + 1):
        for rest in _compositions(n - k, m - 1):
            yield (k,) + rest


@lru_cache(maxsize=4096)
def _einsum_plan(spec: str, shapes: tuple):
    ops = [np.empty(sh, dtype=np.uint8) for sh in shapes]
    _, steps = np.einsum_path(spec, *ops, optimize="greedy", einsum_call=True)
    return tuple((step[0], step[2]) for step in steps)


def einsum(spec: str, *ops) -> np.ndarray:
    """np.einsum with the pairwise contraction order memoized per spec and shapes."""
    if len(ops) <= 2:
        return np.einsum(spec, *ops)
    operands = list(ops)
    for inds, sub in _einsum_plan(spec, tuple(o.shape for o in ops)):
        args = [operands.pop(i) for i in inds]
        operands.append(np.einsum(sub, *args))
    return operands[0]


def contract(spec: str, *fields: TensorField, symmetry: str | None = None,
             levels: int | None = None) -> TensorField:
    """Einstein-summed product of jet fields, e.g. ``contract("ab,bc->ac", g, h)``.

    The output valence of each letter is taken from its first occurrence.
    Time levels follow the multinomial Leibniz rule.
    """
    ins, out = spec.split("->")
    ops = ins.split(",")
    if len(ops) != len(fields):
        raise GridError("operand count does not match the contraction spec")
    grid = fields[0].grid
    spatial = fields[0].spatial
    valence = {}
    for o, f in zip(ops, fields):
        if len(o) != f.rank:
            raise GridError(f"operand {o!r} does not match rank {f.rank}")
        for ch, v in zip(o, f.indices):
            valence.setdefault(ch, v)
    indices = "".join(valence[ch] for ch in out)
    full = ",".join(o + "..." for o in ops) + "->" + out + "..."
    dyn = [i for i, f in enumerate(fields) if not f.static]
    if not dyn:
        data = einsum(full, *[f.data[0] for f in fields])[None]
        return TensorField(grid, data, indices, spatial, True, symmetry)
    k = min(fields[i].levels for i in dyn)
    if levels is not None:
        k = min(k, levels)
    res = []
    for n in range(k):
        acc = None
        for comp in _compositions(n, len(dyn)):
            coef = factorial(n) // prod(factorial(c) for c in comp)
            arrs = [f.data[0] for f in fields]
            for i, c in zip(dyn, comp):
                arrs[i] = fields[i].data[c]
            term = einsum(full, *arrs)
            acc = coef * term if acc is None else acc + coef * term
        res.append(acc)
    return TensorField(grid, np.stack(res), indices, spatial, False, symmetry)


def scalar_function(f: TensorField, derivs) -> TensorField:
    """Compose a scalar jet with a smooth function.

    ``derivs(x, n)`` returns the list ``[F(x), F'(x), ..., F^(n)(x)]``.
    Uses Faa di Bruno through the recursion on ``G = F(f)``.
    """
    if f.rank:
        raise GridError("scalar_function needs a scalar field")
    k = 1 if f.static else f.levels
    fd = derivs(f.data[0], k - 1)
    if k == 1:
        return f.with_data(fd[0][None])
    # Bell-polynomial expansion, written out for the level counts in use
    x1 = f.data[1] if k > 1 else None
    out = [fd[0], fd[1] * x1]
    if k > 2:
        x2 = f.data[2]
        out.append(fd[2] * x1**2 + fd[1] * x2)
    if k > 3:
        x3 = f.data[3]
        out.append(fd[3] * x1**3 + 3 * fd[2] * x1 * x2 + fd[1] * x3)
    if k > 4:
        raise GridError("scalar_function supports at most four levels")
    return f.with_data(np.stack(out), symmetry=None)


def jexp(f: TensorField, c: float = 1.0) -> TensorField:
    """exp(c f) as a jet."""
    def derivs(x, n):
        e = np.exp(c * x)
        return [e * c**j for j in range(n + 1)]
    return scalar_function(f, derivs)


def inverse(g: TensorField) -> TensorField:
    """Matrix inverse of a rank-2 jet, levels by the Leibniz recursion."""
    if g.rank != 2:
        raise GridError("inverse needs a rank-2 field")
    k = g.levels
    a = np.moveaxis(g.data, (1, 2), (-2, -1))
    inv0 = np.linalg.inv(a[0])
    levels = [inv0]
    for n in range(1, k):
        acc = np.zeros_like(inv0)
        for j in range(1, n + 1):
            c = factorial(n) // (factorial(j) * factorial(n - j))
            acc += c * a[j] @ levels[n - j]
        levels.append(-inv0 @ acc)
    data = np.moveaxis(np.stack(levels), (-2, -1), (1, 2))
    flip = "".join("u" if v == "d" else "d" for v in g.indices)
    return g.with_data(data, indices=flip, symmetry=None)


def partial_derivative(f: TensorField, axis: int) -> TensorField:
    """Partial derivative along a spacetime axis.

    Axis 0 consumes one time level (and fails if none is carried); spatial
    axes use the centered stencil and vanish on inactive axes.
    """
    g = f.grid
    if axis == 0:
        if f.static:
            return f.with_data(np.zeros_like(f.data))
        if f.levels < 2:
            raise GridError("time derivative requested but the field carries no time levels")
        return f.with_data(f.data[1:])
    if not 1 <= axis <= g.n:
        raise GridError(f"axis {axis} outside 0..{g.n}")
    return f.with_data(d1(f.data, g, axis))


def grad(f: TensorField) -> TensorField:
    """Prepend a covariant derivative index of partial derivatives.

    Spacetime fields get all ``dim`` components; spatial fields get the
    ``dim - 1`` spatial components only.
    """
    g = f.grid
    if f.spatial:
        comps = [d1(f.data, g, m) for m in range(1, g.n + 1)]
        data = np.stack(comps, axis=1)
    else:
        if f.static:
            comps = [np.zeros_like(f.data)] + [d1(f.data, g, m) for m in range(1, g.dim)]
        else:
            if f.levels < 2:
                raise GridError("spacetime gradient needs the time derivative level")
            lo = f.data[:-1]
            comps = [f.data[1:]] + [d1(lo, g, m) for m in range(1, g.dim)]
        data = np.stack(comps, axis=1)
    return f.with_data(data, indices="d" + f.indices, symmetry=None)


def second_partials(f: TensorField) -> np.ndarray:
    """All second partials ``dd[a, b]`` of level 0, compact on the diagonal.

    Spacetime fields need three time levels (or be static).
    """
    g = f.grid
    dim = g.n if f.spatial else g.dim
    off = 1 if f.spatial else 0
    v = f.level(0)
    out = np.zeros((dim, dim) + v.shape)
    if not f.spatial:
        vt = f.level(1)
        out[0, 0] = f.level(2)
        for m in range(1, dim):
            out[0, m] = out[m, 0] = d1(vt, g, m)
    start = 0 if f.spatial else 1
    for a in range(start, dim):
        ma = a + off
        out[a, a] = d2(v, g, ma)
        for b in range(a + 1, dim):
            mb = b + off
            out[a, b] = out[b, a] = d1(d1(v, g, ma), g, mb)
    return out


def field_norms(f: TensorField | np.ndarray) -> tuple[float, float]:
    """(l-infinity, root-mean-square) of level 0 over points and components."""
    a = f.data[0] if isinstance(f, TensorField) else np.asarray(f)
    if not np.all(np.isfinite(a)):
        bad = np.argwhere(~np.isfinite(a))[0]
        raise NonFiniteError(f"non-finite value at index {tuple(int(i) for i in bad)}")
    if a.size == 0:
        return 0.0, 0.0
    return float(np.max(np.abs(a))), float(np.sqrt(np.mean(a * a)))


def make_field(grid: Grid, value, indices: str = "", *, spatial: bool = False,
               static: bool = False, symmetry: str | None = None) -> TensorField:
    """Wrap arrays ``[level0, level1, ...]`` (or a single array) as a field."""
    if isinstance(value, (list, tuple)):
        data = np.stack([np.asarray(v, dtype=float) for v in value])
    else:
        data = np.asarray(value, dtype=float)[None]
    dim = grid.n if spatial else grid.dim
    want = (dim,) * len(indices) + grid.shape
    data = np.broadcast_to(data, (data.shape[0],) + want).copy()
    return TensorField(grid, data, indices, spatial, static, symmetry)


def permutation_parity(perm) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def antisymmetrize(f: TensorField, scale: float = 1.0) -> TensorField:
    """Total antisymmetrization over all indices (with 1/p! weight)."""
    r = f.rank
    acc = np.zeros_like(f.data)
    for perm in itertools.permutations(range(r)):
        axes = (0,) + tuple(1 + p for p in perm) + tuple(range(r + 1, f.data.ndim))
        acc += permutation_parity(perm) * np.transpose(f.data, axes)
    return f.with_data(acc * (scale / factorial(r)), symmetry="antisym" if r > 1 else None)
