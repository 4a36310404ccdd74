"""Closed-form trigonometric fields with exact derivatives of any order.

Used to build manufactured solutions, random smooth test families and
analytic backgrounds. A ``TrigSeries`` is

    f(t, x) = c + sum_j a_j cos(w_j t + k_j . x + theta_j)

with wave vectors that are integer multiples of ``2 pi / L`` so the field is
periodic on the grid.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, TensorField


@dataclass
class TrigSeries:
    const: float = 0.0
    amps: np.ndarray = field(default_factory=lambda: np.zeros(0))
    omegas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    modes: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=int))
    phases: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def evaluate(self, grid: Grid, t: float, partials: tuple[int, ...] = ()) -> np.ndarray:
        """Evaluate a mixed partial derivative; ``partials`` lists spacetime axes."""
        order = len(partials)
        out = np.zeros(grid.shape)
        if order == 0:
            out += self.const
        if len(self.amps) == 0:
            return out
        xs = grid.coords()
        kscale = 2.0 * np.pi / grid.length
        for a, w, m, th in zip(self.amps, self.omegas, self.modes, self.phases):
            coef = a
            for ax in partials:
                if ax == 0:
                    coef = coef * w
                elif grid.is_active(ax):
                    coef = coef * m[ax - 1] * kscale
                else:
                    coef = 0.0
            if coef == 0.0:
                continue
            arg = w * t + th + order * np.pi / 2
            for j in range(grid.n_active):
                arg = arg + m[j] * kscale * xs[j]
            out += coef * np.cos(arg)
        return out

    def __add__(self, other: "TrigSeries") -> "TrigSeries":
        return TrigSeries(self.const + other.const,
                          np.concatenate([self.amps, other.amps]),
                          np.concatenate([self.omegas, other.omegas]),
                          np.concatenate([self.modes, other.modes]),
                          np.concatenate([self.phases, other.phases]))

    def scaled(self, c: float) -> "TrigSeries":
        return TrigSeries(self.const * c, self.amps * c, self.omegas.copy(),
                          self.modes.copy(), self.phases.copy())


def constant(c: float) -> TrigSeries:
    return TrigSeries(const=float(c))


def wave(amp: float, modes=(1, 0), omega: float = 0.0, phase: float = 0.0,
         const: float = 0.0) -> TrigSeries:
    m = np.zeros((1, 2), dtype=int)
    m[0, : len(modes)] = modes
    return TrigSeries(const, np.array([amp], float), np.array([omega], float), m,
                      np.array([phase], float))


def random_series(rng: np.random.Generator, amp: float, terms: int = 2,
                  max_mode: int = 1, max_omega: float = 1.0, const: float = 0.0,
                  n_active: int = 2) -> TrigSeries:
    modes = rng.integers(-max_mode, max_mode + 1, size=(terms, 2))
    modes[:, n_active:] = 0
    return TrigSeries(const,
                      amp * rng.uniform(-1, 1, terms) / terms,
                      rng.uniform(-max_omega, max_omega, terms),
                      modes,
                      rng.uniform(0, 2 * np.pi, terms))


@dataclass
class AnalyticTensor:
    """Components keyed by index tuples; missing ones vanish.

    ``symmetry`` of ``"sym"`` (rank 2) or ``"antisym"`` (any rank) fills the
    related components from the stored representatives.
    """

    rank: int
    comps: dict
    indices: str | None = None
    symmetry: str | None = None
    spatial: bool = False

    def _full(self, dim):
        out = {}
        for idx, s in self.comps.items():
            if self.symmetry == "antisym":
                for perm in itertools.permutations(range(self.rank)):
                    j = tuple(idx[p] for p in perm)
                    sign = _parity(perm)
                    out[j] = (s, sign)
            elif self.symmetry == "sym":
                out[idx] = (s, 1)
                out[idx[::-1]] = (s, 1)
            else:
                out[idx] = (s, 1)
        return out

    def component_array(self, grid: Grid, t: float, partials=()) -> np.ndarray:
        dim = grid.n if self.spatial else grid.dim
        arr = np.zeros((dim,) * self.rank + grid.shape)
        off = 1 if self.spatial else 0
        parts = tuple(p + off for p in partials) if self.spatial else tuple(partials)
        for idx, (s, sign) in self._full(dim).items():
            if len(set(idx)) < len(idx) and self.symmetry == "antisym":
                continue
            arr[idx] = sign * s.evaluate(grid, t, parts)
        return arr

    def jet(self, grid: Grid, t: float = 0.0, levels: int = 3) -> TensorField:
        if self.spatial:
            data = self.component_array(grid, t)[None]
        else:
            data = np.stack([self.component_array(grid, t, (0,) * k) for k in range(levels)])
        idx = self.indices if self.indices is not None else "d" * self.rank
        return TensorField(grid, data, idx, self.spatial, False, self.symmetry)

    def partials(self, grid: Grid, t: float = 0.0):
        """Value, all first partials ``[a]`` and second partials ``[a, b]``."""
        dim = grid.n if self.spatial else grid.dim
        v = self.component_array(grid, t)
        d = np.stack([self.component_array(grid, t, (a,)) for a in range(dim)])
        dd = np.empty((dim, dim) + v.shape)
        for a in range(dim):
            for b in range(a, dim):
                dd[a, b] = dd[b, a] = self.component_array(grid, t, (a, b))
        return v, d, dd


def _parity(perm) -> int:
    from .grid import permutation_parity
    return permutation_parity(perm)


def scalar(series: TrigSeries, spatial: bool = False) -> AnalyticTensor:
    return AnalyticTensor(0, {(): series}, "", None, spatial)


def random_metric(rng, dim: int, amp: float, n_active: int = 2, terms: int = 2,
                  max_mode: int = 1, max_omega: float = 1.0,
                  spatial: bool = False) -> AnalyticTensor:
    """Small trigonometric perturbation of Minkowski (or Euclidean) space."""
    comps = {}
    for a in range(dim):
        for b in range(a, dim):
            base = 0.0
            if a == b:
                base = 1.0 if (spatial or a > 0) else -1.0
            comps[(a, b)] = random_series(rng, amp, terms, max_mode, max_omega, base, n_active)
    return AnalyticTensor(2, comps, "dd", "sym", spatial)


def random_form(rng, dim: int, degree: int, amp: float, n_active: int = 2,
                terms: int = 2, max_mode: int = 1, max_omega: float = 1.0,
                spatial: bool = False) -> AnalyticTensor:
    comps = {}
    for idx in itertools.combinations(range(dim), degree):
        comps[idx] = random_series(rng, amp, terms, max_mode, max_omega, 0.0, n_active)
    return AnalyticTensor(degree, comps, "d" * degree,
                          "antisym" if degree > 1 else None, spatial)


def random_scalar(rng, amp: float, n_active: int = 2, terms: int = 2, max_mode: int = 1,
                  max_omega: float = 1.0, const: float = 0.0,
                  spatial: bool = False) -> AnalyticTensor:
    return scalar(random_series(rng, amp, terms, max_mode, max_omega, const, n_active), spatial)
