"""Functional samples, function objects, smoothing and the product inner product."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .basis import BasisSystem, gram
from .errors import BasisMismatch, DimensionMismatch, RankDeficient, ValidationError

RANK_TOL = 1e-10


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class FunctionalSample:
    """``n`` observations of a ``d``-variate function, one coefficient matrix per dimension."""

    bases: tuple
    coefs: tuple

    def __post_init__(self):
        bases = tuple(self.bases)
        coefs = tuple(_frozen(c) for c in self.coefs)
        if not bases or len(bases) != len(coefs):
            raise DimensionMismatch("need one coefficient matrix per basis")
        n = coefs[0].shape[0]
        for b, a in zip(bases, coefs):
            if a.ndim != 2 or a.shape[1] != b.size:
                raise DimensionMismatch(f"coefficient matrix shape {a.shape} does not match basis size {b.size}")
            if a.shape[0] != n:
                raise DimensionMismatch("all dimensions must have the same number of observations")
        object.__setattr__(self, "bases", bases)
        object.__setattr__(self, "coefs", coefs)

    @property
    def n(self) -> int:
        return self.coefs[0].shape[0]

    @property
    def d(self) -> int:
        return len(self.bases)

    @property
    def sizes(self) -> tuple:
        return tuple(b.size for b in self.bases)

    def rows(self, idx) -> "FunctionalSample":
        idx = np.asarray(idx)
        return FunctionalSample(self.bases, tuple(a[idx] for a in self.coefs))

    def select(self, dims: Sequence[int]) -> "FunctionalSample":
        """Restrict to the (0-based) dimensions ``dims``."""
        dims = list(dims)
        return FunctionalSample(tuple(self.bases[j] for j in dims), tuple(self.coefs[j] for j in dims))

    def observation(self, i: int) -> "FunctionObject":
        return FunctionObject(self.bases, tuple(a[i] for a in self.coefs))

    def check_bases(self, bases: Sequence[BasisSystem]) -> None:
        if tuple(bases) != self.bases:
            raise BasisMismatch("sample bases differ from the expected bases")


@dataclass(frozen=True, eq=False)
class FunctionObject:
    """A single element of the product space, one coefficient vector per dimension."""

    bases: tuple
    coefs: tuple

    def __post_init__(self):
        bases = tuple(self.bases)
        coefs = tuple(_frozen(c).reshape(-1) for c in self.coefs)
        if len(bases) != len(coefs):
            raise DimensionMismatch("need one coefficient vector per basis")
        for b, c in zip(bases, coefs):
            if c.size != b.size:
                raise DimensionMismatch(f"coefficient length {c.size} does not match basis size {b.size}")
        object.__setattr__(self, "bases", bases)
        object.__setattr__(self, "coefs", coefs)

    @classmethod
    def zeros(cls, bases) -> "FunctionObject":
        return cls(tuple(bases), tuple(np.zeros(b.size) for b in bases))

    @classmethod
    def from_flat(cls, bases, flat) -> "FunctionObject":
        flat = np.asarray(flat, dtype=float)
        cuts = np.cumsum([b.size for b in bases])[:-1]
        return cls(tuple(bases), tuple(np.split(flat, cuts)))

    @property
    def flat(self) -> np.ndarray:
        return np.concatenate(self.coefs)

    def evaluate(self, j: int, points) -> np.ndarray:
        """Values of dimension ``j`` at ``points``."""
        return self.bases[j].evaluate(points) @ self.coefs[j]


@dataclass(frozen=True, eq=False)
class RawObservations:
    """Discretised observations: per dimension a grid and an ``n x grid size`` value matrix.

    1-D grids have shape ``(N,)``; 2-D grids have shape ``(N, 2)``.
    """

    grids: tuple
    values: tuple

    def __post_init__(self):
        grids = tuple(_frozen(g) for g in self.grids)
        values = tuple(_frozen(v) for v in self.values)
        if len(grids) != len(values) or not grids:
            raise DimensionMismatch("need one value matrix per grid")
        n = values[0].shape[0]
        for g, v in zip(grids, values):
            if v.ndim != 2 or v.shape[1] != g.shape[0] or v.shape[0] != n:
                raise DimensionMismatch("value matrices must be n x grid size with a common n")
            if not np.all(np.isfinite(v)) or not np.all(np.isfinite(g)):
                raise ValidationError("missing or non-finite values are not supported")
        object.__setattr__(self, "grids", grids)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values[0].shape[0]


def inner_product(f: FunctionObject, g: FunctionObject) -> float:
    """Sum over dimensions of the L2 inner products of ``f`` and ``g``."""
    if f.bases != g.bases:
        raise BasisMismatch("functions are expressed in different bases")
    return float(sum(bf @ gram(b).F @ bg for b, bf, bg in zip(f.bases, f.coefs, g.coefs)))


def sample_inner_products(sample: FunctionalSample, f: FunctionObject) -> np.ndarray:
    """``<<X_i, f>>`` for every observation ``X_i`` of ``sample``."""
    if sample.bases != f.bases:
        raise BasisMismatch("sample and function are expressed in different bases")
    out = np.zeros(sample.n)
    for b, a, c in zip(sample.bases, sample.coefs, f.coefs):
        out += a @ (gram(b).F @ c)
    return out


def smooth(raw: RawObservations, bases: Sequence[BasisSystem]) -> FunctionalSample:
    """Least-squares basis coefficients of every observed curve or image."""
    bases = tuple(bases)
    if len(bases) != len(raw.grids):
        raise DimensionMismatch("need one basis per observed dimension")
    coefs = []
    for basis, grid, vals in zip(bases, raw.grids, raw.values):
        if grid.shape[0] < basis.size:
            raise RankDeficient(f"grid of {grid.shape[0]} points cannot identify {basis.size} coefficients")
        design = basis.evaluate(grid)
        coefs.append(_least_squares(design, vals))
    return FunctionalSample(bases, tuple(coefs))


def _least_squares(design: np.ndarray, values: np.ndarray) -> np.ndarray:
    u, s, vt = np.linalg.svd(design, full_matrices=False)
    if s[-1] < RANK_TOL * s[0]:
        raise RankDeficient("basis evaluation matrix is rank deficient on this grid")
    return ((values @ u) / s) @ vt


def center(sample: FunctionalSample, y=None):
    """Subtract column means of every coefficient matrix (and the mean of ``y``).

    Returns ``(centered sample, centered y, (x_means, y_mean))`` where ``x_means``
    is a ``FunctionObject``; ``y`` entries are ``None`` when no response is given.
    """
    if sample.n < 2:
        raise ValidationError("centering needs at least two observations")
    means = tuple(a.mean(axis=0) for a in sample.coefs)
    centered = FunctionalSample(sample.bases, tuple(a - m for a, m in zip(sample.coefs, means)))
    x_means = FunctionObject(sample.bases, means)
    if y is None:
        return centered, None, (x_means, None)
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != sample.n:
        raise DimensionMismatch("response length differs from sample size")
    y_mean = float(y.mean())
    return centered, y - y_mean, (x_means, y_mean)
