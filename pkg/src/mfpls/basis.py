"""Basis systems on 1-D and 2-D domains and their Gram metrics.

A basis is immutable and hashable, so the Gram metric of each distinct basis is
computed once and shared.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
from scipy.interpolate import BSpline

from .errors import NonSpdGram, ValidationError

#: Gauss-Legendre nodes per knot span (per axis for 2-D cells).
QUAD_NODES = 8
#: Eigenvalues below this fraction of the largest are clipped before square roots.
EIG_CLIP = 1e-12
#: Eigenvalues below ``-NEG_EIG_TOL * max_eig`` mean the basis is degenerate.
NEG_EIG_TOL = 1e-10


@dataclass(frozen=True)
class Domain:
    """An interval ``[lower, upper]`` or a rectangle given by per-axis bounds."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi) or len(lo) not in (1, 2):
            raise ValidationError("domain must have 1 or 2 axes")
        if any(not (a < b) for a, b in zip(lo, hi)):
            raise ValidationError(f"domain sides must have positive length: {lo} {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def interval(cls, t_min: float, t_max: float) -> "Domain":
        return cls((t_min,), (t_max,))

    @classmethod
    def rectangle(cls, u_bounds: Sequence[float], v_bounds: Sequence[float]) -> "Domain":
        return cls((u_bounds[0], v_bounds[0]), (u_bounds[1], v_bounds[1]))

    @property
    def ndim(self) -> int:
        return len(self.lower)

    @property
    def kind(self) -> str:
        return "interval" if self.ndim == 1 else "rectangle"

    def contains(self, points: np.ndarray, tol: float = 1e-12) -> bool:
        pts = np.asarray(points, dtype=float).reshape(-1, self.ndim)
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        span = hi - lo
        return bool(np.all(pts >= lo - tol * span) and np.all(pts <= hi + tol * span))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "lower": list(self.lower), "upper": list(self.upper)}


def _gauss_legendre(breaks: np.ndarray, nodes: int = QUAD_NODES):
    """Composite Gauss-Legendre rule with ``nodes`` points on each span of ``breaks``."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    a = breaks[:-1, None]
    b = breaks[1:, None]
    half = (b - a) / 2.0
    pts = (half * x + (a + b) / 2.0).ravel()
    wts = (half * w).ravel()
    return pts, wts


class BasisSystem:
    """Common interface of all basis families.

    Subclasses provide ``domain``, ``size``, ``evaluate`` and ``quadrature``;
    equality and hashing go through ``_key``.
    """

    family: str = ""
    domain: Domain
    size: int

    def evaluate(self, points: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def quadrature(self):  # pragma: no cover - abstract
        raise NotImplementedError

    def _key(self) -> tuple:  # pragma: no cover - abstract
        raise NotImplementedError

    def to_dict(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError

    def __eq__(self, other):
        return type(self) is type(other) and self._key() == other._key()

    def __hash__(self):
        return hash((type(self).__name__, self._key()))


class BSplineBasis(BasisSystem):
    """B-splines of a given ``order`` (degree + 1) on a clamped knot vector."""

    family = "bspline"

    def __init__(self, knots: Sequence[float], order: int):
        knots = np.asarray(knots, dtype=float)
        order = int(order)
        if order < 1:
            raise ValidationError("B-spline order must be >= 1")
        if knots.ndim != 1 or knots.size < 2 * order:
            raise ValidationError("knot vector too short for the requested order")
        if np.any(np.diff(knots) < 0):
            raise ValidationError("knots must be non-decreasing")
        self.knots = knots
        self.knots.flags.writeable = False
        self.order = order
        self.size = knots.size - order
        self.domain = Domain.interval(knots[order - 1], knots[-order])

    @classmethod
    def uniform(cls, size: int, order: int = 3, domain: Union[Domain, Sequence[float]] = (0.0, 1.0)):
        """``size`` B-splines of ``order`` with equidistant interior knots."""
        if not isinstance(domain, Domain):
            domain = Domain.interval(*domain)
        if size < order:
            raise ValidationError(f"need at least {order} basis functions for order {order}")
        a, b = domain.lower[0], domain.upper[0]
        inner = np.linspace(a, b, size - order + 2)
        knots = np.r_[[a] * (order - 1), inner, [b] * (order - 1)]
        return cls(knots, order)

    @property
    def degree(self) -> int:
        return self.order - 1

    def evaluate(self, points) -> np.ndarray:
        x = np.asarray(points, dtype=float).reshape(-1)
        if not self.domain.contains(x):
            raise ValidationError("evaluation points outside the basis domain")
        a, b = self.domain.lower[0], self.domain.upper[0]
        x = np.clip(x, a, b)
        return BSpline.design_matrix(x, self.knots, self.degree).toarray()

    def quadrature(self):
        return _gauss_legendre(np.unique(self.knots[self.order - 1 : self.knots.size - self.order + 1]))

    def _key(self):
        return (self.order, self.knots.tobytes())

    def to_dict(self) -> dict:
        return {"family": self.family, "order": self.order, "knots": self.knots.tolist()}

    def __repr__(self):
        return f"BSplineBasis(size={self.size}, order={self.order}, domain={self.domain.lower + self.domain.upper})"


class TensorBSplineBasis(BasisSystem):
    """Tensor product of two 1-D B-spline bases on a rectangle.

    Basis index ``k = i_u * size_v + i_v`` (u index varies slowest).
    """

    family = "tensor-bspline"

    def __init__(self, u: BSplineBasis, v: BSplineBasis):
        self.u = u
        self.v = v
        self.size = u.size * v.size
        self.domain = Domain((u.domain.lower[0], v.domain.lower[0]), (u.domain.upper[0], v.domain.upper[0]))

    @classmethod
    def uniform(cls, size_u: int, size_v: int, order: int = 2, domain=None):
        domain = domain or Domain.rectangle((0.0, 1.0), (0.0, 1.0))
        return cls(
            BSplineBasis.uniform(size_u, order, (domain.lower[0], domain.upper[0])),
            BSplineBasis.uniform(size_v, order, (domain.lower[1], domain.upper[1])),
        )

    def evaluate(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        bu = self.u.evaluate(pts[:, 0])
        bv = self.v.evaluate(pts[:, 1])
        return (bu[:, :, None] * bv[:, None, :]).reshape(pts.shape[0], self.size)

    def quadrature(self):
        pu, wu = self.u.quadrature()
        pv, wv = self.v.quadrature()
        uu, vv = np.meshgrid(pu, pv, indexing="ij")
        pts = np.column_stack([uu.ravel(), vv.ravel()])
        return pts, np.outer(wu, wv).ravel()

    def _key(self):
        return (self.u._key(), self.v._key())

    def to_dict(self) -> dict:
        return {"family": self.family, "u": self.u.to_dict(), "v": self.v.to_dict()}

    def __repr__(self):
        return f"TensorBSplineBasis({self.u.size}x{self.v.size}, order=({self.u.order},{self.v.order}))"


class TabulatedBasis(BasisSystem):
    """Basis functions given by their values on a 1-D quadrature grid.

    Evaluation between grid points is piecewise linear.
    """

    family = "custom"

    def __init__(self, domain: Domain, points, weights, values):
        pts = np.asarray(points, dtype=float).reshape(-1)
        wts = np.asarray(weights, dtype=float).reshape(-1)
        vals = np.asarray(values, dtype=float)
        if domain.ndim != 1:
            raise ValidationError("tabulated bases are 1-D only")
        if vals.ndim != 2 or vals.shape[0] != pts.size or wts.size != pts.size:
            raise ValidationError("values must be (grid size, basis size) matching points/weights")
        if np.any(np.diff(pts) <= 0):
            raise ValidationError("tabulation points must be strictly increasing")
        if not domain.contains(pts):
            raise ValidationError("tabulation points outside the domain")
        self.domain = domain
        self.points, self.weights, self.values = pts, wts, vals
        for arr in (self.points, self.weights, self.values):
            arr.flags.writeable = False
        self.size = vals.shape[1]

    @classmethod
    def from_functions(cls, funcs, domain: Union[Domain, Sequence[float]], panels: int = 64):
        """Tabulate callables on a composite Gauss-Legendre grid with ``panels`` spans."""
        if not isinstance(domain, Domain):
            domain = Domain.interval(*domain)
        breaks = np.linspace(domain.lower[0], domain.upper[0], panels + 1)
        pts, wts = _gauss_legendre(breaks)
        vals = np.column_stack([np.asarray(f(pts), dtype=float) for f in funcs])
        return cls(domain, pts, wts, vals)

    def evaluate(self, points) -> np.ndarray:
        x = np.asarray(points, dtype=float).reshape(-1)
        if not self.domain.contains(x):
            raise ValidationError("evaluation points outside the basis domain")
        return np.column_stack([np.interp(x, self.points, self.values[:, k]) for k in range(self.size)])

    def quadrature(self):
        return self.points, self.weights

    def _key(self):
        return (self.domain, self.points.tobytes(), self.weights.tobytes(), self.values.tobytes())

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "domain": self.domain.to_dict(),
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
            "values": self.values.tolist(),
        }


def basis_from_dict(d: dict) -> BasisSystem:
    family = d["family"]
    if family == "bspline":
        return BSplineBasis(d["knots"], d["order"])
    if family == "tensor-bspline":
        return TensorBSplineBasis(basis_from_dict(d["u"]), basis_from_dict(d["v"]))
    if family == "custom":
        dom = d["domain"]
        return TabulatedBasis(Domain(tuple(dom["lower"]), tuple(dom["upper"])), d["points"], d["weights"], d["values"])
    raise ValidationError(f"unknown basis family {family!r}")


@dataclass(frozen=True)
class GramMetric:
    """Gram matrix ``F`` of a basis with its symmetric square root and inverse root."""

    F: np.ndarray = field(repr=False)
    F_sqrt: np.ndarray = field(repr=False)
    F_inv_sqrt: np.ndarray = field(repr=False)

    @classmethod
    def from_matrix(cls, F: np.ndarray) -> "GramMetric":
        F = np.asarray(F, dtype=float)
        F = (F + F.T) / 2.0
        evals, evecs = np.linalg.eigh(F)
        top = evals[-1]
        if top <= 0 or evals[0] < -NEG_EIG_TOL * top:
            raise NonSpdGram(f"Gram matrix is not positive definite (eigenvalues {evals[0]:.3e} .. {top:.3e})")
        clipped = np.maximum(evals, EIG_CLIP * top)
        root = np.sqrt(clipped)
        F_sqrt = (evecs * root) @ evecs.T
        F_inv_sqrt = (evecs / root) @ evecs.T
        F_sqrt = (F_sqrt + F_sqrt.T) / 2.0
        F_inv_sqrt = (F_inv_sqrt + F_inv_sqrt.T) / 2.0
        for arr in (F, F_sqrt, F_inv_sqrt):
            arr.flags.writeable = False
        return cls(F, F_sqrt, F_inv_sqrt)

    @property
    def size(self) -> int:
        return self.F.shape[0]


@lru_cache(maxsize=256)
def gram(basis: BasisSystem) -> GramMetric:
    """Gram metric of ``basis`` by composite Gauss-Legendre quadrature."""
    pts, wts = basis.quadrature()
    phi = basis.evaluate(pts)
    return GramMetric.from_matrix((phi * wts[:, None]).T @ phi)
