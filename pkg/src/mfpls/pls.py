"""PLS regression with multivariate functional predictors.

Each step computes, per dimension, the first ordinary PLS weight of the current
whitened coefficient block, combines the per-dimension components by a second
first-PLS step, and deflates every block and the response on the combined
component.  Weight functions ``w``, loadings ``rho`` and the direct weights
``v`` (with ``xi_h = <<v_h, X>>`` on the centered, undeflated predictor) are
recovered in the original basis coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np
from scipy.linalg import block_diag, solve_triangular

from .basis import GramMetric, gram
from .data import FunctionalSample, FunctionObject, center, inner_product
from .errors import DegenerateComponent, DimensionMismatch, SingularSystem, ValidationError, ZeroCovariance

#: Relative threshold below which a covariance vector counts as zero.
ZERO_COV_TOL = 1e-12
#: Relative threshold on ``xi' xi`` below which a component is degenerate.
DEGENERATE_TOL = 1e-12
#: Upper bound of the default number of components.
DEFAULT_H_CAP = 20


@dataclass(frozen=True, eq=False)
class WhitenedSample:
    """Per-dimension blocks ``A F^{1/2}``: Euclidean geometry equals function geometry."""

    blocks: tuple

    def unwhiten(self, metrics: Sequence[GramMetric]) -> tuple:
        return tuple(lam @ m.F_inv_sqrt for lam, m in zip(self.blocks, metrics))

    @property
    def concatenated(self) -> np.ndarray:
        return np.hstack(self.blocks)


def whiten(sample: FunctionalSample, metrics: Optional[Sequence[GramMetric]] = None) -> WhitenedSample:
    if metrics is None:
        metrics = [gram(b) for b in sample.bases]
    if len(metrics) != sample.d:
        raise DimensionMismatch("need one Gram metric per dimension")
    blocks = []
    for a, m in zip(sample.coefs, metrics):
        if m.size != a.shape[1]:
            raise DimensionMismatch("Gram metric size differs from coefficient count")
        blocks.append(a @ m.F_sqrt)
    return WhitenedSample(tuple(blocks))


def first_pls_weight(Z: np.ndarray, y: np.ndarray, y_norm: Optional[float] = None, col_norm: Optional[float] = None) -> np.ndarray:
    """Unit-norm covariance direction ``Z'y / ||Z'y||``.

    ``y_norm`` and ``col_norm`` are the reference scales of the zero-covariance
    test; they default to the norms of the arguments themselves.
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    g = Z.T @ y
    norm = np.linalg.norm(g)
    if y_norm is None:
        y_norm = np.linalg.norm(y)
    if col_norm is None:
        col_norm = np.linalg.norm(Z, axis=0).max(initial=0.0)
    if not norm > ZERO_COV_TOL * y_norm * col_norm or norm == 0.0:
        raise ZeroCovariance("no column of the predictor covaries with the response")
    return g / norm


def _orient(theta: np.ndarray) -> np.ndarray:
    """Flip ``theta`` so its largest-magnitude entry is positive."""
    k = int(np.argmax(np.abs(theta)))
    return -theta if theta[k] < 0 else theta


@dataclass(frozen=True, eq=False)
class PlsStep:
    theta: tuple
    u: np.ndarray
    r: tuple
    c: float
    xi_variance: float


@dataclass(frozen=True, eq=False)
class MfplsModel:
    """A fitted model; arrays are indexed ``[step, flat coefficient]``.

    ``w``, ``rho`` and ``v`` hold basis coefficients of the weight, loading and
    direct-weight functions, concatenated over dimensions.  ``betas[h-1]`` is the
    coefficient function with ``h`` components and ``intercepts[h-1]`` its intercept.
    """

    bases: tuple
    steps: tuple
    w: np.ndarray = field(repr=False)
    rho: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    P: np.ndarray = field(repr=False)
    betas: np.ndarray = field(repr=False)
    intercepts: np.ndarray = field(repr=False)
    x_means: FunctionObject = field(repr=False)
    y_mean: float = 0.0
    n_components: int = 0
    stop_reason: Optional[str] = None
    scores: Optional[np.ndarray] = field(default=None, repr=False)
    y_history: Optional[np.ndarray] = field(default=None, repr=False)
    x_history: Optional[list] = field(default=None, repr=False)

    @property
    def achieved(self) -> int:
        return len(self.steps)

    @property
    def beta(self) -> FunctionObject:
        return FunctionObject.from_flat(self.bases, self.betas[self.n_components - 1])

    @property
    def intercept(self) -> float:
        return float(self.intercepts[self.n_components - 1])

    @property
    def w_funcs(self) -> List[FunctionObject]:
        return [FunctionObject.from_flat(self.bases, row) for row in self.w[: self.n_components]]

    @property
    def rho_funcs(self) -> List[FunctionObject]:
        return [FunctionObject.from_flat(self.bases, row) for row in self.rho[: self.n_components]]

    @property
    def v_funcs(self) -> List[FunctionObject]:
        return [FunctionObject.from_flat(self.bases, row) for row in self.v[: self.n_components]]

    @property
    def c(self) -> np.ndarray:
        return np.array([s.c for s in self.steps[: self.n_components]])

    def truncate(self, h: int) -> "MfplsModel":
        """The same fit using only the first ``h`` components (clipped to what was achieved)."""
        h = int(h)
        if h < 1:
            raise ValidationError("number of components must be >= 1")
        h = min(h, self.achieved)
        return replace(self, n_components=h)


def default_h_max(n: int, sizes: Sequence[int]) -> int:
    return max(1, min(n - 1, int(sum(sizes)), DEFAULT_H_CAP))


def mfpls_fit(sample: FunctionalSample, y, h_max: Optional[int] = None, keep_history: bool = False) -> MfplsModel:
    """Fit up to ``h_max`` components; stops early once the signal is exhausted.

    ``keep_history`` stores every intermediate whitened block and response
    residual (used for diagnostics and tests).
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != sample.n:
        raise DimensionMismatch("response length differs from sample size")
    if h_max is None:
        h_max = default_h_max(sample.n, sample.sizes)
    h_max = int(h_max)
    if h_max < 1:
        raise ValidationError("h_max must be >= 1")
    if h_max > min(sample.n - 1, sum(sample.sizes)):
        raise ValidationError(f"h_max={h_max} exceeds min(n-1, total basis size)")

    centered, yres, (x_means, y_mean) = center(sample, y)
    metrics = [gram(b) for b in sample.bases]
    lam = [blk.copy() for blk in whiten(centered, metrics).blocks]
    n = sample.n
    y_ref = float(np.linalg.norm(yres))
    col_ref = [float(np.linalg.norm(blk, axis=0).max(initial=0.0)) for blk in lam]
    total_ss = float(sum(np.sum(blk * blk) for blk in lam))
    if y_ref == 0.0:
        raise ZeroCovariance("response is constant")

    steps, scores = [], []
    y_hist = [yres.copy()] if keep_history else None
    x_hist = [[blk.copy() for blk in lam]] if keep_history else None
    stop_reason = None
    for h in range(1, h_max + 1):
        thetas, parts = [], []
        for j, blk in enumerate(lam):
            try:
                theta = _orient(first_pls_weight(blk, yres, y_ref, col_ref[j]))
            except ZeroCovariance:
                theta = np.zeros(blk.shape[1])
            thetas.append(theta)
            parts.append(blk @ theta)
        if not any(t.any() for t in thetas):
            if h == 1:
                raise ZeroCovariance("predictor carries no covariance with the response")
            stop_reason = ZeroCovariance.code
            break
        Xi = np.column_stack(parts)
        u = first_pls_weight(Xi, yres, y_ref, np.linalg.norm(Xi, axis=0).max())
        xi = Xi @ u
        ss = float(xi @ xi)
        if ss < DEGENERATE_TOL * total_ss:
            if h == 1:
                raise DegenerateComponent("first component has (numerically) zero variance")
            stop_reason = DegenerateComponent.code
            break
        c = float(xi @ yres) / ss
        if c < 0:
            u, xi, c = -u, -xi, -c
        r = []
        for j in range(len(lam)):
            rj = lam[j].T @ xi / ss
            lam[j] -= np.outer(xi, rj)
            r.append(rj)
        yres = yres - c * xi
        steps.append(PlsStep(tuple(thetas), u, tuple(r), c, ss / n))
        scores.append(xi)
        if keep_history:
            y_hist.append(yres.copy())
            x_hist.append([blk.copy() for blk in lam])

    w, rho, P, v = _recover_arrays(steps, metrics)
    c = np.array([s.c for s in steps])
    betas = np.cumsum(c[:, None] * v, axis=0)
    F = block_diag(*[m.F for m in metrics])
    intercepts = y_mean - betas @ (F @ x_means.flat)
    return MfplsModel(
        bases=sample.bases,
        steps=tuple(steps),
        w=w,
        rho=rho,
        v=v,
        P=P,
        betas=betas,
        intercepts=intercepts,
        x_means=x_means,
        y_mean=y_mean,
        n_components=len(steps),
        stop_reason=stop_reason,
        scores=np.column_stack(scores),
        y_history=np.array(y_hist) if keep_history else None,
        x_history=x_hist,
    )


def _recover_arrays(steps: Sequence[PlsStep], metrics: Sequence[GramMetric]):
    """Weight, loading and direct-weight coefficients from the per-step vectors."""
    w = np.array([np.concatenate([s.u[j] * (m.F_inv_sqrt @ s.theta[j]) for j, m in enumerate(metrics)]) for s in steps])
    rho = np.array([np.concatenate([m.F_inv_sqrt @ s.r[j] for j, m in enumerate(metrics)]) for s in steps])
    # <<rho_k, w_l>> in whitened coordinates: H F H = I
    w_white = np.array([np.concatenate([s.u[j] * s.theta[j] for j in range(len(metrics))]) for s in steps])
    r_white = np.array([np.concatenate(s.r) for s in steps])
    P = np.triu(r_white @ w_white.T, k=1)
    return w, rho, P, _v_recursion(w, P)


def _v_recursion(w: np.ndarray, P: np.ndarray) -> np.ndarray:
    v = np.empty_like(w)
    for h in range(w.shape[0]):
        v[h] = w[h] - P[:h, h] @ v[:h]
    return v


def _p_matrix(w_funcs: Sequence[FunctionObject], rho_funcs: Sequence[FunctionObject]) -> np.ndarray:
    h = len(w_funcs)
    P = np.zeros((h, h))
    for k in range(h):
        for l in range(k + 1, h):
            P[k, l] = inner_product(rho_funcs[k], w_funcs[l])
    return P


def recover_v(w_funcs: Sequence[FunctionObject], rho_funcs: Sequence[FunctionObject], tol: float = 1e-8) -> List[FunctionObject]:
    """Direct weights ``v_h = w_h - sum_{k<h} <<rho_k, w_h>> v_k``.

    The result is checked against ``(I + P) V = W``.
    """
    if len(w_funcs) != len(rho_funcs):
        raise DimensionMismatch("need as many loading functions as weight functions")
    if not w_funcs:
        return []
    bases = w_funcs[0].bases
    W = np.array([f.flat for f in w_funcs])
    P = _p_matrix(w_funcs, rho_funcs)
    V = _v_recursion(W, P)
    # rows are functions, so the system reads (I + P)' V = W
    lhs = (np.eye(len(W)) + P).T @ V
    scale = max(1.0, float(np.abs(W).max()))
    if not np.all(np.isfinite(V)) or np.abs(lhs - W).max() > tol * scale:
        raise SingularSystem("recursion does not satisfy (I + P) V = W")
    return [FunctionObject.from_flat(bases, row) for row in V]


def v_by_solve(w_funcs: Sequence[FunctionObject], rho_funcs: Sequence[FunctionObject]) -> List[FunctionObject]:
    """Direct weights from the triangular system ``(I + P) V = W`` (rows of ``V``, ``W`` are functions, hence the transpose)."""
    bases = w_funcs[0].bases
    W = np.array([f.flat for f in w_funcs])
    P = _p_matrix(w_funcs, rho_funcs)
    V = solve_triangular((np.eye(len(W)) + P).T, W, lower=True, unit_diagonal=True)
    return [FunctionObject.from_flat(bases, row) for row in V]


def _flat_gram(bases) -> np.ndarray:
    return block_diag(*[gram(b).F for b in bases])


def predict(model: MfplsModel, sample: FunctionalSample, n_components: Optional[int] = None) -> np.ndarray:
    """``intercept + <<X_i, beta_h>>`` for every observation."""
    sample.check_bases(model.bases)
    h = model.n_components if n_components is None else min(int(n_components), model.achieved)
    A = np.hstack(sample.coefs)
    return model.intercepts[h - 1] + A @ (_flat_gram(model.bases) @ model.betas[h - 1])


def predict_all(model: MfplsModel, sample: FunctionalSample) -> np.ndarray:
    """Predictions for every achieved number of components, shape ``(n, achieved)``."""
    sample.check_bases(model.bases)
    A = np.hstack(sample.coefs)
    return model.intercepts[None, :] + A @ (_flat_gram(model.bases) @ model.betas.T)


def component_scores(model: MfplsModel, sample: FunctionalSample, n_components: Optional[int] = None) -> np.ndarray:
    """Scores of new observations obtained by replaying the deflation steps."""
    sample.check_bases(model.bases)
    h = model.n_components if n_components is None else min(int(n_components), model.achieved)
    means = model.x_means.coefs
    lam = [(a - m) @ gram(b).F_sqrt for a, m, b in zip(sample.coefs, means, model.bases)]
    out = np.empty((sample.n, h))
    for k, step in enumerate(model.steps[:h]):
        xi = sum(step.u[j] * (lam[j] @ step.theta[j]) for j in range(len(lam)))
        for j in range(len(lam)):
            lam[j] = lam[j] - np.outer(xi, step.r[j])
        out[:, k] = xi
    return out


def predict_by_components(model: MfplsModel, sample: FunctionalSample, n_components: Optional[int] = None) -> np.ndarray:
    """``y_mean + sum_k c_k xi_k`` with scores from :func:`component_scores`."""
    xi = component_scores(model, sample, n_components)
    c = np.array([s.c for s in model.steps[: xi.shape[1]]])
    return model.y_mean + xi @ c
