"""K-fold cross-validation of the number of PLS components."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .data import FunctionalSample
from .errors import InsufficientData, MfplsError, ValidationError
from .rng import substream

#: Candidates within this distance of the optimum count as ties (smallest h wins).
TIE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CvReport:
    h_grid: tuple
    criterion: str
    mean_scores: np.ndarray = field(repr=False)
    fold_scores: np.ndarray = field(repr=False)
    chosen_h: int
    seed: int
    folds: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "h_grid": list(self.h_grid),
            "mean_scores": [None if np.isnan(v) else float(v) for v in self.mean_scores],
            "chosen_h": self.chosen_h,
            "seed": self.seed,
            "folds": self.folds.tolist(),
        }


def make_folds(n: int, k: int, seed: int, labels=None) -> np.ndarray:
    """Fold index of each observation; stratified by class when ``labels`` is given."""
    if k < 2:
        raise ValidationError("need at least 2 folds")
    if n < k:
        raise InsufficientData(f"{n} observations cannot fill {k} folds")
    rng = substream(seed, 0)
    folds = np.empty(n, dtype=int)
    if labels is None:
        folds[rng.permutation(n)] = np.arange(n) % k
        return folds
    labels = np.asarray(labels)
    offset = 0
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        folds[rng.permutation(idx)] = (np.arange(idx.size) + offset) % k
        offset += idx.size
    return folds


def cross_validate(
    sample: FunctionalSample,
    y,
    h_grid: Optional[Iterable[int]] = None,
    k_folds: int = 10,
    criterion: str = "mse",
    seed: int = 0,
) -> CvReport:
    """Mean fold criterion for every ``h`` in ``h_grid``.

    ``criterion="mse"`` treats ``y`` as a real response (smaller is better);
    ``criterion="auc"`` treats it as 0/1 labels, stratifies the folds and fits
    on the encoded label (larger is better).  Folds whose fit fails contribute
    nothing; an ``h`` with no valid fold scores NaN and if every ``h`` is NaN the
    report chooses ``h = 0``.
    """
    from .classify import auc, encode
    from .pls import default_h_max, mfpls_fit, predict_all

    if criterion not in ("mse", "auc"):
        raise ValidationError(f"unknown criterion {criterion!r}")
    y = np.asarray(y, dtype=float).reshape(-1)
    n = sample.n
    if y.size != n:
        raise ValidationError("response length differs from sample size")
    if h_grid is None:
        h_grid = range(1, default_h_max(n - n // k_folds, sample.sizes) + 1)
    h_grid = tuple(int(h) for h in h_grid)
    if not h_grid or min(h_grid) < 1:
        raise ValidationError("h_grid must contain positive integers")
    folds = make_folds(n, k_folds, seed, labels=y if criterion == "auc" else None)

    fold_scores = np.full((k_folds, len(h_grid)), np.nan)
    for f in range(k_folds):
        test = folds == f
        train = ~test
        tr, te = sample.rows(np.flatnonzero(train)), sample.rows(np.flatnonzero(test))
        try:
            if criterion == "auc":
                target, _ = encode(y[train].astype(int))
            else:
                target = y[train]
            h_cap = min(max(h_grid), tr.n - 1, sum(tr.sizes))
            model = mfpls_fit(tr, target, h_max=h_cap)
            preds = predict_all(model, te)
        except MfplsError:
            continue
        for i, h in enumerate(h_grid):
            p = preds[:, min(h, model.achieved) - 1]
            if criterion == "mse":
                fold_scores[f, i] = np.mean((y[test] - p) ** 2)
            else:
                try:
                    # encoded class 1 is negative: -prediction ranks class 1 high
                    fold_scores[f, i] = auc(y[test].astype(int), -p)
                except MfplsError:
                    pass

    with np.errstate(invalid="ignore"):
        valid = ~np.isnan(fold_scores)
        counts = valid.sum(axis=0)
        means = np.where(counts > 0, np.nansum(fold_scores, axis=0) / np.maximum(counts, 1), np.nan)
    chosen = 0
    if np.any(~np.isnan(means)):
        oriented = means if criterion == "auc" else -means
        best = np.nanmax(oriented)
        chosen = h_grid[int(np.flatnonzero(oriented >= best - TIE_TOL)[0])]
    return CvReport(h_grid, criterion, means, fold_scores, chosen, int(seed), folds)
