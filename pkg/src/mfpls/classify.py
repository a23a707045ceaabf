"""Binary PLS discriminant analysis and classification metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import rankdata

from .data import FunctionalSample, FunctionObject, inner_product, sample_inner_products
from .errors import DimensionMismatch, SingleClass, ValidationError


@dataclass(frozen=True)
class ClassEncoding:
    """Two-point recoding of a binary label with prior-dependent values."""

    pi1: float

    def __post_init__(self):
        if not 0.0 < self.pi1 < 1.0:
            raise SingleClass("both classes must be present")

    @property
    def pi0(self) -> float:
        return 1.0 - self.pi1

    @property
    def value_for_0(self) -> float:
        return float(np.sqrt(self.pi1 / self.pi0))

    @property
    def value_for_1(self) -> float:
        return -float(np.sqrt(self.pi0 / self.pi1))

    def apply(self, labels) -> np.ndarray:
        labels = _as_labels(labels)
        return np.where(labels == 1, self.value_for_1, self.value_for_0)


def _as_labels(labels) -> np.ndarray:
    labels = np.asarray(labels).reshape(-1)
    if labels.size and not np.all((labels == 0) | (labels == 1)):
        raise ValidationError("labels must be 0/1")
    return labels.astype(int)


def encode(labels):
    """Encoded response and the encoding fitted on ``labels``."""
    labels = _as_labels(labels)
    if labels.size == 0:
        raise SingleClass("no labels")
    enc = ClassEncoding(float(labels.mean()))
    return enc.apply(labels), enc


@dataclass(frozen=True, eq=False)
class DiscriminantModel:
    """Fisher score ``alpha + <<X, beta>>``; class 0 when positive."""

    beta: FunctionObject
    alpha: float
    n_components: int
    encoding: ClassEncoding
    cv: Optional[object] = None

    @property
    def bases(self) -> tuple:
        return self.beta.bases

    def scaled(self, factor: float) -> "DiscriminantModel":
        return DiscriminantModel(
            FunctionObject(self.beta.bases, tuple(factor * c for c in self.beta.coefs)),
            factor * self.alpha,
            self.n_components,
            self.encoding,
            self.cv,
        )


def fit_plsda(
    sample: FunctionalSample,
    labels,
    n_components: Optional[int] = None,
    k_folds: int = 10,
    seed: int = 0,
    h_max: Optional[int] = None,
) -> DiscriminantModel:
    """Regress the encoded label on ``sample``.

    With ``n_components=None`` the number of components maximises the
    stratified cross-validated AUC.
    """
    from .cv import cross_validate
    from .pls import default_h_max, mfpls_fit

    labels = _as_labels(labels)
    if labels.size != sample.n:
        raise DimensionMismatch("label count differs from sample size")
    ystar, enc = encode(labels)
    if sample.n < 4:
        raise ValidationError("PLS-DA needs at least 4 observations")
    if h_max is None:
        h_max = default_h_max(sample.n, sample.sizes)
    report = None
    if n_components is None:
        report = cross_validate(sample, labels, range(1, h_max + 1), k_folds=k_folds, criterion="auc", seed=seed)
        h = max(report.chosen_h, 1)
    else:
        h = int(n_components)
        if h < 1:
            raise ValidationError("number of components must be >= 1")
    model = mfpls_fit(sample, ystar, h_max=min(h, h_max))
    beta = model.beta
    alpha = -inner_product(model.x_means, beta)
    return DiscriminantModel(beta, alpha, model.n_components, enc, report)


def score(model: DiscriminantModel, sample: FunctionalSample) -> np.ndarray:
    """Fisher score of every observation."""
    sample.check_bases(model.bases)
    return model.alpha + sample_inner_products(sample, model.beta)


def classify(gamma) -> np.ndarray:
    """Class 0 where the score is strictly positive, class 1 otherwise."""
    return (np.asarray(gamma) <= 0).astype(int)


def auc(truth, class1_scores) -> float:
    """Mann-Whitney AUC with midranks; higher scores mean class 1."""
    truth = _as_labels(truth)
    s = np.asarray(class1_scores, dtype=float).reshape(-1)
    if s.size != truth.size:
        raise DimensionMismatch("scores and truth differ in length")
    n1 = int(truth.sum())
    n0 = truth.size - n1
    if n1 == 0 or n0 == 0:
        raise SingleClass("AUC needs both classes")
    ranks = rankdata(s)
    return float((ranks[truth == 1].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def classification_metrics(truth, gamma=None, scores=None, predicted=None) -> dict:
    """AUC, accuracy, sensitivity (recall of class 1) and specificity.

    Supply either Fisher scores ``gamma`` or class-1 ``scores`` plus ``predicted``
    classes.
    """
    truth = _as_labels(truth)
    if truth.size == 0:
        raise ValidationError("empty truth vector")
    if gamma is not None:
        gamma = np.asarray(gamma, dtype=float)
        scores = -gamma
        predicted = classify(gamma)
    if predicted is None:
        raise ValidationError("need predictions or Fisher scores")
    predicted = _as_labels(predicted)
    if predicted.size != truth.size:
        raise DimensionMismatch("predictions and truth differ in length")
    pos = truth == 1
    out = {"accuracy": float(np.mean(predicted == truth))}
    out["auc"] = auc(truth, scores) if scores is not None else float("nan")
    out["sensitivity"] = float(np.mean(predicted[pos] == 1)) if pos.any() else float("nan")
    out["specificity"] = float(np.mean(predicted[~pos] == 0)) if (~pos).any() else float("nan")
    return out


def mspe(y, yhat) -> float:
    y = np.asarray(y, dtype=float).reshape(-1)
    yhat = np.asarray(yhat, dtype=float).reshape(-1)
    if y.size != yhat.size or y.size == 0:
        raise DimensionMismatch("need non-empty vectors of equal length")
    return float(np.mean((y - yhat) ** 2))
