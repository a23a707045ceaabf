"""Partial least squares for multivariate functional data on mixed domains.

Regression (MFPLS), binary discriminant analysis, PLS-split decision trees
(TMFPLS) and the simulation harness that exercises them.
"""

from .basis import BSplineBasis, Domain, GramMetric, TabulatedBasis, TensorBSplineBasis, gram
from .classify import (ClassEncoding, DiscriminantModel, auc, classification_metrics, classify, encode,
                       fit_plsda, mspe, score)
from .cv import CvReport, cross_validate, make_folds
from .data import (FunctionalSample, FunctionObject, RawObservations, center, inner_product,
                   sample_inner_products, smooth)
from .errors import MfplsError
from .pls import (MfplsModel, component_scores, mfpls_fit, predict, predict_all, predict_by_components,
                  recover_v, v_by_solve, whiten)
from .tree import GroupStructure, PlsTree, TreeConfig, estimate_depth, grow, predict_tree, render

__version__ = "0.1.0"

__all__ = [
    "BSplineBasis", "Domain", "GramMetric", "TabulatedBasis", "TensorBSplineBasis", "gram",
    "ClassEncoding", "DiscriminantModel", "auc", "classification_metrics", "classify", "encode",
    "fit_plsda", "mspe", "score",
    "CvReport", "cross_validate", "make_folds",
    "FunctionalSample", "FunctionObject", "RawObservations", "center", "inner_product",
    "sample_inner_products", "smooth",
    "MfplsError",
    "MfplsModel", "component_scores", "mfpls_fit", "predict", "predict_all", "predict_by_components",
    "recover_v", "v_by_solve", "whiten",
    "GroupStructure", "PlsTree", "TreeConfig", "estimate_depth", "grow", "predict_tree", "render",
]
