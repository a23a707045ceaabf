"""Data generators and experiment runner for the three simulation settings.

Every generator is a pure function of ``(config, seed, rep)``: replication
``rep`` draws from its own Philox substreams.
"""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .basis import BSplineBasis, TensorBSplineBasis
from .classify import classification_metrics, fit_plsda, mspe, score
from .cv import cross_validate
from .data import FunctionalSample, FunctionObject, RawObservations, smooth
from .errors import MfplsError, SingularCovariance, ValidationError
from .pls import default_h_max, mfpls_fit, predict
from .rng import derive_seed, substream
from .tree import GroupStructure, TreeConfig, estimate_depth, grow, predict_tree

SETTING1_SNRS = (0.5, 1.62, 2.75, 3.88, 5.0)
SETTING3_SNRS = (0.5, 0.73, 1.16, 2.10, 4.94)

# substream purposes
_DATA, _NOISE, _SPLIT, _LABELS, _FIELD = 0, 1, 2, 3, 4


@dataclass(frozen=True)
class Setting1Config:
    """Scalar response, three curves on [0, 1].

    ``gamma_scale="sd"`` reads ``4 k^{-3/2}`` as the standard deviation of the
    score ``gamma_k``; ``"variance"`` reads it as the variance.
    ``shared_gamma`` draws one score vector for all three dimensions.
    """

    snr: float = 5.0
    n: int = 400
    train_fraction: float = 0.5
    n_basis: int = 20
    basis_order: int = 3
    n_grid: int = 200
    gamma_scale: str = "sd"
    shared_gamma: bool = False
    cv_folds: int = 10

    setting = 1
    task = "regression"

    def __post_init__(self):
        if not self.snr > 0:
            raise ValidationError("snr must be positive")
        if self.gamma_scale not in ("sd", "variance"):
            raise ValidationError("gamma_scale must be 'sd' or 'variance'")

    @property
    def level(self):
        return self.snr


@dataclass(frozen=True)
class Setting2Config:
    """Binary response from peak patterns on two curves over [0, 1]."""

    scenario: int = 1
    n: int = 1000
    noise_var: float = 0.20
    centers: tuple = (0.2, 0.4, 0.6, 0.8)
    n_grid: int = 200
    train_fraction: float = 0.75
    n_basis: int = 20
    basis_order: int = 3
    cv_folds: int = 10
    tree_max_depth: int = 10

    setting = 2
    task = "classification"

    def __post_init__(self):
        if self.scenario not in (1, 2):
            raise ValidationError("scenario must be 1 or 2")

    @property
    def level(self):
        return self.scenario


@dataclass(frozen=True)
class Setting3Config:
    """Binary response from a curve on [0, 50] and an image on [0, 1]^2."""

    snr: float = 0.5
    n: int = 500
    train_fraction: float = 0.75
    n_grid: int = 50
    image_side: int = 50
    sill: float = 0.25
    range: float = 0.75
    p_z: float = 0.75
    n_basis: int = 20
    basis_order: int = 3
    image_basis: tuple = (2, 2)
    image_order: int = 2
    cv_folds: int = 10
    tree_max_depth: int = 10

    setting = 3
    task = "classification"

    def __post_init__(self):
        if not self.snr > 0:
            raise ValidationError("snr must be positive")
        if not 0.0 < self.p_z < 1.0:
            raise ValidationError("p_z must lie in (0, 1)")

    @property
    def level(self):
        return self.snr

    @property
    def noise_var(self) -> float:
        return 1.0 / self.snr


@dataclass(frozen=True, eq=False)
class SimData:
    raw: RawObservations
    y: np.ndarray
    bases: tuple
    signal: Optional[np.ndarray] = None
    noise_var: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def sample(self) -> FunctionalSample:
        return smooth(self.raw, self.bases)


# ---------------------------------------------------------------- setting 1

def _upsilon(k: int, t):
    return np.sin(k * np.pi * t) - np.cos(k * np.pi * t)


SETTING1_BETA: Sequence[Callable] = (
    lambda t: np.sin(2 * np.pi * t),
    lambda t: np.sin(3 * np.pi * t),
    lambda t: np.cos(2 * np.pi * t),
)


@lru_cache(maxsize=1)
def _setting1_projections() -> np.ndarray:
    """``int_0^1 upsilon_k(t) beta_j(t) dt`` for j = 1..3, k = 1..5 (64-point Gauss-Legendre)."""
    x, w = np.polynomial.legendre.leggauss(64)
    t, w = (x + 1) / 2, w / 2
    return np.array([[np.sum(w * _upsilon(k, t) * b(t)) for k in range(1, 6)] for b in SETTING1_BETA])


def gen_setting1(config: Setting1Config, seed: int, rep: int = 0) -> SimData:
    rng = substream(seed, rep, _DATA)
    k = np.arange(1, 6)
    scale = 4.0 * k ** -1.5
    sd = scale if config.gamma_scale == "sd" else np.sqrt(scale)
    n_dims = 3
    if config.shared_gamma:
        g = rng.standard_normal((config.n, 5)) * sd
        gammas = [g] * n_dims
    else:
        gammas = [rng.standard_normal((config.n, 5)) * sd for _ in range(n_dims)]
    grid = np.linspace(0.0, 1.0, config.n_grid)
    ups = np.array([_upsilon(kk, grid) for kk in k])  # 5 x grid
    proj = _setting1_projections()
    signal = sum(gammas[j] @ proj[j] for j in range(n_dims))
    sigma2 = float(np.mean(signal**2)) / config.snr
    eps = substream(seed, rep, _NOISE).standard_normal(config.n) * math.sqrt(sigma2)
    raw = RawObservations(tuple(grid for _ in range(n_dims)), tuple(g @ ups for g in gammas))
    basis = BSplineBasis.uniform(config.n_basis, config.basis_order, (0.0, 1.0))
    return SimData(raw, signal + eps, (basis,) * n_dims, signal=signal, noise_var=sigma2,
                   extra={"gammas": gammas})


# ---------------------------------------------------------------- setting 2

def peak(t, center: float):
    return np.maximum(1.0 - 10.0 * np.abs(np.asarray(t) - center), 0.0)


def setting2_patterns() -> np.ndarray:
    """The 81 amplitude vectors; rows 0..3 are the class-1 patterns."""
    v1 = (1, 1, 0, 0)
    v2 = (0, 1, 1, 0)
    special = [v1, v2, tuple(-a for a in v1), tuple(-a for a in v2)]
    rest = [p for p in itertools.product((-1, 0, 1), repeat=4) if p not in special]
    return np.array(special + rest, dtype=float)


def setting2_probabilities(scenario: int) -> np.ndarray:
    """Pattern probabilities: class 1 and class 0 each carry mass 1/2.

    The class-0 mass is spread uniformly over the 77 remaining patterns.
    """
    p = np.zeros(81)
    if scenario == 1:
        p[:2] = 0.25
    else:
        p[:4] = 0.125
    p[4:] = 0.5 / 77
    return p


def gen_setting2(config: Setting2Config, seed: int, rep: int = 0) -> SimData:
    rng = substream(seed, rep, _DATA)
    patterns = setting2_patterns()
    idx = rng.choice(81, size=config.n, p=setting2_probabilities(config.scenario))
    a = patterns[idx]
    y = (idx < 4).astype(int)
    grid = np.linspace(0.0, 1.0, config.n_grid)
    h = np.array([peak(grid, u) for u in config.centers])  # 4 x grid
    noise = substream(seed, rep, _NOISE).standard_normal((2, config.n, config.n_grid)) * math.sqrt(config.noise_var)
    x1 = a @ h + noise[0]
    x2 = (1.0 - a) @ h + noise[1]
    basis = BSplineBasis.uniform(config.n_basis, config.basis_order, (0.0, 1.0))
    return SimData(RawObservations((grid, grid), (x1, x2)), y, (basis, basis), extra={"patterns": idx})


# ---------------------------------------------------------------- setting 3

def setting3_curve(t):
    return 3.14 * np.maximum(1.0 - np.abs(np.asarray(t) - 10.0) / 4.0, 0.0)


def setting3_image(points):
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    return -2.0 * np.log(np.hypot(pts[:, 0] - 0.5, pts[:, 1] - 0.5))


def image_grid(side: int) -> np.ndarray:
    """Pixel coordinates on [0, 1]^2, flattened column-major (u varies fastest)."""
    u = np.linspace(0.0, 1.0, side)
    uu, vv = np.meshgrid(u, u, indexing="ij")
    return np.column_stack([uu.ravel(order="F"), vv.ravel(order="F")])


def matern_covariance(points, sill: float, range_: float, nugget: float) -> np.ndarray:
    """Exponential (Matern, smoothness 1/2) covariance plus nugget variance on the diagonal."""
    d = cdist(points, points)
    cov = sill * np.exp(-d / range_)
    cov[np.diag_indices_from(cov)] += nugget
    return cov


@lru_cache(maxsize=8)
def _matern_factor(side: int, sill: float, range_: float, nugget: float) -> np.ndarray:
    cov = matern_covariance(image_grid(side), sill, range_, nugget)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance("Matern covariance is not positive definite") from exc


def matern_field(n: int, side: int, sill: float, range_: float, nugget: float, rng: np.random.Generator) -> np.ndarray:
    """``n`` field draws on the ``side x side`` pixel grid, shape ``(n, side**2)``."""
    L = _matern_factor(side, float(sill), float(range_), float(nugget))
    return (L @ rng.standard_normal((L.shape[0], n))).T


def gen_setting3(config: Setting3Config, seed: int, rep: int = 0) -> SimData:
    rng = substream(seed, rep, _DATA)
    z = (rng.random((config.n, 2)) < config.p_z).astype(int)
    y = z[:, 0] * z[:, 1]
    sigma2 = config.noise_var
    grid1 = np.linspace(0.0, 50.0, config.n_grid)
    grid2 = image_grid(config.image_side)
    x1 = z[:, :1] * setting3_curve(grid1)[None, :]
    x1 = x1 + substream(seed, rep, _NOISE).standard_normal((config.n, grid1.size)) * math.sqrt(sigma2)
    field_ = matern_field(config.n, config.image_side, config.sill, config.range, sigma2, substream(seed, rep, _FIELD))
    x2 = z[:, 1:] * setting3_image(grid2)[None, :] + field_
    b1 = BSplineBasis.uniform(config.n_basis, config.basis_order, (0.0, 50.0))
    b2 = TensorBSplineBasis.uniform(config.image_basis[0], config.image_basis[1], config.image_order)
    return SimData(RawObservations((grid1, grid2), (x1, x2)), y, (b1, b2), noise_var=sigma2, extra={"z": z})


GENERATORS = {1: gen_setting1, 2: gen_setting2, 3: gen_setting3}


def generate(config, seed: int, rep: int = 0) -> SimData:
    return GENERATORS[config.setting](config, seed, rep)


# ---------------------------------------------------------------- experiments

METHOD_LABELS = {"mfpls": "MFPLS", "tmfpls_h1": "TMFPLS H-1", "tmfpls_hcv": "TMFPLS H-CV"}


def canonical_method(name: str) -> str:
    """Accept ``mfpls(2)`` as a spelling of ``mfpls_dim2``."""
    name = name.strip().lower()
    if name.startswith("mfpls(") and name.endswith(")"):
        name = f"mfpls_dim{name[6:-1]}"
    if name in METHOD_LABELS or (name.startswith("mfpls_dim") and name[9:].isdigit()):
        return name
    raise ValidationError(f"unknown method {name!r}")


def method_label(name: str) -> str:
    if name.startswith("mfpls_dim"):
        return f"MFPLS({name[9:]})"
    return METHOD_LABELS[name]


def _split(n: int, fraction: float, seed: int, rep: int):
    perm = substream(seed, rep, _SPLIT).permutation(n)
    cut = int(math.floor(fraction * n))
    return np.sort(perm[:cut]), np.sort(perm[cut:])


def _fit_linear(task: str, train: FunctionalSample, y_train, test: FunctionalSample, y_test, folds: int, cv_seed: int):
    h_max = default_h_max(train.n - train.n // folds, train.sizes)
    if task == "regression":
        report = cross_validate(train, y_train, range(1, h_max + 1), k_folds=folds, criterion="mse", seed=cv_seed)
        if report.chosen_h < 1:
            raise ValidationError("cross-validation found no usable number of components")
        model = mfpls_fit(train, y_train, h_max=report.chosen_h)
        return {"mspe": mspe(y_test, predict(model, test)), "h": model.n_components}, model.beta
    model = fit_plsda(train, y_train, None, k_folds=folds, seed=cv_seed, h_max=h_max)
    out = classification_metrics(y_test, gamma=score(model, test))
    out["h"] = model.n_components
    return out, model.beta


def _fit_tree(train, y_train, test, y_test, components, folds: int, cv_seed: int, max_depth: int):
    groups = GroupStructure.default(train.d)
    cfg = TreeConfig(purity_threshold=0.01, max_depth=max_depth, min_node_size=5,
                     n_components=components, cv_folds=folds, seed=cv_seed)
    depth = estimate_depth(train, y_train, groups, cfg)
    tree = grow(train, y_train, groups, TreeConfig(**{**asdict(cfg), "max_depth": depth}))
    classes, leaf_scores = predict_tree(tree, test)
    out = classification_metrics(y_test, scores=leaf_scores, predicted=classes)
    out["depth"] = depth
    return out, tree


def run_replication(config, methods: Sequence[str], seed: int, rep: int) -> List[dict]:
    """Fit every method on one replication; failures are recorded, not raised."""
    data = generate(config, seed, rep)
    sample = data.sample()
    train_idx, test_idx = _split(sample.n, config.train_fraction, seed, rep)
    train, test = sample.rows(train_idx), sample.rows(test_idx)
    y_train, y_test = data.y[train_idx], data.y[test_idx]
    cv_seed = derive_seed(seed, rep, 7)
    records = []
    for method in methods:
        rec = {"rep": rep, "method": method}
        t0 = time.perf_counter()
        try:
            if method.startswith("tmfpls"):
                if config.task != "classification":
                    raise ValidationError("tree methods need a classification setting")
                comps = 1 if method == "tmfpls_h1" else None
                metrics, _ = _fit_tree(train, y_train, test, y_test, comps, config.cv_folds, cv_seed, config.tree_max_depth)
            else:
                dims = list(range(sample.d)) if method == "mfpls" else [int(method[9:]) - 1]
                if any(j >= sample.d for j in dims):
                    raise ValidationError(f"{method} refers to a missing dimension")
                metrics, beta = _fit_linear(config.task, train.select(dims), y_train, test.select(dims), y_test,
                                            config.cv_folds, cv_seed)
                if rep == 0:
                    rec["beta"] = beta
                    rec["beta_dims"] = dims
            rec.update(metrics)
        except MfplsError as exc:
            rec["error"] = f"{exc.code}: {exc}"
        rec["time"] = time.perf_counter() - t0
        records.append(rec)
    return records


@dataclass(eq=False)
class ExperimentResult:
    config: object
    methods: tuple
    replications: int
    seed: int
    records: List[dict]
    grids: tuple = ()

    def metric_names(self) -> List[str]:
        return ["mspe"] if self.config.task == "regression" else ["auc", "sensitivity", "specificity", "accuracy"]

    def values(self, method: str, metric: str) -> np.ndarray:
        return np.array([r[metric] for r in self.records if r["method"] == method and metric in r], dtype=float)

    def summary(self) -> List[dict]:
        rows = []
        for method in self.methods:
            for metric in self.metric_names() + ["h", "depth"]:
                vals = self.values(method, metric)
                if vals.size == 0:
                    continue
                rows.append({
                    "setting": self.config.setting,
                    "snr/scenario": self.config.level,
                    "method": method,
                    "metric": metric,
                    "mean": float(np.mean(vals)),
                    "std": float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0,
                    "replications": int(vals.size),
                    "seed": self.seed,
                })
        return rows

    def errors(self) -> List[dict]:
        return [{"rep": r["rep"], "method": r["method"], "error": r["error"]} for r in self.records if "error" in r]

    def mean(self, method: str, metric: str) -> float:
        return float(np.mean(self.values(method, metric)))

    def std(self, method: str, metric: str) -> float:
        vals = self.values(method, metric)
        return float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0


def run_experiment(config, methods: Sequence[str] = ("mfpls",), replications: int = 50, seed: int = 0,
                   jobs: int = 1) -> ExperimentResult:
    """Run ``replications`` independent replications; results are kept in replication order."""
    methods = tuple(canonical_method(m) for m in methods)
    if replications < 1:
        raise ValidationError("replications must be >= 1")
    args = [(config, methods, seed, rep) for rep in range(replications)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_star, args))
    else:
        chunks = [run_replication(*a) for a in args]
    records = [rec for chunk in chunks for rec in chunk]
    grids = generate(config, seed, 0).raw.grids
    return ExperimentResult(config, methods, replications, seed, records, grids)


def _run_star(args):
    return run_replication(*args)
