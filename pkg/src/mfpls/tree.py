"""Decision trees whose splits are PLS discriminant scores on groups of dimensions."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .classify import DiscriminantModel, auc, fit_plsda, score
from .data import FunctionalSample
from .errors import EmptyNode, InsufficientData, MfplsError, ValidationError
from .rng import substream

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroupStructure:
    """Candidate groups of dimensions, stored 0-based."""

    groups: tuple

    def __post_init__(self):
        groups = tuple(tuple(sorted(set(int(j) for j in g))) for g in self.groups)
        if not groups or any(len(g) == 0 for g in groups):
            raise ValidationError("groups must be non-empty")
        if any(j < 0 for g in groups for j in g):
            raise ValidationError("group indices must be non-negative")
        object.__setattr__(self, "groups", groups)

    @classmethod
    def parse(cls, text: str) -> "GroupStructure":
        """Parse 1-based groups such as ``"1;2;1,2"``."""
        try:
            groups = [[int(tok) - 1 for tok in part.split(",") if tok.strip()] for part in text.split(";") if part.strip()]
        except ValueError as exc:
            raise ValidationError(f"cannot parse groups {text!r}") from exc
        return cls(tuple(groups))

    @classmethod
    def default(cls, d: int) -> "GroupStructure":
        """Every single dimension, then all dimensions together (when ``d > 1``)."""
        groups = [(j,) for j in range(d)]
        if d > 1:
            groups.append(tuple(range(d)))
        return cls(tuple(groups))

    def validate(self, d: int) -> None:
        if any(j >= d for g in self.groups for j in g):
            raise ValidationError(f"groups reference dimensions beyond d={d}")

    def label(self, k: int) -> str:
        return "{" + ",".join(str(j + 1) for j in self.groups[k]) + "}"

    def __len__(self):
        return len(self.groups)


@dataclass(frozen=True)
class TreeConfig:
    """Growth controls.  ``n_components=None`` selects components per node by CV."""

    purity_threshold: float = 0.01
    max_depth: int = 10
    min_node_size: int = 5
    n_components: Optional[int] = 1
    cv_folds: int = 10
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.purity_threshold <= 0.5:
            raise ValidationError("purity_threshold must lie in [0, 0.5]")
        if self.max_depth < 0:
            raise ValidationError("max_depth must be >= 0")
        if self.n_components is not None and self.n_components < 1:
            raise ValidationError("n_components must be >= 1 (or None for CV)")


def impurity(counts: Sequence[float]) -> float:
    """Gini impurity of a two-class node."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise EmptyNode("impurity of an empty node")
    p = counts / total
    return float(1.0 - np.sum(p * p))


def split_gain(parent: Sequence[float], left: Sequence[float], right: Sequence[float]) -> float:
    """Weighted impurity decrease of splitting ``parent`` into ``left`` and ``right``."""
    parent, left, right = (np.asarray(c, dtype=float) for c in (parent, left, right))
    if not np.allclose(left + right, parent):
        raise ValidationError("children counts must add up to the parent")
    n = parent.sum()
    out = impurity(parent)
    for child in (left, right):
        if child.sum() > 0:
            out -= child.sum() / n * impurity(child)
    return float(out)


@dataclass(eq=False)
class TreeNode:
    depth: int
    counts: Tuple[int, int]
    group: Optional[int] = None
    model: Optional[DiscriminantModel] = None
    gain: Optional[float] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.model is None

    @property
    def n(self) -> int:
        return int(sum(self.counts))

    @property
    def proportions(self) -> Tuple[float, float]:
        n = self.n
        return (self.counts[0] / n, self.counts[1] / n)

    @property
    def predicted_class(self) -> int:
        """Majority class; ties go to class 1."""
        return int(self.counts[1] >= self.counts[0])

    def iter_nodes(self):
        yield self
        if not self.is_leaf:
            yield from self.left.iter_nodes()
            yield from self.right.iter_nodes()


@dataclass(eq=False)
class PlsTree:
    root: TreeNode
    groups: GroupStructure
    config: TreeConfig
    bases: tuple
    diagnostics: List[str] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return max(node.depth for node in self.root.iter_nodes() if node.is_leaf)

    def leaves(self, max_depth: Optional[int] = None) -> List[TreeNode]:
        out = []

        def walk(node):
            if node.is_leaf or (max_depth is not None and node.depth >= max_depth):
                out.append(node)
            else:
                walk(node.left)
                walk(node.right)

        walk(self.root)
        return out

    def splits(self) -> List[TreeNode]:
        return [node for node in self.root.iter_nodes() if not node.is_leaf]


def _counts(labels: np.ndarray) -> Tuple[int, int]:
    n1 = int(labels.sum())
    return (labels.size - n1, n1)


def _fit_candidate(sample: FunctionalSample, labels: np.ndarray, dims, config: TreeConfig) -> DiscriminantModel:
    sub = sample.select(dims)
    if config.n_components is None:
        folds = min(config.cv_folds, sample.n)
        if folds < 2:
            raise InsufficientData("node too small for cross-validation")
        return fit_plsda(sub, labels, None, k_folds=folds, seed=config.seed)
    return fit_plsda(sub, labels, config.n_components)


def grow(sample: FunctionalSample, labels, groups: GroupStructure, config: TreeConfig = TreeConfig()) -> PlsTree:
    """Grow a tree by recursive best-group splitting.

    Candidate fits that fail (e.g. a single class for the group's PLS) score
    ``-inf`` and are recorded in ``tree.diagnostics``; they never abort growth.
    """
    labels = np.asarray(labels).astype(int).reshape(-1)
    if labels.size != sample.n:
        raise ValidationError("label count differs from sample size")
    groups.validate(sample.d)
    diagnostics: List[str] = []

    def build(idx: np.ndarray, depth: int) -> TreeNode:
        y = labels[idx]
        counts = _counts(y)
        node = TreeNode(depth, counts)
        q = impurity(counts)
        if q == 0.0 or q < config.purity_threshold or depth >= config.max_depth or idx.size < config.min_node_size:
            return node
        node_sample = sample.rows(idx)
        best = (-np.inf, None, None, None)
        for k, dims in enumerate(groups.groups):
            try:
                model = _fit_candidate(node_sample, y, dims, config)
                gamma = score(model, node_sample.select(dims))
            except MfplsError as exc:
                diagnostics.append(f"depth {depth} n={idx.size} group {groups.label(k)}: {exc.code}: {exc}")
                continue
            go_left = gamma > 0
            if go_left.all() or not go_left.any():
                continue
            gain = split_gain(counts, _counts(y[go_left]), _counts(y[~go_left]))
            if gain > best[0]:
                best = (gain, k, model, go_left)
        gain, k, model, go_left = best
        if k is None or not gain > 0:
            return node
        node.group, node.model, node.gain = k, model, gain
        node.left = build(idx[go_left], depth + 1)
        node.right = build(idx[~go_left], depth + 1)
        return node

    root = build(np.arange(sample.n), 0)
    for msg in diagnostics:
        log.debug(msg)
    return PlsTree(root, groups, config, sample.bases, diagnostics)


def predict_tree(tree: PlsTree, sample: FunctionalSample, max_depth: Optional[int] = None):
    """Route observations by the sign of node scores.

    Returns predicted classes and leaf scores (class-1 proportion of the leaf).
    ``max_depth`` truncates the tree: nodes at that depth act as leaves.
    """
    sample.check_bases(tree.bases)
    classes = np.empty(sample.n, dtype=int)
    scores = np.empty(sample.n)

    def route(node: TreeNode, idx: np.ndarray):
        if idx.size == 0:
            return
        if node.is_leaf or (max_depth is not None and node.depth >= max_depth):
            classes[idx] = node.predicted_class
            scores[idx] = node.proportions[1]
            return
        dims = tree.groups.groups[node.group]
        gamma = score(node.model, sample.rows(idx).select(dims))
        route(node.left, idx[gamma > 0])
        route(node.right, idx[gamma <= 0])

    route(tree.root, np.arange(sample.n))
    return classes, scores


def _stratified_split(labels: np.ndarray, fraction: float, rng: np.random.Generator):
    train = []
    for cls in (0, 1):
        idx = np.flatnonzero(labels == cls)
        idx = rng.permutation(idx)
        cut = int(round(fraction * idx.size))
        if cut < 1 or cut >= idx.size:
            raise InsufficientData("both classes must appear on both sides of the pruning split")
        train.append(idx[:cut])
    train = np.sort(np.concatenate(train))
    val = np.setdiff1d(np.arange(labels.size), train)
    return train, val


def best_depth(tree: PlsTree, sample: FunctionalSample, labels) -> Tuple[int, List[float]]:
    """Truncation depth with the highest validation AUC (smallest depth on ties)."""
    labels = np.asarray(labels).astype(int)
    aucs = []
    for m in range(tree.depth + 1):
        _, s = predict_tree(tree, sample, max_depth=m)
        aucs.append(auc(labels, s))
    best = max(aucs)
    return next(m for m, a in enumerate(aucs) if a >= best - 1e-12), aucs


def depth_votes(sample: FunctionalSample, labels, groups: GroupStructure, config: TreeConfig = TreeConfig(),
                repetitions: int = 10, train_fraction: float = 0.75, splits=None) -> List[int]:
    """Best truncation depth of each repetition.

    Repetition ``r`` splits with the substream ``(config.seed + r)``; explicit
    ``splits`` (pairs of train/validation index arrays) override that.
    """
    labels = np.asarray(labels).astype(int).reshape(-1)
    if splits is None:
        splits = [_stratified_split(labels, train_fraction, substream(config.seed + r, 1)) for r in range(repetitions)]
    votes = []
    for train, val in splits:
        tree = grow(sample.rows(train), labels[train], groups, config)
        votes.append(best_depth(tree, sample.rows(val), labels[val])[0])
    return votes


def estimate_depth(sample: FunctionalSample, labels, groups: GroupStructure, config: TreeConfig = TreeConfig(),
                   repetitions: int = 10, train_fraction: float = 0.75, splits=None) -> int:
    """Most frequent best depth over repeated 75/25 growing/pruning splits (smallest on ties)."""
    votes = depth_votes(sample, labels, groups, config, repetitions, train_fraction, splits)
    tally = Counter(votes)
    top = max(tally.values())
    return min(m for m, c in tally.items() if c == top)


def render(tree: PlsTree) -> str:
    """Indented text view: depth, group used and class counts per node."""
    lines = []

    def walk(node: TreeNode, tag: str):
        head = f"{'  ' * node.depth}{tag}[depth {node.depth}] n={node.n} class0={node.counts[0]} class1={node.counts[1]}"
        if node.is_leaf:
            lines.append(f"{head} -> leaf, predict {node.predicted_class}")
            return
        lines.append(f"{head} split on group {tree.groups.label(node.group)} (h={node.model.n_components}, gain={node.gain:.4f})")
        walk(node.left, "Γ>0 ")
        walk(node.right, "Γ≤0 ")

    walk(tree.root, "")
    return "\n".join(lines) + "\n"
