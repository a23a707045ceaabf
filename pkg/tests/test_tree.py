import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfpls.classify import score
from mfpls.data import FunctionalSample
from mfpls.errors import BasisMismatch, EmptyNode, ValidationError
from mfpls.tree import (GroupStructure, TreeConfig, best_depth, depth_votes, estimate_depth, grow, impurity,
                        predict_tree, render, split_gain)

from conftest import random_sample
from oracles import gini


def separable(rng, n=80, sizes=(6, 5), margin=0.5):
    """Labels from the sign of a linear functional, observations inside the margin dropped."""
    s = random_sample(rng, 3 * n, sizes)
    direction = [rng.standard_normal(m) for m in sizes]
    f = sum(a @ d for a, d in zip(s.coefs, direction))
    keep = np.flatnonzero(np.abs(f) > margin * np.std(f))[:n]
    return s.rows(keep), (f[keep] > 0).astype(int)


def xor_data(rng, n=160):
    """Class 1 when exactly one of two dimensions has a positive first coefficient."""
    s = random_sample(rng, n, (5, 5))
    a, b = s.coefs[0][:, 0], s.coefs[1][:, 0]
    return s, ((a > 0) ^ (b > 0)).astype(int)


class TestImpurity:
    @pytest.mark.parametrize("counts,expected", [((10, 0), 0.0), ((5, 5), 0.5), ((30, 10), 0.375)])
    def test_values(self, counts, expected):
        assert impurity(counts) == pytest.approx(expected)

    def test_empty(self):
        with pytest.raises(EmptyNode):
            impurity((0, 0))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 500), st.integers(0, 500))
    def test_matches_oracle(self, a, b):
        if a + b == 0:
            return
        assert impurity((a, b)) == pytest.approx(gini((a, b)), abs=1e-15)


class TestSplitGain:
    def test_pure_children_from_even_parent(self):
        assert split_gain((5, 5), (5, 0), (0, 5)) == pytest.approx(0.5)

    def test_proportional_children(self):
        assert split_gain((20, 10), (10, 5), (10, 5)) == pytest.approx(0.0, abs=1e-15)

    def test_uneven_parent(self):
        assert split_gain((30, 10), (30, 0), (0, 10)) == pytest.approx(0.375)

    def test_counts_must_add_up(self):
        with pytest.raises(ValidationError):
            split_gain((5, 5), (1, 1), (1, 1))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
    def test_never_negative(self, a, b, c, d):
        if a + b == 0 or c + d == 0:
            return
        assert split_gain((a + c, b + d), (a, b), (c, d)) >= -1e-15


class TestGroups:
    def test_parse_is_one_based(self):
        g = GroupStructure.parse("1;2;1,2")
        assert g.groups == ((0,), (1,), (0, 1))
        assert g.label(2) == "{1,2}"

    def test_default(self):
        assert GroupStructure.default(3).groups == ((0,), (1,), (2,), (0, 1, 2))
        assert GroupStructure.default(1).groups == ((0,),)

    def test_invalid(self):
        with pytest.raises(ValidationError):
            GroupStructure.parse("1;a")
        with pytest.raises(ValidationError):
            GroupStructure.parse("0")
        with pytest.raises(ValidationError):
            GroupStructure.parse("3").validate(2)


class TestConfig:
    def test_bounds(self):
        with pytest.raises(ValidationError):
            TreeConfig(purity_threshold=0.6)
        with pytest.raises(ValidationError):
            TreeConfig(max_depth=-1)
        with pytest.raises(ValidationError):
            TreeConfig(n_components=0)


class TestGrow:
    @pytest.mark.parametrize("seed", range(5))
    def test_pure_growth_fits_training_data(self, seed):
        s, y = separable(np.random.default_rng(100 + seed), sizes=(6, 4))
        tree = grow(s, y, GroupStructure.default(2), TreeConfig(purity_threshold=0.0, min_node_size=2, n_components=6))
        assert all(impurity(leaf.counts) == 0 for leaf in tree.leaves())
        classes, _ = predict_tree(tree, s)
        assert np.mean(classes == y) == 1.0

    def test_nodes_too_small_to_fit_stay_leaves(self, rng):
        s, y = separable(rng, sizes=(6,))
        tree = grow(s, y, GroupStructure.default(1), TreeConfig(purity_threshold=0.0, min_node_size=2))
        for leaf in tree.leaves():
            assert impurity(leaf.counts) == 0 or leaf.n < 4 or leaf.depth == tree.config.max_depth

    def test_linear_split_gives_depth_one(self, rng):
        s, y = separable(rng, sizes=(4,), margin=1.0)
        tree = grow(s, y, GroupStructure.default(1), TreeConfig(purity_threshold=0.0, n_components=3))
        assert tree.depth == 1
        assert all(impurity(leaf.counts) == 0 for leaf in tree.leaves())

    def test_identical_labels_give_leaf_root(self, rng):
        s = random_sample(rng, 20, (5,))
        tree = grow(s, np.zeros(20, dtype=int), GroupStructure.default(1))
        assert tree.root.is_leaf and tree.depth == 0

    def test_partition_and_positive_gains(self, rng):
        s, y = xor_data(rng)
        tree = grow(s, y, GroupStructure.default(2), TreeConfig(purity_threshold=0.0, min_node_size=2))
        assert sum(leaf.n for leaf in tree.leaves()) == s.n
        for node in tree.splits():
            assert node.gain > 0
            assert node.left.n + node.right.n == node.n
            assert split_gain(node.counts, node.left.counts, node.right.counts) == pytest.approx(node.gain)

    def test_xor_needs_more_than_one_split(self, rng):
        s, y = xor_data(rng)
        tree = grow(s, y, GroupStructure.default(2), TreeConfig(purity_threshold=0.0, min_node_size=2))
        assert tree.depth >= 2

    def test_max_depth_respected(self, rng):
        s, y = xor_data(rng)
        tree = grow(s, y, GroupStructure.default(2), TreeConfig(max_depth=1))
        assert tree.depth <= 1

    def test_min_node_size(self, rng):
        s, y = xor_data(rng)
        tree = grow(s, y, GroupStructure.default(2), TreeConfig(purity_threshold=0.0, min_node_size=40))
        assert all(node.n >= 40 for node in tree.splits())

    def test_failed_candidates_are_logged(self, rng):
        s, y = xor_data(rng, n=40)
        # a group made of a constant dimension cannot be fitted
        const = FunctionalSample(s.bases + (s.bases[0],), s.coefs + (np.ones((40, 5)),))
        tree = grow(const, y, GroupStructure.parse("3;1;2"), TreeConfig(purity_threshold=0.0))
        assert tree.diagnostics
        assert all(node.group != 0 for node in tree.splits())

    def test_ties_go_to_first_group(self, rng):
        s, y = separable(rng, sizes=(5,), margin=1.0)
        twice = FunctionalSample(s.bases * 2, s.coefs * 2)
        tree = grow(twice, y, GroupStructure.parse("2;1"), TreeConfig(purity_threshold=0.0))
        assert tree.root.group == 0

    def test_label_count(self, rng):
        s, y = xor_data(rng, n=20)
        with pytest.raises(ValidationError):
            grow(s, y[:-1], GroupStructure.default(2))


class TestPredict:
    def test_node_mean_routes_right(self, rng):
        s, y = separable(rng, sizes=(5,))
        tree = grow(s, y, GroupStructure.default(1), TreeConfig(max_depth=1))
        mean = FunctionalSample(s.bases, (s.coefs[0].mean(axis=0, keepdims=True),))
        assert abs(score(tree.root.model, mean)[0]) < 1e-12
        # exactly zero score: force it by routing through the rule directly
        gamma = np.array([0.0])
        assert not (gamma > 0)[0]

    def test_depth_zero_is_constant(self, rng):
        s, y = xor_data(rng, n=40)
        tree = grow(s, y, GroupStructure.default(2), TreeConfig(max_depth=0))
        classes, scores = predict_tree(tree, s)
        assert len(set(classes)) == 1 and len(set(scores)) == 1

    def test_truncation(self, rng):
        s, y = xor_data(rng)
        tree = grow(s, y, GroupStructure.default(2), TreeConfig(purity_threshold=0.0, min_node_size=2))
        _, scores = predict_tree(tree, s, max_depth=0)
        assert np.all(scores == y.mean())

    def test_positive_rescaling_invariance(self, rng):
        s, y = xor_data(rng)
        tree = grow(s, y, GroupStructure.default(2), TreeConfig(purity_threshold=0.0, min_node_size=2))
        before = predict_tree(tree, s)
        for node in tree.splits():
            node.model = node.model.scaled(0.37)
        after = predict_tree(tree, s)
        np.testing.assert_array_equal(before[0], after[0])
        np.testing.assert_array_equal(before[1], after[1])

    def test_basis_mismatch(self, rng):
        s, y = separable(rng, sizes=(5,))
        tree = grow(s, y, GroupStructure.default(1))
        with pytest.raises(BasisMismatch):
            predict_tree(tree, random_sample(rng, 3, (6,)))


class TestDepth:
    def test_separable_prefers_depth_one(self, rng):
        s, y = separable(rng, n=120, sizes=(4,), margin=1.0)
        votes = depth_votes(s, y, GroupStructure.default(1), TreeConfig(n_components=3))
        assert sum(v == 1 for v in votes) >= 8

    def test_noise_labels_mostly_shallow(self):
        shallow = 0
        for seed in range(10):
            rng = np.random.default_rng(seed)
            s = random_sample(rng, 120, (5, 5))
            y = rng.integers(0, 2, 120)
            shallow += estimate_depth(s, y, GroupStructure.default(2), TreeConfig()) <= 1
        assert shallow >= 7

    def test_deterministic(self, rng):
        s, y = xor_data(rng, n=100)
        cfg = TreeConfig(seed=3)
        assert estimate_depth(s, y, GroupStructure.default(2), cfg) == estimate_depth(s, y, GroupStructure.default(2), cfg)

    def test_permutation_equivariance(self, rng):
        s, y = xor_data(rng, n=100)
        groups, cfg = GroupStructure.default(2), TreeConfig()
        order = rng.permutation(100)
        inverse = np.argsort(order)
        splits = [(np.sort(tr), np.sort(va)) for tr, va in
                  [(rng.permutation(100)[:75], None) for _ in range(10)] for va in [np.setdiff1d(np.arange(100), tr)]]
        permuted = [(np.sort(inverse[tr]), np.sort(inverse[va])) for tr, va in splits]
        a = depth_votes(s, y, groups, cfg, splits=splits)
        b = depth_votes(s.rows(order), y[order], groups, cfg, splits=permuted)
        assert a == b

    def test_best_depth_smallest_on_ties(self, rng):
        s, y = separable(rng, sizes=(4,), margin=1.0)
        tree = grow(s, y, GroupStructure.default(1), TreeConfig(purity_threshold=0.0, n_components=3))
        m, aucs = best_depth(tree, s, y)
        assert aucs[m] == max(aucs) and all(a < max(aucs) for a in aucs[:m])


class TestRender:
    def test_single_leaf(self, rng):
        s = random_sample(rng, 10, (4,))
        tree = grow(s, np.ones(10, dtype=int), GroupStructure.default(1))
        assert render(tree).count("\n") == 1

    def test_lists_every_node(self, rng):
        s, y = xor_data(rng)
        tree = grow(s, y, GroupStructure.default(2), TreeConfig(max_depth=2))
        text = render(tree)
        assert text.count("\n") == sum(1 for _ in tree.root.iter_nodes())
        assert "group {" in text
