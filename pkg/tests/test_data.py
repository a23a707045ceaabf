import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfpls.basis import BSplineBasis, TabulatedBasis, TensorBSplineBasis
from mfpls.data import (FunctionalSample, FunctionObject, RawObservations, center, inner_product,
                        sample_inner_products, smooth)
from mfpls.errors import BasisMismatch, DimensionMismatch, RankDeficient, ValidationError

from conftest import random_sample


@pytest.fixture
def basis():
    return BSplineBasis.uniform(20, 3)


class TestFunctionalSample:
    def test_shapes(self, rng):
        s = random_sample(rng, 7, (5, 4))
        assert (s.n, s.d, s.sizes) == (7, 2, (5, 4))

    def test_row_count_mismatch(self, basis):
        with pytest.raises(DimensionMismatch):
            FunctionalSample((basis, basis), (np.zeros((3, 20)), np.zeros((4, 20))))

    def test_column_count_mismatch(self, basis):
        with pytest.raises(DimensionMismatch):
            FunctionalSample((basis,), (np.zeros((3, 19)),))

    def test_select_and_rows(self, rng):
        s = random_sample(rng, 10, (5, 4, 3))
        sub = s.select([2, 0]).rows([1, 3])
        assert sub.sizes == (3, 5)
        np.testing.assert_array_equal(sub.coefs[1], s.coefs[0][[1, 3]])

    def test_immutable(self, rng):
        s = random_sample(rng, 4, (5,))
        with pytest.raises(ValueError):
            s.coefs[0][0, 0] = 1.0


class TestSmooth:
    def test_recovers_in_span_coefficients(self, rng, basis):
        t = np.linspace(0, 1, 200)
        coefs = rng.standard_normal((6, 20))
        raw = RawObservations((t,), (coefs @ basis.evaluate(t).T,))
        np.testing.assert_allclose(smooth(raw, (basis,)).coefs[0], coefs, atol=1e-10)

    def test_reproduces_constants(self, basis):
        t = np.sort(np.random.default_rng(3).uniform(0, 1, 57))
        raw = RawObservations((t,), (np.ones((2, t.size)),))
        s = smooth(raw, (basis,))
        recon = s.coefs[0] @ basis.evaluate(t).T
        assert np.abs(recon - 1.0).max() < 1e-10

    def test_white_noise_is_projected(self, rng, basis):
        t = np.linspace(0, 1, 200)
        noise = rng.standard_normal((30, 200))
        s = smooth(RawObservations((t,), (noise,)), (basis,))
        recon = s.coefs[0] @ basis.evaluate(t).T
        assert np.var(noise - recon) > 0
        assert np.linalg.matrix_rank(recon) <= 20

    def test_projection_is_idempotent(self, rng, basis):
        t = np.linspace(0, 1, 150)
        s = smooth(RawObservations((t,), (rng.standard_normal((5, 150)),)), (basis,))
        again = smooth(RawObservations((t,), (s.coefs[0] @ basis.evaluate(t).T,)), (basis,))
        np.testing.assert_allclose(again.coefs[0], s.coefs[0], atol=1e-10)

    def test_image_dimension(self, rng):
        b2 = TensorBSplineBasis.uniform(3, 3, 2)
        u = np.linspace(0, 1, 12)
        uu, vv = np.meshgrid(u, u, indexing="ij")
        grid = np.column_stack([uu.ravel(order="F"), vv.ravel(order="F")])
        coefs = rng.standard_normal((4, 9))
        raw = RawObservations((grid,), (coefs @ b2.evaluate(grid).T,))
        np.testing.assert_allclose(smooth(raw, (b2,)).coefs[0], coefs, atol=1e-10)

    def test_too_few_grid_points(self, basis):
        t = np.linspace(0, 1, 10)
        with pytest.raises(RankDeficient):
            smooth(RawObservations((t,), (np.zeros((2, 10)),)), (basis,))

    def test_rank_deficient_design(self, basis):
        # all points inside one knot span
        t = np.linspace(0.0, 0.04, 40)
        with pytest.raises(RankDeficient):
            smooth(RawObservations((t,), (np.zeros((2, 40)),)), (basis,))

    def test_non_finite_rejected(self):
        t = np.linspace(0, 1, 5)
        with pytest.raises(ValidationError):
            RawObservations((t,), (np.array([[0, 1, np.nan, 3, 4.0]]),))


class TestInnerProduct:
    def test_against_grid_quadrature(self, rng, basis):
        f = FunctionObject((basis,), (rng.standard_normal(20),))
        t = np.linspace(0, 1, 20_001)
        vals = f.evaluate(0, t)
        ref = np.trapezoid(vals**2, t)
        assert abs(inner_product(f, f) - ref) < 1e-6

    def test_zero_function(self, rng, basis):
        f = FunctionObject((basis,), (rng.standard_normal(20),))
        assert inner_product(f, FunctionObject.zeros((basis,))) == 0.0

    def test_orthonormal_basis(self):
        funcs = [lambda t: np.ones_like(t), lambda t: np.sqrt(3) * (2 * t - 1)]
        b = TabulatedBasis.from_functions(funcs, (0.0, 1.0))
        e1 = FunctionObject((b,), (np.array([1.0, 0.0]),))
        e2 = FunctionObject((b,), (np.array([0.0, 1.0]),))
        assert abs(inner_product(e1, e2)) < 1e-12

    def test_sums_over_dimensions(self, rng):
        s = random_sample(rng, 1, (5, 4))
        x = s.observation(0)
        parts = [inner_product(FunctionObject((b,), (c,)), FunctionObject((b,), (c,))) for b, c in zip(x.bases, x.coefs)]
        assert inner_product(x, x) == pytest.approx(sum(parts), rel=1e-13)

    def test_basis_mismatch(self, rng):
        f = FunctionObject((BSplineBasis.uniform(5, 3),), (np.ones(5),))
        g = FunctionObject((BSplineBasis.uniform(5, 4),), (np.ones(5),))
        with pytest.raises(BasisMismatch):
            inner_product(f, g)

    def test_sample_inner_products(self, rng):
        s = random_sample(rng, 6, (5, 4))
        f = s.observation(2)
        expected = [inner_product(s.observation(i), f) for i in range(6)]
        np.testing.assert_allclose(sample_inner_products(s, f), expected, rtol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), a=st.floats(-3, 3), b=st.floats(-3, 3))
    def test_symmetric_bilinear_positive(self, seed, a, b):
        r = np.random.default_rng(seed)
        s = random_sample(r, 3, (6, 4))
        f, g, h = (s.observation(i) for i in range(3))
        lin = FunctionObject(f.bases, tuple(a * x + b * y for x, y in zip(f.coefs, g.coefs)))
        assert inner_product(f, g) == pytest.approx(inner_product(g, f), rel=1e-12, abs=1e-12)
        lhs = inner_product(lin, h)
        rhs = a * inner_product(f, h) + b * inner_product(g, h)
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)
        assert inner_product(f, f) >= 0


class TestCenter:
    def test_column_means_vanish(self, rng):
        s = random_sample(rng, 9, (5, 4))
        y = rng.standard_normal(9)
        c, yc, (means, ymean) = center(s, y)
        for a in c.coefs:
            assert np.abs(a.mean(axis=0)).max() <= 1e-12
        assert abs(yc.mean()) <= 1e-12
        assert ymean == pytest.approx(y.mean())
        np.testing.assert_allclose(means.coefs[0], s.coefs[0].mean(axis=0))

    def test_already_centered_is_unchanged(self, rng):
        s = random_sample(rng, 8, (4,))
        c, _, _ = center(s)
        c2, _, (means, _) = center(c)
        np.testing.assert_allclose(c2.coefs[0], c.coefs[0], atol=1e-15)
        assert np.abs(means.coefs[0]).max() < 1e-15

    def test_constant_sample(self):
        b = BSplineBasis.uniform(4, 3)
        s = FunctionalSample((b,), (np.tile([1.0, 2.0, 3.0, 4.0], (5, 1)),))
        c, _, _ = center(s)
        assert np.all(c.coefs[0] == 0.0)

    def test_needs_two_observations(self, rng):
        with pytest.raises(ValidationError):
            center(random_sample(rng, 1, (4,)))
