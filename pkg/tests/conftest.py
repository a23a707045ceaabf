import numpy as np
import pytest

from mfpls.basis import BSplineBasis, TensorBSplineBasis
from mfpls.data import FunctionalSample


def random_sample(rng, n, sizes, order=3, image=False):
    """Sample with B-spline bases of the given sizes and Gaussian coefficients.

    With ``image=True`` the last dimension is a 2 x 2 linear tensor basis.
    """
    bases = [BSplineBasis.uniform(m, order, (0.0, 1.0)) for m in sizes]
    if image:
        bases[-1] = TensorBSplineBasis.uniform(2, 2, 2)
    coefs = [rng.standard_normal((n, b.size)) for b in bases]
    return FunctionalSample(tuple(bases), tuple(coefs))


def linear_response(rng, sample, noise=0.1):
    beta = [rng.standard_normal(b.size) for b in sample.bases]
    y = sum(a @ b for a, b in zip(sample.coefs, beta))
    return y + noise * rng.standard_normal(sample.n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def sample3(rng):
    return random_sample(rng, 60, (6, 5, 4))


@pytest.fixture
def y3(rng, sample3):
    return linear_response(rng, sample3)


ACCEPTANCE_LINES = []


def report_criterion(number, passed, detail):
    """Record and print one acceptance line; the lines are repeated in the terminal summary."""
    line = f"ACCEPTANCE {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
