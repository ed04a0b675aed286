import numpy as np
import pytest

from slqcopt import Objective


def make_cone(dim: int = 2) -> Objective:
    """f(x) = ||x||: convex, 1-Lipschitz, minimum 0 at the origin."""

    def value(x):
        return float(np.linalg.norm(x))

    def gradient(x):
        n = np.linalg.norm(x)
        return x / n if n > 0 else np.zeros(dim)

    return Objective(dim=dim, value=value, gradient=gradient)


def make_quadratic(dim: int = 2) -> Objective:
    """f(x) = ||x||^2: 2-smooth, strictly quasi-convex."""
    return Objective(dim=dim, value=lambda x: float(x @ x), gradient=lambda x: 2.0 * x)


@pytest.fixture
def cone():
    return make_cone(2)


@pytest.fixture
def quadratic():
    return make_quadratic(2)
