import numpy as np
import pytest

from quadric_atlas.forms import FormSpace


@pytest.fixture
def hyperbolic4() -> FormSpace:
    """Single quadric of signature (2, 2): the S^1 x S^1 model."""
    return FormSpace(np.diag([1.0, 1.0, -1.0, -1.0])[None])


@pytest.fixture
def witt1() -> FormSpace:
    """Single quadric of signature (1, 2): two-component null cone."""
    return FormSpace(np.diag([1.0, -1.0, -1.0])[None])


@pytest.fixture
def pair_space() -> FormSpace:
    """Two hyperbolic forms whose minimum inertia sits on c1 = +-c2."""
    return FormSpace(
        np.stack([np.diag([1.0, 1.0, -1.0, -1.0]), np.diag([1.0, -1.0, 1.0, -1.0])])
    )


def random_symmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n))
    return 0.5 * (a + a.T)


def random_space(rng: np.random.Generator, k: int, n: int) -> FormSpace:
    return FormSpace(np.stack([random_symmetric(rng, n) for _ in range(k)]))
