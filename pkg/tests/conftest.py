import numpy as np
import pytest

from globreg.geometry import PointSet, SearchBox, Transform2DSimilarity


def random_box(rng, center, half_width):
    center = np.asarray(center, dtype=float)
    h = rng.uniform(0.05, 1.0, size=center.size) * half_width
    return SearchBox(center - h, center + h)


def sim2d_instance(rng, n_src=5, n_tgt=7, n_in=4, noise=0.0):
    """Source/target with ``n_in`` true correspondences (source i <-> target i)."""
    x = rng.uniform(-1, 1, size=(n_src, 2))
    T = Transform2DSimilarity.from_params(rng.uniform(0.5, 1.5), rng.uniform(0, 2 * np.pi), rng.uniform(-0.5, 0.5, 2))
    inl = T.apply(x[:n_in]) + noise * rng.standard_normal((n_in, 2))
    y = np.vstack([inl, rng.uniform(-1.5, 1.5, size=(n_tgt - n_in, 2))])
    return PointSet(x), PointSet(y), T


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
