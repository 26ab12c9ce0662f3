import numpy as np
import pytest
from hypothesis import strategies as st

from qrobust.measures import DiscreteMeasure


def random_measure(rng, max_atoms=10, lo=-3.0, hi=3.0, grid=None):
    k = int(rng.integers(1, max_atoms + 1))
    if grid:
        pts = rng.integers(int(lo * grid), int(hi * grid) + 1, size=k) / grid
    else:
        pts = rng.uniform(lo, hi, size=k)
    w = rng.uniform(0.05, 1.0, size=k)
    return DiscreteMeasure.from_pairs(pts, w / w.sum())


@st.composite
def measures_1d(draw, max_atoms=6, grid=8):
    k = draw(st.integers(1, max_atoms))
    pts = draw(st.lists(st.integers(-4 * grid, 4 * grid), min_size=k, max_size=k))
    w = draw(st.lists(st.integers(1, 20), min_size=k, max_size=k))
    w = np.array(w, dtype=float)
    return DiscreteMeasure.from_pairs(np.array(pts) / grid, w / w.sum())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
