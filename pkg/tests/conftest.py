import numpy as np
import pytest

from frechet import (
    BuresWassersteinSpace,
    EuclideanSpace,
    LqSequenceSpace,
    PersistenceDiagramSpace,
    SpiderSpace,
    Wasserstein1D,
)


def pt(*coords):
    return np.asarray(coords, dtype=float)


@pytest.fixture
def line():
    return EuclideanSpace(dim=1)


@pytest.fixture
def plane():
    return EuclideanSpace(dim=2)


def all_spaces():
    """One instance per concrete space, for the randomized suites."""
    return [
        EuclideanSpace(dim=2),
        LqSequenceSpace(truncation=3, q=1.5),
        SpiderSpace(legs=3),
        Wasserstein1D(q=2.0),
        BuresWassersteinSpace(dim=2),
        PersistenceDiagramSpace(q=2.0),
    ]
