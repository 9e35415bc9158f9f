import numpy as np
import pytest

from curtainlab.geometry import (EuclideanPlane, HyperbolicPlane, RegularTree,
                                 TreeTimesLine)


@pytest.fixture(scope="session")
def tree():
    return RegularTree(3)


@pytest.fixture(scope="session")
def hplane():
    return HyperbolicPlane()


@pytest.fixture(scope="session")
def eplane():
    return EuclideanPlane()


@pytest.fixture(scope="session")
def product():
    return TreeTimesLine(3)


@pytest.fixture(scope="session")
def all_spaces(tree, hplane, eplane, product):
    return [tree, hplane, eplane, product]


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)
