from fractions import Fraction

import pytest

from fraisse.extq import FiniteMetricSpace
from fraisse.sampling import rng_for


def space(points, rows):
    return FiniteMetricSpace(tuple(points), tuple(tuple(Fraction(v) for v in r) for r in rows))


@pytest.fixture
def rng():
    return rng_for(20261016)
