from __future__ import annotations

import math

import numpy as np
import pytest


def order(points, errs):
    """Convergence order fitted on the finest pair."""
    (n0, n1), (e0, e1) = points[-2:], errs[-2:]
    return math.log(e0 / e1) / math.log(n1 / n0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
