import numpy as np
import pytest

import phaselab as pl


@pytest.fixture(scope="session")
def well():
    return pl.quartic_standard()


@pytest.fixture(scope="session")
def zero_well():
    # Degenerate potential with no wells; the profile becomes affine and
    # saturates the transition-length bound exactly.
    zero = lambda s: np.zeros_like(np.asarray(s, dtype=float))
    return pl.DoubleWell(zero, zero, zero,
                         growth_constants={"A": 1.0, "B": 1.0, "p": 4},
                         lower_upper_growth={"c1": 1.0, "c2": 2.0, "p1": 3.5,
                                             "p2": 4.0, "t0": 4.0},
                         barrier_delta=0.5, name="zero")


@pytest.fixture(scope="session")
def sphere3():
    return pl.icosphere(3)


@pytest.fixture(scope="session")
def sphere4():
    return pl.icosphere(4)


@pytest.fixture(scope="session")
def sphere5():
    return pl.icosphere(5)


@pytest.fixture(scope="session")
def torus_mesh():
    return pl.torus(2.0, 0.7, 48, 24)


@pytest.fixture(scope="session")
def small_torus():
    return pl.torus(2.0, 0.7, 16, 12)
