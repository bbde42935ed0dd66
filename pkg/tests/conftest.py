"""Shared fixtures: one circle cross-section, spec, and grid per session."""

import numpy as np
import pytest

from conelab import ConeGrid, build_extension, default_weight, make_circle


@pytest.fixture(scope="session")
def cs8():
    return make_circle(2.0 * np.pi, max_mode=8)


@pytest.fixture(scope="session")
def spec8(cs8):
    return build_extension(cs8, default_weight(cs8), 2.0)


@pytest.fixture(scope="session")
def grid8(cs8):
    # t_max = 3 keeps the e^(2t) dynamic range mild for stepping tests
    return ConeGrid(cs8, 3.0, 150, j_max=8)


@pytest.fixture(scope="session")
def grid_tall(cs8):
    # tall enough for the default near-tip fit window (4 ln 10)
    return ConeGrid(cs8, 10.0, 500, j_max=8)
