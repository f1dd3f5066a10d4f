import math

import numpy as np
import pytest

from lunarbound.bounds import compute_chain, i0
from lunarbound.core import JacobiState, MassParams
from lunarbound.harness import APPENDIX_H, APPENDIX_J, APPENDIX_MASSES


@pytest.fixture(scope="session")
def mp_equal():
    return MassParams(*APPENDIX_MASSES)


@pytest.fixture(scope="session")
def appendix_chain(mp_equal):
    """Bound chain for the equal-mass reference levels (computed once)."""
    return compute_chain(mp_equal, APPENDIX_H, APPENDIX_J)


@pytest.fixture(scope="session")
def appendix_i0(mp_equal):
    return i0(mp_equal, APPENDIX_H, APPENDIX_J)


def random_jacobi_state(rng, scale=1.0, hierarchical=True):
    """A generic non-degenerate state for identity tests."""
    if hierarchical:
        xi1 = rng.normal(size=3) * 0.3 * scale
        xi2 = rng.normal(size=3) * 5.0 * scale
        while np.linalg.norm(xi2) < 2.0 * scale:
            xi2 = rng.normal(size=3) * 5.0 * scale
    else:
        xi1 = rng.normal(size=3) * scale
        xi2 = rng.normal(size=3) * scale
    dxi1 = rng.normal(size=3)
    dxi2 = rng.normal(size=3) * 0.3
    return JacobiState(xi1=xi1, dxi1=dxi1, xi2=xi2, dxi2=dxi2)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)
