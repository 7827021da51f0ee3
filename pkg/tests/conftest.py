"""Shared hypothesis strategies and small fixtures."""
import warnings

import numpy as np
import pytest
from hypothesis import settings, strategies as st

from sftlyap.symbolic import PruningWarning, TransitionSystem

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@st.composite
def transition_systems(draw, min_size=1, max_size=3):
    """Nonempty SFTs (after pruning) on up to ``max_size`` symbols."""
    n = draw(st.integers(min_size, max_size))
    bits = draw(st.lists(st.booleans(), min_size=n * n, max_size=n * n))
    M = np.array(bits, dtype=bool).reshape(n, n)
    if not M.any():
        M[0, 0] = True
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PruningWarning)
        T = TransitionSystem(M)
    if T.is_empty:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PruningWarning)
            M[0, 0] = True
            T = TransitionSystem(M)
    return T


@pytest.fixture
def full2():
    return TransitionSystem.full_shift(2)


@pytest.fixture
def golden():
    return TransitionSystem.golden_mean()
