import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from sparse_idma.protograph import lift_peg_full_rank, validate_protograph


@pytest.fixture(scope="session")
def small_code():
    """A small full-rank lifted code shared by decoder/codec tests."""
    proto = validate_protograph(
        np.array([[1, 1, 1, 1, 1, 2], [1, 1, 1, 1, 2, 1], [1, 1, 1, 1, 1, 1]])
    )
    return lift_peg_full_rank(proto, 8, seed=0)


@pytest.fixture(scope="session")
def proto36():
    return validate_protograph(np.ones((3, 6), dtype=np.int64))
