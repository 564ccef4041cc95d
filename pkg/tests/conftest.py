import numpy as np
import pytest

from wrs.core import RngStream


@pytest.fixture
def stream():
    return RngStream(12345, 0)


def four_sigma(p, trials):
    return 4.0 * np.sqrt(np.asarray(p) * (1 - np.asarray(p)) / trials)
