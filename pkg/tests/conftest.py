import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(1234))


def rel_err(x, ref):
    ref = np.asarray(ref)
    return float(np.linalg.norm(np.asarray(x) - ref) / np.linalg.norm(ref))
