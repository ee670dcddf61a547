import numpy as np
import pytest

from stabkit.density import DensitySpec


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def unit_square():
    return DensitySpec.uniform([[0.0, 1.0], [0.0, 1.0]])


@pytest.fixture
def unit_interval():
    return DensitySpec.uniform([[0.0, 1.0]])


@pytest.fixture(scope="session")
def client():
    from fastapi.testclient import TestClient

    from stabkit.service import app

    with TestClient(app) as tc:
        yield tc


def unit_square_doc():
    return {"kind": "uniform-box", "support": [[0.0, 1.0], [0.0, 1.0]],
            "params": {}, "sup_density": 1.0}
