import numpy as np
import pytest

from racf.dcf import SampleMemory, make_labels, make_reg_weights, train, update_memory
from racf.features import FeatureMap


@pytest.fixture(scope="session", autouse=True)
def warm_solver():
    """Compile the jitted solver sweep once, outside any timed test body."""
    rng = np.random.default_rng(0)
    data = rng.standard_normal((1, 8, 8))
    data -= data.mean()
    mem = update_memory(SampleMemory(capacity=2),
                        FeatureMap(data, cell_size=4), 0.0, 0.025)
    train(mem, make_labels(8, 8, 1.0), make_reg_weights(8, 8, (4.0, 4.0)),
          iters=2)
