import numpy as np
import pytest

from ebcc.bench.fields import SyntheticFieldSpec, make_field


def field(kind, rows, cols, seed=0, **kw):
    return make_field(SyntheticFieldSpec(kind, rows, cols, seed, **kw))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
