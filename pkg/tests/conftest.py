import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("repo", max_examples=60, deadline=None)
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def desk_data():
    from pvmppt import dataset as ds
    from pvmppt.pv_panel import YL150P_17B

    data = ds.generate(YL150P_17B, ds.GridSpec())
    tr, va = ds.split(data, 0.7, 0)
    return data, tr, va, ds.NormalizationParams.fit(data[tr])


@pytest.fixture(scope="session")
def trained(desk_data):
    """3-6-3-1 tanh/tanh network, 14 epochs at learning rate 0.05."""
    from pvmppt import dataset as ds
    from pvmppt.ann.network import MlpNetwork
    from pvmppt.ann.training import TrainConfig, train

    data, tr, _, norm = desk_data
    X, D = ds.prepare(data[tr], norm)
    net, _ = train(MlpNetwork.initialize((3, 6, 3, 1), "tanh", "tanh", seed=0), X, D, TrainConfig(0.05, 14, 0))
    return net, norm
