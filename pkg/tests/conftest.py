import numpy as np
import pytest

from erpdn import pipeline, synth
from erpdn.config import desk_config


@pytest.fixture(scope="session")
def bench_config():
    return desk_config(scene_count=48, calib_sweeps=2)


@pytest.fixture(scope="session")
def bench_split(bench_config):
    samples = synth.synth_generate(bench_config.scene_config(), seed=11)
    return pipeline.split_dataset(samples, bench_config.train_split, seed=5)


@pytest.fixture(scope="session")
def bench_models(bench_config, bench_split):
    """Models fitted once on the small benchmark; shared across tests."""
    train, _ = bench_split
    models, metrics, caches = pipeline.build_models(train, bench_config, seed=0)
    return models, metrics, caches


def assert_bit_identical(a, b):
    __tracebackhide__ = True
    a = np.asarray(a)
    b = np.asarray(b)
    assert a.shape == b.shape and a.tobytes() == b.tobytes()
