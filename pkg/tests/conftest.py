"""Shared fixtures: small datasets sized so the whole suite stays fast."""

import numpy as np
import pytest

from optnet.data import (
    BenchmarkConfig,
    Dataset,
    generate_benchmark,
    partition,
)


@pytest.fixture(scope="session")
def small_benchmark():
    """60 rows, 8 features, 2 informative, no noise."""
    config = BenchmarkConfig(n_observations=60, n_features=8, n_relevant=2,
                             weight_low=1.0, weight_high=5.0,
                             noise_variance_fraction=0.0)
    return generate_benchmark(config, seed=0)


@pytest.fixture(scope="session")
def small_partitioned(small_benchmark):
    dataset, _ = small_benchmark
    return partition(dataset, seed=0)


@pytest.fixture(scope="session")
def noisy_benchmark():
    """120 rows, 10 features, 3 informative, 20% noise."""
    config = BenchmarkConfig(n_observations=120, n_features=10, n_relevant=3,
                             weight_low=2.0, weight_high=8.0,
                             noise_variance_fraction=0.2)
    return generate_benchmark(config, seed=1)


@pytest.fixture(scope="session")
def noisy_partitioned(noisy_benchmark):
    dataset, _ = noisy_benchmark
    return partition(dataset, seed=1)


@pytest.fixture
def toy_dataset():
    """Three features, target equals the first one exactly."""
    rng = np.random.default_rng(42)
    X = rng.standard_normal((40, 3))
    return Dataset(X, X[:, 0].copy(), ("a", "b", "c"))
