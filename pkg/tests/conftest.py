"""Shared fixtures: a small benchmark corpus and fast-config trained ensembles."""

import numpy as np
import pytest

from pyrocol.benchmark import BenchmarkSpec, gen_benchmark
from pyrocol.dataset import Task, split_train_test
from pyrocol.ensemble import EnsembleConfig, fit_ensemble
from pyrocol.mlp import MlpParams
from pyrocol.trees import ForestParams, GbtParams

FAST_CONFIG = EnsembleConfig(
    seed=11,
    forest=ForestParams(n_trees=15, seed=11),
    gbt=GbtParams(n_stages=30, max_depth=6, seed=11),
    mlp=MlpParams(hidden=(16,), epochs=40, seed=11),
)


@pytest.fixture(scope="session")
def bench_small():
    return gen_benchmark(BenchmarkSpec(n=240, seed=2))


@pytest.fixture(scope="session")
def bench_split(bench_small):
    return split_train_test(bench_small, 0.7, seed=2)


@pytest.fixture(scope="session")
def spalling_model(bench_split):
    return fit_ensemble(bench_split, Task.SPALLING, FAST_CONFIG)


@pytest.fixture(scope="session")
def fire_model(bench_split):
    return fit_ensemble(bench_split, Task.FIRE_RESISTANCE, FAST_CONFIG)
