import numpy as np
import pytest

from neurosig import synth


@pytest.fixture(scope="session")
def bench_suite(tmp_path_factory):
    """Full-length synthetic benchmark suite shared by slow tests."""
    outdir = tmp_path_factory.mktemp("bench")
    manifest = synth.build_benchmark_suite(outdir, seed=0, duration_s=60.0, lfp_duration_s=20.0)
    return manifest


@pytest.fixture(scope="session")
def small_suite(tmp_path_factory):
    """Short suite for functional tests that do not assert benchmark figures."""
    outdir = tmp_path_factory.mktemp("bench_small")
    manifest = synth.build_benchmark_suite(outdir, seed=1, duration_s=6.0, lfp_duration_s=3.0)
    return manifest


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
