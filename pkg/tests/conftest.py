import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "kwlab", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("kwlab")


@pytest.fixture
def rng():
    return np.random.default_rng(20240617)


@pytest.fixture
def outdir(tmp_path, monkeypatch):
    monkeypatch.setenv("KWLAB_OUTPUT_DIR", str(tmp_path))
    return tmp_path
