import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lidarspoof.geometry import PointCloud

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_cloud(n, seed=0, r_min=1.0, r_max=80.0, intensity=None):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    xyz = d * rng.uniform(r_min, r_max, n)[:, None]
    inten = rng.uniform(0, 70, n) if intensity is None else np.full(n, float(intensity))
    return PointCloud(xyz, inten)


@pytest.fixture
def cloud_2000():
    return random_cloud(2000, seed=11)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
