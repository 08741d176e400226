import numpy as np
import pytest

from kmcoreset import SparseVector, WeightedSet

RADIUS = 1000.0
CLUSTER_RADIUS = 0.5

# one line per acceptance criterion, echoed after the test summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def _ring(count, radius, dim=2, phase=0.0):
    pts = []
    for i in range(count):
        ang = 2 * np.pi * i / count + phase
        pts.append(SparseVector.from_dense(
            np.array([radius * np.cos(ang), radius * np.sin(ang)])))
    return pts


@pytest.fixture(scope="session")
def seven_clusters() -> WeightedSet:
    """16 unit-weight points in the plane: 6 far singletons on a big ring
    plus a tight 10-point cluster at the origin. The classic instance where
    uniform sampling misses the singletons."""
    singles = _ring(6, RADIUS)
    cluster = _ring(10, CLUSTER_RADIUS)
    return WeightedSet(singles + cluster)


@pytest.fixture(scope="session")
def planted() -> tuple[WeightedSet, int]:
    """n=10^4, d=10^3, nnz 5, ten planted clusters: one holding ~91% of the
    points and nine small ones on disjoint supports with much larger values,
    so their contribution to the 10-means cost dwarfs their population."""
    rng = np.random.default_rng(20240817)
    n_small, small_count = 9, 100
    dim = 1000
    pts = []
    for c in range(n_small):
        support = np.arange(5 * c, 5 * c + 5, dtype=np.int64)
        for _ in range(small_count):
            vals = rng.uniform(50.0, 100.0, size=5)
            pts.append(SparseVector(dim, support, vals))
    big_support = np.arange(45, 50, dtype=np.int64)
    while len(pts) < 10_000:
        vals = rng.uniform(1.0, 2.0, size=5)
        jitter = rng.random()
        if jitter < 0.01:
            idx = np.sort(rng.choice(np.arange(50, dim), size=5, replace=False))
            pts.append(SparseVector(dim, idx.astype(np.int64), rng.uniform(1.0, 3.0, size=5)))
        else:
            pts.append(SparseVector(dim, big_support, vals))
    return WeightedSet(pts), 10
