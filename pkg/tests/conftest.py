import numpy as np
import pytest

from senstir.core import Query
from senstir.fair_metric import FairItemMetric, SensitiveSubspace

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE_RESULTS = {}


def central_diff(f, x, h=1e-6):
    """Central finite-difference gradient of scalar ``f`` at array ``x``."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[idx] = h
        g[idx] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def rel_err(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12))


def random_query(rng, n, p, qid="q", groups=False, rel_levels=None):
    x = rng.standard_normal((n, p))
    if rel_levels is None:
        rels = rng.uniform(0, 3, n)
    else:
        rels = rng.integers(0, rel_levels, n).astype(float)
    g = rng.integers(0, 2, n) if groups else None
    return Query(qid, x, rels, g)


def random_metric(rng, p, k=1, mode="euclidean"):
    return FairItemMetric(SensitiveSubspace.spanned_by(rng.standard_normal((k, p))), mode)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[num]
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
