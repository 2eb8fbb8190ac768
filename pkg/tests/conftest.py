import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from covfuse.estimates import Estimate

settings.register_profile(
    "covfuse", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("covfuse")

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def spd(rng, n, cond=100.0, scale=1.0):
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    ev = np.exp(rng.uniform(0.0, np.log(cond), n))
    ev = ev / ev.max() * scale
    M = Q @ np.diag(ev) @ Q.T
    return 0.5 * (M + M.T)


def psd(rng, n):
    """Random PSD matrix of random rank (possibly singular)."""
    k = int(rng.integers(0, n + 1))
    G = rng.normal(size=(n, k))
    M = G @ G.T
    return 0.5 * (M + M.T)


def estimate(rng, n, radius=5.0, cond=100.0):
    return Estimate(rng.normal(size=n) * radius / np.sqrt(n), spd(rng, n, cond, rng.uniform(0.3, 3.0)))


def two_disk_oracle():
    """Min log det of an ellipse symmetric about the diagonal enclosing unit disks at (0,0) and (4,4).

    With semi-axes p (along the diagonal) and q, the disk centred h = 2 sqrt(2)
    along the major axis must fit.  For each p the smallest q is found by
    bisection against 4096 boundary samples; then p is scanned and refined.
    """
    h = 2.0 * np.sqrt(2.0)
    t = np.linspace(0.0, 2.0 * np.pi, 4096, endpoint=False)
    bx, by = h + np.cos(t), np.sin(t)

    def q_min(p):
        lo, hi = 1e-6, 50.0
        for _ in range(80):
            q = 0.5 * (lo + hi)
            if np.max(bx**2 / p**2 + by**2 / q**2) <= 1.0:
                hi = q
            else:
                lo = q
        return hi

    ps = np.linspace(h + 1.0 + 1e-6, h + 4.0, 400)
    vals = [p * q_min(p) for p in ps]
    k = int(np.argmin(vals))
    lo, hi = ps[max(k - 1, 0)], ps[min(k + 1, len(ps) - 1)]
    for _ in range(60):
        a, b = lo + (hi - lo) / 3, hi - (hi - lo) / 3
        if a * q_min(a) <= b * q_min(b):
            hi = b
        else:
            lo = a
    p = 0.5 * (lo + hi)
    return 2.0 * np.log(p * q_min(p))


@pytest.fixture
def disk_pair():
    return [Estimate([0.0, 0.0], np.eye(2)), Estimate([4.0, 4.0], np.eye(2))]


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
