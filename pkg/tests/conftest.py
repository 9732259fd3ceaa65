import itertools
import sys
import math

import numpy as np
import pytest
from hypothesis import strategies as st

from qdrone.network import EARTH_RADIUS_M, make_link
from qdrone.qstate import TwoQubitState


def random_density(values) -> TwoQubitState:
    g = np.asarray(values[:16]).reshape(4, 4) + 1j * np.asarray(values[16:]).reshape(4, 4)
    rho = g @ g.conj().T
    rho /= np.trace(rho)
    return TwoQubitState((rho + rho.conj().T) / 2)


finite = st.floats(-1.0, 1.0, allow_nan=False)
states = st.lists(finite, min_size=32, max_size=32).filter(
    lambda v: np.linalg.norm(v) > 1e-3
).map(random_density)
angles = st.floats(0.0, np.pi, allow_nan=False)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def grid_placement_oracle(total, node, max_db, condition, k_max, n_grid=60):
    """Exhaustive search over chainages on a uniform grid.

    Hop loss depends only on hop length here, so it is tabulated once per
    grid multiple. Returns (links, best worst-hop loss) or None.
    """
    step = total / n_grid
    horizon = 2 * math.sqrt(2 * EARTH_RADIUS_M * node.altitude)
    loss = {m: make_link(node, node, m * step, condition).budget.total_db for m in range(1, n_grid + 1)}
    for k in range(1, k_max + 1):
        best = math.inf
        for cuts in itertools.combinations(range(1, n_grid), k - 1):
            marks = (0,) + cuts + (n_grid,)
            hops = [b - a for a, b in zip(marks, marks[1:])]
            if all(h * step <= horizon and loss[h] <= max_db for h in hops):
                best = min(best, max(loss[h] for h in hops))
        if best < math.inf:
            return k, best
    return None


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[n])
