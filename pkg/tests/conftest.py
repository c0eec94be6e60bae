import itertools

import numpy as np
import pytest

from ithresh.dictionaries import Dictionary

ACCEPTANCE_LINES = []


def best_support_bruteforce(phi, y, k):
    """Exhaustive oracle: the k-column support with the smallest least-squares
    residual, over all C(N, k) candidates."""
    best, best_res = None, np.inf
    for cols in itertools.combinations(range(phi.shape[1]), k):
        sub = phi[:, cols]
        coef, *_ = np.linalg.lstsq(sub, y, rcond=None)
        res = float(np.linalg.norm(y - sub @ coef))
        if res < best_res:
            best, best_res = cols, res
    return best, best_res


@pytest.fixture
def orthonormal_dict():
    q, _ = np.linalg.qr(np.random.default_rng(42).standard_normal((8, 8)))
    return Dictionary(q, "orthonormal")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
