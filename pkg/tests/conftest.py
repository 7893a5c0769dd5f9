import json
import pathlib

import numpy as np
import pytest
from hypothesis import settings

from lorcheck import metric as M

settings.register_profile("default", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("default")

FROZEN = json.loads((pathlib.Path(__file__).parent / "oracles" / "frozen.json").read_text())


@pytest.fixture(scope="session")
def frozen():
    return FROZEN


def wide(name, n=2, T=2.0):
    """Catalog metric on a box large enough for shooting tests."""
    if name == "ultrastatic-spherical":
        box = [(0.2, 2.9)] * (n - 1) + [(-2.0, 2.0)]
    else:
        box = [(-2.0, 2.0)] * n
    return M.catalog(name, n, T=T, box=box)


def oracle_spec(case):
    """The package-side metric matching a frozen curvature case."""
    n, name = case["dim_space"], case["metric"]
    if name == "conformal":
        return M.conformal(M.minkowski(n, T=2.0, box=[(-2, 2)] * n), "0.05*exp(t) + 0.1*x1^2")
    if name == "mixed":
        return M.from_expressions(2, 2.0, [(-2, 2)] * 2, FROZEN["mixed_expressions"])
    return wide(name, n)


CATALOG_SAMPLES = [
    M.minkowski(2),
    M.minkowski(3),
    M.catalog("ultrastatic-euclidean", 2),
    M.catalog("ultrastatic-hyperbolic", 2),
    M.catalog("ultrastatic-hyperbolic", 3),
    M.catalog("ultrastatic-spherical", 2),
    M.catalog("ultrastatic-spherical", 3),
    M.conformal(M.minkowski(2), "0.05*exp(t)"),
    M.conformal(M.catalog("ultrastatic-hyperbolic", 2), "0.1*x1^2 - 0.05*t*x2"),
]


def sample_points(spec, count, seed=0, margin=0.05):
    return M.random_points(spec, count, np.random.default_rng(seed), margin)


def random_nd_matrix(rng, m, margin=0.05, scale=0.5):
    """Random eta-symmetric matrix with ``<Bv, v> <= -margin`` on the null slice.

    ``eta B`` is a random symmetric matrix shifted by a multiple of the
    identity; ``v.v = 2`` for every ``v = (1, w)``, so the shift moves the
    whole slice uniformly.
    """
    from lorcheck import nullcone as NC

    A = rng.normal(0.0, scale, (m, m))
    A = 0.5 * (A + A.T)
    top, _ = NC.slice_maximum(NC.eta(m) @ A)
    A -= 0.5 * (top + margin) * np.eye(m)
    return NC.eta(m) @ A


def random_nd_curve(rng, m, T=2.0):
    """``B(t) = B0 + t B1`` null negative-definite on ``[0, T]``.

    Both endpoints are ND and the slice maximum is convex in ``B``, so every
    intermediate matrix is ND as well.
    """
    B0 = random_nd_matrix(rng, m, rng.uniform(0.05, 1.0))
    BT = random_nd_matrix(rng, m, rng.uniform(0.05, 1.0))
    B1 = (BT - B0) / T
    return B0, B1


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
