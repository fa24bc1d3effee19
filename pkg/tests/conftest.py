import math

import pytest
from hypothesis import strategies as st

from cohortkit import LifeTable, bundled_life_table
from cohortkit import _backend


@pytest.fixture
def two_knot():
    return LifeTable.from_entries([(0, 1.0), (10, 0.64)])


@pytest.fixture
def three_knot():
    return LifeTable.from_entries([(0, 1.0), (50, 0.9), (100, 0.01)])


@pytest.fixture(scope="session")
def bundled():
    return bundled_life_table()


@pytest.fixture(params=_backend.available())
def backend(request):
    return request.param


@st.composite
def life_tables(draw, max_knots=12, min_span=None):
    """Random valid life tables, flat segments included."""
    k = draw(st.integers(2, max_knots))
    gaps = draw(st.lists(st.floats(0.5, 25.0), min_size=k - 1, max_size=k - 1))
    ratios = draw(st.lists(
        st.one_of(st.just(1.0), st.floats(0.02, 1.0)), min_size=k - 1, max_size=k - 1))
    ages, values = [0.0], [1.0]
    for g, r in zip(gaps, ratios):
        ages.append(ages[-1] + g)
        values.append(max(values[-1] * r, 1e-12))
    if min_span is not None and ages[-1] < min_span:
        scale = min_span / ages[-1]
        ages = [a * scale for a in ages]
    return LifeTable.from_entries(zip(ages, values))


def random_life_table(rng, max_age=115.0, knots=None):
    """Random valid life table on [0, max_age] from a numpy Generator."""
    k = knots or int(rng.integers(3, 25))
    inner = sorted(set(float(a) for a in rng.uniform(0, max_age, size=k - 2)))
    ages = [0.0] + inner + [max_age]
    decrements = rng.uniform(0.0, 0.6, size=len(ages) - 1)
    decrements[rng.random(len(decrements)) < 0.2] = 0.0
    values = [1.0]
    for d in decrements:
        values.append(max(values[-1] * (1 - d), 1e-9))
    return LifeTable.from_entries(zip(ages, values))


def rel_close(a, b, rel):
    return math.isclose(a, b, rel_tol=rel, abs_tol=0.0)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
