import numpy as np
import pytest
from hypothesis import strategies as st

from tlps.hyperexp import TlpsModel, heavy_tail_family, make_hyperexp

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def base_model():
    """mu = (1, 1/10), p = (10/11, 1/11), lambda = 1/2: m = 20/11, rho = 10/11."""
    return TlpsModel(make_hyperexp([10 / 11, 1 / 11], [1.0, 0.1]), 0.5)


@pytest.fixture
def mm1_model():
    return TlpsModel(make_hyperexp([1.0], [1.0]), 0.5)


@pytest.fixture(scope="session")
def family10():
    return TlpsModel(heavy_tail_family(10, 2.5, 1.2, 20 / 11), 0.5)


def random_model(rng: np.random.Generator, max_phases: int = 6, rho_range=(0.05, 0.95)) -> TlpsModel:
    n = int(rng.integers(1, max_phases + 1))
    weights = rng.dirichlet(np.ones(n))
    rates = np.exp(rng.uniform(np.log(0.02), np.log(20.0), n))
    dist = make_hyperexp(weights, rates)
    return TlpsModel.from_load(dist, rng.uniform(*rho_range))


@st.composite
def models(draw, max_phases=5, min_rho=0.05, max_rho=0.95):
    n = draw(st.integers(1, max_phases))
    raw = draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n))
    log_rates = draw(st.lists(st.floats(np.log(0.02), np.log(20.0)), min_size=n, max_size=n))
    rho = draw(st.floats(min_rho, max_rho))
    w = np.array(raw) / np.sum(raw)
    return TlpsModel.from_load(make_hyperexp(w, np.exp(log_rates)), rho)
