import numpy as np
import pytest
from hypothesis import strategies as st

from wstate_lyapunov.model import ModelParams, NetworkModel


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random mixed state from a Ginibre matrix."""
    rank = rank or dim
    a = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


@st.composite
def densities(draw, dim: int = 10):
    seed = draw(st.integers(0, 2**32 - 1))
    rank = draw(st.integers(1, dim))
    return random_density(dim, np.random.default_rng(seed), rank)


@pytest.fixture(scope="session")
def closed_model():
    return NetworkModel.build(ModelParams())


@pytest.fixture(scope="session")
def lossy_model():
    return NetworkModel.build(ModelParams(gamma_atom=0.1, gamma_mode=0.1, eta=0.7))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        passed, detail = results[n]
        terminalreporter.write_line(f"CRITERION {n}: {'PASS' if passed else 'FAIL'} - {detail}")
