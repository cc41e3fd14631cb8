import numpy as np
import pytest

from cmfsolver.pauli import AXES, SpinHamiltonian

ACCEPTANCE_LINES: list[str] = []


def random_hamiltonian(rng: np.random.Generator, n: int, n_terms: int = 8) -> SpinHamiltonian:
    terms = []
    for _ in range(n_terms):
        axes = "".join(rng.choice(list(AXES), size=n))
        terms.append((float(rng.normal()), axes))
    return SpinHamiltonian.from_terms(n, terms)


def random_amplitudes(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
