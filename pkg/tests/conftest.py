import numpy as np
import pytest
from hypothesis import strategies as st

from faithful_transmission.noise import NoiseFamily, sample
from faithful_transmission.protocol import InputQubit
from faithful_transmission.validate import random_qubit


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def haar():
    fam = NoiseFamily("haar", seed=99)
    return lambda i: sample(fam, i)


def qubits(n, seed=0):
    rng = np.random.default_rng(seed)
    return [random_qubit(rng) for _ in range(n)]


_component = st.floats(-1, 1, allow_nan=False)


@st.composite
def qubit_strategy(draw):
    v = np.array([complex(draw(_component), draw(_component)) for _ in range(2)])
    n = np.linalg.norm(v)
    if n < 1e-3:
        v, n = np.array([1, 0], dtype=complex), 1.0
    v = v / n
    return InputQubit(complex(v[0]), complex(v[1]))


@st.composite
def unitary_strategy(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    return sample(NoiseFamily("haar", seed=seed), draw(st.integers(0, 1000)))


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[n])
