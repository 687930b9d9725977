import numpy as np
import pytest

from dirate.model import reference_model, validate_model

ACCEPTANCE_LINES = []


@pytest.fixture
def W1():
    return reference_model("W1")


@pytest.fixture
def W2():
    return reference_model("W2")


@pytest.fixture
def decoupled():
    return reference_model("decoupled")


def scalar_ar1(a=0.9, q=1.0):
    return validate_model({
        "coeffs": [[[a, 0.0], [0.0, 0.0]]],
        "noise_cov": [[q, 0.0], [0.0, 1.0]],
        "partition": {"x": [1], "y": [0], "z": []},
    })


def random_spd(rng, n, lo=0.1, hi=3.0):
    """SPD matrix with eigenvalues drawn uniformly from [lo, hi]."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return (Q * rng.uniform(lo, hi, n)) @ Q.T


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
