import numpy as np
import pytest


def random_unitary(n, rng):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_invertible(n, rng):
    # well conditioned: identity plus a modest perturbation
    return np.eye(n) + 0.3 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
