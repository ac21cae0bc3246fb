import numpy as np
import pytest

from oqsim.channels import KrausChannel


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


def random_density(n_qubits: int, rng) -> np.ndarray:
    dim = 2**n_qubits
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


def random_pure(n_qubits: int, rng) -> np.ndarray:
    dim = 2**n_qubits
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_channel(dim: int, n_kraus: int, rng) -> KrausChannel:
    """Haar-ish random CPTP map via a truncated random isometry."""
    g = rng.normal(size=(n_kraus * dim, dim)) + 1j * rng.normal(size=(n_kraus * dim, dim))
    q, _ = np.linalg.qr(g)
    ops = tuple(q[k * dim : (k + 1) * dim, :] for k in range(n_kraus))
    return KrausChannel(ops)
