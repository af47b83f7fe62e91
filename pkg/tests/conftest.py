import numpy as np
import pytest

from qdarwin.qstate import DensityOperator, StateVector, TensorSpace


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def qubits(n, start=0):
    return TensorSpace.from_dims([2] * n, start)


def density(space, vec):
    return StateVector.normalized(space, vec).to_density()


def random_density(space, rng, rank=None):
    d = space.total_dimension
    rank = rank or d
    m = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = m @ m.conj().T
    return DensityOperator(space, rho / np.trace(rho).real)
