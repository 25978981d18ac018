import numpy as np
import pytest

from matmoments.reference import (
    atomic_moments,
    block_diag_moments,
    gaussian_moments,
    lognormal_moments,
    point_mass,
    two_atom_measure,
    zero_moments,
)
from matmoments.transform import (
    ConvergencePolicy,
    SchurParameter,
    build_section,
    convergence_driver,
)

# Reference grid used by convergence runs throughout the suite.
DRIVER_GRID = (2j, 1 + 1j, -1 + 2j)


@pytest.fixture(scope="session")
def two_atom_seq():
    """Atoms at +-1, weight 1/2 each; 33 moments at double precision."""
    return atomic_moments(two_atom_measure(), 33)


@pytest.fixture(scope="session")
def point_mass_seq():
    return atomic_moments(point_mass(0.0), 9)


@pytest.fixture(scope="session")
def gaussian_seq():
    return gaussian_moments(65)


@pytest.fixture(scope="session")
def lognormal_seq():
    """Closed-form lognormal moments, enough for sections up to M=64."""
    return lognormal_moments(127, 256)


@pytest.fixture(scope="session")
def blockdiag_seq():
    """N=2 diag(lognormal, two-atom); indeterminate with defect 1 < N."""
    return block_diag_moments(63, 256)


@pytest.fixture(scope="session")
def zero_seq():
    return zero_moments(8)


@pytest.fixture(scope="session")
def lognormal_section_32(lognormal_seq):
    return build_section(lognormal_seq, 32)


@pytest.fixture(scope="session")
def lognormal_section_64(lognormal_seq):
    return build_section(lognormal_seq, 64)


@pytest.fixture(scope="session")
def lognormal_converged(lognormal_seq):
    return convergence_driver(
        lognormal_seq,
        DRIVER_GRID,
        SchurParameter.zero(),
        ConvergencePolicy(initial_section=16, max_section=128, tol=1e-6),
    )


@pytest.fixture(scope="session")
def blockdiag_section(blockdiag_seq):
    return build_section(blockdiag_seq, 32)


def random_atomic_measure(rng, block_size, max_atoms=5, min_separation=0.4):
    """Seeded random atomic matrix measure with PSD weights."""
    from matmoments.reference import AtomicMatrixMeasure

    n_atoms = int(rng.integers(2, max_atoms + 1))
    atoms = np.sort(rng.uniform(-2.0, 2.0, size=n_atoms))
    while np.diff(atoms).size and np.diff(atoms).min() < min_separation:
        atoms = np.sort(rng.uniform(-2.0, 2.0, size=n_atoms))
    weights = []
    for _ in range(n_atoms):
        r = int(rng.integers(1, block_size + 1))
        g = rng.normal(size=(block_size, r)) + 1j * rng.normal(size=(block_size, r))
        w = g @ g.conj().T
        weights.append(w / (block_size * n_atoms))
    return AtomicMatrixMeasure(atoms=tuple(atoms), weights=tuple(weights),
                               block_size=block_size)
