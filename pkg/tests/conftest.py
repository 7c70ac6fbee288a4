import pytest

from cyclic_entropy.grid import Grid2D
from cyclic_entropy.toda import solve_dirichlet
from cyclic_entropy.weights import RDifferential


def q_z(rank):
    return RDifferential(rank, ((0.0, 1),))


@pytest.fixture(scope="session")
def coarse_disc():
    return Grid2D.disc(0.9, 1 / 32)


@pytest.fixture(scope="session")
def r3_flat_coarse(coarse_disc):
    return solve_dirichlet(3, q_z(3), coarse_disc, boundary="flat-like")


@pytest.fixture(scope="session")
def r5_hyper_coarse(coarse_disc):
    return solve_dirichlet(5, q_z(5), coarse_disc, boundary="hyperbolic-like")
