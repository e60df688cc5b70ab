import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import PAPER_71_SIGMA_DIAG, PAPER_72_SIGMA_DIAG

from pinsync import (
    LatticeParams,
    design_controller,
    linearized_model,
)


@pytest.fixture(scope="session")
def lattice_71():
    return LatticeParams(a=3.0, epsilon=0.33, L=5, pin_sites=(1, 5))


@pytest.fixture(scope="session")
def lattice_72():
    return LatticeParams(a=4.0, epsilon=0.25, L=10, pin_sites=(1, 10))


@pytest.fixture(scope="session")
def model_71(lattice_71):
    return linearized_model(lattice_71, np.diag(PAPER_71_SIGMA_DIAG))


@pytest.fixture(scope="session")
def model_72(lattice_72):
    return linearized_model(lattice_72, np.diag(PAPER_72_SIGMA_DIAG))


@pytest.fixture(scope="session")
def gamma2():
    return 0.01 * np.eye(2)


@pytest.fixture(scope="session")
def solution_71(model_71, gamma2):
    return design_controller(model_71, gamma2)


@pytest.fixture(scope="session")
def solution_72(model_72, gamma2):
    return design_controller(model_72, gamma2)


def random_stabilizable_model(rng, n_max=6):
    """Random controllable (hence stabilizable) model with PD covariances."""
    from pinsync import LinearModel, ctrb_rank

    while True:
        n = int(rng.integers(2, n_max + 1))
        m = int(rng.integers(1, n + 1))
        A = rng.standard_normal((n, n))
        A *= rng.uniform(0.3, 1.4) / max(abs(np.linalg.eigvals(A)))
        B = rng.standard_normal((n, m))
        if ctrb_rank(A, B) < n:
            continue
        S = rng.standard_normal((n, n))
        Sigma = S @ S.T + 0.1 * np.eye(n)
        G = rng.standard_normal((m, m))
        Gamma = G @ G.T + 0.1 * np.eye(m)
        return LinearModel(A=A, B=B, Sigma=Sigma), Gamma
