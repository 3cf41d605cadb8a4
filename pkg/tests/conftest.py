import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from core.models import CompartmentState, InterventionSchedule, ParameterSet  # noqa: E402


TABLE_ALPHA = [
    1.42e-7, 4.62e-8, 5.99e-8, 4.38e-8, 4.32e-8, 3.63e-8, 4.96e-10, 8.24e-8,
    5.52e-8, 9.63e-12, 5.20e-8, 5.79e-8, 1.13e-8, 3.35e-8, 8.16e-8,
]
TABLE_GAMMA = [0.00846, 0.01323, 0.10092, 0.09407, 0.07121, 0.01979, 0.09309]


@pytest.fixture
def reference_params():
    return ParameterSet(
        alpha=np.array(TABLE_ALPHA),
        beta=0.05386,
        beta_star=0.7888,
        gamma=np.array(TABLE_GAMMA),
        zeta=1.21e-4,
        rho=0.00922,
    )


@pytest.fixture
def reference_schedule():
    return InterventionSchedule(
        alpha_days=(12, 35, 48, 60, 71, 78, 87, 93, 104, 115, 136, 350, 355, 420),
        gamma_days=(35, 60, 87, 115, 136, 350),
        tau=35,
        T_V=420,
    )


@pytest.fixture
def reference_init():
    return CompartmentState(S=2_782_000, E=5, I=1)


@pytest.fixture
def toy_schedule():
    return InterventionSchedule(alpha_days=(15,), gamma_days=(20,), tau=None, T_V=10)


@pytest.fixture
def toy_params():
    return ParameterSet(
        alpha=np.array([2e-4, 1e-4]),
        beta=0.1,
        beta_star=0.0,
        gamma=np.array([0.05, 0.08]),
        zeta=0.01,
        rho=0.01,
    )


@pytest.fixture
def toy_init():
    return CompartmentState(S=990, E=10)
