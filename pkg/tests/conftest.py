import math

import pytest

from mdiqkd.params import DeviceParams


@pytest.fixture
def device():
    """Reference hardware: eta_d = 0.2, eta_m = 0.6, p_d = 1e-6."""
    return DeviceParams(eta_d=0.2, p_d=1e-6, eta_m=0.6)


@pytest.fixture
def clean_device():
    return DeviceParams(eta_d=0.2, p_d=0.0, eta_m=0.6)


def h2(p):
    """Independent binary entropy for cross-checks."""
    if p in (0.0, 1.0):
        return 0.0
    return -(p * math.log(p) + (1 - p) * math.log(1 - p)) / math.log(2)
