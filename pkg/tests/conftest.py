import sys

import pytest

from lamc.machine import MachineConfig

sys.setrecursionlimit(50_000)


@pytest.fixture
def base_reg():
    """cc only, default stack constants, two inert constants to play with."""
    return MachineConfig(inert_consts=("c_a", "c_b")).build()


@pytest.fixture
def full_reg():
    """cc, quote, eq, eq_nat installed."""
    return MachineConfig(quote=True, eq=True, eq_nat=True,
                         inert_consts=("c_a", "c_b")).build()
