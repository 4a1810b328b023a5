import sys
import os

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import pytest

from tests.helpers.instance_helpers import make_path, make_star


@pytest.fixture
def unit_star():
    """Unit star, turnovers (2, 4, 4)."""
    return make_star([1, 1, 1], [2, 4, 4])


@pytest.fixture
def halfline():
    """Depot 0 - 1 - 2 - 3 with unit edges, turnovers (1, 2, 4)."""
    return make_path([1, 1, 1], [1, 2, 4])
