import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import model  # noqa: E402


@pytest.fixture(scope="session")
def m18():
    """Truncation (2, 3, 3) with its balanced trivial-label model action."""
    return model({2: 1, 3: "inf"}, 18)


@pytest.fixture(scope="session")
def m54():
    """Truncation (2, 3, 3, 3); two free factors per generator direction."""
    return model({2: 1, 3: "inf"}, 54)


@pytest.fixture(scope="session")
def m81():
    """Truncation (3, 3, 3, 3); no invariant-carrying blocks at all."""
    return model({3: "inf"}, 81)


@pytest.fixture(scope="session")
def m30():
    """Truncation (2, 3, 5); one invariant-carrying block per prime."""
    return model({2: 1, 3: 1, 5: "inf"}, 30)
