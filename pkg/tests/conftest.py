import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fake_endpoint import FakeEndpoint  # noqa: E402


@pytest.fixture
def endpoint():
    server = FakeEndpoint().start()
    yield server
    server.stop()
