from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile("subfactorlab", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("subfactorlab")


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES
