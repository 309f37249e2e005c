import os
import sys

import pytest

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.insert(0, ROOT)
sys.path.insert(0, os.path.join(ROOT, 'backend'))

from app.kb.loader import default_kb  # noqa: E402
from backend.config import Environment, Settings, create_settings  # noqa: E402


@pytest.fixture
def kb():
    """The bundled knowledge base."""
    return default_kb()


@pytest.fixture
def settings(tmp_path):
    """Testing settings that read no dotenv file."""
    return create_settings(Environment.TESTING, env_file=str(tmp_path / "absent.env"))


@pytest.fixture
def make_settings(tmp_path):
    """Factory for testing settings with overrides."""
    def factory(**overrides) -> Settings:
        return create_settings(
            Environment.TESTING, env_file=str(tmp_path / "absent.env"), **overrides
        )
    return factory
