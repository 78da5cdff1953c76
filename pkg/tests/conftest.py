"""
Pytest configuration file for shared fixtures and test setup.
"""

import sys
from pathlib import Path

# Add the src directory to the Python path so we can import our modules
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

import pytest

import config
from models.instances import parse_instance


@pytest.fixture
def fixture_text():
    """Read an instance file from the fixtures directory"""

    def read(name: str) -> str:
        return (config.FIXTURES_DIR / name).read_text()

    return read


@pytest.fixture
def load_instance(fixture_text):
    """Parse an instance file from the fixtures directory"""

    def load(name: str, kind=None):
        return parse_instance(fixture_text(name), kind)

    return load


@pytest.fixture
def fixture_path():
    """Absolute path of a fixture file, for command-line tests"""

    def path(name: str) -> str:
        return str(config.FIXTURES_DIR / name)

    return path
