import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

from arrowpoly import diagram

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fix():
    def load(name: str) -> diagram.Diagram:
        return diagram.load(FIXTURES / name)

    return load


def fixture_path(name: str) -> pathlib.Path:
    return FIXTURES / name
