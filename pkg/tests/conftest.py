import sys
import os

import pytest

_tests_dir = os.path.dirname(__file__)

# Repository root for the optics/qml/cli packages and config.py
sys.path.insert(0, os.path.join(_tests_dir, '..'))
# Add tests/ itself so helpers.py can be imported
sys.path.insert(0, _tests_dir)


@pytest.fixture
def data_dir():
    return os.path.join(_tests_dir, '..', 'data')


@pytest.fixture
def hom_path(data_dir):
    return os.path.join(data_dir, 'hom.json')


@pytest.fixture
def feedforward_path(data_dir):
    return os.path.join(data_dir, 'tritter_feedforward.json')
