import pytest


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte-Carlo runs (deselect with -m 'not slow')")
