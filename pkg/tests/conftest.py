import os
import sys

from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

# examples come from string-seeded generators; keep hypothesis's own choices fixed too
settings.register_profile("fixed", derandomize=True, print_blob=True)
settings.load_profile("fixed")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: exhaustive 3-CNF checks that run for many minutes")
