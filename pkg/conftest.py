import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from gallery import build  # noqa: E402


@pytest.fixture(scope='session')
def gallery():
    """Gallery builds shared across test modules, keyed by id string"""
    cache = {}

    def get(gid):
        if gid not in cache:
            cache[gid] = build(gid)
        return cache[gid]

    return get
