import os
import sys

import hypothesis
import pytest
import torch

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), '..'))

hypothesis.settings.register_profile('default', max_examples=25, deadline=None)
hypothesis.settings.register_profile('fast', max_examples=5, deadline=None)
hypothesis.settings.load_profile(os.getenv('HYPOTHESIS_PROFILE', 'default'))

def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', help='run slow tests')

def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long acceptance runs')

def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)

@pytest.fixture
def single_thread():
    # chunk sums are bit-identical only with one intra-op thread
    n = torch.get_num_threads()
    torch.set_num_threads(1)
    yield
    torch.set_num_threads(n)
