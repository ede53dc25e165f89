import json
import pathlib

import pytest
from hypothesis import settings

settings.register_profile("bnv", max_examples=200, derandomize=True, deadline=None)
settings.load_profile("bnv")


@pytest.fixture(scope="session")
def golden():
    with open(pathlib.Path(__file__).with_name("golden.json")) as fh:
        return json.load(fh)
