"""Shared fixtures: the bundled chevron domain and seeded generators."""

import json
from importlib import resources

import numpy as np
import pytest

from waveobs.grid import SquareUnion, domain_from_json

# the 25 level-4 squares of the reflected-beam ("chevron") observation domain
CHEVRON_SQUARES = frozenset(
    [
        (2, 1), (2, -1), (3, 1), (3, -1), (4, 1), (4, -1), (5, 1), (5, -1),
        (6, 1), (6, -1), (7, 1), (7, -1), (8, -1), (8, -2), (9, -2), (8, -3),
        (9, -3), (8, -4), (9, -4), (8, -5), (9, -5), (8, -6), (9, -6),
        (8, -7), (9, -7),
    ]
)


def load_fixture(name):
    ref = resources.files("waveobs").joinpath("fixtures", f"{name}.json")
    return json.loads(ref.read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def chevron():
    domain = domain_from_json(load_fixture("chevron_l4"))
    assert isinstance(domain, SquareUnion)
    return domain


@pytest.fixture()
def rng():
    return np.random.default_rng(20260816)
