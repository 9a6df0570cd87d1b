import pytest

from dcfmodel.fixtures import fixture
from dcfmodel.states import Distribution
from dcfmodel.statespace import enumerate_states

ALL_FIXTURES = ("two-node", "triangle", "hidden-terminal")


@pytest.fixture(scope="session")
def fixtures():
    return {name: fixture(name) for name in ALL_FIXTURES}


def random_marginals(topo, params, rng):
    """Independent random distributions over each node's reachable states."""
    out = {}
    for x in topo.nodes:
        states = sorted(enumerate_states(topo, params, x),
                        key=lambda s: s.sort_key())
        weights = rng.random(len(states)) + 1e-3
        weights /= weights.sum()
        out[x] = Distribution(x, dict(zip(states, weights)))
    return out
