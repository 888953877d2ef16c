import pytest

from billiardflow import flow, geometry


@pytest.fixture(scope="session")
def table():
    return geometry.make_table(2.0, 1.0)


@pytest.fixture(scope="session")
def boundary0(table):
    return flow.perturbed_table(table, 0.0)


@pytest.fixture(scope="session")
def caustic_half(table):
    return geometry.caustic_from_lambda(table, 0.5)


@pytest.fixture(scope="session")
def resonant_13(table):
    return geometry.resonant_caustic(table, geometry.Resonance(1, 3))
