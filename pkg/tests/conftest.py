import pytest

from takeover_sim import ArbiterConfig, DriverParams, generate_trace, make_routes
from takeover_sim.arbitration import AutomationMode, Disengagement
from takeover_sim.scenario import oracle_scenario


@pytest.fixture(scope="session")
def route_a():
    return make_routes()[0]


@pytest.fixture(scope="session")
def route_b():
    return make_routes()[1]


@pytest.fixture(scope="session")
def route_a_traces(route_a):
    """Synthetic expert recordings for route A, one per disengagement kind."""
    return {dis: generate_trace(route_a.with_strategy(AutomationMode.SHARED, dis))
            for dis in Disengagement}


@pytest.fixture(scope="session")
def oracle_spec():
    """URGENT/MANUAL single-event scenario with gap 15 m at the request."""
    return oracle_scenario()


@pytest.fixture(scope="session")
def oracle_trace(oracle_spec):
    return generate_trace(oracle_spec)


@pytest.fixture()
def arb_cfg():
    return ArbiterConfig()


@pytest.fixture()
def default_driver():
    return DriverParams(rt=1.2)
