import numpy as np
import pytest

from binomcap import ChannelSpec, SolverConfig, exact_solution, solve_capacity


@pytest.fixture(scope="session")
def solved():
    """Memoized access to solver runs shared across the whole test session."""
    cache = {}

    def get(n, **config_kwargs):
        key = (n, tuple(sorted(config_kwargs.items())))
        if key not in cache:
            cfg = SolverConfig(**config_kwargs) if config_kwargs else SolverConfig()
            cache[key] = solve_capacity(ChannelSpec(n), cfg)
        return cache[key]

    def put(n, report, **config_kwargs):
        cache[(n, tuple(sorted(config_kwargs.items())))] = report

    get.put = put
    return get


@pytest.fixture(scope="session")
def table_dists():
    """Known optimal input distributions for n = 1, 2, 3."""
    return {n: exact_solution(n).input for n in (1, 2, 3)}


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
