import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from talentgraph.orgdata import SyntheticOrgConfig, generate_synthetic_org  # noqa: E402
from talentgraph.graphs import WeightedGraph  # noqa: E402

settings.register_profile("default", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def small_org():
    cfg = SyntheticOrgConfig(n_employees=60, vocab_per_family=20, background_vocab=30,
                             intra_role_email_rate=2.0, rng_seed=3)
    return generate_synthetic_org(cfg)


@pytest.fixture(scope="session")
def default_org():
    return generate_synthetic_org(SyntheticOrgConfig(rng_seed=1))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def graph_from_adj(a: np.ndarray, names=None) -> WeightedGraph:
    names = names or [f"n{k}" for k in range(len(a))]
    return WeightedGraph.from_dense(names, a)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
