import pytest

from nlarch import (
    SimConfig,
    SpatialParams,
    queen_contiguity,
    row_normalize,
    simulate_panel,
)


@pytest.fixture(scope="session")
def ref_weights():
    """Row-normalized 7x7 queen lattice used by the simulation-design tests."""
    return row_normalize(queen_contiguity(7, 7))


@pytest.fixture(scope="session")
def ref_panel(ref_weights):
    """One panel from the reference design (T=100, q=2)."""
    cfg = SimConfig(T=100, q=2, params=SpatialParams(0.16, 0.15, 0.2),
                    beta=[-2.0], M=ref_weights, seed=0)
    return simulate_panel(cfg)
