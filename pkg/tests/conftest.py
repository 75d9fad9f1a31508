import json

import pytest

from bprelab.env_model import (
    FractionalLinearParams,
    fractional_linear_law,
    make_environment,
    make_offspring_law,
)
from bprelab.montecarlo import SimConfig, simulate_ensemble


@pytest.fixture(scope="session")
def env_e1():
    """Two equally weighted atoms: {p1=.5, p2=.5} and {p1=.2, p2=.8}."""
    return make_environment(
        [
            (0.5, make_offspring_law([0.0, 0.5, 0.5])),
            (0.5, make_offspring_law([0.0, 0.2, 0.8])),
        ]
    )


@pytest.fixture(scope="session")
def env_gw():
    return make_environment([(1.0, make_offspring_law([0.0, 0.5, 0.5]))])


@pytest.fixture(scope="session")
def env_single_m2():
    return make_environment([(1.0, make_offspring_law([0.0, 0.5, 0.0, 0.5]))])


@pytest.fixture(scope="session")
def env_identity():
    return make_environment([(1.0, make_offspring_law([0.0, 1.0]))])


@pytest.fixture(scope="session")
def env_doubling():
    return make_environment([(1.0, make_offspring_law([0.0, 0.0, 1.0]))])


@pytest.fixture(scope="session")
def env_fl_strong():
    return make_environment(
        [(1.0, fractional_linear_law(FractionalLinearParams(0.0, 0.5)))]
    )


@pytest.fixture(scope="session")
def env_fl_extinct():
    """Fractional-linear atom with a0 > 0: extinction possible."""
    return make_environment(
        [(1.0, fractional_linear_law(FractionalLinearParams(0.2, 0.5, 30)))]
    )


@pytest.fixture(scope="session")
def mc_warm(env_e1):
    """Compile the numba kernels once so timed tests measure compute only."""
    cfg = SimConfig(seed=1, n_paths=8, n_gens=3, exact_pop_threshold=1000)
    for name in ("numba", "numpy"):
        try:
            simulate_ensemble(env_e1, cfg, backend_name=name)
        except Exception:
            pass
    return True


@pytest.fixture()
def e1_file(tmp_path):
    path = tmp_path / "e1.json"
    path.write_text(
        json.dumps(
            {
                "atoms": [
                    {"weight": 0.5, "pmf": [0, 0.5, 0.5]},
                    {"weight": 0.5, "pmf": [0, 0.2, 0.8]},
                ]
            }
        )
    )
    return path
