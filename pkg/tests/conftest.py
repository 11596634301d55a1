import numpy as np
import pytest

from starisac.channels import generate_channel_set
from starisac.metrics import BeamformingState, Noise, StarState
from starisac.scenario import desk_scenario


def cnormal(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_instance(seed, M=3, N=6, K_r=1, K_t=2, **kw):
    """Scenario, channels, a random beam state and a random surface state."""
    rng = np.random.default_rng(seed)
    sc = desk_scenario(M=M, N=N, K_r=K_r, K_t=K_t, **kw)
    ch = generate_channel_set(sc, rng)
    K = sc.K
    bf = BeamformingState(
        W=0.1 * cnormal(rng, M, K + M),
        u=cnormal(rng, M),
        gamma=rng.uniform(0.0, 3.0, K),
        rho=1e3 * cnormal(rng, K),
    )
    star = StarState.from_psi(cnormal(rng, N), cnormal(rng, N))
    return sc, ch, bf, star


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def noise():
    return Noise(1e-11, 1e-10)
