import numpy as np
import pytest

from patterned_quench.lattice import ChainSpec
from patterned_quench.states import make_state

# Every family the library ships, at the standard ring size used by the
# figure-style runs.  Built once per session; correlation matrices are
# immutable so sharing is safe.
STANDARD_FAMILIES = (
    "dimer",
    "dimer-1",
    "dimer-2",
    "dimer-3",
    "wigner-2",
    "wigner-3",
    "wigner-4",
    "wigner-5",
    "rainbow",
    "frozen-rainbow",
    "island-3",
)


@pytest.fixture(scope="session")
def spec240():
    return ChainSpec(240)


@pytest.fixture(scope="session")
def states240(spec240):
    return {fam: make_state(fam, spec240) for fam in STANDARD_FAMILIES}


@pytest.fixture
def rng():
    return np.random.default_rng(20250823)
