import sys
from pathlib import Path

import pytest

from trpwealth.market import LogNormalParams
from trpwealth.mvn import QmcParams

sys.path.insert(0, str(Path(__file__).parent))

# simulated market used throughout: ln x1 ~ N(0.006, 0.05), ln x2 ~ N(0.003, 0.05)
SIM = LogNormalParams(0.006, 0.003, 0.05, 0.05)
# light QMC settings for tests that only need a consistent (not precise) band law
FAST_QMC = QmcParams(n_points=256, n_shifts=4)


@pytest.fixture
def sim_params():
    return SIM
