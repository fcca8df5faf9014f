import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fritchman.model import table_model  # noqa: E402


@pytest.fixture
def snr666():
    """Results-table model at 6.66 dB SNR (case I)."""
    return table_model(0.9895, 0.0105, 0.8614, 0.1386, 0.1481, 0.6712, 0.1807)


@pytest.fixture
def snr450():
    return table_model(0.9226, 0.0774, 0.8918, 0.1082, 0.1861, 0.6724, 0.1415)
