import sys
from pathlib import Path

import numpy as np
import pytest

# Same path setup as run_app.py
APP_DIR = Path(__file__).resolve().parents[1] / "App_dev"
if str(APP_DIR) not in sys.path:
    sys.path.insert(0, str(APP_DIR))

from app.imaging.phantoms import make_block_phantom  # noqa: E402
from app.imaging.projector import build_system_matrix, make_geometry  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def block_system():
    """(geometry, system matrix, ground truth) for the 4x4 block phantom at 36 angles."""
    geom = make_geometry(4, 36)
    return geom, build_system_matrix(geom), make_block_phantom()
