import shutil
import sys

import pytest

from lodsketch import pipeline
from lodsketch.capture import OrbitPlan

SMALL_PLAN = OrbitPlan(azimuth_end=270.0, azimuth_step=90.0, elevation_end=30.0, elevation_step=30.0,
                       image_size=64)


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """Two groups on an 8-view orbit at 64x64, rendered once per session."""
    root = tmp_path_factory.mktemp("small") / "ds"
    pipeline.synth(root, groups=2, seed=3, size=64, plan=SMALL_PLAN)
    return root


@pytest.fixture
def dataset_copy(small_dataset, tmp_path):
    dst = tmp_path / "ds"
    shutil.copytree(small_dataset, dst)
    return dst


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
