from __future__ import annotations

from importlib import resources

import numpy as np
import pytest

from pdqeval.model import AxisAlignedBox, ConventionalBox, Dataset, Detection, GroundTruthObject, ImageDims

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def one_hot(k: int, n: int = 3) -> np.ndarray:
    v = np.zeros(n)
    v[k] = 1.0
    return v


def bbox_det(frame: int, box, probs) -> Detection:
    return Detection(frame, ConventionalBox(AxisAlignedBox(*box)), np.asarray(probs, dtype=float))


def single_frame(gts: list[GroundTruthObject], dims=(16, 16), n_classes: int = 3) -> Dataset:
    return Dataset([(0, ImageDims(*dims))], {0: gts}, [f"c{k}" for k in range(n_classes)])


@pytest.fixture
def fixture_paths():
    base = resources.files("pdqeval") / "data"
    return base / "fixture_gt.json", base / "fixture_det.json"
