from __future__ import annotations

import sys
from importlib import resources
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from _synth import synth_label_sequence, write_corpus  # noqa: E402

from ssrvpr import (  # noqa: E402
    RefineConfig,
    SegmentationMap,
    ShapeContextParams,
    load_category_config,
)


def packaged_config(name: str) -> Path:
    return Path(str(resources.files("ssrvpr") / "configs" / name))


@pytest.fixture(scope="session")
def cityscapes_cfg_path() -> Path:
    return packaged_config("cityscapes.cfg")


@pytest.fixture(scope="session")
def synthia_cfg_path() -> Path:
    return packaged_config("synthia.cfg")


@pytest.fixture(scope="session")
def categories(cityscapes_cfg_path):
    return load_category_config(cityscapes_cfg_path)


@pytest.fixture(scope="session")
def sc_params() -> ShapeContextParams:
    return ShapeContextParams()


@pytest.fixture(scope="session")
def refine_cfg() -> RefineConfig:
    return RefineConfig()


@pytest.fixture(scope="session")
def seq30() -> list[SegmentationMap]:
    """30-frame coherent sequence used by the retrieval tests."""
    frames = synth_label_sequence(30, 320, 240, seed=1, step=16, density=2.0)
    return [SegmentationMap(f, frame_id=i) for i, f in enumerate(frames)]


@pytest.fixture(scope="session")
def frames50() -> list[SegmentationMap]:
    """50 frames of strongly varying content for fixed-dimension checks."""
    frames = synth_label_sequence(25, 256, 192, seed=2, step=40, density=1.0)
    frames += synth_label_sequence(25, 256, 192, seed=3, step=64, density=3.0)
    return [SegmentationMap(f, frame_id=i) for i, f in enumerate(frames)]


@pytest.fixture(scope="session")
def corpus_1024(tmp_path_factory) -> tuple[Path, list[SegmentationMap]]:
    """20-frame 1024x1024 corpus on disk, shared by timing/noise tests."""
    frames = synth_label_sequence(20, 1024, 1024, seed=5, step=96, density=1.5)
    directory = tmp_path_factory.mktemp("corpus1024")
    write_corpus(directory, frames)
    maps = [SegmentationMap(f, frame_id=i) for i, f in enumerate(frames)]
    return directory, maps
