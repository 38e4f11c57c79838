import json
from pathlib import Path

import pytest

from sample_answers import tracy_dataset_line, tracy_mock_fixture

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def tracy_dataset(tmp_path: Path) -> Path:
    path = tmp_path / "tracy.jsonl"
    path.write_text(tracy_dataset_line() + "\n", encoding="utf-8")
    return path


@pytest.fixture
def tracy_fixture_file(tmp_path: Path) -> Path:
    path = tmp_path / "tracy_fixture.json"
    path.write_text(json.dumps(tracy_mock_fixture()), encoding="utf-8")
    return path
