import json
from pathlib import Path

import pytest

from chronorag.corpus import load_corpus

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def corpus20():
    return load_corpus(DATA_DIR / "corpus20.jsonl")


@pytest.fixture(scope="session")
def corpus20_manifest():
    return json.loads((DATA_DIR / "corpus20_manifest.json").read_text())
