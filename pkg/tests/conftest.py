import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from varmine.fixtures import build_fixture_corpus  # noqa: E402

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def fixture_corpus(tmp_path_factory) -> Path:
    """Scripted fixture repositories, built once per session.

    Returns the directory containing alpha/, beta/, gamma/ and corpus.yaml.
    """
    dest = tmp_path_factory.mktemp("fixture-corpus")
    build_fixture_corpus(dest)
    return dest


@pytest.fixture(scope="session")
def listing_excerpt() -> str:
    return (DATA_DIR / "parser_scan_excerpt.c").read_text(encoding="utf-8")
