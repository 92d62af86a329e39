from pathlib import Path

import pytest

from htckit.taxonomy import load_hierarchy_file, load_taxonomy

DATA_DIR = Path(__file__).parent / "data"

# Excerpt-style tree spanning three top branches, four levels deep.
EXCERPT_EDGES = [
    ("Root", "CCAT"),
    ("Root", "ECAT"),
    ("Root", "GCAT"),
    ("CCAT", "C11"),
    ("CCAT", "C15"),
    ("C15", "C151"),
    ("C15", "C152"),
    ("C151", "C1511"),
    ("ECAT", "E11"),
    ("ECAT", "E12"),
    ("ECAT", "E13"),
    ("E12", "E121"),
    ("E13", "E131"),
    ("E13", "E132"),
    ("GCAT", "G15"),
    ("G15", "G151"),
]


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def excerpt_tax():
    return load_taxonomy(EXCERPT_EDGES)


@pytest.fixture(scope="session")
def rcv1_tax():
    return load_hierarchy_file(DATA_DIR / "rcv1_topics.txt")
