from pathlib import Path

import numpy as np
import pytest

from ossquality.features import EncodedDataset, FeatureDescriptor

DATA = Path(__file__).parent / "data"

TENNIS_COLUMNS = ("outlook", "temperature", "humidity", "wind")
TENNIS_ROWS = [
    ("sunny", "hot", "high", "weak", "no"),
    ("sunny", "hot", "high", "strong", "no"),
    ("overcast", "hot", "high", "weak", "yes"),
    ("rain", "mild", "high", "weak", "yes"),
    ("rain", "cool", "normal", "weak", "yes"),
    ("rain", "cool", "normal", "strong", "no"),
    ("overcast", "cool", "normal", "strong", "yes"),
    ("sunny", "mild", "high", "weak", "no"),
    ("sunny", "cool", "normal", "weak", "yes"),
    ("rain", "mild", "normal", "weak", "yes"),
    ("sunny", "mild", "normal", "strong", "yes"),
    ("overcast", "mild", "high", "strong", "yes"),
    ("overcast", "hot", "normal", "weak", "yes"),
    ("rain", "mild", "high", "strong", "no"),
]

_ACCEPTANCE_LINES: list[str] = []


def categorical_dataset(rows, columns, labels) -> EncodedDataset:
    """Encode string rows as categorical features with sorted vocabularies."""
    feats, cols = [], []
    for j, name in enumerate(columns):
        cats = tuple(sorted({r[j] for r in rows}))
        feats.append(FeatureDescriptor(name, "categorical", name, "category_index", cats))
        cols.append([cats.index(r[j]) for r in rows])
    X = np.array(cols, dtype=float).T if rows else np.zeros((0, len(columns)))
    return EncodedDataset(tuple(feats), X, np.array(labels, dtype=np.int8))


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def tennis() -> EncodedDataset:
    return categorical_dataset([r[:4] for r in TENNIS_ROWS], TENNIS_COLUMNS,
                               [r[4] == "yes" for r in TENNIS_ROWS])


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
