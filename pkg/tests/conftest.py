import os
from pathlib import Path

import pytest

from asrl import data

ROOT = Path(__file__).resolve().parent.parent


def _data_root() -> Path:
    env = os.environ.get("ASRL_DATA_DIR")
    return Path(env) if env else ROOT / "data"


def have_dataset(name: str) -> bool:
    return all(p.is_file() for p in data.dataset_paths(data.get_spec(name), _data_root()))


@pytest.fixture(scope="session")
def data_root() -> Path:
    return _data_root()


@pytest.fixture(scope="session")
def load_dataset(data_root):
    cache = {}

    def _load(name):
        if not have_dataset(name):
            pytest.skip(f"{name} data files not present under {data_root} (see scripts/fetch_data.py)")
        if name not in cache:
            cache[name] = data.load_registered(name, data_root)
        return cache[name]

    return _load


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS):
            terminalreporter.write_line(line)
