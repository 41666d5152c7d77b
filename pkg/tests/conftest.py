from pathlib import Path

import pytest

from ebskit.corpus import load_corpus
from ebskit.obligations import BoundMachine, CheckConfig

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


@pytest.fixture(scope="session")
def project(corpus):
    return corpus[0]


@pytest.fixture(scope="session")
def manifest(corpus):
    return corpus[1]


@pytest.fixture(scope="session")
def config(manifest):
    return CheckConfig(bounds=manifest.bounds, consts=manifest.consts)


@pytest.fixture(scope="session")
def bind(project, config):
    """Cached BoundMachine factory for corpus machines."""
    cache = {}

    def _bind(name: str) -> BoundMachine:
        if name not in cache:
            cache[name] = BoundMachine.from_project(project, name, config)
        return cache[name]

    return _bind


@pytest.fixture(scope="session")
def data_dir():
    return DATA


def read_data(name: str) -> str:
    return (DATA / name).read_text(encoding="utf-8")
