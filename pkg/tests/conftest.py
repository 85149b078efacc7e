import os
from pathlib import Path

import pytest

from voronoi_complex.cells import enumerate_cells, read_complex, write_complex
from voronoi_complex.voronoi import classify_perfect_forms

CACHE = Path(os.environ.get("VORONOI_CACHE", Path(__file__).resolve().parent.parent / ".cache"))

_built = {}


def build(n, group="GL", **kw):
    """Complexes of rank <= 5 are built live once per session."""
    key = (n, group, tuple(sorted(kw.items())))
    if key not in _built:
        _built[key] = enumerate_cells(classify_perfect_forms(n), group, **kw)
    return _built[key]


def cached(n, group):
    """Rank-6 complexes are read from the VORCPX cache, built on first use."""
    key = (n, group, "file")
    if key in _built:
        return _built[key]
    path = CACHE / f"{group}{n}.vcx"
    if path.exists():
        cx = read_complex(path.read_text())
    else:
        cx = enumerate_cells(classify_perfect_forms(n), group)
        CACHE.mkdir(parents=True, exist_ok=True)
        path.write_text(write_complex(cx))
    _built[key] = cx
    return cx


@pytest.fixture(scope="session")
def gl3():
    return build(3)


@pytest.fixture(scope="session")
def gl4():
    return build(4)


@pytest.fixture(scope="session")
def sl4():
    return build(4, "SL")


@pytest.fixture(scope="session")
def gl5():
    return build(5)


@pytest.fixture(scope="session")
def sl5():
    return build(5, "SL")


@pytest.fixture(scope="session")
def gl6():
    return cached(6, "GL")


@pytest.fixture(scope="session")
def sl6():
    return cached(6, "SL")
