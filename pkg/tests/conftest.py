import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from prefix.topologies import build_network  # noqa: E402

GOLDEN_DIR = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def built_networks():
    """Memoized build_network(topology, width)"""
    cache = {}

    def get(topology, width, align_levels=False):
        key = (topology, width, align_levels)
        if key not in cache:
            cache[key] = build_network(topology, width, align_levels=align_levels)
        return cache[key]

    return get


def pytest_addoption(parser):
    parser.addoption("--update-goldens", action="store_true", default=False,
                     help="rewrite tests/golden files from the current output")


@pytest.fixture
def golden(request):
    """Compare text against tests/golden/<name>; --update-goldens rewrites the file instead"""
    update = request.config.getoption("--update-goldens", default=False)

    def check(name, text):
        path = GOLDEN_DIR / name
        if update:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8", newline="\n")
            return
        if not path.exists():
            pytest.fail(f"golden file {name} is missing; rerun with --update-goldens to record it")
        expected = path.read_text(encoding="utf-8").replace("\r\n", "\n")
        assert text.replace("\r\n", "\n") == expected

    return check
