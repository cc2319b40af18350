import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]
PLUGINS = REPO_ROOT / "plugins"


@pytest.fixture(scope="session")
def echo_plugin_cmd():
    return [sys.executable, str(PLUGINS / "echo_denoiser.py")]


@pytest.fixture(scope="session")
def haar_plugin_cmd():
    def make(k: int):
        return [sys.executable, str(PLUGINS / "haar_ht_denoiser.py"), "--k", str(k)]

    return make
