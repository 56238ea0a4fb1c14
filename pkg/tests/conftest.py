from __future__ import annotations

import tempfile
from pathlib import Path

import pytest

from webposture.config import RunConfig
from webposture.env import Browser, BrowserProfile
from webposture.harness import Harness, HarnessConfig


@pytest.fixture(scope="session")
def harness():
    with Harness(HarnessConfig(data_dir=Path(tempfile.mkdtemp(prefix="posture-harness-")))) as h:
        yield h


@pytest.fixture
def run_config(harness) -> RunConfig:
    return RunConfig.from_manifest(harness.base_url)


@pytest.fixture
def browser(harness) -> Browser:
    return Browser(page_url=harness.base_url + "/")


def make_browser(harness, **profile_kwargs) -> Browser:
    return Browser(page_url=harness.base_url + "/", profile=BrowserProfile(**profile_kwargs))
