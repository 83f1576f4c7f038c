from __future__ import annotations

from pathlib import Path

import pytest

from vizagent.study import Study, load_study

FIXTURES = Path(__file__).parent / "fixtures"
GOLDENS = Path(__file__).parent / "goldens"


def load_fixture_study(name: str) -> Study:
    return load_study((FIXTURES / "studies" / f"{name}.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def battery() -> Study:
    return load_fixture_study("battery-pack")


@pytest.fixture(scope="session")
def motor() -> Study:
    return load_fixture_study("motor-bracket")


@pytest.fixture(scope="session")
def control_arm() -> Study:
    return load_fixture_study("control-arm")
