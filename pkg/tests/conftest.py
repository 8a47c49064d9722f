import copy

import pytest

from hapsteer.config import default_config
from hapsteer.scenario import run_trial


@pytest.fixture()
def cfg():
    return default_config()


@pytest.fixture(scope="session")
def default_cfg_session():
    return default_config()


@pytest.fixture(scope="session")
def short_cfg():
    """2 km course with a single LC event; fast full-pipeline runs."""
    cfg = default_config()
    cfg.scenario.geometry.course_length = 2000.0
    cfg.scenario.events = cfg.scenario.events[:1]
    return cfg


@pytest.fixture(scope="session")
def strong_normal_log(default_cfg_session):
    return run_trial("strong-normal", copy.deepcopy(default_cfg_session), seed=1)


@pytest.fixture(scope="session")
def manual_log(default_cfg_session):
    return run_trial("manual", copy.deepcopy(default_cfg_session), seed=1)
