import logging
import os
from functools import lru_cache
from pathlib import Path

import yaml

logger = logging.getLogger(__name__)

SETTINGS_ENV = "GBSDE_LAB_SETTINGS"
OUTPUT_ROOT_ENV = "GBSDE_LAB_OUTPUT_ROOT"

_DEFAULT_PATH = Path(__file__).resolve().parent.parent / "config" / "settings.yaml"


@lru_cache(maxsize=None)
def load_settings(path=None):
    """
    Read the defaults file. The environment variable GBSDE_LAB_SETTINGS
    points at an alternative file when no explicit path is given.
    """
    settings_path = Path(path or os.getenv(SETTINGS_ENV) or _DEFAULT_PATH)
    with open(settings_path, "r") as f:
        settings = yaml.safe_load(f) or {}
    logger.debug("loaded settings from %s", settings_path)
    return settings


def section(name):
    return dict(load_settings().get(name, {}))


def output_root():
    return Path(os.getenv(OUTPUT_ROOT_ENV) or section("output").get("root", "results"))
