"""Access to the versioned expectations file.

Statistical gates compare against these frozen numbers plus their declared
slack; changing a band is a calibration event that bumps the file's version,
never a quiet edit to make a failing run pass.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

__all__ = ["load_expectations"]


@lru_cache(maxsize=1)
def load_expectations() -> dict:
    path = resources.files("torusrw").joinpath("expectations.json")
    with path.open(encoding="utf-8") as fh:
        return json.load(fh)
