"""The version the package reports is the version pyproject.toml declares.

``__version__`` comes from ``importlib.metadata``, which is written at install time. An editable
checkout keeps the old metadata after a bump in ``pyproject.toml``, and every run directory records
the resolved config a dataset was produced with, so a stale number ends up in the wrong place. The
fix for a failing working copy is ``pip install -e . --no-deps``.
"""

from __future__ import annotations

import importlib.metadata as metadata
import pathlib
import re
import sys

import pytest

import domainsift

_ROOT = pathlib.Path(__file__).resolve().parent.parent

if sys.version_info >= (3, 11):
    import tomllib
else:                                       # pragma: no cover - the 3.10 backport
    import tomli as tomllib  # type: ignore[no-redef]


def _declared_version() -> str:
    path = _ROOT / "pyproject.toml"
    if not path.exists():
        pytest.skip("not running from a source checkout")
    with open(path, "rb") as f:
        return tomllib.load(f)["project"]["version"]


def test_the_reported_version_is_the_declared_one():
    declared = _declared_version()
    assert domainsift.__version__ == declared, (
        f"domainsift.__version__ is {domainsift.__version__!r} but pyproject.toml declares {declared!r}; "
        f"reinstall with `pip install -e . --no-deps`."
    )
    assert metadata.version("domainsift") == declared


def test_the_version_is_a_release_number():
    assert re.fullmatch(r"\d+\.\d+\.\d+", _declared_version())
