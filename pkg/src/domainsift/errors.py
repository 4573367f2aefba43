"""Exceptions — one small hierarchy, and the exit code each maps to at the command line.

Library code raises these (or a plain ``ValueError`` for a bad argument to a pure function); only
:mod:`domainsift.cli` turns them into exit codes.
"""

from __future__ import annotations

from pathlib import Path


class DomainsiftError(Exception):
    """Base class for every error this package raises on purpose."""


class ConfigError(DomainsiftError, ValueError):
    """A configuration value is missing, unknown or outside its allowed range."""


class DataError(DomainsiftError, ValueError):
    """Input data is missing, malformed or inconsistent."""


class LabelFormatError(DataError):
    """A label line could not be parsed. The message is prefixed with ``path:line:``."""

    def __init__(self, message: str, path: str | Path | None = None, line: int | None = None) -> None:
        self.path = Path(path) if path is not None else None
        self.line = line
        where = ""
        if self.path is not None:
            where = f"{self.path}:{line}: " if line is not None else f"{self.path}: "
        super().__init__(where + message)
        self.reason = message


class ProviderError(DataError):
    """An embedding provider cannot serve what was asked of it (missing ids, bad records)."""

    def __init__(self, message: str, ids: list[str] | None = None) -> None:
        self.ids = list(ids or [])
        super().__init__(message)


class ProviderTimeout(DomainsiftError, TimeoutError):
    """The external trainer did not deliver an epoch's embedding file in time."""

    def __init__(self, epoch: int, path: str | Path, timeout: float) -> None:
        self.epoch = epoch
        self.path = Path(path)
        super().__init__(f"epoch {epoch}: no embedding file at {self.path} after {timeout:g}s")


# Checked in order; the first matching class wins.
EXIT_CODES: tuple[tuple[type[BaseException], int], ...] = (
    (ConfigError, 2),
    (ProviderTimeout, 4),
    (DataError, 3),
    (DomainsiftError, 1),
)


def exit_code(exc: BaseException) -> int:
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return 1
