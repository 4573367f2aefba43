"""Embeddings — one feature vector per image, from a built-in extractor or an external trainer.

Two providers implement :class:`EmbeddingProvider`:

- :class:`BuiltinProvider` runs :func:`embed_builtin`, a fixed 8x8 colour grid (192 numbers in
  ``[0, 1]``). It never changes between epochs, which makes every run self-contained.
- :class:`FileProvider` reads one embedding file per epoch, written by whatever trains the
  detector, and waits for it to appear.

The embedding file is plain text with LF endings::

    dim=4
    e001_c00000 0.1 0.25 0 1
    target_003 0.5 0.5 0.5 0.5
"""

from __future__ import annotations

import logging
import math
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Protocol, Sequence, runtime_checkable

import numpy as np

from .dataset.labels import LabeledImage
from .errors import ConfigError, ProviderError, ProviderTimeout

__all__ = ["EmbeddingVector", "EmbeddingProvider", "BuiltinProvider", "FileProvider", "embed_builtin",
           "load_embedding_file", "save_embedding_file", "make_provider", "GRID", "BUILTIN_DIM"]

log = logging.getLogger(__name__)

GRID = 8
BUILTIN_DIM = GRID * GRID * 3


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    """A finite 1-D float vector for the image ``source_id`` at ``epoch``."""

    values: np.ndarray
    source_id: str
    epoch: int = 0

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ValueError(f"embedding of {self.source_id!r} must be a non-empty 1-D vector")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"embedding of {self.source_id!r} has a non-finite value")
        if self.epoch < 0:
            raise ValueError(f"epoch must be non-negative, got {self.epoch}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return int(self.values.size)


@runtime_checkable
class EmbeddingProvider(Protocol):
    """Anything that turns images into vectors of a fixed dimension, deterministically per epoch."""

    dim: int
    refreshable: bool

    def embed(self, images: Sequence[LabeledImage], epoch: int) -> list[EmbeddingVector]: ...


# --- built-in extractor ---------------------------------------------------

def _grid_edges(n: int) -> np.ndarray:
    return (np.arange(GRID) * n) // GRID


def embed_builtin(img: LabeledImage, epoch: int = 0) -> EmbeddingVector:
    """Per-cell, per-channel means over an 8x8 grid, divided by 255.

    Cell ``k`` along an axis of length ``n`` covers ``[floor(k·n/8), floor((k+1)·n/8))``. An axis
    shorter than 8 pixels is first repeated 8 times so every cell is non-empty. Output order is
    row, column, channel."""
    pixels = img.pixels.astype(np.float64)
    if pixels.shape[0] < GRID:
        pixels = np.repeat(pixels, GRID, axis=0)
    if pixels.shape[1] < GRID:
        pixels = np.repeat(pixels, GRID, axis=1)
    height, width = pixels.shape[:2]
    rows, cols = _grid_edges(height), _grid_edges(width)
    sums = np.add.reduceat(np.add.reduceat(pixels, rows, axis=0), cols, axis=1)
    counts = np.outer(np.diff(np.append(rows, height)), np.diff(np.append(cols, width)))
    means = sums / counts[:, :, None]
    return EmbeddingVector((means / 255.0).reshape(-1), img.id, epoch)


class BuiltinProvider:
    """:func:`embed_builtin` behind the provider interface. Stateless, so safe to share."""

    refreshable = False

    def __init__(self, dim: int = BUILTIN_DIM) -> None:
        if dim != BUILTIN_DIM:
            raise ConfigError(f"the builtin provider produces {BUILTIN_DIM}-dim vectors, not {dim}")
        self.dim = dim

    def embed(self, images: Sequence[LabeledImage], epoch: int) -> list[EmbeddingVector]:
        return [embed_builtin(img, epoch) for img in images]

    def __repr__(self) -> str:
        return "BuiltinProvider()"


# --- embedding files ------------------------------------------------------

def _fail(path: Path, line: int, message: str, ids: list[str] | None = None) -> ProviderError:
    return ProviderError(f"{path}:{line}: {message}", ids)


def load_embedding_file(path: str | Path, *, dim: int | None = None,
                        epoch: int = 0) -> dict[str, EmbeddingVector]:
    """Read an embedding file into ``{source_id: EmbeddingVector}``.

    A bad header, a record of the wrong length, a repeated id or a value that is not a finite
    number raises :class:`~domainsift.errors.ProviderError` naming the file and line."""
    path = Path(path)
    lines = path.read_text().split("\n")
    header = lines[0].strip()
    if not header.startswith("dim="):
        raise _fail(path, 1, f"expected a 'dim=<d>' header, got {header[:40]!r}")
    try:
        declared = int(header[4:])
    except ValueError:
        raise _fail(path, 1, f"dimension is not an integer: {header[4:]!r}") from None
    if declared < 1:
        raise _fail(path, 1, f"dimension must be positive, got {declared}")
    if dim is not None and declared != dim:
        raise _fail(path, 1, f"file declares dim={declared}, expected {dim}")

    vectors: dict[str, EmbeddingVector] = {}
    for number, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        if not tokens:
            continue
        source_id, fields = tokens[0], tokens[1:]
        if len(fields) != declared:
            raise _fail(path, number, f"{source_id}: dimension mismatch, {len(fields)} values for "
                                      f"dim={declared}", [source_id])
        if source_id in vectors:
            raise _fail(path, number, f"duplicate id {source_id!r}", [source_id])
        try:
            values = [float(f) for f in fields]
        except ValueError:
            raise _fail(path, number, f"{source_id}: non-numeric value", [source_id]) from None
        if not all(math.isfinite(v) for v in values):
            raise _fail(path, number, f"{source_id}: non-finite value", [source_id])
        vectors[source_id] = EmbeddingVector(np.array(values), source_id, epoch)
    log.debug("read %d embeddings of dim %d from %s", len(vectors), declared, path)
    return vectors


def save_embedding_file(path: str | Path, vectors: Iterable[EmbeddingVector]) -> int:
    """Write ``vectors`` in the embedding-file format; returns how many were written.

    Values are written with Python's shortest round-trip float repr, so a reload is exact."""
    vectors = list(vectors)
    if not vectors:
        raise ValueError("nothing to write")
    dim = vectors[0].dim
    lines = [f"dim={dim}"]
    seen: set[str] = set()
    for vec in vectors:
        if vec.dim != dim:
            raise ValueError(f"{vec.source_id}: dimension {vec.dim}, expected {dim}")
        if vec.source_id in seen:
            raise ValueError(f"duplicate id {vec.source_id!r}")
        seen.add(vec.source_id)
        lines.append(" ".join([vec.source_id, *(repr(float(v)) for v in vec.values)]))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", newline="\n")
    return len(vectors)


class FileProvider:
    """Embeddings read from ``template.format(epoch=n)``, one file per epoch.

    :meth:`wait` polls for the epoch's file every ``poll_interval`` seconds and gives up with
    :class:`~domainsift.errors.ProviderTimeout` after ``timeout`` seconds. Loaded files are cached,
    so asking twice for the same epoch gives the same vectors."""

    refreshable = True

    def __init__(self, template: str, dim: int | None = None, *, timeout: float = 600.0,
                 poll_interval: float = 1.0, sleep: Callable[[float], None] = time.sleep,
                 clock: Callable[[], float] = time.monotonic) -> None:
        if "{epoch" not in template:
            raise ConfigError(f"file provider template {template!r} must contain '{{epoch}}'")
        if timeout < 0 or poll_interval <= 0:
            raise ConfigError("timeout must be >= 0 and poll_interval > 0")
        self.template = template
        self.dim = dim or 0
        self.timeout = timeout
        self.poll_interval = poll_interval
        self._sleep = sleep
        self._clock = clock
        self._cache: dict[int, dict[str, EmbeddingVector]] = {}
        self._lock = threading.Lock()

    def path_for(self, epoch: int) -> Path:
        return Path(self.template.format(epoch=epoch))

    def wait(self, epoch: int) -> Path:
        """Block until the epoch's file exists."""
        path = self.path_for(epoch)
        deadline = self._clock() + self.timeout
        while not path.exists():
            if self._clock() >= deadline:
                raise ProviderTimeout(epoch, path, self.timeout)
            log.debug("waiting for %s", path)
            self._sleep(self.poll_interval)
        return path

    def expect(self, epoch: int) -> None:
        """Mark the epoch's file as not yet written: drop cached vectors and refuse a file that is
        already there, since it cannot describe candidates that do not exist yet."""
        with self._lock:
            self._cache.pop(epoch, None)
        path = self.path_for(epoch)
        if path.exists():
            raise ProviderError(f"{path} already exists before epoch {epoch}'s candidates were written; "
                                f"remove stale embedding files before a new run")

    def vectors(self, epoch: int) -> dict[str, EmbeddingVector]:
        with self._lock:
            cached = self._cache.get(epoch)
        if cached is not None:
            return cached
        path = self.wait(epoch)
        loaded = load_embedding_file(path, dim=self.dim or None, epoch=epoch)
        with self._lock:
            if loaded and not self.dim:
                self.dim = next(iter(loaded.values())).dim
            return self._cache.setdefault(epoch, loaded)

    def embed(self, images: Sequence[LabeledImage], epoch: int) -> list[EmbeddingVector]:
        table = self.vectors(epoch)
        missing = [img.id for img in images if img.id not in table]
        if missing:
            shown = ", ".join(missing[:10]) + (" ..." if len(missing) > 10 else "")
            raise ProviderError(f"epoch {epoch}: {self.path_for(epoch)} has no embedding for "
                                f"{len(missing)} image(s): {shown}", missing)
        return [table[img.id] for img in images]

    def __repr__(self) -> str:
        return f"FileProvider({self.template!r})"


def make_provider(spec: str, dim: int | None = None, *, timeout: float = 600.0,
                  poll_interval: float = 1.0) -> BuiltinProvider | FileProvider:
    """``"builtin"`` or ``"file:<template>"`` (the template contains ``{epoch}``).

    ``dim`` pins the expected dimension; a file provider without one takes it from the first file."""
    if spec == "builtin":
        return BuiltinProvider(BUILTIN_DIM if dim is None else dim)
    if spec.startswith("file:") and len(spec) > len("file:"):
        return FileProvider(spec[len("file:"):], dim, timeout=timeout, poll_interval=poll_interval)
    raise ConfigError(f"unknown provider {spec!r}; use 'builtin' or 'file:<path with {{epoch}}>'")
