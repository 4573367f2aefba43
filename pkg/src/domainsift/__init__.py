"""domainsift — cross-domain augmentation and target-aware filtering for few-shot detection data.

A large labelled **source** domain and a handful of labelled **target** images go in; each epoch,
mixed candidates are generated from both, embedded, and only those closest to the target set are
emitted for training:

    import domainsift as ds

    source, target = ds.dataset.load_domains("data/cityscape", "data/fog")
    config = ds.pipeline.load_config("run.yaml", seed=7)
    summary = ds.pipeline.run_loop(source, target, config, "runs/fog")
    print(ds.pipeline.report("runs/fog").text)

``augment`` builds candidates, ``embedding`` turns images into vectors, ``selection`` scores and
filters them; ``pipeline`` strings the three together per epoch.
"""

from __future__ import annotations

from importlib.metadata import PackageNotFoundError
from importlib.metadata import version as _pkg_version

from . import augment, dataset, embedding, pipeline, selection, synth
from .errors import ConfigError, DataError, DomainsiftError, LabelFormatError, ProviderError, ProviderTimeout

try:  # single source of truth is pyproject.toml; read it from the installed metadata
    __version__ = _pkg_version("domainsift")
except PackageNotFoundError:  # a source tree that hasn't been installed
    __version__ = "0.0.0+unknown"

__all__ = [
    "dataset", "augment", "embedding", "selection", "pipeline", "synth",
    "DomainsiftError", "ConfigError", "DataError", "LabelFormatError", "ProviderError", "ProviderTimeout",
    "__version__",
]
