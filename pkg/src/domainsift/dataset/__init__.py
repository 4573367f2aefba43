"""The **dataset** area — labelled detection images and their on-disk format.

    from domainsift import dataset
    source, target = dataset.load_domains("data/source", "data/target")
    square = dataset.resize_letterbox(target.images[0], 640)
"""

from __future__ import annotations

from .io import (
    IMAGE_SUFFIXES,
    format_label_line,
    load_dataset,
    load_domains,
    parse_label_line,
    read_image,
    save_dataset,
    write_image,
)
from .labels import DOMAINS, BoxLabel, DatasetSplit, Domain, LabeledImage
from .letterbox import FILL_VALUE, resize_letterbox, resize_pixels

__all__ = [
    "BoxLabel", "LabeledImage", "DatasetSplit", "Domain", "DOMAINS",
    "load_dataset", "load_domains", "save_dataset", "parse_label_line", "format_label_line",
    "read_image", "write_image", "IMAGE_SUFFIXES",
    "resize_letterbox", "resize_pixels", "FILL_VALUE",
]
