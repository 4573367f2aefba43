"""Dataset I/O — the YOLO-style directory layout this package reads and writes.

    <root>/images/<stem>.png|.jpg     the rasters (PNG and JPEG only)
    <root>/labels/<stem>.txt          one box per line
    <root>/classes.txt                optional: one category name per line

A label line is ``class cx cy w h`` (a one-hot box) or ``class conf cx cy w h`` (a soft box whose
annotated class carries confidence ``conf``). Coordinates are normalised to the image and are never
clamped on input: anything out of range is an error naming the file and line.
"""

from __future__ import annotations

import logging
import math
import shutil
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from ..errors import DataError, LabelFormatError
from .labels import BoxLabel, DatasetSplit, LabeledImage

__all__ = ["load_dataset", "load_domains", "save_dataset", "parse_label_line", "format_label_line",
           "read_image", "write_image", "IMAGE_SUFFIXES"]

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")

_RawBox = tuple[int, "float | None", float, float, float, float]


# --- label lines ----------------------------------------------------------

def _number(value: float) -> str:
    """Decimal text with at most 8 places and no trailing zeros (``0.5``, ``1``, ``0.12345678``)."""
    out = f"{value:.8f}".rstrip("0").rstrip(".")
    return "0" if out in ("", "-0") else out


def format_label_line(box: BoxLabel) -> str:
    """One label line for ``box``: 5 fields when one-hot, else 6 with the annotated class's confidence."""
    others = [c for i, c in enumerate(box.class_conf) if i != box.category]
    if any(c != 0.0 for c in others):
        raise ValueError(f"box {box} has confidence on more than one category; the label format "
                         f"stores one class per box")
    geometry = " ".join(_number(v) for v in (box.cx, box.cy, box.w, box.h))
    if box.is_one_hot:
        return f"{box.category} {geometry}"
    return f"{box.category} {_number(box.confidence)} {geometry}"


def _parse_fields(line: str) -> _RawBox:
    tokens = line.split()
    if len(tokens) not in (5, 6):
        raise LabelFormatError(f"expected 5 or 6 fields, got {len(tokens)}")
    try:
        values = [float(t) for t in tokens]
    except ValueError:
        raise LabelFormatError(f"non-numeric field in {line.strip()!r}") from None
    cls_value = values[0]
    if not math.isfinite(cls_value) or cls_value != int(cls_value) or cls_value < 0:
        raise LabelFormatError(f"class index must be a non-negative integer, got {tokens[0]!r}")
    conf = None
    if len(values) == 6:
        conf = values[1]
        if not (math.isfinite(conf) and 0.0 <= conf <= 1.0):
            raise LabelFormatError(f"conf out of range: {tokens[1]}")
    cx, cy, w, h = values[-4:]
    for name, value in (("cx", cx), ("cy", cy)):
        if not (math.isfinite(value) and 0.0 <= value <= 1.0):
            raise LabelFormatError(f"{name} out of range: {value:g}")
    for name, value in (("w", w), ("h", h)):
        if not (math.isfinite(value) and 0.0 < value <= 1.0):
            raise LabelFormatError(f"{name} out of range: {value:g}")
    return int(cls_value), conf, cx, cy, w, h


def _build_box(raw: _RawBox, num_categories: int) -> BoxLabel:
    cls, conf, cx, cy, w, h = raw
    if cls >= num_categories:
        raise LabelFormatError(f"class index {cls} out of range for {num_categories} categories")
    return BoxLabel.one_hot(cls, num_categories, cx, cy, w, h, conf=1.0 if conf is None else conf)


def parse_label_line(line: str, num_categories: int) -> BoxLabel:
    """Parse one label line into a :class:`BoxLabel` over ``num_categories`` classes."""
    return _build_box(_parse_fields(line), num_categories)


# --- rasters --------------------------------------------------------------

def read_image(path: str | Path) -> np.ndarray:
    """Decode a PNG or JPEG into an ``H x W x 3`` uint8 array."""
    path = Path(path)
    if path.suffix.lower() not in IMAGE_SUFFIXES:
        raise DataError(f"{path}: only PNG and JPEG images are supported")
    with Image.open(path) as im:
        return np.array(im.convert("RGB"), dtype=np.uint8)


def write_image(pixels: np.ndarray, path: str | Path) -> Path:
    """Encode ``pixels`` losslessly as PNG (the suffix of ``path`` is forced to ``.png``)."""
    path = Path(path).with_suffix(".png")
    Image.fromarray(np.ascontiguousarray(pixels)).save(path, format="PNG")
    return path


# --- directories ----------------------------------------------------------

def _image_files(root: Path) -> list[Path]:
    image_dir = root / "images"
    if not image_dir.is_dir() or not (root / "labels").is_dir():
        raise DataError(f"{root}: expected images/ and labels/ subdirectories")
    files = sorted(p for p in image_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    stems: dict[str, Path] = {}
    for p in files:
        if p.stem in stems:
            raise DataError(f"{root}: two images share the stem {p.stem!r} ({stems[p.stem].name}, {p.name})")
        stems[p.stem] = p
    return files


def _read_label_file(path: Path) -> list[tuple[int, _RawBox]]:
    if not path.is_file():
        raise DataError(f"missing label file for image {path.stem!r}: {path}")
    boxes = []
    for number, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            boxes.append((number, _parse_fields(line)))
        except LabelFormatError as exc:
            raise LabelFormatError(exc.reason, path, number) from None
    return boxes


def _read_categories(root: Path) -> list[str] | None:
    path = root / "classes.txt"
    if not path.is_file():
        return None
    return [line.strip() for line in path.read_text().splitlines() if line.strip()]


def load_dataset(root_path: str | Path, role: str, *, categories: Sequence[str] | None = None,
                 workers: int = 1) -> DatasetSplit:
    """Read a dataset directory into a :class:`DatasetSplit` tagged ``role``.

    The category count comes from ``categories`` if given, else ``classes.txt``, else the largest
    class index seen. Files are only ever read. ``workers > 1`` decodes images on a thread pool;
    the result is in file-name order either way."""
    root = Path(root_path)
    files = _image_files(root)
    raw = [_read_label_file(root / "labels" / f"{p.stem}.txt") for p in files]

    names = list(categories) if categories is not None else _read_categories(root)
    if names is None:
        top = max((box[0] for boxes in raw for _, box in boxes), default=0)
        names = [f"class_{i}" for i in range(top + 1)]

    def build(index: int) -> LabeledImage:
        path = files[index]
        label_path = root / "labels" / f"{path.stem}.txt"
        labels = []
        for number, box in raw[index]:
            try:
                labels.append(_build_box(box, len(names)))
            except LabelFormatError as exc:
                raise LabelFormatError(exc.reason, label_path, number) from None
        pixels = read_image(path)
        try:
            return LabeledImage(pixels, tuple(labels), role, path.stem)
        except ValueError as exc:
            raise LabelFormatError(str(exc), label_path) from None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            images = list(pool.map(build, range(len(files))))
    else:
        images = [build(i) for i in range(len(files))]
    log.debug("loaded %d %s images from %s", len(images), role, root)
    return DatasetSplit(tuple(images), role, tuple(names))


def load_domains(source_root: str | Path, target_root: str | Path, *,
                 workers: int = 1) -> tuple[DatasetSplit, DatasetSplit]:
    """Load a source and a target split over one shared category list.

    Explicit ``classes.txt`` files must agree; otherwise the longer inferred list is used for both."""
    source_root, target_root = Path(source_root), Path(target_root)
    names_s, names_t = _read_categories(source_root), _read_categories(target_root)
    if names_s is not None and names_t is not None and names_s != names_t:
        raise DataError(f"{source_root} and {target_root} declare different categories")
    names = names_s or names_t
    if names is None:
        first = load_dataset(source_root, "source", workers=workers)
        second = load_dataset(target_root, "target", workers=workers)
        if second.num_categories > first.num_categories:
            names = list(second.category_names)
            first = load_dataset(source_root, "source", categories=names, workers=workers)
        else:
            second = load_dataset(target_root, "target", categories=first.category_names, workers=workers)
        return first, second
    return (load_dataset(source_root, "source", categories=names, workers=workers),
            load_dataset(target_root, "target", categories=names, workers=workers))


def save_dataset(split: DatasetSplit, root_path: str | Path, *, overwrite: bool = False) -> int:
    """Write ``split`` under ``root_path`` (PNG images, label files, ``classes.txt``).

    A root that already holds images or labels raises :class:`DataError`; with ``overwrite`` the old
    ``images/`` and ``labels/`` are removed first, so the directory holds exactly ``split``.
    Returns the number of images written. An unwritable location raises ``OSError``."""
    root = Path(root_path)
    held = [d for d in (root / "images", root / "labels") if d.is_dir() and any(d.iterdir())]
    if held and not overwrite:
        raise DataError(f"{root} already holds a dataset; remove it or pass overwrite")
    for d in held:
        log.debug("removing %s", d)
        shutil.rmtree(d)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "labels").mkdir(parents=True, exist_ok=True)
    (root / "classes.txt").write_text("".join(f"{name}\n" for name in split.category_names), newline="\n")
    for img in split.images:
        write_image(img.pixels, root / "images" / f"{img.id}.png")
        text = "".join(format_label_line(box) + "\n" for box in img.labels)
        (root / "labels" / f"{img.id}.txt").write_text(text, newline="\n")
    return len(split.images)
