"""
Point clouds stored as text files.

Layout: ``<root>/<split>/<class>/<cloud>.txt`` with one ``x y z`` point per
line. A root without ``train``/``val``/``test`` directories is read as
``<root>/<class>/<cloud>.txt``, every cloud in the train split. An optional
``classes.txt`` beside them lists the class names in label order; without it
the class directories are numbered alphabetically.
"""
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from ..core.exceptions import DatasetParseError, DatasetValidationError
from ..core.logger import logger
from .datasets import SPLITS, PointCloudDataset

PathLike = Union[str, Path]
CLASSES_FILE = "classes.txt"


def read_cloud(path: Path) -> np.ndarray:
    """
    Raises:
        DatasetParseError: For a line without exactly three numbers
        DatasetValidationError: For a non-finite coordinate
    """
    points: List[Tuple[float, float, float]] = []
    try:
        lines = path.read_text().splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise DatasetParseError(f"{path}: {e}")
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        fields = text.replace(",", " ").split()
        if len(fields) != 3:
            raise DatasetParseError(f"{path}:{lineno}: expected 3 fields, got {len(fields)}")
        try:
            point = tuple(float(v) for v in fields)
        except ValueError:
            raise DatasetParseError(f"{path}:{lineno}: non-numeric field in {text!r}")
        if not np.all(np.isfinite(point)):
            raise DatasetValidationError(f"{path}:{lineno}: non-finite coordinate")
        points.append(point)  # type: ignore[arg-type]
    if not points:
        raise DatasetParseError(f"{path}: no points")
    return np.asarray(points, dtype=np.float32)


def _read_class_order(root: Path) -> List[str]:
    path = root / CLASSES_FILE
    if not path.is_file():
        return []
    try:
        names = [line.strip() for line in path.read_text().splitlines() if line.strip()]
    except (OSError, UnicodeDecodeError) as e:
        raise DatasetParseError(f"{path}: {e}")
    if len(set(names)) != len(names):
        raise DatasetValidationError(f"{path}: duplicate class names")
    return names


def load_point_clouds(root: PathLike) -> PointCloudDataset:
    """
    Raises:
        DatasetParseError: If the directory or a file is malformed
        DatasetValidationError: If clouds differ in size, or a class directory
            is missing from ``classes.txt``
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetParseError(f"{root}: not a directory")
    split_dirs = [(s, root / s) for s in SPLITS if (root / s).is_dir()]
    if not split_dirs:
        split_dirs = [("train", root)]

    entries = []
    for split, directory in split_dirs:
        for class_dir in sorted(p for p in directory.iterdir() if p.is_dir()):
            for path in sorted(class_dir.glob("*.txt")):
                entries.append((split, class_dir.name, path))
    if not entries:
        raise DatasetParseError(f"{root}: no point cloud files found")

    found = {name for _, name, _ in entries}
    class_names = _read_class_order(root) or sorted(found)
    missing = found.difference(class_names)
    if missing:
        raise DatasetValidationError(f"{root / CLASSES_FILE}: no entry for class(es) {sorted(missing)}")
    index = {name: i for i, name in enumerate(class_names)}
    clouds, labels, splits = [], [], []
    size = None
    for split, name, path in entries:
        cloud = read_cloud(path)
        if size is None:
            size = len(cloud)
        elif len(cloud) != size:
            raise DatasetValidationError(f"{path}: {len(cloud)} points, expected {size}")
        clouds.append(cloud)
        labels.append(index[name])
        splits.append(split)

    dataset = PointCloudDataset(np.stack(clouds), np.asarray(labels, dtype=np.int64),
                                np.asarray(splits), class_names)
    logger.info(f"Loaded {len(clouds)} clouds of {size} points from {root} {dataset.split_sizes()}")
    return dataset.validate(require_all_splits=False)


def save_point_clouds(dataset: PointCloudDataset, root: PathLike) -> Path:
    """Write every cloud under ``<root>/<split>/<class>/`` and the class order to ``classes.txt``."""
    root = Path(root)
    for i, (cloud, label, split) in enumerate(zip(dataset.points, dataset.labels, dataset.splits)):
        directory = root / str(split) / dataset.class_names[int(label)]
        directory.mkdir(parents=True, exist_ok=True)
        np.savetxt(directory / f"{i:05d}.txt", cloud.astype(np.float64), fmt="%.9g")
    root.mkdir(parents=True, exist_ok=True)
    (root / CLASSES_FILE).write_text("".join(f"{name}\n" for name in dataset.class_names))
    logger.debug(f"Wrote {len(dataset.labels)} clouds under {root}")
    return root
