"""
Per-run training reports.
"""
import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from ..core.exceptions import DataError
from ..core.logger import logger

CSV_COLUMNS = ["epoch", "task_loss", "distill_loss", "val_metric", "structure_divergence"]

PathLike = Union[str, Path]


@dataclass
class EpochRecord:
    epoch: int
    task_loss: float
    distill_loss: float
    val_metric: float
    structure_divergence: Optional[float] = None


@dataclass
class RunReport:
    """
    Loss series, selected model and final metrics of one training run.

    ``wall_clock`` is informational and excluded from reproducibility checks.
    """
    method: str
    task: str
    metric: str
    num_parameters: int
    seed: int = 0
    epochs: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_val_metric: float = float("-inf")
    test_metrics: Dict[str, float] = field(default_factory=dict)
    wall_clock: float = 0.0
    extra: Dict[str, Any] = field(default_factory=dict)

    def add_epoch(self, record: EpochRecord) -> None:
        self.epochs.append(record)

    def series(self, column: str) -> List[Optional[float]]:
        return [getattr(record, column) for record in self.epochs]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def write_csv(self, path: PathLike) -> Path:
        """One line per epoch; floats written with ``repr`` so they read back exactly."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(CSV_COLUMNS)
            for record in self.epochs:
                writer.writerow([
                    record.epoch,
                    repr(record.task_loss),
                    repr(record.distill_loss),
                    repr(record.val_metric),
                    "" if record.structure_divergence is None else repr(record.structure_divergence),
                ])
        return path

    def write_summary(self, path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        summary = {k: v for k, v in self.to_dict().items() if k != "epochs"}
        summary["epochs"] = len(self.epochs)
        with open(path, "w") as f:
            json.dump(summary, f, indent=2, sort_keys=True)
        return path

    def write(self, out_dir: PathLike, stem: str = "report") -> Dict[str, Path]:
        out_dir = Path(out_dir)
        paths = {
            "report_csv": self.write_csv(out_dir / f"{stem}.csv"),
            "report_json": self.write_summary(out_dir / f"{stem}.json"),
        }
        logger.debug(f"Wrote report to {paths['report_csv']}")
        return paths


def read_report_csv(path: PathLike) -> List[EpochRecord]:
    """
    Raises:
        DataError: If the file does not have the report columns
    """
    path = Path(path)
    try:
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))
    except OSError as e:
        raise DataError(f"{path}: {e}")
    records = []
    for lineno, row in enumerate(rows, start=2):
        try:
            divergence = row["structure_divergence"]
            records.append(EpochRecord(
                epoch=int(row["epoch"]),
                task_loss=float(row["task_loss"]),
                distill_loss=float(row["distill_loss"]),
                val_metric=float(row["val_metric"]),
                structure_divergence=float(divergence) if divergence else None,
            ))
        except (KeyError, TypeError, ValueError):
            raise DataError(f"{path}:{lineno}: not a report row")
    return records
