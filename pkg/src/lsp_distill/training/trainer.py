"""
Supervised training and distillation loops.
"""
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.exceptions import ConfigError, ContractError, NumericError
from ..core.logger import logger
from ..data import GraphDataset, PointCloudDataset
from ..distill import (
    Distiller,
    DistillerConfig,
    KernelChoice,
    LspPairing,
    NoDistiller,
    build_distiller,
    structure_divergence,
)
from ..models import BaseGraphModel, ModelSpec, build_model
from ..tensor import Tape, no_grad
from .losses import task_loss
from .metrics import compute_metrics, primary_metric
from .optim import OptimConfig, build_optimizer
from .report import EpochRecord, RunReport

DatasetLike = Union[GraphDataset, PointCloudDataset]
SnapshotFn = Callable[[int, BaseGraphModel], None]


@dataclass
class Batch:
    inputs: Tuple
    targets: np.ndarray


@dataclass
class TrainSettings:
    seed: int = 0
    batch_size: int = 8
    snapshot_epochs: Sequence[int] = field(default_factory=tuple)
    monitor_kernel: KernelChoice = field(default_factory=KernelChoice)


def iterate_batches(dataset: DatasetLike, split: str, batch_size: int,
                    rng: Optional[np.random.Generator] = None) -> Iterator[Batch]:
    """
    One graph per batch for graph datasets, ``batch_size`` clouds per batch
    for point clouds. Order is shuffled only when ``rng`` is given.
    """
    if dataset.kind == "graph":
        samples = dataset.split(split)
        order = np.arange(len(samples)) if rng is None else rng.permutation(len(samples))
        for i in order:
            sample = samples[int(i)]
            yield Batch((sample.features, sample.graph), sample.labels)
    else:
        for points, labels in dataset.batches(split, batch_size, rng):
            yield Batch((points,), labels)


def check_compatible(spec: ModelSpec, dataset: DatasetLike) -> None:
    """
    Raises:
        ConfigError: If the model's input or output width does not fit the dataset
    """
    if spec.in_dim != dataset.feature_dim:
        raise ConfigError(
            f"model {spec.name or spec.kind} expects {spec.in_dim} input features, dataset has {dataset.feature_dim}"
        )
    if spec.num_classes != dataset.num_classes:
        raise ConfigError(
            f"model {spec.name or spec.kind} predicts {spec.num_classes} classes, dataset has {dataset.num_classes}"
        )
    expected = "gat" if dataset.kind == "graph" else "dgcnn"
    if spec.kind != expected:
        raise ConfigError(f"a {dataset.kind} dataset needs a {expected} model, got {spec.kind}")


def evaluate(model: BaseGraphModel, dataset: DatasetLike, split: str = "test",
             batch_size: int = 8) -> Dict[str, float]:
    """Metrics and mean task loss of ``model`` on one split, without gradients."""
    model.eval()
    logits, targets, losses = [], [], []
    with no_grad():
        for batch in iterate_batches(dataset, split, batch_size):
            out = model(*batch.inputs)
            losses.append(task_loss(out.logits, batch.targets, dataset.task).item())
            logits.append(out.logits.numpy())
            targets.append(batch.targets)
    if not logits:
        raise ContractError(f"split {split!r} is empty")
    metrics = compute_metrics(np.concatenate(logits), np.concatenate(targets), dataset.task,
                              dataset.num_classes)
    metrics["loss"] = float(np.mean(losses))
    return metrics


def train_model(student: BaseGraphModel, dataset: DatasetLike, optim: OptimConfig,
                distiller: Optional[Distiller] = None, teacher: Optional[BaseGraphModel] = None,
                settings: Optional[TrainSettings] = None,
                snapshot_fn: Optional[SnapshotFn] = None) -> RunReport:
    """
    Train ``student`` on the train split, optionally guided by a frozen teacher.

    The model with the best validation metric (earliest on ties) is restored
    at the end and scored on the test split.

    Raises:
        ContractError: If the distiller needs a teacher and none is given
        UnsupportedTaskError: If the distiller cannot handle the dataset's task
        NumericError: If a loss or gradient becomes non-finite
    """
    settings = settings or TrainSettings()
    distiller = distiller or NoDistiller(DistillerConfig(method="none"))
    task = dataset.task
    if distiller.needs_teacher and teacher is None:
        raise ContractError(f"distiller {distiller.method!r} needs a teacher model")
    if teacher is not None:
        teacher.freeze()
    distiller.prepare(teacher, student, task, np.random.default_rng([settings.seed, 3]))

    params = dict(student.parameters())
    params.update(distiller.parameters())
    optimizer = build_optimizer(params, optim)
    shuffle_rng = np.random.default_rng([settings.seed, 2])
    monitor = next(iterate_batches(dataset, "train", settings.batch_size), None)
    pairing = getattr(distiller, "pairing", None) or LspPairing()
    kernel = distiller.config.kernel if distiller.method == "lsp" else settings.monitor_kernel

    metric = primary_metric(task)
    sizes = dataset.split_sizes()
    val_split = "val" if sizes["val"] else "train"
    test_split = "test" if sizes["test"] else val_split
    if val_split != "val":
        logger.warning("No validation split; selecting the model on the train split")
    report = RunReport(method=distiller.method, task=task, metric=metric,
                       num_parameters=student.num_parameters, seed=settings.seed)
    best_state = student.state_dict()
    started = time.perf_counter()
    logger.info(
        f"Training {student.spec.name or student.kind} ({student.num_parameters} parameters) "
        f"with {distiller.method} for {optim.epochs} epochs ({optim.kind}, lr {optim.lr})"
    )

    for epoch in range(1, optim.epochs + 1):
        student.train()
        task_total, distill_total, steps = 0.0, 0.0, 0
        for batch in iterate_batches(dataset, "train", settings.batch_size, shuffle_rng):
            with Tape() as tape:
                student_out = student(*batch.inputs)
                teacher_out = None
                if distiller.needs_teacher:
                    with no_grad():
                        teacher_out = teacher(*batch.inputs)
                terms = distiller.losses(task_loss(student_out.logits, batch.targets, task),
                                         student_out, teacher_out)
                total = terms.total.item()
                if not np.isfinite(total):
                    raise NumericError(f"non-finite loss {total} at epoch {epoch}")
                optimizer.zero_grad()
                tape.backward(terms.total)
                optimizer.step()
            task_total += terms.task.item()
            distill_total += terms.distill.item()
            steps += 1

        val = evaluate(student, dataset, val_split, settings.batch_size)[metric]
        divergence = None
        if teacher is not None and monitor is not None:
            with no_grad():
                student.eval()
                s_out, t_out = student(*monitor.inputs), teacher(*monitor.inputs)
            divergence = structure_divergence(s_out.features, s_out.graphs, t_out.features,
                                              t_out.graphs, kernel, pairing)
        record = EpochRecord(epoch, task_total / max(steps, 1), distill_total / max(steps, 1),
                             val, divergence)
        report.add_epoch(record)
        logger.info(
            f"epoch {epoch:4d}  task {record.task_loss:.5f}  distill {record.distill_loss:.5f}  "
            f"val {metric} {val:.4f}" + ("" if divergence is None else f"  divergence {divergence:.5f}")
        )
        if val > report.best_val_metric:
            report.best_val_metric, report.best_epoch = val, epoch
            best_state = student.state_dict()
        if snapshot_fn is not None and epoch in settings.snapshot_epochs:
            snapshot_fn(epoch, student)

    student.load_state_dict(best_state)
    report.test_metrics = evaluate(student, dataset, test_split, settings.batch_size)
    report.wall_clock = time.perf_counter() - started
    logger.info(f"Best epoch {report.best_epoch}; test {report.test_metrics}")
    return report


def run_distillation(teacher: BaseGraphModel, student_spec: ModelSpec, dataset: DatasetLike,
                     distiller_config: DistillerConfig, optim: OptimConfig,
                     settings: Optional[TrainSettings] = None,
                     snapshot_fn: Optional[SnapshotFn] = None) -> Tuple[BaseGraphModel, RunReport]:
    """
    Build a student from ``student_spec`` and train it against ``teacher``.

    Raises:
        ConfigError: If either model does not fit the dataset
    """
    settings = settings or TrainSettings()
    check_compatible(teacher.spec, dataset)
    check_compatible(student_spec, dataset)
    student = build_model(student_spec, seed=settings.seed)
    distiller = build_distiller(distiller_config)
    report = train_model(student, dataset, optim, distiller,
                         teacher if distiller.needs_teacher else None, settings, snapshot_fn)
    report.extra["teacher_parameters"] = teacher.num_parameters
    if distiller_config.method == "lsp":
        report.extra["kernel"] = distiller_config.kernel.name
        report.extra["lambda"] = distiller_config.lam
    return student, report
