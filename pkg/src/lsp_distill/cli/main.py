"""
Main CLI interface for lsp_distill.
"""
import csv
import dataclasses
import functools
import json
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import click
import numpy as np

from .. import __version__
from ..core.config import DISTILLERS, KERNELS, LSP_MODES, OPTIMIZERS, PROTOCOLS, config
from ..core.exceptions import (
    ConfigError,
    ContractError,
    DataError,
    LspDistillError,
    ReplayMismatchError,
)
from ..core.logger import logger, setup_logger
from ..data import (
    convert_ppi,
    load_graph_dataset,
    load_model,
    load_point_clouds,
    save_checkpoint,
    save_graph_dataset,
    save_point_clouds,
    standardize_features,
    synth_multilabel_graphs,
    synth_shapes,
)
from ..distill import DistillerConfig
from ..models import BaseGraphModel, ModelSpec, build_model, count_parameters, preset
from ..tensor import no_grad
from ..training import (
    OptimConfig,
    RunReport,
    TrainSettings,
    check_compatible,
    evaluate,
    iterate_batches,
    run_distillation,
    train_model,
)
from ..training.trainer import DatasetLike
from .manifest import RunManifest, run_directory
from .progress import RunPool, StyleFormatter, format_duration

DEFAULT_PRESETS = {
    "graph": {"teacher": "gat-teacher", "student": "gat-student"},
    "pointcloud": {"teacher": "dgcnn-teacher-desk", "student": "dgcnn-student-desk"},
}

# CLI option name -> config key it overrides
CONFIG_KEYS = {
    "seed": "training.seed",
    "protocol": "training.protocol",
    "batch_size": "training.batch_size",
    "snapshot_epochs": "training.snapshot_epochs",
    "optimizer": "optim.kind",
    "lr": "optim.lr",
    "epochs": "optim.epochs",
    "weight_decay": "optim.weight_decay",
    "momentum": "optim.momentum",
    "standardize": "data.standardize",
    "teacher_model": "model.teacher",
    "student_model": "model.student",
    "distiller": "distill.method",
    "kernel": "distill.kernel",
    "lam": "distill.lambda",
    "lsp_mode": "distill.lsp_mode",
    "lsp_pairs": "distill.lsp_pairs",
    "poly_degree": "distill.poly_degree",
    "poly_offset": "distill.poly_offset",
    "rbf_sigma": "distill.rbf_sigma",
    "kd_alpha": "distill.kd_alpha",
    "kd_temperature": "distill.kd_temperature",
    "fitnet_weight": "distill.fitnet_weight",
    "fitnet_pair": "distill.fitnet_pair",
    "at_weight": "distill.at_weight",
    "at_pair": "distill.at_pair",
}


def _options(*decorators: Callable) -> Callable:
    def apply(func: Callable) -> Callable:
        for decorator in reversed(decorators):
            func = decorator(func)
        return func
    return apply


run_options = _options(
    click.option('--seed', type=int, default=None,
                 help='Seed for every random generator [config training.seed, default 0]'),
    click.option('--out-dir', type=click.Path(file_okay=False, path_type=Path), default=None,
                 help='Run directory [default <output.out_dir>/<command>]'),
)

data_options = _options(
    click.option('--data', 'data_path', required=True, type=click.Path(exists=True, path_type=Path),
                 help='Graph dataset JSON file or point cloud directory'),
    click.option('--standardize/--no-standardize', default=None,
                 help='Standardise graph node features with train statistics [config data.standardize, default off]'),
    click.option('--batch-size', type=int, default=None,
                 help='Point clouds per batch [config training.batch_size, default 8]'),
)

optim_options = _options(
    click.option('--protocol', type=click.Choice(PROTOCOLS), default=None,
                 help='Optimizer defaults: desk (short) or full (long schedules) [config training.protocol, default desk]'),
    click.option('--optimizer', type=click.Choice(OPTIMIZERS), default=None,
                 help='Override the protocol optimizer [config optim.kind]'),
    click.option('--lr', type=float, default=None, help='Learning rate [config optim.lr]'),
    click.option('--epochs', type=int, default=None, help='Training epochs [config optim.epochs]'),
    click.option('--weight-decay', type=float, default=None,
                 help='L2 weight decay [config optim.weight_decay, default 0]'),
    click.option('--momentum', type=float, default=None,
                 help='SGD momentum [config optim.momentum, default 0.9]'),
)

distill_options = _options(
    click.option('--teacher', 'teacher_path', required=True,
                 type=click.Path(exists=True, dir_okay=False, path_type=Path),
                 help='Trained teacher checkpoint'),
    click.option('--student', 'student_model', default=None,
                 help='Student preset name or JSON spec file [config model.student; by dataset kind]'),
    click.option('--lambda', 'lam', type=float, default=None,
                 help='LSP weight [config distill.lambda, default 100]'),
    click.option('--lsp-mode', type=click.Choice(LSP_MODES), default=None,
                 help='Graph used for local structures [config distill.lsp_mode, default union]'),
    click.option('--lsp-pairs', default=None,
                 help='Teacher:student layer pairs such as "-1:-1,1:2" [config distill.lsp_pairs, default last:last]'),
    click.option('--poly-degree', type=int, default=None,
                 help='Polynomial kernel degree [config distill.poly_degree, default 2]'),
    click.option('--poly-offset', type=float, default=None,
                 help='Polynomial kernel offset [config distill.poly_offset, default 0]'),
    click.option('--rbf-sigma', type=float, default=None,
                 help='RBF kernel width [config distill.rbf_sigma, default 1]'),
    click.option('--snapshot-epochs', default=None,
                 help='Comma separated epochs at which to save student checkpoints, e.g. "1,5,10"'),
)


def reports_errors(func: Callable) -> Callable:
    """Turn package errors into a styled message and the error's exit code."""
    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except LspDistillError as e:
            logger.debug("Command failed", exc_info=True)
            click.echo(StyleFormatter.error(f"Error: {e}"), err=True)
            sys.exit(e.exit_code)
    return wrapper


@click.group()
@click.option('--verbose', '-v', is_flag=True, help='Enable debug logging')
@click.option('--quiet', '-q', is_flag=True, help='Only report errors')
@click.option('--config', 'config_file', type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help='JSON config file using the same keys as `config show`')
@click.option('--log-file', type=click.Path(dir_okay=False, path_type=Path),
              help='Also write the log to this file [config logging.file_logging writes <out-dir>/run.log]')
@click.version_option(__version__, prog_name="lsp-distill")
@click.pass_context
def cli(ctx, verbose: bool, quiet: bool, config_file: Optional[Path], log_file: Optional[Path]):
    """
    lsp-distill - Local structure preserving distillation for graph networks

    Train GAT or DGCNN teachers, distill them into compact students with LSP or
    a baseline (KD, FitNet, attention transfer), and evaluate or inspect the
    results. Every run writes a manifest.json that `replay` can re-run.
    """
    ctx.ensure_object(dict)

    config.reset_to_defaults()
    config._load_config()
    if config_file:
        try:
            config.load_file(config_file)
        except ConfigError as e:
            click.echo(StyleFormatter.error(f"Error: {e}"), err=True)
            sys.exit(e.exit_code)

    if quiet:
        log_level = "ERROR"
    elif verbose:
        log_level = "DEBUG"
    else:
        log_level = config.get('logging.level', 'INFO')
    setup_logger(level=log_level, log_file=log_file, console=not quiet)

    ctx.obj['log_level'] = log_level
    ctx.obj['quiet'] = quiet
    ctx.obj['log_file'] = log_file


def _parse_epochs(text: Any) -> List[int]:
    if text is None or text == "":
        return []
    if isinstance(text, (list, tuple)):
        return [int(e) for e in text]
    try:
        epochs = [int(part) for part in str(text).split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"training.snapshot_epochs: expected comma separated integers, got {text!r}")
    if any(e < 1 for e in epochs):
        raise ConfigError("training.snapshot_epochs: epochs start at 1")
    return epochs


def _open_run(ctx, command: str, out_dir: Optional[Path], overrides: Dict[str, Any]) -> Tuple[RunManifest, Path]:
    """
    Apply CLI overrides to the config, validate it and prepare the run directory.

    Raises:
        ConfigError: Naming the invalid config field
    """
    if "snapshot_epochs" in overrides and overrides["snapshot_epochs"] is not None:
        overrides = dict(overrides, snapshot_epochs=_parse_epochs(overrides["snapshot_epochs"]))
    config.update({CONFIG_KEYS[name]: value for name, value in overrides.items() if name in CONFIG_KEYS})
    config.validate_config()

    out_dir = Path(out_dir) if out_dir else Path(config.get("output.out_dir", "runs")) / command.replace(" ", "-")
    out_dir.mkdir(parents=True, exist_ok=True)
    obj = ctx.find_root().obj or {}
    if obj.get("log_file") or config.get("logging.file_logging"):
        setup_logger(level=obj.get("log_level", "INFO"), log_file=obj.get("log_file") or out_dir / "run.log",
                     console=not obj.get("quiet", False))

    params = {k: v for k, v in ctx.params.items()}
    params["out_dir"] = out_dir
    manifest = RunManifest(command=command, params=params, config=config.to_dict(),
                           seed=config.get("training.seed"))
    logger.info(f"{command}: writing to {out_dir}")
    return manifest, out_dir


def _load_dataset(path: Path) -> DatasetLike:
    """Graph dataset for a JSON file, point clouds for a directory."""
    path = Path(path)
    if path.is_dir():
        return load_point_clouds(path)
    dataset = load_graph_dataset(path)
    if config.get("data.standardize"):
        dataset = standardize_features(dataset)
    return dataset


def _resolve_spec(choice: Optional[str], role: str, dataset: DatasetLike,
                  manifest: RunManifest) -> ModelSpec:
    """
    A preset name, or a path to a JSON model spec; ``None`` picks the preset
    for the dataset kind.

    Raises:
        ConfigError: For unknown presets, unreadable spec files or a spec
            that does not fit the dataset
    """
    if choice is None:
        choice = DEFAULT_PRESETS[dataset.kind][role]
    if choice.endswith(".json"):
        path = Path(choice)
        try:
            spec = ModelSpec.from_json(path.read_text())
        except (OSError, ValueError) as e:
            raise ConfigError(f"model.{role}: cannot read spec file {path}: {e}")
        manifest.add_input(f"{role}_spec", path)
    else:
        spec = preset(choice, dataset.feature_dim, dataset.num_classes)
    check_compatible(spec, dataset)
    manifest.models[role] = spec.to_dict()
    return spec


def _settings(distiller_config: Optional[DistillerConfig] = None) -> TrainSettings:
    settings = TrainSettings(
        seed=config.get("training.seed"),
        batch_size=config.get("training.batch_size"),
        snapshot_epochs=tuple(_parse_epochs(config.get("training.snapshot_epochs"))),
    )
    if distiller_config is not None:
        settings.monitor_kernel = distiller_config.kernel
    return settings


def _write_run(manifest: RunManifest, out_dir: Path, model: BaseGraphModel, report: RunReport,
               checkpoint_name: str) -> None:
    checkpoint = save_checkpoint(out_dir / checkpoint_name, model.spec, model.state_dict())
    manifest.add_output("checkpoint", checkpoint, out_dir)
    paths = report.write(out_dir)
    manifest.add_output("report_csv", paths["report_csv"], out_dir)
    manifest.add_output("report_json", paths["report_json"], out_dir, reproducible=False)
    manifest.write(out_dir)


def _echo_report(report: RunReport) -> None:
    metrics = ", ".join(f"{k} {v:.4f}" for k, v in report.test_metrics.items())
    click.echo(f"{StyleFormatter.success('Done')} in {format_duration(report.wall_clock)}: "
               f"best epoch {report.best_epoch}, {report.num_parameters} parameters, test {metrics}")


@cli.command('train-teacher')
@data_options
@click.option('--model', 'teacher_model', default=None,
              help='Teacher preset name or JSON spec file [config model.teacher; gat-teacher or dgcnn-teacher-desk]')
@optim_options
@run_options
@click.pass_context
@reports_errors
def train_teacher(ctx, data_path: Path, out_dir: Optional[Path], **overrides):
    """Train a model with the task loss only and save its checkpoint."""
    manifest, out_dir = _open_run(ctx, "train-teacher", out_dir, overrides)
    dataset = _load_dataset(data_path)
    manifest.add_input("data", data_path)
    spec = _resolve_spec(config.get("model.teacher"), "teacher", dataset, manifest)

    model = build_model(spec, seed=config.get("training.seed"))
    model.check_parameter_count()
    optim = OptimConfig.from_config(config, dataset.task)
    report = train_model(model, dataset, optim, settings=_settings())
    _write_run(manifest, out_dir, model, report, "teacher.lspd")
    _echo_report(report)


@cli.command()
@data_options
@distill_options
@click.option('--distiller', type=click.Choice(DISTILLERS), default=None,
              help='Distillation method [config distill.method, default lsp]')
@click.option('--kernel', type=click.Choice(KERNELS), default=None,
              help='LSP similarity kernel [config distill.kernel, default rbf]')
@click.option('--kd-alpha', type=float, default=None, help='KD weight α [config distill.kd_alpha, default 0.1]')
@click.option('--kd-temp', 'kd_temperature', type=float, default=None,
              help='KD temperature [config distill.kd_temperature, default 4]')
@click.option('--fitnet-weight', type=float, default=None,
              help='FitNet hint weight [config distill.fitnet_weight, default 1]')
@click.option('--fitnet-pair', default=None, help='FitNet hint layers "t:s" [default last:last]')
@click.option('--at-weight', type=float, default=None,
              help='Attention transfer weight [config distill.at_weight, default 100]')
@click.option('--at-pair', default=None, help='Attention transfer layers "t:s" [default last:last]')
@optim_options
@run_options
@click.pass_context
@reports_errors
def distill(ctx, data_path: Path, teacher_path: Path, out_dir: Optional[Path], **overrides):
    """Train a student guided by a frozen teacher checkpoint."""
    manifest, out_dir = _open_run(ctx, "distill", out_dir, overrides)
    dataset = _load_dataset(data_path)
    manifest.add_input("data", data_path)
    manifest.add_input("teacher", teacher_path)
    seed = config.get("training.seed")
    teacher = load_model(teacher_path, seed=seed)
    manifest.models["teacher"] = teacher.spec.to_dict()
    student_spec = _resolve_spec(config.get("model.student"), "student", dataset, manifest)

    distiller_config = DistillerConfig.from_config(config)
    optim = OptimConfig.from_config(config, dataset.task)
    snapshots: List[Tuple[int, Path]] = []

    def snapshot(epoch: int, model: BaseGraphModel) -> None:
        path = save_checkpoint(out_dir / "snapshots" / f"student-epoch{epoch:04d}.lspd",
                               model.spec, model.state_dict())
        snapshots.append((epoch, path))

    student, report = run_distillation(teacher, student_spec, dataset, distiller_config, optim,
                                       _settings(distiller_config), snapshot)
    for epoch, path in snapshots:
        manifest.add_output(f"snapshot_{epoch}", path, out_dir)
    _write_run(manifest, out_dir, student, report, "student.lspd")
    _echo_report(report)


def _time_inference(model: BaseGraphModel, inputs: Tuple, repeats: int) -> float:
    """Median wall-clock milliseconds of one forward pass."""
    model.eval()
    timings = []
    with no_grad():
        for _ in range(repeats):
            start = time.perf_counter()
            model(*inputs)
            timings.append(time.perf_counter() - start)
    return float(np.median(timings)) * 1000.0


@cli.command('eval')
@click.option('--checkpoint', 'checkpoint_path', required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path), help='Model checkpoint')
@data_options
@click.option('--split', type=click.Choice(["train", "val", "test"]), default="test", show_default=True,
              help='Split to score')
@click.option('--repeats', type=int, default=5, show_default=True,
              help='Timed single-sample forward passes')
@click.option('--json', 'output_json', is_flag=True, help='Print the metrics record as JSON')
@run_options
@click.pass_context
@reports_errors
def eval_cmd(ctx, checkpoint_path: Path, data_path: Path, split: str, repeats: int, output_json: bool,
             out_dir: Optional[Path], **overrides):
    """Score a checkpoint: metrics, parameter count and single-sample latency."""
    manifest, out_dir = _open_run(ctx, "eval", out_dir, overrides)
    dataset = _load_dataset(data_path)
    manifest.add_input("data", data_path)
    manifest.add_input("checkpoint", checkpoint_path)
    model = load_model(checkpoint_path, seed=config.get("training.seed"))
    check_compatible(model.spec, dataset)
    manifest.models["model"] = model.spec.to_dict()
    if repeats < 1:
        raise ConfigError("--repeats must be at least 1")

    metrics = evaluate(model, dataset, split, config.get("training.batch_size"))
    sample = next(iterate_batches(dataset, split, 1))
    record = {
        "checkpoint": str(checkpoint_path),
        "model": model.spec.name or model.kind,
        "split": split,
        "task": dataset.task,
        "metrics": metrics,
        "num_parameters": model.num_parameters,
        "analytic_parameters": count_parameters(model.spec),
        "inference_ms": _time_inference(model, sample.inputs, repeats),
    }
    path = out_dir / "metrics.json"
    with open(path, "w") as f:
        json.dump(record, f, indent=2, sort_keys=True)
    manifest.add_output("metrics", path, out_dir, reproducible=False)
    manifest.write(out_dir)

    if output_json:
        click.echo(json.dumps(record, indent=2, sort_keys=True))
        return
    click.echo(StyleFormatter.highlight(f"{record['model']} on {split} ({dataset.task})"))
    for name, value in metrics.items():
        click.echo(f"   {name}: {StyleFormatter.info(f'{value:.4f}')}")
    click.echo(f"   parameters: {record['num_parameters']}")
    click.echo(f"   single-sample inference: {record['inference_ms']:.2f} ms")


def _layer_features(model: BaseGraphModel, inputs: Tuple, layer: int) -> np.ndarray:
    model.eval()
    with no_grad():
        out = model(*inputs)
    count = len(out.features)
    if not -count <= layer < count:
        raise ContractError(f"layer {layer} out of range for {model.spec.name or model.kind} "
                            f"with {count} layers")
    return out.features[layer].numpy().astype(np.float64)


@cli.command('export-structures')
@click.option('--teacher', 'teacher_path', required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path), help='Teacher checkpoint')
@click.option('--student', 'student_paths', required=True, multiple=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help='Student checkpoint; repeat to export several (e.g. epoch snapshots)')
@data_options
@click.option('--split', type=click.Choice(["train", "val", "test"]), default="test", show_default=True,
              help='Split to take the sample from')
@click.option('--sample', type=int, default=0, show_default=True, help='Graph or cloud index within the split')
@click.option('--index', 'node_index', type=int, required=True, help='Reference node or point index')
@click.option('--layer', type=int, default=-1, show_default=True, help='Feature layer (negative counts from the end)')
@run_options
@click.pass_context
@reports_errors
def export_structures(ctx, teacher_path: Path, student_paths: Tuple[Path, ...], data_path: Path, split: str,
                      sample: int, node_index: int, layer: int, out_dir: Optional[Path], **overrides):
    """
    Write every node's feature-space distance to a reference node, teacher and
    student side by side, as CSV for external plotting.
    """
    manifest, out_dir = _open_run(ctx, "export-structures", out_dir, overrides)
    dataset = _load_dataset(data_path)
    manifest.add_input("data", data_path)
    manifest.add_input("teacher", teacher_path)
    seed = config.get("training.seed")
    models = [("teacher", load_model(teacher_path, seed=seed))]
    for path in student_paths:
        name = "student" if len(student_paths) == 1 else f"student_{Path(path).stem}"
        manifest.add_input(name, path)
        models.append((name, load_model(path, seed=seed)))
    for _, model in models:
        check_compatible(model.spec, dataset)

    batches = list(iterate_batches(dataset, split, 1))
    if not 0 <= sample < len(batches):
        raise ContractError(f"sample {sample} out of range: split {split!r} has {len(batches)} samples")
    inputs = batches[sample].inputs
    coords = inputs[0][0] if dataset.kind == "pointcloud" else None
    n = len(coords) if coords is not None else inputs[1].n
    if not 0 <= node_index < n:
        raise ContractError(f"index {node_index} out of range for a sample with {n} nodes")

    columns = ["node_id"] + (["x", "y", "z"] if coords is not None else [])
    distances = []
    for name, model in models:
        features = _layer_features(model, inputs, layer)
        distances.append(np.linalg.norm(features - features[node_index], axis=1))
        columns.append(f"{name}_distance")

    path = out_dir / "structures.csv"
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for i in range(n):
            row: List[Any] = [i]
            if coords is not None:
                row.extend(repr(float(c)) for c in coords[i])
            row.extend(repr(float(d[i])) for d in distances)
            writer.writerow(row)
    manifest.add_output("structures", path, out_dir)
    manifest.write(out_dir)
    click.echo(f"Wrote {n} rows to {path}")


@cli.command('ablate-kernels')
@data_options
@distill_options
@click.option('--workers', type=int, default=1, show_default=True,
              help='Kernel runs executed concurrently')
@optim_options
@run_options
@click.pass_context
@reports_errors
def ablate_kernels(ctx, data_path: Path, teacher_path: Path, workers: int, out_dir: Optional[Path],
                   **overrides):
    """Distill with LSP once per kernel (l2, poly, rbf, linear) and tabulate the results."""
    overrides["distiller"] = "lsp"
    manifest, out_dir = _open_run(ctx, "ablate-kernels", out_dir, overrides)
    dataset = _load_dataset(data_path)
    manifest.add_input("data", data_path)
    manifest.add_input("teacher", teacher_path)
    seed = config.get("training.seed")
    teacher_spec = load_model(teacher_path, seed=seed).spec
    manifest.models["teacher"] = teacher_spec.to_dict()
    student_spec = _resolve_spec(config.get("model.student"), "student", dataset, manifest)
    base = DistillerConfig.from_config(config)
    optim = OptimConfig.from_config(config, dataset.task)
    settings = _settings(base)

    def run_kernel(name: str) -> RunReport:
        distiller_config = dataclasses.replace(base, kernel=dataclasses.replace(base.kernel, name=name))
        teacher = load_model(teacher_path, seed=seed)
        student, report = run_distillation(teacher, student_spec, dataset, distiller_config, optim,
                                           dataclasses.replace(settings, monitor_kernel=distiller_config.kernel))
        run_dir = out_dir / name
        save_checkpoint(run_dir / "student.lspd", student.spec, student.state_dict())
        report.write(run_dir)
        return report

    show = not (ctx.find_root().obj or {}).get("quiet", False)
    results = RunPool(workers, show_progress=show).run(list(KERNELS), run_kernel, "Kernel ablation")
    for name, result in results.items():
        if isinstance(result, Exception):
            raise result

    reports: Dict[str, RunReport] = results
    test_keys = sorted(k for k in next(iter(reports.values())).test_metrics if k != "loss")
    path = out_dir / "kernels.csv"
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["kernel", "lambda", "metric", "best_epoch", "best_val_metric"]
                        + [f"test_{k}" for k in test_keys] + ["final_structure_divergence"])
        for name, report in reports.items():
            final = report.epochs[-1].structure_divergence if report.epochs else None
            writer.writerow([name, repr(base.lam), report.metric, report.best_epoch,
                             repr(report.best_val_metric)]
                            + [repr(report.test_metrics[k]) for k in test_keys]
                            + ["" if final is None else repr(final)])
            manifest.add_output(f"{name}_report_csv", out_dir / name / "report.csv", out_dir)
            manifest.add_output(f"{name}_checkpoint", out_dir / name / "student.lspd", out_dir)
    manifest.add_output("kernels", path, out_dir)
    manifest.write(out_dir)
    click.echo(f"Wrote {len(reports)} kernel rows to {path}")


@cli.command('convert-ppi')
@click.argument('directory', type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option('--prefix', default="ppi", show_default=True, help='File name prefix of the PPI files')
@run_options
@click.pass_context
@reports_errors
def convert_ppi_cmd(ctx, directory: Path, prefix: str, out_dir: Optional[Path], **overrides):
    """Convert the public PPI file layout into a graph dataset JSON file."""
    manifest, out_dir = _open_run(ctx, "convert-ppi", out_dir, overrides)
    manifest.add_input("directory", directory)
    dataset = convert_ppi(directory, prefix)
    path = save_graph_dataset(dataset, out_dir / f"{prefix}.json")
    manifest.add_output("dataset", path, out_dir)
    manifest.write(out_dir)
    click.echo(f"Wrote {len(dataset.graphs)} graphs to {path}")


@cli.group()
def synth():
    """Write the seeded synthetic corpora to disk."""
    pass


@synth.command('graphs')
@click.option('--graphs', 'n_graphs', type=int, default=20, show_default=True, help='Number of graphs')
@click.option('--nodes', 'nodes_per_graph', type=int, default=200, show_default=True, help='Nodes per graph')
@click.option('--features', 'feature_dim', type=int, default=16, show_default=True, help='Node feature width')
@click.option('--classes', 'num_classes', type=int, default=8, show_default=True, help='Label count')
@click.option('--communities', 'num_communities', type=int, default=4, show_default=True,
              help='Planted communities per graph')
@run_options
@click.pass_context
@reports_errors
def synth_graphs(ctx, n_graphs: int, nodes_per_graph: int, feature_dim: int, num_classes: int,
                 num_communities: int, out_dir: Optional[Path], **overrides):
    """Planted-partition multilabel node classification corpus (graphs.json)."""
    manifest, out_dir = _open_run(ctx, "synth graphs", out_dir, overrides)
    dataset = synth_multilabel_graphs(seed=config.get("training.seed"), n_graphs=n_graphs,
                                      nodes_per_graph=nodes_per_graph, feature_dim=feature_dim,
                                      num_classes=num_classes, num_communities=num_communities)
    path = save_graph_dataset(dataset, out_dir / "graphs.json")
    manifest.add_output("dataset", path, out_dir)
    manifest.write(out_dir)
    click.echo(f"Wrote {len(dataset.graphs)} graphs to {path}")


@synth.command('shapes')
@click.option('--per-class', type=int, default=100, show_default=True, help='Clouds per shape class')
@click.option('--points', 'points_per_cloud', type=int, default=64, show_default=True, help='Points per cloud')
@click.option('--jitter', type=float, default=0.01, show_default=True, help='Gaussian jitter on coordinates')
@run_options
@click.pass_context
@reports_errors
def synth_shapes_cmd(ctx, per_class: int, points_per_cloud: int, jitter: float,
                     out_dir: Optional[Path], **overrides):
    """Rotated sphere/cube/cylinder/plane point clouds (shapes/<split>/<class>/*.txt)."""
    manifest, out_dir = _open_run(ctx, "synth shapes", out_dir, overrides)
    dataset = synth_shapes(seed=config.get("training.seed"), per_class=per_class,
                           points_per_cloud=points_per_cloud, jitter=jitter)
    root = save_point_clouds(dataset, out_dir / "shapes")
    manifest.add_output("dataset", root, out_dir)
    manifest.write(out_dir)
    click.echo(f"Wrote {len(dataset.labels)} clouds to {root}")


def _find_command(name: str) -> click.Command:
    command: click.Command = cli
    for part in name.split():
        if not isinstance(command, click.Group) or part not in command.commands:
            raise DataError(f"manifest names unknown command {name!r}")
        command = command.commands[part]
    return command


@cli.command()
@click.argument('manifest_path', type=click.Path(exists=True, path_type=Path))
@click.option('--out-dir', type=click.Path(file_okay=False, path_type=Path), default=None,
              help='Directory for the replayed run [default <run>/replay]')
@click.pass_context
@reports_errors
def replay(ctx, manifest_path: Path, out_dir: Optional[Path]):
    """Re-run a manifest and check that its reproducible outputs match byte for byte."""
    original = RunManifest.load(manifest_path)
    changed = original.changed_inputs()
    if changed:
        raise DataError(f"inputs changed since the run: {', '.join(changed)}")
    out_dir = Path(out_dir) if out_dir else run_directory(manifest_path) / "replay"
    command = _find_command(original.command)

    config.reset_to_defaults()
    config.merge(original.config)
    params = dict(original.params, out_dir=str(out_dir))
    logger.info(f"Replaying {original.command} into {out_dir}")
    ctx.invoke(command, **params)

    mismatched = original.mismatched_outputs(RunManifest.load(out_dir))
    if mismatched:
        raise ReplayMismatchError(f"replay differs in {', '.join(mismatched)}")
    click.echo(StyleFormatter.success(f"Replay of {original.command} reproduced all outputs"))


@click.group()
def config_cmd():
    """Show or validate the resolved configuration."""
    pass


@config_cmd.command('show')
@click.option('--json', 'output_json', is_flag=True, help='Print as JSON')
def config_show(output_json: bool):
    """Show the configuration after defaults, config files and --config."""
    if output_json:
        click.echo(json.dumps(config.to_dict(), indent=2, sort_keys=True))
        return
    click.echo(StyleFormatter.highlight("Current Configuration:"))
    _display_config_section(config.to_dict(), "")


@config_cmd.command('validate')
@click.argument('config_file', required=False, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@reports_errors
def config_validate(config_file: Optional[Path]):
    """Validate the configuration, optionally with CONFIG_FILE merged on top."""
    if config_file:
        config.load_file(config_file)
    config.validate_config()
    click.echo(StyleFormatter.success("Configuration is valid"))


def _display_config_section(section: dict, indent: str) -> None:
    for key, value in section.items():
        if isinstance(value, dict):
            click.echo(f"{indent}{key}:")
            _display_config_section(value, indent + "  ")
        elif isinstance(value, bool):
            click.echo(f"{indent}{key}: {StyleFormatter.success('true') if value else StyleFormatter.dim('false')}")
        elif value is None:
            click.echo(f"{indent}{key}: {StyleFormatter.dim('null')}")
        elif isinstance(value, (int, float)):
            click.echo(f"{indent}{key}: {StyleFormatter.info(str(value))}")
        else:
            click.echo(f"{indent}{key}: {value}")


cli.add_command(config_cmd, name="config")


if __name__ == '__main__':
    cli()
