"""
Tests for task losses, metrics, optimizers, reports and the training loop.
"""
import numpy as np
import pytest

from src.lsp_distill.core.config import config
from src.lsp_distill.core.exceptions import (
    ConfigError,
    ContractError,
    DataError,
    DatasetValidationError,
    NumericError,
    UnsupportedTaskError,
)
from src.lsp_distill.distill import DistillerConfig, KdDistiller, LspDistiller
from src.lsp_distill.models import ModelSpec, build_model
from src.lsp_distill.tensor import gradient_check, parameter
from src.lsp_distill.training import (
    SGD,
    Adam,
    EpochRecord,
    OptimConfig,
    RunReport,
    TrainSettings,
    accuracy,
    bce_multilabel_loss,
    build_optimizer,
    check_compatible,
    compute_metrics,
    cross_entropy_loss,
    evaluate,
    iterate_batches,
    mean_class_accuracy,
    micro_f1,
    primary_metric,
    read_report_csv,
    run_distillation,
    train_model,
)


def gat_spec(widths=(4, 3), heads=(2, 2)):
    return ModelSpec(kind="gat", in_dim=6, num_classes=3, widths=list(widths), heads=list(heads),
                     name="tiny-gat")


def dgcnn_spec():
    return ModelSpec(kind="dgcnn", in_dim=3, num_classes=4, widths=[4, 4], mlp=[6], k=3,
                     name="tiny-dgcnn")


class TestTaskLosses:
    """Binary and softmax cross entropy."""

    def test_bce_matches_numpy(self, rng):
        logits = rng.normal(size=(4, 3))
        targets = (rng.random((4, 3)) < 0.5).astype(float)
        prob = 1.0 / (1.0 + np.exp(-logits))
        expected = -np.mean(targets * np.log(prob) + (1 - targets) * np.log(1 - prob))
        assert np.isclose(bce_multilabel_loss(logits, targets).item(), expected, rtol=1e-5)

    def test_bce_is_stable_for_large_logits(self):
        """Very confident correct predictions give a finite, near-zero loss."""
        value = bce_multilabel_loss(np.array([[80.0, -80.0]]), np.array([[1.0, 0.0]])).item()
        assert np.isfinite(value) and value < 1e-6

    def test_bce_rejects_soft_targets(self):
        with pytest.raises(DatasetValidationError):
            bce_multilabel_loss(np.zeros((1, 2)), np.array([[0.5, 1.0]]))

    def test_cross_entropy_matches_numpy(self, rng):
        logits = rng.normal(size=(5, 4))
        labels = np.array([0, 3, 1, 1, 2])
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        expected = -log_probs[np.arange(5), labels].mean()
        assert np.isclose(cross_entropy_loss(logits, labels).item(), expected, rtol=1e-5)

    def test_cross_entropy_label_range(self):
        with pytest.raises(DatasetValidationError):
            cross_entropy_loss(np.zeros((2, 3)), np.array([0, 3]))

    def test_gradients(self, rng):
        """Both fused losses pass the gradient check."""
        targets = (rng.random((4, 3)) < 0.5).astype(float)
        labels = np.array([2, 0, 1, 1])
        x = parameter(rng.normal(size=(4, 3)))
        assert gradient_check(lambda z: bce_multilabel_loss(z, targets), x) < 1e-3
        assert gradient_check(lambda z: cross_entropy_loss(z, labels), x) < 1e-3


class TestMetrics:
    """Metric values on hand-checked examples."""

    def test_micro_f1(self):
        """Two true positives, one false positive, one false negative."""
        targets = np.array([[1, 0], [1, 1]])
        predictions = np.array([[1, 1], [0, 1]])
        assert np.isclose(micro_f1(predictions, targets), 4.0 / 6.0)

    def test_accuracy_and_mean_class_accuracy(self):
        labels = np.array([0, 0, 1, 2])
        predictions = np.array([0, 1, 1, 0])
        assert accuracy(predictions, labels) == 0.5
        assert np.isclose(mean_class_accuracy(predictions, labels), 0.5)

    def test_absent_classes_are_excluded(self):
        """A class missing from the targets does not drag the mean down."""
        labels = np.array([0, 1])
        assert mean_class_accuracy(np.array([0, 1]), labels, num_classes=4) == 1.0

    def test_compute_metrics(self):
        """Multilabel thresholds logits at zero; multiclass takes the argmax."""
        multilabel = compute_metrics(np.array([[2.0, -1.0]]), np.array([[1, 0]]), "multilabel")
        assert multilabel == {"micro_f1": 1.0}
        multiclass = compute_metrics(np.array([[0.1, 0.9], [0.8, 0.2]]), np.array([1, 1]), "multiclass")
        assert multiclass["accuracy"] == 0.5
        assert primary_metric("multilabel") == "micro_f1"
        assert primary_metric("multiclass") == "accuracy"


class TestOptimizers:
    """Protocol defaults and update rules."""

    @pytest.mark.parametrize("protocol,task,expected", [
        ("full", "multilabel", ("adam", 0.005, 500)),
        ("full", "multiclass", ("sgd", 0.1, 250)),
        ("desk", "multilabel", ("adam", 0.005, 30)),
        ("desk", "multiclass", ("sgd", 0.01, 40)),
    ])
    def test_protocol_defaults(self, protocol, task, expected):
        cfg = OptimConfig.for_protocol(protocol, task)
        assert (cfg.kind, cfg.lr, cfg.epochs) == expected

    def test_overrides_win_and_none_is_ignored(self):
        cfg = OptimConfig.for_protocol("desk", "multiclass", lr=0.5, epochs=None, kind="adam")
        assert (cfg.kind, cfg.lr, cfg.epochs) == ("adam", 0.5, 40)

    def test_from_config(self):
        """Unset optimizer keys fall back to the protocol."""
        config.update({"training.protocol": "full", "optim.epochs": 3})
        cfg = OptimConfig.from_config(config, "multiclass")
        assert (cfg.kind, cfg.lr, cfg.epochs) == ("sgd", 0.1, 3)

    @pytest.mark.parametrize("kwargs", [
        {"kind": "rmsprop"}, {"lr": 0.0}, {"epochs": 0}, {"momentum": 1.0}, {"weight_decay": -1.0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            OptimConfig(**kwargs)

    def test_unknown_protocol(self):
        with pytest.raises(ConfigError):
            OptimConfig.for_protocol("fast", "multiclass")

    def test_adam_first_step_moves_by_lr(self):
        """With bias correction the first Adam step is lr times the gradient sign."""
        p = parameter([1.0, -2.0])
        p.grad = np.array([0.5, -3.0], dtype=np.float32)
        Adam({"p": p}, OptimConfig(kind="adam", lr=0.1)).step()
        np.testing.assert_allclose(p.data, [0.9, -1.9], atol=1e-6)

    def test_sgd_momentum(self):
        """v ← μ v + g and p ← p − lr v over two steps."""
        p = parameter([0.0])
        opt = SGD({"p": p}, OptimConfig(kind="sgd", lr=0.1, momentum=0.9))
        for _ in range(2):
            p.grad = np.array([1.0], dtype=np.float32)
            opt.step()
        np.testing.assert_allclose(p.data, [-0.29], atol=1e-6)

    def test_weight_decay(self):
        p = parameter([2.0])
        SGD({"p": p}, OptimConfig(kind="sgd", lr=0.1, momentum=0.0, weight_decay=0.5)).step()
        np.testing.assert_allclose(p.data, [1.9], atol=1e-6)

    def test_non_finite_gradient_changes_nothing(self):
        """A NaN anywhere aborts the step before any parameter moves."""
        a, b = parameter([1.0]), parameter([1.0])
        a.grad = np.array([1.0], dtype=np.float32)
        b.grad = np.array([np.nan], dtype=np.float32)
        opt = SGD({"a": a, "b": b}, OptimConfig(kind="sgd", lr=0.1))
        with pytest.raises(NumericError, match="parameter b"):
            opt.step()
        assert a.data[0] == 1.0 and opt.steps == 0

    @pytest.mark.parametrize("kind", ["adam", "sgd"])
    def test_quadratic_bowl_convergence(self, kind):
        """Repeated steps on ``Σ (x - c)²`` settle at the centre."""
        centre = np.array([1.5, -2.0, 0.25], dtype=np.float32)
        p = parameter(np.zeros(3))
        optimizer = build_optimizer({"p": p}, OptimConfig(kind=kind, lr=0.05, momentum=0.9))
        for _ in range(2000):
            p.grad = 2.0 * (p.data - centre)
            optimizer.step()
        np.testing.assert_allclose(p.data, centre, atol=1e-4)


class TestReport:
    """Per-epoch CSV output."""

    def test_csv_round_trip(self, temp_dir):
        """Values read back exactly, including a missing divergence."""
        report = RunReport(method="lsp", task="multilabel", metric="micro_f1", num_parameters=10)
        report.add_epoch(EpochRecord(1, 0.123456789, 0.5, 0.25, 1 / 3))
        report.add_epoch(EpochRecord(2, 0.1, 0.0, 0.3, None))
        paths = report.write(temp_dir)
        assert read_report_csv(paths["report_csv"]) == report.epochs
        assert paths["report_json"].exists()

    def test_bad_rows(self, temp_dir):
        """A malformed row is reported with its file line."""
        path = temp_dir / "report.csv"
        path.write_text("epoch,task_loss,distill_loss,val_metric,structure_divergence\n1,x,0,0,\n")
        with pytest.raises(DataError, match="report.csv:2"):
            read_report_csv(path)
        with pytest.raises(DataError):
            read_report_csv(temp_dir / "missing.csv")


class TestTrainer:
    """Training and distillation loops on tiny corpora."""

    def test_iterate_batches(self, tiny_graphs, tiny_shapes):
        """One graph per batch, or batch_size clouds per batch."""
        assert len(list(iterate_batches(tiny_graphs, "train", 8))) == 4
        sizes = [len(b.targets) for b in iterate_batches(tiny_shapes, "train", 5)]
        assert sizes == [5, 5, 5, 1]

    def test_check_compatible(self, tiny_graphs, tiny_shapes):
        check_compatible(gat_spec(), tiny_graphs)
        with pytest.raises(ConfigError):
            check_compatible(dgcnn_spec(), tiny_graphs)
        with pytest.raises(ConfigError):
            check_compatible(gat_spec(), tiny_shapes)

    def test_training_is_deterministic(self, tiny_graphs):
        """The same seed reproduces the loss series and the parameters."""
        optim = OptimConfig(kind="adam", lr=0.01, epochs=2)
        runs = []
        for _ in range(2):
            model = build_model(gat_spec(), seed=3)
            report = train_model(model, tiny_graphs, optim, settings=TrainSettings(seed=3))
            runs.append((report, model.state_dict()))
        (first, state_a), (second, state_b) = runs
        assert first.epochs == second.epochs
        assert all(np.array_equal(state_a[k], state_b[k]) for k in state_a)
        assert first.method == "none"
        assert first.series("structure_divergence") == [None, None]
        assert set(first.test_metrics) == {"micro_f1", "loss"}
        assert 1 <= first.best_epoch <= 2

    def test_lsp_distillation_records_divergence(self, tiny_graphs):
        """With a teacher every epoch carries a structure divergence."""
        teacher = build_model(gat_spec(widths=(6, 3)), seed=1)
        student = build_model(gat_spec(), seed=2)
        distiller = LspDistiller(DistillerConfig(method="lsp", lam=1.0, lsp_mode="static"))
        snapshots = []
        report = train_model(student, tiny_graphs, OptimConfig(lr=0.01, epochs=3), distiller, teacher,
                             TrainSettings(seed=0, snapshot_epochs=[2]),
                             snapshot_fn=lambda epoch, model: snapshots.append(epoch))
        divergences = report.series("structure_divergence")
        assert len(divergences) == 3
        assert all(d is not None and d >= -1e-6 for d in divergences)
        assert snapshots == [2]
        assert not any(p.requires_grad for p in teacher.parameters().values())

    def test_no_distiller_equals_plain_training(self, tiny_graphs):
        """Distilling with method none is bit for bit the plain training run."""
        teacher = build_model(gat_spec(widths=(6, 3)), seed=1)
        optim = OptimConfig(kind="adam", lr=0.01, epochs=2)
        settings = TrainSettings(seed=5)
        student, distilled = run_distillation(teacher, gat_spec(), tiny_graphs, DistillerConfig(method="none"),
                                              optim, settings)
        plain_model = build_model(gat_spec(), seed=5)
        plain = train_model(plain_model, tiny_graphs, optim, settings=settings)
        assert distilled.epochs == plain.epochs
        assert distilled.test_metrics == plain.test_metrics
        state, plain_state = student.state_dict(), plain_model.state_dict()
        assert state.keys() == plain_state.keys()
        assert all(np.array_equal(state[k], plain_state[k]) for k in state)

    @pytest.mark.parametrize("method", ["lsp", "fitnet", "at"])
    def test_teacher_parameters_untouched(self, tiny_graphs, method):
        """Distillation never writes to the teacher's weights."""
        teacher = build_model(gat_spec(widths=(6, 3)), seed=1)
        before = {name: p.data.copy() for name, p in teacher.parameters().items()}
        run_distillation(teacher, gat_spec(), tiny_graphs, DistillerConfig(method=method, lsp_mode="static"),
                         OptimConfig(kind="adam", lr=0.05, epochs=2), TrainSettings(seed=0))
        after = teacher.parameters()
        assert before.keys() == after.keys()
        assert all(np.array_equal(before[name], after[name].data) for name in before)

    def test_distiller_needs_teacher(self, tiny_graphs):
        student = build_model(gat_spec())
        with pytest.raises(ContractError):
            train_model(student, tiny_graphs, OptimConfig(epochs=1),
                        LspDistiller(DistillerConfig(method="lsp")))

    def test_kd_refused_for_multilabel(self, tiny_graphs):
        teacher, student = build_model(gat_spec()), build_model(gat_spec(), seed=1)
        with pytest.raises(UnsupportedTaskError):
            train_model(student, tiny_graphs, OptimConfig(epochs=1),
                        KdDistiller(DistillerConfig(method="kd")), teacher)

    def test_point_cloud_distillation(self, tiny_shapes):
        """Union-mode LSP between two DGCNNs with different K."""
        teacher_spec = ModelSpec(kind="dgcnn", in_dim=3, num_classes=4, widths=[6, 6], mlp=[6],
                                 k=5, name="tiny-dgcnn-teacher")
        teacher = build_model(teacher_spec, seed=1)
        student, report = run_distillation(
            teacher, dgcnn_spec(), tiny_shapes, DistillerConfig(method="lsp", lam=10.0),
            OptimConfig(kind="sgd", lr=0.01, epochs=1), TrainSettings(seed=0, batch_size=4),
        )
        assert report.metric == "accuracy"
        assert report.extra["kernel"] == "rbf"
        assert report.extra["teacher_parameters"] == teacher.num_parameters
        assert report.num_parameters == student.num_parameters
        assert report.epochs[0].structure_divergence is not None
        assert {"accuracy", "mean_class_accuracy", "loss"} <= set(report.test_metrics)

    def test_evaluate(self, tiny_graphs):
        metrics = evaluate(build_model(gat_spec()), tiny_graphs, "val")
        assert 0.0 <= metrics["micro_f1"] <= 1.0
        assert metrics["loss"] > 0

    def test_evaluate_empty_split(self, tiny_graphs):
        tiny_graphs.graphs = tiny_graphs.split("train")
        with pytest.raises(ContractError):
            evaluate(build_model(gat_spec()), tiny_graphs, "test")

    def test_train_only_dataset_falls_back_to_train(self, tiny_graphs):
        """Without val and test graphs, selection and scoring use the train split."""
        tiny_graphs.graphs = tiny_graphs.split("train")
        model = build_model(gat_spec(), seed=0)
        report = train_model(model, tiny_graphs, OptimConfig(kind="adam", lr=0.01, epochs=1))
        on_train = evaluate(model, tiny_graphs, "train")
        assert report.epochs[0].val_metric == on_train["micro_f1"]
        assert report.test_metrics == on_train

