"""
Tests for similarity kernels and the local structure preserving loss.
"""
import numpy as np
import pytest

from src.lsp_distill.core.config import KERNELS
from src.lsp_distill.core.exceptions import AlignmentError, ConfigError, ContractError, ShapeError
from src.lsp_distill.distill import (
    KernelChoice,
    LspPairing,
    kernel_eval,
    kl_per_node,
    local_structure,
    lsp_loss,
    paired_lsp_loss,
    parse_pairs,
    structure_divergence,
    total_loss,
)
from src.lsp_distill.graph import add_self_loops, build_graph, knn_graph
from src.lsp_distill.tensor import Tape, Tensor, gradient_check, parameter


def reference_loss(z_s, z_t, graph, similarity):
    """Direct float64 computation of the mean KL between neighbour softmaxes."""
    total, nodes = 0.0, 0
    for i in range(graph.n):
        senders = [j for j in graph.senders(i) if j != i]
        if not senders:
            continue
        s = np.array([similarity(z_s[i], z_s[j]) for j in senders])
        t = np.array([similarity(z_t[i], z_t[j]) for j in senders])
        p = np.exp(s - s.max()) / np.exp(s - s.max()).sum()
        q = np.exp(t - t.max()) / np.exp(t - t.max()).sum()
        total += float(np.sum(p * (np.log(p) - np.log(q))))
        nodes += 1
    return total / nodes


def random_case(seed, n=8, dim=3, k=3):
    rng = np.random.default_rng(seed)
    z_s = rng.uniform(-0.5, 0.5, size=(n, dim))
    z_t = rng.uniform(-0.5, 0.5, size=(n, dim))
    return z_s, z_t, knn_graph(rng.normal(size=(n, 2)), k)


class TestKernels:
    """Kernel values and validation."""

    def test_values(self):
        """l2, rbf, linear and poly on a fixed pair."""
        a, b = np.array([1.0, 2.0]), np.array([0.0, 1.0])
        assert np.isclose(kernel_eval(a, b, KernelChoice("l2")).item(), 2.0)
        assert np.isclose(kernel_eval(a, b, KernelChoice("rbf", sigma=2.0)).item(), np.exp(-2.0 / 8.0))
        assert np.isclose(kernel_eval(a, b, KernelChoice("linear")).item(), 2.0)
        assert np.isclose(kernel_eval(a, b, KernelChoice("poly", degree=3, offset=1.0)).item(), 27.0)

    def test_width_mismatch(self):
        """Vectors of different widths raise ShapeError."""
        with pytest.raises(ShapeError):
            kernel_eval(np.ones(2), np.ones(3), KernelChoice("linear"))

    @pytest.mark.parametrize("kwargs,field", [
        ({"name": "cosine"}, "distill.kernel"),
        ({"name": "poly", "degree": 0}, "poly_degree"),
        ({"name": "poly", "degree": 1.5}, "poly_degree"),
        ({"name": "rbf", "sigma": 0.0}, "rbf_sigma"),
    ])
    def test_invalid_choice(self, kwargs, field):
        """Bad kernel parameters are configuration errors."""
        with pytest.raises(ConfigError, match=field):
            KernelChoice(**kwargs)


class TestLocalStructure:
    """Neighbour distributions."""

    @pytest.mark.parametrize("kernel", KERNELS)
    def test_distributions_sum_to_one(self, kernel, rng):
        """Every node with neighbours carries a probability vector."""
        z = rng.normal(size=(12, 4))
        ls = local_structure(z, knn_graph(z, 4), KernelChoice(kernel))
        np.testing.assert_allclose(ls.sums(), 1.0, atol=1e-5)
        assert np.all(ls.probs.numpy() >= 0)

    def test_self_loops_are_dropped(self, rng):
        """A self-loop never appears in a local structure."""
        g = add_self_loops(build_graph(3, [(0, 1), (2, 1)]))
        ls = local_structure(rng.normal(size=(3, 2)), g, KernelChoice("rbf"))
        assert list(ls.neighbors(1)) == [0, 2]
        assert list(ls.non_empty()) == [False, True, False]
        assert ls.distribution(0).size == 0

    def test_l2_favours_far_neighbours(self):
        """Under the raw l2 kernel the farther neighbour gets more mass."""
        z = np.array([[0.0], [1.0], [2.0]])
        ls = local_structure(z, build_graph(3, [(1, 0), (2, 0)]), KernelChoice("l2"))
        near, far = ls.distribution(0)
        assert far > near

    @pytest.mark.parametrize("kernel", ["l2", "rbf"])
    def test_translation_invariant(self, kernel, rng):
        """Distance-based kernels see only differences, so shifting every feature changes nothing."""
        z = rng.normal(size=(12, 4))
        g = knn_graph(z, 4)
        shift = rng.uniform(-2.0, 2.0, size=4)
        base = local_structure(z, g, KernelChoice(kernel)).probs.numpy()
        shifted = local_structure(z + shift, g, KernelChoice(kernel)).probs.numpy()
        np.testing.assert_allclose(shifted, base, atol=1e-5)

    def test_row_count_mismatch(self, rng):
        """Features must have one row per node."""
        with pytest.raises(ContractError):
            local_structure(rng.normal(size=(4, 2)), build_graph(5, [(0, 1)]), KernelChoice())


class TestLspLoss:
    """The LSP loss value, modes and gradients."""

    def test_kl_per_node(self):
        """KL(p ‖ q) of two explicit vectors."""
        expected = 0.5 * np.log(2.0) + 0.5 * np.log(2.0 / 3.0)
        assert np.isclose(kl_per_node([0.5, 0.5], [0.25, 0.75]).item(), expected, atol=1e-6)
        with pytest.raises(AlignmentError):
            kl_per_node([0.5, 0.5], [1.0])

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_reference(self, seed):
        """The loss equals a direct float64 computation under the rbf kernel."""
        z_s, z_t, g = random_case(seed)

        def rbf(a, b):
            return np.exp(-np.sum((a - b) ** 2) / 2.0)

        value = lsp_loss(z_s, g, z_t, g, KernelChoice("rbf"), "static").item()
        assert np.isclose(value, reference_loss(z_s, z_t, g, rbf), atol=1e-6)

    def test_isolated_nodes_are_excluded_from_mean(self, rng):
        """The mean runs over nodes that have neighbours only."""
        g = build_graph(5, [(0, 1), (2, 1), (1, 3), (4, 3)])
        z_s, z_t = rng.normal(size=(5, 2)), rng.normal(size=(5, 2))

        def linear(a, b):
            return float(np.dot(a, b))

        value = lsp_loss(z_s, g, z_t, g, KernelChoice("linear"), "static").item()
        assert np.isclose(value, reference_loss(z_s, z_t, g, linear), atol=1e-6)

    def test_no_neighbours_gives_zero(self, rng):
        """A graph without edges yields a zero loss."""
        g = build_graph(3, [])
        assert lsp_loss(rng.normal(size=(3, 2)), g, rng.normal(size=(3, 2)), g, KernelChoice()).item() == 0.0

    @pytest.mark.parametrize("kernel", KERNELS)
    def test_non_negative(self, kernel):
        """KL is never meaningfully negative."""
        for seed in range(20):
            z_s, z_t, g = random_case(seed)
            assert lsp_loss(z_s, g, z_t, g, KernelChoice(kernel), "static").item() >= -1e-6

    @pytest.mark.parametrize("kernel", KERNELS)
    def test_self_distillation_is_zero(self, kernel, rng):
        """Identical features on the same graph give zero loss."""
        z = rng.normal(size=(10, 3))
        g = knn_graph(z, 3)
        assert abs(lsp_loss(z, g, z, g, KernelChoice(kernel), "static").item()) < 1e-6

    def test_static_requires_equal_graphs(self, rng):
        """Different graphs in static mode are a contract violation."""
        z = rng.normal(size=(10, 3))
        with pytest.raises(ContractError):
            lsp_loss(z, knn_graph(z, 2), z, knn_graph(z, 3), KernelChoice(), "static")

    def test_static_ignores_self_loop_difference(self, rng):
        """Graphs equal up to self-loops count as the same graph."""
        z = rng.normal(size=(6, 2))
        g = knn_graph(z, 2)
        lsp_loss(z, add_self_loops(g), z, g, KernelChoice(), "static")

    def test_unknown_mode(self, rng):
        z = rng.normal(size=(4, 2))
        g = knn_graph(z, 1)
        with pytest.raises(ContractError):
            lsp_loss(z, g, z, g, KernelChoice(), "dynamic")

    def test_union_equals_static_on_equal_graphs(self):
        """On identical graphs the union mode reproduces the static loss."""
        for seed in range(50):
            z_s, z_t, g = random_case(seed)
            kernel = KernelChoice(KERNELS[seed % len(KERNELS)])
            static = lsp_loss(z_s, g, z_t, g, kernel, "static").item()
            union = lsp_loss(z_s, g, z_t, g, kernel, "union").item()
            assert abs(static - union) <= 1e-7

    def test_union_mode_with_different_graphs(self, rng):
        """Union mode accepts dynamic graphs of different sizes."""
        z_s, z_t = rng.normal(size=(12, 3)), rng.normal(size=(12, 3))
        value = lsp_loss(z_s, knn_graph(z_s, 2), z_t, knn_graph(z_t, 5), KernelChoice(), "union")
        assert value.item() >= -1e-6

    def test_teacher_receives_no_gradient(self, rng):
        """Only the student side is differentiated."""
        z_s = parameter(rng.normal(size=(6, 2)))
        z_t = parameter(rng.normal(size=(6, 2)))
        g = knn_graph(rng.normal(size=(6, 2)), 2)
        with Tape() as tape:
            tape.backward(lsp_loss(z_s, g, z_t, g, KernelChoice()))
        assert z_s.grad is not None
        assert z_t.grad is None

    @pytest.mark.parametrize("kernel", [
        KernelChoice("l2"),
        KernelChoice("rbf", sigma=0.7),
        KernelChoice("linear"),
        KernelChoice("poly", degree=2, offset=1.0),
    ])
    @pytest.mark.parametrize("mode", ["static", "union"])
    def test_gradients(self, kernel, mode):
        """Student-feature gradients match central differences on 20 instances."""
        for seed in range(20):
            z_s, z_t, g = random_case(seed, n=6, dim=3, k=2)
            g_s = g if mode == "static" else knn_graph(z_s, 3)
            x = parameter(z_s)
            error = gradient_check(lambda z: lsp_loss(z, g_s, z_t, g, kernel, mode), x, step=1e-2)
            assert error < 1e-3, f"seed {seed}"


class TestPairing:
    """Layer pairs, totals and divergence."""

    def test_parse_pairs(self):
        """Pairs parse to integer tuples; empty means the last layers."""
        assert parse_pairs("0:1, -1:-1") == [(0, 1), (-1, -1)]
        assert parse_pairs("") == [(-1, -1)]
        assert parse_pairs(None) == [(-1, -1)]

    @pytest.mark.parametrize("text", ["1", "a:b", "1:2:3"])
    def test_parse_pairs_malformed(self, text):
        with pytest.raises(ConfigError):
            parse_pairs(text)

    def test_resolve(self):
        """Negative indices count from the end; out-of-range indices are errors."""
        pairing = LspPairing.parse("-1:-1,0:2")
        assert pairing.resolve(5, 4) == [(4, 3), (0, 2)]
        with pytest.raises(ConfigError, match="student layer 2"):
            pairing.resolve(5, 2)

    def test_invalid_mode(self):
        with pytest.raises(ConfigError):
            LspPairing(mode="dynamic")

    def test_paired_loss_averages(self, rng):
        """Two pairs give the mean of their individual losses."""
        g = knn_graph(rng.normal(size=(8, 2)), 3)
        student = [Tensor(rng.normal(size=(8, 3))) for _ in range(2)]
        teacher = [Tensor(rng.normal(size=(8, 4))) for _ in range(3)]
        kernel = KernelChoice("rbf")
        pairing = LspPairing.parse("0:0,2:1", mode="static")
        value = paired_lsp_loss(student, [g, g], teacher, [g, g, g], kernel, pairing).item()
        first = lsp_loss(student[0], g, teacher[0], g, kernel, "static").item()
        second = lsp_loss(student[1], g, teacher[2], g, kernel, "static").item()
        assert np.isclose(value, (first + second) / 2, atol=1e-6)
        divergence = structure_divergence(student, [g, g], teacher, [g, g, g], kernel, pairing)
        assert np.isclose(divergence, value, atol=1e-7)

    def test_total_loss(self):
        """task + lambda * lsp, with lambda 0 returning the task loss itself."""
        task, lsp = Tensor(2.0), Tensor(0.5)
        assert total_loss(task, lsp, 0.0) is task
        assert np.isclose(total_loss(task, lsp, 100.0).item(), 52.0)
        with pytest.raises(ConfigError):
            total_loss(task, lsp, -1.0)
