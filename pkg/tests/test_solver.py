import numpy as np
import pytest

from potts_sl import (
    AffinityConfig,
    AffinityGraph,
    Image,
    LogitField,
    LossConfig,
    ProbField,
    ScribbleField,
    build_graph,
    argmax_decode,
    pseudo_label_objective,
    soft_jaccard,
    solve_pseudo_labels,
)
from potts_sl.data_terms import XentKind
from potts_sl.potts import PottsKind
from potts_sl.solver import InitKind, SolverConfig
from helpers import random_interior_field


def empty_scribbles(h, w):
    return ScribbleField(np.zeros((h, w), dtype=np.int64))


def grid_instance(seed, h=6, w=6, k=3, labeled=3):
    rng = np.random.default_rng(seed)
    image = Image(rng.integers(0, 256, size=(h, w, 3)))
    graph = build_graph(image, AffinityConfig(color_bandwidth=60.0))
    sigma = random_interior_field(rng, h, w, k)
    data = np.zeros(h * w, dtype=np.int64)
    pick = rng.permutation(h * w)[:labeled]
    data[pick] = rng.integers(1, k + 1, size=labeled)
    return sigma, ScribbleField(data.reshape(h, w)), graph


class TestPerPixelLimits:
    def test_quad_without_pairwise_converges_to_sigma(self):
        sigma, scribbles, graph = grid_instance(0)
        cfg = LossConfig(eta=1.0, lam=0.0, potts=PottsKind.Q, xent=XentKind.QUAD)
        y, report = solve_pseudo_labels(sigma, None, scribbles, graph, cfg, SolverConfig())
        unlabeled = ~scribbles.labeled_mask()
        gap = np.abs(y.data - sigma.data)[unlabeled]
        assert gap.max() < 1e-3
        assert report.final_objective < 1e-5

    def test_cce_without_pairwise_seeks_argmax_vertex(self):
        rng = np.random.default_rng(1)
        h = w = 10  # 100 unlabeled pixels
        sigma = random_interior_field(rng, h, w, 3)
        graph = AffinityGraph(npixels=h * w, ei=[], ej=[], w=[])
        cfg = LossConfig(eta=1.0, lam=0.0, potts=PottsKind.Q, xent=XentKind.CCE)
        y, _ = solve_pseudo_labels(
            sigma, None, empty_scribbles(h, w), graph, cfg, SolverConfig()
        )
        # the per-pixel optimum of -ln(sigma.y) is the vertex of argmax sigma
        np.testing.assert_array_equal(argmax_decode(y), argmax_decode(sigma))
        # and every pixel moved toward that vertex from its start at sigma
        top_idx = np.argmax(sigma.flat(), axis=1)[:, None]
        top_y = np.take_along_axis(y.flat(), top_idx, axis=1)
        top_sigma = np.take_along_axis(sigma.flat(), top_idx, axis=1)
        assert np.all(top_y > top_sigma)
        assert np.median(top_y) > 0.9

    def test_fully_scribbled_field_is_reset_exactly(self):
        rng = np.random.default_rng(2)
        h = w = 4
        sigma = random_interior_field(rng, h, w, 3)
        labels = rng.integers(1, 4, size=(h, w))
        scribbles = ScribbleField(labels)
        image = Image(rng.integers(0, 256, size=(h, w, 3)))
        graph = build_graph(image, AffinityConfig())
        cfg = LossConfig(potts=PottsKind.CD, xent=XentKind.CCE)
        y, _ = solve_pseudo_labels(sigma, None, scribbles, graph, cfg, SolverConfig(steps=5))
        expected = np.zeros((h, w, 3))
        for r in range(h):
            for c in range(w):
                expected[r, c, labels[r, c] - 1] = 1.0
        assert np.array_equal(y.data, expected)  # bitwise


class TestMechanics:
    def test_trace_shape_and_final(self):
        sigma, scribbles, graph = grid_instance(3)
        cfg = LossConfig(eta=1.0, lam=1.0, potts=PottsKind.Q, xent=XentKind.QUAD)
        scfg = SolverConfig(steps=57)
        y, report = solve_pseudo_labels(sigma, None, scribbles, graph, cfg, scfg)
        assert len(report.trace) == 58
        assert report.final_objective == report.trace[-1]
        assert pseudo_label_objective(sigma, y, scribbles, graph, cfg) == report.final_objective

    def test_monotone_trace_on_convex_instance(self):
        sigma, scribbles, graph = grid_instance(4)
        cfg = LossConfig(eta=4.0, lam=2.0, potts=PottsKind.Q, xent=XentKind.QUAD)
        _, report = solve_pseudo_labels(sigma, None, scribbles, graph, cfg, SolverConfig())
        diffs = np.diff(report.trace)
        assert np.max(diffs) <= 1e-6

    def test_nonconvex_kinds_still_descend_overall(self):
        sigma, scribbles, graph = grid_instance(5)
        for potts, xent in [(PottsKind.CD, XentKind.CCE), (PottsKind.BL, XentKind.CCE)]:
            cfg = LossConfig(eta=0.3, lam=2.0, potts=potts, xent=xent)
            _, report = solve_pseudo_labels(sigma, None, scribbles, graph, cfg, SolverConfig())
            assert report.trace[-1] <= report.trace[0]

    def test_scribble_constraint_exact(self):
        sigma, scribbles, graph = grid_instance(6)
        cfg = LossConfig()
        y, _ = solve_pseudo_labels(sigma, None, scribbles, graph, cfg, SolverConfig(steps=20))
        lab = scribbles.data
        for r, c in zip(*np.nonzero(lab)):
            expected = np.zeros(3)
            expected[lab[r, c] - 1] = 1.0
            assert np.array_equal(y.data[r, c], expected)

    def test_edge_order_invariance(self):
        sigma, scribbles, graph = grid_instance(7)
        cfg = LossConfig(eta=0.5, lam=3.0, potts=PottsKind.Q, xent=XentKind.QUAD)
        y_base, _ = solve_pseudo_labels(sigma, None, scribbles, graph, cfg, SolverConfig(steps=50))
        rng = np.random.default_rng(8)
        perm = rng.permutation(graph.nedges)
        shuffled = AffinityGraph(
            npixels=graph.npixels, ei=graph.ei[perm], ej=graph.ej[perm],
            w=graph.w[perm], kind=graph.kind,
        )
        y_shuf, _ = solve_pseudo_labels(sigma, None, scribbles, graph=shuffled,
                                        loss_cfg=cfg, solver_cfg=SolverConfig(steps=50))
        assert np.max(np.abs(y_base.data - y_shuf.data)) < 1e-9

    def test_divergent_edges_counted_and_skipped(self):
        # two adjacent pixels initialized at practically orthogonal one-hots
        sigma = ProbField.uniform(1, 2, 2)
        graph = AffinityGraph(npixels=2, ei=[0], ej=[1], w=[1.0])
        init = LogitField(np.array([[[40.0, -40.0], [-40.0, 40.0]]]))
        cfg = LossConfig(eta=0.0, lam=1.0, potts=PottsKind.CCE, xent=XentKind.QUAD)
        y, report = solve_pseudo_labels(
            sigma, init, empty_scribbles(1, 2), graph, cfg, SolverConfig(steps=3)
        )
        assert report.divergence_events > 0
        assert np.all(np.isfinite(report.trace))
        assert np.all(np.isfinite(y.data))

    def test_init_kinds(self):
        sigma, scribbles, graph = grid_instance(9)
        cfg = LossConfig(eta=1.0, lam=0.5, potts=PottsKind.Q, xent=XentKind.QUAD)
        for init in InitKind:
            y, report = solve_pseudo_labels(
                sigma, None, scribbles, graph, cfg, SolverConfig(steps=30, init=init)
            )
            assert np.all(np.isfinite(y.data))
            assert report.trace[-1] <= report.trace[0]

    def test_explicit_init_logits_used(self):
        sigma, scribbles, graph = grid_instance(10)
        cfg = LossConfig(eta=1.0, lam=0.0, potts=PottsKind.Q, xent=XentKind.QUAD)
        rng = np.random.default_rng(11)
        init = LogitField(rng.standard_normal((6, 6, 3)))
        y1, r1 = solve_pseudo_labels(sigma, init, scribbles, graph, cfg, SolverConfig(steps=1))
        y2, r2 = solve_pseudo_labels(sigma, None, scribbles, graph, cfg, SolverConfig(steps=1))
        assert r1.trace[0] != r2.trace[0]


class TestSoftJaccard:
    def test_identical_fields(self):
        rng = np.random.default_rng(12)
        a = random_interior_field(rng, 3, 3, 4)
        assert soft_jaccard(a, a) == 1.0

    def test_disjoint_one_hot_fields(self):
        a = np.zeros((2, 2, 2))
        a[:, :, 0] = 1.0
        b = np.zeros((2, 2, 2))
        b[:, :, 1] = 1.0
        assert soft_jaccard(ProbField(a), ProbField(b)) == 0.0

    def test_hand_computed_two_by_two(self):
        a = ProbField(np.array([
            [[0.2, 0.8], [0.5, 0.5]],
            [[1.0, 0.0], [0.3, 0.7]],
        ]))
        b = ProbField(np.array([
            [[0.1, 0.9], [0.5, 0.5]],
            [[0.0, 1.0], [0.6, 0.4]],
        ]))
        # class 1: min 0.1+0.5+0+0.3, max 0.2+0.5+1+0.6; class 2 analogous
        expected = 0.5 * (0.9 / 2.3 + 1.7 / 3.1)
        assert abs(soft_jaccard(a, b) - expected) < 1e-12

    def test_shape_mismatch(self):
        from potts_sl import DataError
        with pytest.raises(DataError):
            soft_jaccard(ProbField.uniform(2, 2, 2), ProbField.uniform(2, 3, 2))
