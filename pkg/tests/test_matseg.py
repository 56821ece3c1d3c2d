"""Segmentation tests.

The solver is checked against exhaustive enumeration: every labeling of a
small mesh is scored with an independent energy implementation, and the
graph-cut result must match the minimum (K=2) or come close while never
beating it (K=3). Max-flow itself is checked against brute-force min cuts.
"""

import numpy as np
import pytest

from slfkit.geometry.camera import PinholeCamera
from slfkit.geometry.mesh import TriangleMesh
from slfkit.geometry.pose import look_at
from slfkit.matseg import (
    MaxFlow,
    MrfParams,
    Segmentation,
    VertexProbabilities,
    edge_weights,
    kmeans_probabilities,
    labeling_energy,
    oracle_probabilities,
    pairwise,
    project_probabilities,
    solve,
    unary,
    unary_costs,
)
from slfkit.scenes import grid_plane


def cut_value(arcs, side, source, sink):
    """Cost of a node bipartition: sum of arc caps crossing source -> sink."""
    total = 0.0
    for u, v, cap in arcs:
        su = 0 if u == source else (1 if u == sink else side[u])
        sv = 0 if v == source else (1 if v == sink else side[v])
        if su == 0 and sv == 1:
            total += cap
    return total


def brute_force_min_cut(arcs, n_nodes, source, sink):
    best = np.inf
    for bits in range(1 << n_nodes):
        side = [(bits >> v) & 1 for v in range(n_nodes)]
        best = min(best, cut_value(arcs, side, source, sink))
    return best


class TestMaxFlow:
    def test_two_node_chain(self):
        g = MaxFlow(2)
        g.add_edge(g.source, 0, 3.0)
        g.add_edge(0, 1, 2.0)
        g.add_edge(1, g.sink, 4.0)
        assert g.max_flow() == pytest.approx(2.0)
        assert list(g.source_side()) == [True, False]

    def test_two_paths_with_cross_edge(self):
        g = MaxFlow(2)
        g.add_edge(g.source, 0, 10.0)
        g.add_edge(g.source, 1, 4.0)
        g.add_edge(0, g.sink, 4.0)
        g.add_edge(1, g.sink, 10.0)
        g.add_edge(0, 1, 6.0)
        assert g.max_flow() == pytest.approx(14.0)

    def test_disconnected_sink(self):
        g = MaxFlow(2)
        g.add_edge(g.source, 0, 5.0)
        g.add_edge(1, g.sink, 5.0)
        assert g.max_flow() == 0.0
        side = g.source_side()
        assert side[0] and not side[1]

    def test_random_graphs_match_brute_force(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = 5
            g = MaxFlow(n)
            arcs = []
            for v in range(n):
                cs, ct = rng.uniform(0, 3, size=2)
                g.add_tlink(v, cs, ct)
                if cs > 0:
                    arcs.append((g.source, v, cs))
                if ct > 0:
                    arcs.append((v, g.sink, ct))
            for u in range(n):
                for v in range(n):
                    if u != v and rng.random() < 0.4:
                        cap = rng.uniform(0, 2)
                        g.add_edge(u, v, cap)
                        arcs.append((u, v, cap))
            flow = g.max_flow()
            best = brute_force_min_cut(arcs, n, g.source, g.sink)
            assert flow == pytest.approx(best, abs=1e-9)
            # the reported partition must achieve the optimal cut
            side = (~g.source_side()).astype(int)
            assert cut_value(arcs, side, g.source, g.sink) == pytest.approx(best, abs=1e-9)

    def test_rejects_negative_capacity(self):
        g = MaxFlow(2)
        with pytest.raises(ValueError):
            g.add_edge(0, 1, -1.0)


class TestUnary:
    def test_certain_label_costs_nothing(self):
        assert unary(np.array([1.0, 0.0]), 0) == 0.0

    def test_uniform_pair_costs_log_two(self):
        p = np.array([0.5, 0.5])
        assert unary(p, 0) == pytest.approx(np.log(2.0))
        assert unary(p, 1) == pytest.approx(np.log(2.0))

    def test_tiny_probability_is_clamped(self):
        p = np.array([1e-12, 1.0 - 1e-12])
        assert unary(p, 0) == pytest.approx(-np.log(1e-8))

    def test_cost_table_matches_scalar(self):
        rng = np.random.default_rng(0)
        p = rng.dirichlet(np.ones(3), size=5)
        table = unary_costs(p)
        for v in range(5):
            for y in range(3):
                assert table[v, y] == pytest.approx(unary(p[v], y))


def two_triangle_mesh(normals):
    verts = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 1.0, 0.0], [0.5, -1.0, 0.0]]
    faces = [[0, 1, 2], [1, 0, 3]]
    return TriangleMesh(vertices=verts, faces=faces, normals=normals)


class TestPairwise:
    def test_agreement_is_free(self):
        mesh = two_triangle_mesh(np.tile([0.0, 0.0, 1.0], (4, 1)))
        colors = np.zeros((4, 3))
        assert pairwise(mesh, colors, 0, 1, 2, 2, MrfParams()) == 0.0

    def test_identical_neighbors_make_boundaries_expensive(self):
        # same color and same normal: the clamped denominator dominates
        mesh = two_triangle_mesh(np.tile([0.0, 0.0, 1.0], (4, 1)))
        colors = np.zeros((4, 3))
        params = MrfParams(lambda_p=1.0, lambda_g=1.0, theta_p=10.0, epsilon=0.01)
        got = pairwise(mesh, colors, 0, 1, 0, 1, params)
        assert got == pytest.approx(1.0 + 0.01 / 1e-6)

    def test_bend_direction_changes_cost_by_lambda_g_over_denom(self):
        s = 0.25  # ||dN||^2 = (2s)^2 = 0.25 exactly
        z = np.sqrt(1.0 - s * s)
        base = np.tile([0.0, 0.0, 1.0], (4, 1))
        outward = base.copy()
        outward[0] = [s, 0.0, z]
        outward[1] = [-s, 0.0, z]
        inward = base.copy()
        inward[0] = [-s, 0.0, z]
        inward[1] = [s, 0.0, z]
        colors = np.zeros((4, 3))
        params = MrfParams(lambda_g=1.0)
        # edge (0, 1): dV = (-1, 0, 0); outward has dN . dV > 0
        hi = pairwise(two_triangle_mesh(inward), colors, 0, 1, 0, 1, params)
        lo = pairwise(two_triangle_mesh(outward), colors, 0, 1, 0, 1, params)
        assert hi - lo == pytest.approx(1.0 / 0.25, abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        n = rng.normal(size=(4, 3))
        n /= np.linalg.norm(n, axis=1, keepdims=True)
        mesh = two_triangle_mesh(n)
        colors = rng.random((4, 3))
        params = MrfParams(lambda_p=0.7, lambda_g=1.3, theta_p=5.0, epsilon=0.02)
        a = pairwise(mesh, colors, 0, 1, 0, 1, params)
        b = pairwise(mesh, colors, 1, 0, 1, 0, params)
        assert a == pytest.approx(b, rel=1e-12)

    def test_edge_weights_match_scalar_pairwise(self):
        rng = np.random.default_rng(4)
        mesh, colors, _, params = random_instance(rng, k_classes=2)
        w = edge_weights(mesh, colors, params)
        for k, (m, n) in enumerate(mesh.edges):
            assert w[k] == pytest.approx(pairwise(mesh, colors, m, n, 0, 1, params))


class TestProbabilities:
    def test_rows_are_normalized(self):
        vp = VertexProbabilities(np.array([[2.0, 2.0]]), np.array([1]))
        assert np.allclose(vp.p, [[0.5, 0.5]])
        assert vp.n_classes == 2

    def test_rejects_negative_mass(self):
        with pytest.raises(ValueError):
            VertexProbabilities(np.array([[0.5, -0.1]]), np.array([1]))

    def test_rejects_zero_rows(self):
        with pytest.raises(ValueError):
            VertexProbabilities(np.array([[0.0, 0.0]]), np.array([0]))


class TestProjectProbabilities:
    def setup_method(self):
        self.mesh = grid_plane(2, 2, size_x=1.0)
        self.camera = PinholeCamera(fx=48.0, fy=48.0, cx=24.0, cy=24.0, width=48, height=48)
        self.pose = look_at(np.array([0.0, 0.0, 1.5]), np.zeros(3))
        self.depth = np.full((48, 48), 1.5)

    def test_constant_image_copies_probabilities(self):
        img = np.zeros((48, 48, 2))
        img[..., 0], img[..., 1] = 0.7, 0.3
        vp = project_probabilities([img], [self.depth], [self.pose], self.camera, self.mesh)
        assert np.all(vp.count == 1)
        assert np.allclose(vp.p, [0.7, 0.3], atol=1e-12)

    def test_occluded_vertices_get_uniform(self):
        img = np.zeros((48, 48, 2))
        img[..., 0] = 1.0
        near = np.full((48, 48), 0.5)  # stored depth says something closer
        vp = project_probabilities([img], [near], [self.pose], self.camera, self.mesh)
        assert np.all(vp.count == 0)
        assert np.allclose(vp.p, 0.5)

    def test_two_frames_average(self):
        a = np.zeros((48, 48, 2))
        a[..., 0] = 1.0
        b = np.zeros((48, 48, 2))
        b[..., 1] = 1.0
        vp = project_probabilities(
            [a, b], [self.depth, self.depth], [self.pose, self.pose], self.camera, self.mesh
        )
        assert np.all(vp.count == 2)
        assert np.allclose(vp.p, 0.5, atol=1e-12)

    def test_vertices_behind_camera_are_unobserved(self):
        img = np.full((48, 48, 2), 0.5)
        away = look_at(np.array([0.0, 0.0, 1.5]), np.array([0.0, 0.0, 3.0]))
        vp = project_probabilities([img], [self.depth], [away], self.camera, self.mesh)
        assert np.all(vp.count == 0)
        assert np.allclose(vp.p, 0.5)

    def test_mismatched_lists_rejected(self):
        img = np.full((48, 48, 2), 0.5)
        with pytest.raises(ValueError):
            project_probabilities([img], [], [self.pose], self.camera, self.mesh)


def random_instance(rng, k_classes, grid=(3, 3)):
    """Random mesh + colors + probabilities + params on a fixed grid topology."""
    base = grid_plane(grid[0], grid[1], size_x=1.0)
    verts = base.vertices + rng.normal(0.0, 0.15, base.vertices.shape)
    normals = rng.normal(size=base.vertices.shape)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    mesh = TriangleMesh(vertices=verts, faces=base.faces, normals=normals)
    colors = rng.random((mesh.n_vertices, 3))
    p = rng.dirichlet(np.full(k_classes, 0.7), size=mesh.n_vertices)
    p = np.maximum(p, 1e-9)
    probs = VertexProbabilities(p, np.ones(mesh.n_vertices, dtype=np.int64))
    params = MrfParams(
        lambda_p=rng.uniform(0.5, 2.0),
        lambda_g=rng.uniform(0.05, 0.5),
        theta_p=rng.uniform(1.0, 15.0),
        epsilon=0.01,
    )
    return mesh, colors, probs, params


def all_labelings_energy(costs, edges, weights, labels_table):
    """Energy of every labeling in labels_table (M, V), vectorized."""
    m, v = labels_table.shape
    un = np.zeros(m)
    for j in range(v):
        un += costs[j, labels_table[:, j]]
    diff = labels_table[:, edges[:, 0]] != labels_table[:, edges[:, 1]]
    return un + diff @ weights


def binary_labelings(n):
    idx = np.arange(1 << n, dtype=np.uint32)
    return ((idx[:, None] >> np.arange(n)[None, :]) & 1).astype(np.int64)


def ternary_labelings(n):
    idx = np.arange(3**n, dtype=np.int64)
    return (idx[:, None] // 3 ** np.arange(n)[None, :]) % 3


class TestSolve:
    def test_unary_only_returns_argmax(self):
        rng = np.random.default_rng(11)
        mesh, colors, probs, _ = random_instance(rng, k_classes=3)
        params = MrfParams(lambda_p=0.0, lambda_g=0.0)
        seg = solve(probs, mesh, colors, params)
        assert np.array_equal(seg.labels, np.argmax(probs.p, axis=1))
        assert seg.converged

    def test_single_class_is_trivial(self):
        rng = np.random.default_rng(12)
        mesh, colors, probs, params = random_instance(rng, k_classes=1)
        seg = solve(probs, mesh, colors, params)
        assert np.all(seg.labels == 0)
        assert seg.converged

    def test_zero_sweeps_reports_nonconvergence(self):
        rng = np.random.default_rng(13)
        mesh, colors, probs, params = random_instance(rng, k_classes=2)
        seg = solve(probs, mesh, colors, params, max_sweeps=0)
        assert not seg.converged
        assert np.array_equal(seg.labels, np.argmax(probs.p, axis=1))

    def test_binary_matches_exhaustive_minimum(self):
        # 16 vertices: every one of the 2^16 labelings is scored directly
        rng = np.random.default_rng(42)
        table = binary_labelings(16)
        nontrivial = 0
        for _ in range(100):
            mesh, colors, probs, params = random_instance(rng, k_classes=2)
            assert mesh.n_vertices == 16
            costs = unary_costs(probs.p)
            weights = edge_weights(mesh, colors, params)
            seg = solve(probs, mesh, colors, params)
            energies = all_labelings_energy(costs, mesh.edges, weights, table)
            best = energies.min()
            assert seg.energy == pytest.approx(best, rel=1e-9, abs=1e-9)
            recomputed = labeling_energy(costs, mesh.edges, weights, seg.labels)
            assert recomputed == pytest.approx(seg.energy, rel=1e-12)
            if not np.array_equal(seg.labels, np.argmax(probs.p, axis=1)):
                nontrivial += 1
        # the instances must actually exercise the smoothing term
        assert nontrivial > 10

    def test_three_labels_near_exhaustive_and_beats_argmax(self):
        rng = np.random.default_rng(43)
        table = ternary_labelings(12)
        for _ in range(20):
            mesh, colors, probs, params = random_instance(rng, k_classes=3, grid=(3, 2))
            assert mesh.n_vertices == 12
            costs = unary_costs(probs.p)
            weights = edge_weights(mesh, colors, params)
            seg = solve(probs, mesh, colors, params)
            energies = all_labelings_energy(costs, mesh.edges, weights, table)
            best = energies.min()
            argmax_energy = labeling_energy(
                costs, mesh.edges, weights, np.argmax(probs.p, axis=1)
            )
            assert seg.energy >= best - 1e-9
            assert seg.energy <= best * 1.05 + 1e-9
            assert seg.energy <= argmax_energy + 1e-9

    def test_vertex_sets_partition(self):
        rng = np.random.default_rng(14)
        mesh, colors, probs, params = random_instance(rng, k_classes=3)
        seg = solve(probs, mesh, colors, params)
        sets = seg.vertex_sets()
        assert len(sets) == 3
        combined = np.sort(np.concatenate(sets))
        assert np.array_equal(combined, np.arange(mesh.n_vertices))


class TestProviders:
    def test_oracle_hard_labels(self):
        labels = np.array([0, 1, 2, 1])
        vp = oracle_probabilities(labels, 3, softness=1.0)
        assert np.array_equal(np.argmax(vp.p, axis=1), labels)
        assert np.allclose(vp.p.max(axis=1), 1.0)
        assert np.allclose(np.sort(vp.p, axis=1)[:, :2], 0.0)

    def test_oracle_softness_split(self):
        labels = np.array([1])
        vp = oracle_probabilities(labels, 4, softness=0.8)
        expect_off = 0.2 / 4
        assert vp.p[0, 1] == pytest.approx(0.8 + expect_off)
        assert vp.p[0, 0] == pytest.approx(expect_off)

    def test_oracle_flip_rate(self):
        n = 4000
        labels = np.zeros(n, dtype=int)
        vp = oracle_probabilities(labels, 3, softness=0.9, flip_prob=0.3, seed=5)
        flipped = np.mean(np.argmax(vp.p, axis=1) != labels)
        assert abs(flipped - 0.3) < 0.05

    def test_oracle_validates(self):
        with pytest.raises(ValueError):
            oracle_probabilities(np.array([0, 3]), 3)
        with pytest.raises(ValueError):
            oracle_probabilities(np.array([0]), 2, softness=0.0)

    def test_kmeans_separates_clear_clusters(self):
        rng = np.random.default_rng(9)
        n = 100
        colors = np.vstack(
            [
                rng.normal(0.1, 0.02, (n, 3)),
                rng.normal(0.9, 0.02, (n, 3)),
            ]
        )
        normals = np.tile([0.0, 0.0, 1.0], (2 * n, 1))
        vp = kmeans_probabilities(colors, normals, 2, seed=1)
        got = np.argmax(vp.p, axis=1)
        truth = np.repeat([0, 1], n)
        agreement = np.mean(got == truth)
        assert agreement > 0.99 or agreement < 0.01  # up to label permutation


class TestValidation:
    def test_params_reject_negative(self):
        with pytest.raises(ValueError):
            MrfParams(lambda_p=-1.0)
        with pytest.raises(ValueError):
            MrfParams(epsilon=0.0)

    def test_solve_checks_vertex_count(self):
        rng = np.random.default_rng(15)
        mesh, colors, _, params = random_instance(rng, k_classes=2)
        bad = VertexProbabilities(np.full((3, 2), 0.5), np.ones(3, dtype=np.int64))
        with pytest.raises(ValueError):
            solve(bad, mesh, colors, params)

    def test_segmentation_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            Segmentation(np.array([0, 2]), 2, 0.0)

    def test_labeling_energy_by_hand(self):
        costs = np.array([[0.0, 1.0], [2.0, 0.5]])
        edges = np.array([[0, 1]])
        weights = np.array([0.7])
        assert labeling_energy(costs, edges, weights, np.array([0, 1])) == pytest.approx(1.2)
        assert labeling_energy(costs, edges, weights, np.array([0, 0])) == pytest.approx(2.0)
