"""Graph generators and BFS metric."""

import numpy as np
import pytest

from hyplora import Graph, ValidationError, generate_reference_graph, graph_shortest_paths
from hyplora.graphs import bfs_distances, largest_component


def balanced_binary_tree(depth: int) -> Graph:
    n = 2 ** (depth + 1) - 1
    g = Graph(n)
    for v in range(1, n):
        g.add_edge(v, (v - 1) // 2)
    return g


class TestBfs:
    def test_path_endpoints(self):
        g = Graph(3)
        g.add_edge(0, 1)
        g.add_edge(1, 2)
        dm = graph_shortest_paths(g)
        assert dm.d[0, 2] == 2.0

    def test_complete_graph(self):
        g = Graph(5)
        for u in range(5):
            for v in range(u + 1, 5):
                g.add_edge(u, v)
        dm = graph_shortest_paths(g)
        off = dm.d[~np.eye(5, dtype=bool)]
        assert np.all(off == 1.0)

    def test_binary_tree_depth_four_leaf_span(self):
        g = balanced_binary_tree(4)
        dm = graph_shortest_paths(g)
        leftmost = 2 ** 4 - 1      # first leaf in level order
        rightmost = 2 ** 5 - 2     # last leaf
        assert dm.d[leftmost, rightmost] == 8.0

    def test_largest_component_extraction(self):
        g = Graph(7)
        g.add_edge(0, 1)
        g.add_edge(1, 2)
        g.add_edge(4, 5)           # smaller component; node 6 isolated
        comp = largest_component(g)
        assert comp.n == 3
        assert bfs_distances(comp).max() == 2

    def test_empty_graph_rejected(self):
        with pytest.raises(ValidationError):
            graph_shortest_paths(Graph(0))


class TestGenerators:
    def test_tree_is_acyclic_and_connected(self):
        g = generate_reference_graph("tree", 200, None, seed=3)
        assert g.num_edges() == 199
        assert largest_component(g).n == 200

    def test_scale_free_edge_count(self):
        g = generate_reference_graph("scale_free", 100, {"m": 2}, seed=3)
        # m seed vertices, each later vertex adds m edges
        assert g.num_edges() == 2 * (100 - 2)

    def test_scale_free_has_hubs(self):
        g = generate_reference_graph("scale_free", 500, {"m": 2}, seed=3)
        degrees = sorted(len(a) for a in g.adj)
        assert degrees[-1] >= 20  # preferential attachment concentrates degree

    def test_random_graph_density(self):
        g = generate_reference_graph("random", 500, {"p": 0.02}, seed=3)
        expected = 0.02 * 500 * 499 / 2
        assert abs(g.num_edges() - expected) < 0.25 * expected

    def test_determinism(self):
        for kind, params in (("tree", None), ("scale_free", {"m": 2}), ("random", {"p": 0.05})):
            a = generate_reference_graph(kind, 60, params, seed=11)
            b = generate_reference_graph(kind, 60, params, seed=11)
            assert sorted(a.edges()) == sorted(b.edges())

    def test_invalid_parameters(self):
        with pytest.raises(ValidationError):
            generate_reference_graph("random", 10, {"p": 0.0}, seed=0)
        with pytest.raises(ValidationError):
            generate_reference_graph("random", 10, {"p": 1.5}, seed=0)
        with pytest.raises(ValidationError):
            generate_reference_graph("scale_free", 10, {"m": 10}, seed=0)
        with pytest.raises(ValidationError):
            generate_reference_graph("tree", 3, None, seed=0)
        with pytest.raises(ValidationError):
            generate_reference_graph("mystery", 10, None, seed=0)
