"""
Tests for core.py - spanning trees, connectivity checks, tree metrics and DOT export.
"""

import itertools
import random
import sys
from fractions import Fraction
from pathlib import Path

import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent.parent / "src"))

from core import (
    DisjointSet,
    is_spanning_tree,
    mst,
    prim,
    spanning_forest,
    spanning_trees,
    structure_proximity,
    to_dot,
    tree_metrics,
    vertex_connectivity_at_least,
)
from models.errors import DisconnectedInput, EmptyGraph, NegativeLeafWeight
from models.models import Graph, RootedTree


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(range(1, n + 1), [(u, v, 1) for u, v in itertools.combinations(range(1, n + 1), 2)])


def random_connected_graph(rng: random.Random, n: int) -> Graph:
    edges = {}
    for v in range(2, n + 1):
        edges[(rng.randint(1, v - 1), v)] = rng.randint(1, 9)
    for u, v in itertools.combinations(range(1, n + 1), 2):
        if (u, v) not in edges and rng.random() < 0.3:
            edges[(u, v)] = rng.randint(1, 9)
    return Graph.from_edges(range(1, n + 1), [(u, v, w) for (u, v), w in edges.items()])


class TestDisjointSet:
    """Test the union-find structure"""

    def test_union_joins_sets_once(self):
        """Test that a second union of the same pair reports no change"""
        dsu = DisjointSet([1, 2, 3])
        assert dsu.union(1, 2) is True
        assert dsu.union(2, 1) is False
        assert dsu.find(1) == dsu.find(2)
        assert dsu.find(3) != dsu.find(1)

    def test_add_is_idempotent(self):
        """Test adding an item twice keeps it a singleton"""
        dsu = DisjointSet()
        dsu.add(5)
        dsu.add(5)
        assert dsu.find(5) == 5


class TestMinimumSpanningTree:
    """Test Kruskal, Prim and spanning forests"""

    def test_mst_fixture(self, load_instance):
        """Test the MST of the seven-node fixture graph"""
        graph = load_instance("mst.json")
        tree = mst(graph)
        assert tree.total_weight == 10
        assert tree.edges == {(2, 7), (5, 6), (1, 2), (2, 3), (3, 4), (6, 7)}

    def test_prim_matches_kruskal_weight(self):
        """Test both algorithms agree on the weight over random graphs"""
        rng = random.Random(7)
        for _ in range(500):
            graph = random_connected_graph(rng, rng.randint(2, 9))
            assert prim(graph).total_weight == mst(graph).total_weight
            assert is_spanning_tree(graph, mst(graph).edges)

    def test_mst_is_minimum_by_enumeration(self):
        """Test the MST weight against every spanning tree of small graphs"""
        rng = random.Random(11)
        for _ in range(10):
            graph = random_connected_graph(rng, rng.randint(2, 6))
            best = min(graph.weight_of(t) for t in spanning_trees(graph))
            assert mst(graph).total_weight == best

    def test_mst_rejects_disconnected_graph(self):
        """Test a disconnected graph raises DisconnectedInput"""
        graph = Graph.from_edges([1, 2, 3, 4], [(1, 2, 1), (3, 4, 1)])
        with pytest.raises(DisconnectedInput):
            mst(graph)

    def test_mst_rejects_empty_graph(self):
        """Test an empty graph raises EmptyGraph"""
        with pytest.raises(EmptyGraph):
            mst(Graph.from_edges([], []))

    def test_spanning_forest_covers_components(self):
        """Test the forest has n - components edges"""
        graph = Graph.from_edges([1, 2, 3, 4, 5], [(1, 2, 1), (2, 3, 2), (1, 3, 3), (4, 5, 1)])
        forest = spanning_forest(graph)
        assert len(forest.edges) == 3
        assert forest.total_weight == 4

    def test_single_node_graph(self):
        """Test a single node has an empty spanning tree"""
        graph = Graph.from_edges([1], [])
        assert mst(graph).edges == frozenset()


class TestSpanningTrees:
    """Test spanning-tree enumeration and recognition"""

    def test_complete_graph_count(self):
        """Test Cayley's formula for K4"""
        assert len(list(spanning_trees(complete_graph(4)))) == 16

    def test_is_spanning_tree_rejects_cycle(self):
        """Test a cycle plus a missing node is not a spanning tree"""
        graph = complete_graph(4)
        assert not is_spanning_tree(graph, [(1, 2), (2, 3), (1, 3)])
        assert is_spanning_tree(graph, [(1, 2), (2, 3), (3, 4)])

    def test_is_spanning_tree_rejects_foreign_edge(self):
        """Test edges outside the graph are rejected"""
        graph = Graph.from_edges([1, 2, 3], [(1, 2, 1), (2, 3, 1)])
        assert not is_spanning_tree(graph, [(1, 2), (1, 3)])


class TestVertexConnectivity:
    """Test the Menger-based connectivity check"""

    def test_cycle_is_two_connected(self):
        """Test a 5-cycle is 2- but not 3-connected"""
        cycle = Graph.from_edges(range(1, 6), [(i, i % 5 + 1, 1) for i in range(1, 6)])
        assert vertex_connectivity_at_least(cycle, 2)
        assert not vertex_connectivity_at_least(cycle, 3)

    def test_complete_graph(self):
        """Test K4 is 3-connected"""
        assert vertex_connectivity_at_least(complete_graph(4), 3)

    def test_bowtie_has_cut_vertex(self):
        """Test two triangles sharing a node are only 1-connected"""
        bowtie = Graph.from_edges(
            range(1, 6), [(1, 2, 1), (2, 3, 1), (1, 3, 1), (3, 4, 1), (4, 5, 1), (3, 5, 1)]
        )
        assert vertex_connectivity_at_least(bowtie, 1)
        assert not vertex_connectivity_at_least(bowtie, 2)

    def test_too_few_nodes(self):
        """Test k-connectivity needs at least k + 1 nodes"""
        assert not vertex_connectivity_at_least(complete_graph(3), 3)


class TestTreeMetrics:
    """Test structure metrics of rooted trees"""

    def test_unit_weights(self):
        """Test depth, degree and leaf statistics"""
        tree = RootedTree.from_parents(0, {1: 0, 2: 0, 3: 1})
        metrics = tree_metrics(tree)
        assert metrics.depth == 2
        assert metrics.max_degree == 2
        assert metrics.leaf_count == 2
        assert metrics.node_count == 4
        assert metrics.expected_root_leaf_length == Fraction(3, 2)

    def test_weighted_leaves(self):
        """Test the weighted mean root-to-leaf length"""
        tree = RootedTree.from_parents(0, {1: 0, 2: 0, 3: 1})
        assert tree_metrics(tree, {2: 1, 3: 3}).expected_root_leaf_length == Fraction(7, 4)

    def test_negative_weight(self):
        """Test a negative leaf weight is rejected"""
        tree = RootedTree.from_parents(0, {1: 0})
        with pytest.raises(NegativeLeafWeight):
            tree_metrics(tree, {1: -1})

    def test_structure_proximity(self):
        """Test the symmetric-difference size"""
        assert structure_proximity({1, 2, 3}, {2, 3, 4}) == 2
        assert structure_proximity([], []) == 0


class TestDot:
    """Test Graphviz export"""

    def test_graph_dot(self):
        """Test an undirected graph renders with weights and highlights"""
        graph = Graph.from_edges([1, 2, 3], [(1, 2, 2), (2, 3, Fraction(1, 2))])
        dot = to_dot(graph, highlight_edges=[(2, 1)])
        assert dot.startswith("graph G {")
        assert '1 -- 2 [label="2", color="red", penwidth="2"];' in dot
        assert '2 -- 3 [label="0.5"];' in dot
        assert dot.rstrip().endswith("}")

    def test_tree_dot(self):
        """Test a rooted tree renders as a digraph with labels"""
        tree = RootedTree.from_parents(0, {1: 0}, labels={1: "child"})
        dot = to_dot(tree, name="T")
        assert dot.startswith("digraph T {")
        assert "0 -> 1;" in dot
        assert '1 [label="child"];' in dot

    def test_labels_escaped(self):
        """Test quotes and backslashes in labels stay inside the quoted value"""
        tree = RootedTree.from_parents(0, {1: 0, 2: 0}, labels={1: 'say "hi"', 2: "a\\b"})
        dot = to_dot(tree)
        assert '1 [label="say \\"hi\\""];' in dot
        assert '2 [label="a\\\\b"];' in dot
