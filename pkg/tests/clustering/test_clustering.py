"""
Tests for clustering.py - agglomerative clustering over estimate vectors.
"""

import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent.parent / "src"))

from clustering import (
    aggregate_pair,
    agglomerate,
    agglomerate_ordinal,
    dendrogram_tree,
    distance_matrix,
    distance_report,
    partition_at,
    proximity,
    reported_distance,
)
from models.errors import LengthMismatch, ValidationError
from models.models import ClusterConfig, ElementTable


def table_of(rows, **config) -> ElementTable:
    return ElementTable(
        tuple(range(1, len(rows) + 1)),
        tuple(tuple(Fraction(x) for x in row) for row in rows),
        ClusterConfig(**config),
    )


class TestProximity:
    """Test vector distances and aggregation"""

    def test_metrics(self):
        """Test euclidean (squared), manhattan and chebyshev values"""
        a, b = (0, 5, 2, 3), (5, 2, 3, 3)
        assert proximity(a, b, "euclidean") == 35
        assert proximity(a, b, "manhattan") == 9
        assert proximity(a, b, "chebyshev") == 5

    def test_reported_distance_takes_root(self):
        """Test the euclidean report is the square root of the exact value"""
        assert reported_distance(Fraction(2)) == pytest.approx(1.414214, abs=1e-6)
        assert reported_distance(Fraction(3), "manhattan") == 3.0

    def test_length_mismatch(self):
        """Test vectors of different length are rejected"""
        with pytest.raises(LengthMismatch):
            proximity((1, 2), (1, 2, 3))

    def test_unknown_metric(self):
        """Test an unknown metric is a validation error"""
        with pytest.raises(ValidationError):
            proximity((1,), (2,), "cosine")

    def test_aggregation_rules(self):
        """Test average, min and max aggregation"""
        assert aggregate_pair((1, 4), (2, 2)) == (Fraction(3, 2), Fraction(3))
        assert aggregate_pair((1, 4), (2, 2), "min") == (1, 2)
        assert aggregate_pair((1, 4), (2, 2), "max") == (2, 4)

    def test_distance_matrix_symmetric(self, load_instance):
        """Test the matrix is symmetric with a zero diagonal"""
        table = load_instance("elements8.json")
        matrix = distance_matrix(table)
        assert all(matrix[i][i] == 0 for i in range(8))
        assert all(matrix[i][j] == matrix[j][i] for i in range(8) for j in range(8))
        assert matrix[6][7] == 2
        assert matrix[1][3] == 4

    def test_distance_report(self, load_instance):
        """Test float distances are square roots of the exact matrix"""
        report = distance_report(load_instance("elements8.json"))
        assert report.shape == (8, 8)
        assert np.isclose(report[0][5], np.sqrt(5))


class TestAgglomerate:
    """Test the standard agglomerative procedure on the eight-element table"""

    def test_first_merges(self, load_instance):
        """Test the first four merge steps and their proximities"""
        dendrogram = agglomerate(load_instance("elements8.json"))
        steps = dendrogram.steps
        assert (steps[0].left, steps[0].right, steps[0].proximity) == ((7,), (8,), 2)
        assert (steps[1].left, steps[1].right, steps[1].proximity) == ((2,), (4,), 4)
        # (1, 6) and (5, 6) tie at 5; the smaller element pair wins
        assert (steps[2].left, steps[2].right, steps[2].proximity) == ((1,), (6,), 5)
        assert (steps[3].left, steps[3].right, steps[3].proximity) == ((5,), (7, 8), Fraction(13, 2))

    def test_runs_to_one_cluster(self, load_instance):
        """Test the full run merges everything in n - 1 steps"""
        dendrogram = agglomerate(load_instance("elements8.json"))
        assert len(dendrogram.steps) == 7
        assert len(dendrogram.clusters) == 1
        assert sorted(dendrogram.clusters[0]) == list(range(1, 9))
        assert [s.index for s in dendrogram.steps] == list(range(1, 8))

    def test_stops_at_cluster_count(self, load_instance):
        """Test clustering stops at the requested number of clusters"""
        dendrogram = agglomerate(load_instance("elements8.json"), ClusterConfig(clusters=3))
        assert len(dendrogram.steps) == 5
        assert len(dendrogram.clusters) == 3

    def test_stops_at_max_distance(self, load_instance):
        """Test a distance threshold stops merging early"""
        dendrogram = agglomerate(load_instance("elements8.json"), ClusterConfig(max_distance=Fraction(2)))
        assert [s.proximity for s in dendrogram.steps] == [2, 4]

    def test_partition_at(self, load_instance):
        """Test the partition after three steps"""
        dendrogram = agglomerate(load_instance("elements8.json"))
        assert partition_at(dendrogram, 3) == ((1, 6), (2, 4), (3,), (5,), (7, 8))
        assert partition_at(dendrogram, 0) == tuple((e,) for e in range(1, 9))

    def test_proximities_do_not_depend_on_order(self, load_instance):
        """Test reversing the input rows yields the same merge sequence"""
        table = load_instance("elements8.json")
        reversed_table = ElementTable(table.elements[::-1], table.attributes[::-1], table.config)
        forward = [(s.left, s.right, s.proximity) for s in agglomerate(table).steps]
        backward = [(s.left, s.right, s.proximity) for s in agglomerate(reversed_table).steps]
        assert forward == backward

    def test_rejects_ragged_rows(self):
        """Test rows must have equal width"""
        table = ElementTable((1, 2), ((Fraction(1),), (Fraction(1), Fraction(2))))
        with pytest.raises(ValidationError) as exc:
            agglomerate(table)
        assert exc.value.path == "attrs[1]"

    def test_rejects_empty_table(self):
        """Test a table without elements is rejected"""
        with pytest.raises(ValidationError):
            agglomerate(ElementTable((), ()))

    def test_unknown_rule(self):
        """Test an unknown aggregation rule is rejected"""
        with pytest.raises(ValidationError):
            agglomerate(table_of([(1,), (2,)], rule="median"))


class TestOrdinalVariant:
    """Test Pareto-based clustering of ordinal vectors"""

    def test_pareto_merge(self):
        """Test the nondominated difference vector is merged first"""
        dendrogram = agglomerate_ordinal(table_of([(1, 1), (1, 2), (3, 3)]))
        first = dendrogram.steps[0]
        assert (first.left, first.right) == ((1,), (2,))
        assert first.vector == (0, 1)
        assert first.proximity == 1
        assert dendrogram.metric == "ordinal"
        assert len(dendrogram.steps) == 2


class TestDendrogramTree:
    """Test the merge tree built from a dendrogram"""

    def test_tree_shape(self, load_instance):
        """Test elements are leaves and the last step is the root"""
        tree = dendrogram_tree(agglomerate(load_instance("elements8.json")))
        assert tree.root == 15
        assert tree.leaves == tuple(range(1, 9))
        assert tree.label(15) == "step 7"
        assert tree.parent[7] == tree.parent[8] == 9

    def test_partial_dendrogram_gets_partition_root(self, load_instance):
        """Test several remaining clusters hang below one partition node"""
        dendrogram = agglomerate(load_instance("elements8.json"), ClusterConfig(clusters=3))
        tree = dendrogram_tree(dendrogram)
        assert tree.label(tree.root) == "partition"
        assert len(tree.children[tree.root]) == 3
