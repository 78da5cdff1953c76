"""
Tests for instance parsing, validation and serialization.
"""

import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent.parent / "src"))

from models.errors import InstanceSyntaxError, ValidationError
from models.instances import number_text, parse_instance, serialize_instance
from models.models import ChoiceInstance, CondenseInstance, Graph, MorphHierarchy, SteinerInstance


class TestNumberText:
    """Test exact number rendering"""

    def test_integers_and_decimals(self):
        """Test terminating values print as decimals"""
        assert number_text(7) == "7"
        assert number_text(Fraction(31, 10)) == "3.1"
        assert number_text(Fraction(1, 20)) == "0.05"
        assert number_text(Fraction(-5, 4)) == "-1.25"

    def test_repeating_values_print_as_ratios(self):
        """Test non-terminating values keep p/q form"""
        assert number_text(Fraction(1, 3)) == "1/3"
        assert number_text(Fraction(19, 11)) == "19/11"


class TestParseInstance:
    """Test document-level parsing rules"""

    def test_malformed_json(self):
        """Test bad JSON raises InstanceSyntaxError"""
        with pytest.raises(InstanceSyntaxError):
            parse_instance('{"kind": "mst", "nodes": [1,')

    def test_top_level_must_be_object(self):
        """Test a JSON list is not an instance"""
        with pytest.raises(InstanceSyntaxError):
            parse_instance("[]")

    def test_unknown_kind(self):
        """Test an unknown kind is reported on the kind field"""
        with pytest.raises(ValidationError) as exc:
            parse_instance('{"kind": "teleport"}')
        assert exc.value.path == "kind"

    def test_kind_mismatch(self, fixture_text):
        """Test the requested kind must match the declared one"""
        with pytest.raises(ValidationError):
            parse_instance(fixture_text("knapsack.json"), "mchoice")

    def test_graph_kinds_interchangeable(self, fixture_text):
        """Test a graph file serves every graph command"""
        graph = parse_instance(fixture_text("mst.json"), "maxleaf")
        assert isinstance(graph, Graph)
        assert len(graph.edges) == 9

    def test_missing_field(self):
        """Test a missing field is named in the error"""
        doc = {"kind": "steiner", "nodes": [1, 2], "edges": [[1, 2, 1]]}
        with pytest.raises(ValidationError) as exc:
            parse_instance(json.dumps(doc))
        assert exc.value.path == "terminals"

    def test_numbers_are_exact(self):
        """Test strings and floats parse to exact fractions"""
        doc = {"kind": "knapsack", "items": [["a", "3.1", 0.1], ["b", "1/3", 2]], "budget": 5}
        instance = parse_instance(json.dumps(doc))
        assert instance.items[0].profit == Fraction(31, 10)
        assert instance.items[0].weight == Fraction(1, 10)
        assert instance.items[1].profit == Fraction(1, 3)

    def test_booleans_are_not_numbers(self):
        """Test true/false are rejected as numbers"""
        doc = {"kind": "knapsack", "items": [["a", True, 1]], "budget": 5}
        with pytest.raises(ValidationError) as exc:
            parse_instance(json.dumps(doc))
        assert exc.value.path == "items[0][1]"

    def test_mixed_id_types(self):
        """Test ids must share one type"""
        doc = {"kind": "knapsack", "items": [["a", 1, 1], [2, 1, 1]], "budget": 5}
        with pytest.raises(ValidationError):
            parse_instance(json.dumps(doc))


class TestKindValidation:
    """Test per-kind validation rules"""

    def test_mchoice_ids_unique_per_group(self, load_instance):
        """Test a repeated id across groups is allowed"""
        instance = load_instance("regions4_mchoice.json")
        assert isinstance(instance, ChoiceInstance)
        assert [len(g) for g in instance.groups] == [3, 2, 3, 2]

    def test_mchoice_duplicate_in_group(self):
        """Test a repeated id inside one group is rejected"""
        doc = {"kind": "mchoice", "groups": [[["x", 1, 1], ["x", 2, 2]]], "budget": 5}
        with pytest.raises(ValidationError):
            parse_instance(json.dumps(doc))

    def test_restructure_option_ids_global(self):
        """Test restructuring needs globally unique option ids"""
        doc = {
            "kind": "restructure",
            "problem": {"kind": "mchoice-solution", "groups": [[["x", 1, 1]], [["x", 1, 1]]], "budget": 5},
            "initial": ["x"],
            "goal": ["x"],
            "budget": 1,
        }
        with pytest.raises(ValidationError):
            parse_instance(json.dumps(doc))

    def test_condense_bounds_exclusive(self, fixture_text):
        """Test b cannot be combined with b_minus/b_plus"""
        doc = json.loads(fixture_text("overlay14.json"))
        doc["b"] = 12
        with pytest.raises(ValidationError):
            parse_instance(json.dumps(doc))

    def test_condense_needs_a_bound(self, fixture_text):
        """Test a condense instance without bounds is rejected"""
        doc = json.loads(fixture_text("overlay14.json"))
        del doc["b_plus"]
        with pytest.raises(ValidationError):
            parse_instance(json.dumps(doc))

    def test_hotlink_zero_weights(self, fixture_text):
        """Test all-zero access weights are rejected"""
        doc = json.loads(fixture_text("hotlink.json"))
        doc["weights"] = {"4": 0}
        with pytest.raises(ValidationError):
            parse_instance(json.dumps(doc))

    def test_morpho_compatibility_range(self, fixture_text):
        """Test compatibility values outside [0, 3] are rejected"""
        doc = json.loads(fixture_text("car_repair.json"))
        doc["tables"][-1]["values"][0][0] = 4
        with pytest.raises(ValidationError):
            parse_instance(json.dumps(doc))

    def test_morpho_leaf_without_alternatives(self, fixture_text):
        """Test every leaf needs design alternatives"""
        doc = json.loads(fixture_text("car_repair.json"))
        del doc["alternatives"]["G"]
        with pytest.raises(ValidationError) as exc:
            parse_instance(json.dumps(doc))
        assert exc.value.path == "alternatives[G]"

    def test_morpho_asymmetric_tables(self, fixture_text):
        """Test mirrored tables must agree"""
        doc = json.loads(fixture_text("car_repair.json"))
        doc["tables"].append(
            {"first": "G", "second": "K", "rows": ["G0"], "cols": ["K0"], "values": [[1]]}
        )
        with pytest.raises(ValidationError):
            parse_instance(json.dumps(doc))

    def test_morpho_aliases_are_logged(self, fixture_text, caplog):
        """Test relabelled rows produce a warning"""
        with caplog.at_level(logging.WARNING):
            hierarchy = parse_instance(fixture_text("car_repair.json"))
        assert "X3->X2" in caplog.text
        table = hierarchy.tables[0]
        assert table.values[("X2", "F1")] == 0


class TestSerializeInstance:
    """Test that serialized instances parse back to the same value"""

    def test_steiner(self, load_instance):
        """Test a Steiner instance survives serialization"""
        instance = load_instance("steiner.json")
        assert isinstance(instance, SteinerInstance)
        assert parse_instance(serialize_instance(instance)) == instance

    def test_condense(self, load_instance):
        """Test an overlay tree with bounds survives serialization"""
        instance = load_instance("overlay14.json")
        assert isinstance(instance, CondenseInstance)
        assert parse_instance(serialize_instance(instance)) == instance

    def test_morpho(self, load_instance):
        """Test a morphological hierarchy survives serialization"""
        instance = load_instance("car_repair.json")
        assert isinstance(instance, MorphHierarchy)
        assert parse_instance(serialize_instance(instance)) == instance

    def test_values_written_as_strings(self, load_instance):
        """Test weights are written as exact strings"""
        doc = json.loads(serialize_instance(load_instance("regions4_mchoice.json")))
        assert doc["groups"][0][1] == ["s11", "3.1", "1.5"]
        assert doc["budget"] == "2.9"
