"""
Tests for condense.py - overlay-tree condensing plans, exact and approximate solvers.
"""

import random
import sys
from fractions import Fraction
from pathlib import Path

import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent.parent / "src"))

from condense import (
    apply_plan,
    cascade_bottom_up,
    evaluate_plan,
    solve_auxiliary,
    solve_kind1,
    solve_kind2,
    star_from_tree,
    tail_weight,
    tree_weight,
)
from models.errors import Infeasible, TooLargeForExact, UnknownKind, UnknownVertex, ValidationError
from models.models import (
    CondensePlan,
    FanGroup,
    FanInstance,
    FanOption,
    OverlayTree,
    StarChild,
    StarInstance,
)


def random_overlay(rng: random.Random, n: int) -> OverlayTree:
    parent = {v: rng.randrange(v) for v in range(1, n)}
    ram = {v: rng.randint(1, 5) for v in range(n)}
    freq = {v: rng.randint(1, 6) for v in range(1, n)}
    return OverlayTree.from_parents(0, parent, ram, freq)


def random_three_level(rng: random.Random) -> OverlayTree:
    """Root, a middle layer and at least one vertex below it, at most 12 non-root vertices"""
    middle = rng.randint(1, 5)
    bottom = rng.randint(1, 12 - middle)
    parent = {v: 0 for v in range(1, middle + 1)}
    parent.update({v: rng.randint(1, middle) for v in range(middle + 1, middle + bottom + 1)})
    ram = {v: rng.randint(1, 5) for v in range(middle + bottom + 1)}
    freq = {v: rng.randint(1, 6) for v in parent}
    return OverlayTree.from_parents(0, parent, ram, freq)


def all_plans(tree: OverlayTree):
    movable = sorted(tree.parent)
    for mask in range(1 << len(movable)):
        yield frozenset(v for i, v in enumerate(movable) if mask >> i & 1)


def best_saved(tree: OverlayTree, feasible):
    """Brute-force optimum measured on the condensed trees themselves"""
    best = None
    for selected in all_plans(tree):
        condensed = apply_plan(tree, CondensePlan(selected))
        kernel = condensed.ram(condensed.root)
        tail = tail_weight(condensed, condensed.root)
        if feasible(kernel, tail):
            saved = sum((tree.freq(v) for v in selected), Fraction(0))
            best = saved if best is None else max(best, saved)
    return best


class TestPlans:
    """Test applying and measuring condensing plans on the fourteen-vertex overlay"""

    def test_tree_weight(self, load_instance):
        """Test the heaviest root-to-leaf RAM chain"""
        tree = load_instance("overlay14.json").tree
        assert tree_weight(tree) == 12
        assert tail_weight(tree, 0) == 8
        assert tail_weight(tree, 5) == 2

    def test_tail_weight_unknown_vertex(self, load_instance):
        """Test an unknown vertex is reported"""
        with pytest.raises(UnknownVertex):
            tail_weight(load_instance("overlay14.json").tree, 99)

    def test_apply_plan_merges_groups(self, load_instance):
        """Test merged groups keep the top id and get a joined label"""
        tree = load_instance("overlay14.json").tree
        condensed = apply_plan(tree, CondensePlan(frozenset({1, 2, 7, 10})))
        assert condensed.label(0) == "J(0,1,2)"
        assert condensed.label(3) == "J(3,7)"
        assert condensed.label(5) == "J(5,10)"
        assert condensed.children[0] == (3, 4, 5, 11, 12)
        assert condensed.ram(0) == 9
        assert condensed.ram(5) == 4
        assert condensed.freq(5) == 6

    def test_evaluate_plan(self, load_instance):
        """Test kernel, tail and saved calls of a plan"""
        tree = load_instance("overlay14.json").tree
        result = evaluate_plan(tree, CondensePlan(frozenset({1, 2, 7, 10})))
        assert result.kernel == 9
        assert result.tail == 6
        assert result.weight == 15
        assert result.saved == 20
        assert tree_weight(result.tree) == result.weight

    def test_empty_plan(self, load_instance):
        """Test the empty plan leaves the tree unchanged"""
        tree = load_instance("overlay14.json").tree
        result = evaluate_plan(tree, CondensePlan())
        assert result.saved == 0
        assert result.weight == tree_weight(tree)
        assert result.tree == tree

    def test_root_not_condensable(self, load_instance):
        """Test the root cannot be in a plan"""
        tree = load_instance("overlay14.json").tree
        with pytest.raises(ValidationError):
            apply_plan(tree, CondensePlan(frozenset({0})))


class TestExactSolvers:
    """Test exhaustive condensing"""

    def test_fixture_kind2(self, load_instance):
        """Test the optimal split-bound plan of the overlay fixture"""
        instance = load_instance("overlay14.json")
        result = solve_kind2(instance.tree, instance.b_minus, instance.b_plus)
        assert result.saved == 22
        assert result.plan.selected == {1, 2, 4, 6, 7, 10}
        assert (result.kernel, result.tail) == (10, 6)
        assert result.tree.label(0) == "J(0,1,2,4)"
        assert result.tree.label(3) == "J(3,6,7)"

    @pytest.mark.slow
    def test_fixture_kind2_brute_force(self, load_instance):
        """Test the fixture optimum against every plan"""
        instance = load_instance("overlay14.json")
        optimum = best_saved(instance.tree, lambda k, t: k <= 10 and t <= 6)
        assert solve_kind2(instance.tree, 10, 6).saved == optimum

    @pytest.mark.slow
    def test_kind1_against_brute_force(self):
        """Test the single-bound solver on random overlays"""
        rng = random.Random(51)
        for _ in range(200):
            tree = random_overlay(rng, rng.randint(2, 13))
            b = Fraction(rng.randint(3, 40))
            optimum = best_saved(tree, lambda k, t: k + t <= b)
            if optimum is None:
                with pytest.raises(Infeasible):
                    solve_kind1(tree, b)
                continue
            result = solve_kind1(tree, b)
            assert result.saved == optimum
            assert result.weight <= b

    @pytest.mark.slow
    def test_kind2_against_brute_force(self):
        """Test the split-bound solver on random overlays"""
        rng = random.Random(53)
        for _ in range(200):
            tree = random_overlay(rng, rng.randint(2, 13))
            b_minus, b_plus = Fraction(rng.randint(3, 30)), Fraction(rng.randint(2, 25))
            optimum = best_saved(tree, lambda k, t: k <= b_minus and t <= b_plus)
            if optimum is None:
                with pytest.raises(Infeasible):
                    solve_kind2(tree, b_minus, b_plus)
                continue
            result = solve_kind2(tree, b_minus, b_plus)
            assert result.saved == optimum
            assert result.kernel <= b_minus and result.tail <= b_plus

    def test_infeasible_bound(self, load_instance):
        """Test a bound below the root RAM has no plan"""
        tree = load_instance("overlay14.json").tree
        with pytest.raises(Infeasible):
            solve_kind1(tree, 3)

    def test_size_bound(self, load_instance):
        """Test the exhaustive solver refuses large trees"""
        tree = load_instance("overlay14.json").tree
        with pytest.raises(TooLargeForExact):
            solve_kind1(tree, 20, limit=5)

    def test_unknown_mode(self, load_instance):
        """Test an unknown mode is rejected"""
        tree = load_instance("overlay14.json").tree
        with pytest.raises(ValidationError):
            solve_kind1(tree, 20, mode="guess")


class TestApproximation:
    """Test the bottom-up approximation"""

    def test_fixture(self, load_instance):
        """Test the cascade on the overlay fixture stays within its guarantees"""
        instance = load_instance("overlay14.json")
        epsilon = delta = Fraction(1, 5)
        result = cascade_bottom_up(instance.tree, 10, 6, epsilon, delta)
        assert result.saved >= (1 - epsilon) * 22
        assert result.kernel <= 10 * (1 + delta)
        assert result.tail <= 6 * (1 + delta)
        assert result == evaluate_plan(instance.tree, result.plan)

    def test_kind2_guarantee(self):
        """Test saved calls and relaxed bounds on random overlays"""
        rng = random.Random(57)
        epsilon = delta = Fraction(1, 4)
        for _ in range(20):
            tree = random_overlay(rng, rng.randint(2, 7))
            b_minus, b_plus = Fraction(rng.randint(4, 14)), Fraction(rng.randint(3, 10))
            optimum = best_saved(tree, lambda k, t: k <= b_minus and t <= b_plus)
            if optimum is None:
                continue
            result = solve_kind2(tree, b_minus, b_plus, "approx", epsilon, delta)
            assert result.saved >= (1 - epsilon) * optimum
            assert result.kernel <= (1 + delta) * b_minus
            assert result.tail <= (1 + delta) * b_plus

    @pytest.mark.slow
    def test_three_level_cascade(self):
        """Test the cascade on three-level overlays stays within its guarantees"""
        rng = random.Random(61)
        epsilon = delta = Fraction(1, 5)
        for _ in range(200):
            tree = random_three_level(rng)
            assert tree.height == 2
            b_minus, b_plus = Fraction(rng.randint(4, 30)), Fraction(rng.randint(3, 20))
            optimum = best_saved(tree, lambda k, t: k <= b_minus and t <= b_plus)
            if optimum is None:
                continue
            result = cascade_bottom_up(tree, b_minus, b_plus, epsilon, delta)
            assert result.saved >= (1 - epsilon) * optimum
            assert result.kernel <= (1 + delta) * b_minus
            assert result.tail <= (1 + delta) * b_plus
            assert result == evaluate_plan(tree, result.plan)

    def test_kind1_guarantee(self):
        """Test the single-bound approximation on random overlays"""
        rng = random.Random(59)
        epsilon = delta = Fraction(1, 4)
        for _ in range(20):
            tree = random_overlay(rng, rng.randint(2, 7))
            b = Fraction(rng.randint(4, 20))
            optimum = best_saved(tree, lambda k, t: k + t <= b)
            if optimum is None:
                continue
            result = solve_kind1(tree, b, "approx", epsilon, delta)
            assert result.saved >= (1 - epsilon) * optimum
            assert result.weight <= (1 + delta) * b

    def test_invalid_epsilon(self, load_instance):
        """Test epsilon is validated"""
        from models.errors import InvalidEpsilon

        with pytest.raises(InvalidEpsilon):
            cascade_bottom_up(load_instance("overlay14.json").tree, 10, 6, epsilon=0)


class TestAuxiliaryProblems:
    """Test the knapsack-family subproblems"""

    def star(self, **bounds) -> StarInstance:
        children = (
            StarChild("a", Fraction(3), Fraction(5)),
            StarChild("b", Fraction(2), Fraction(4)),
            StarChild("c", Fraction(4), Fraction(1)),
        )
        return StarInstance(Fraction(2), children, **bounds)

    def test_star_single_bound(self):
        """Test problem 1.1 merges the most frequent child that fits"""
        selection = solve_auxiliary("1.1", self.star(b=Fraction(9)))
        assert selection.chosen == ("a",)
        assert selection.profit == 5
        assert selection.weight == 3

    def test_star_split_bounds(self):
        """Test problem 1.2 forces a child heavier than the tail bound"""
        selection = solve_auxiliary("1.2", self.star(b_minus=Fraction(6), b_plus=Fraction(3)))
        assert selection.chosen == ("c",)
        assert selection.profit == 1

    def test_star_fptas(self):
        """Test the FPTAS variant of problem 1.1"""
        selection = solve_auxiliary("1.1", self.star(b=Fraction(9)), epsilon=Fraction(1, 10))
        assert selection.profit == 5

    def test_star_rejects_tails(self):
        """Test problem 1.1 takes leaf children only"""
        star = StarInstance(Fraction(1), (StarChild("a", Fraction(1), Fraction(1), Fraction(2)),), b=Fraction(9))
        with pytest.raises(ValidationError):
            solve_auxiliary("1.1", star)
        assert solve_auxiliary("1.3", star).chosen == ("a",)

    def test_missing_bounds(self):
        """Test split problems need both bounds"""
        with pytest.raises(ValidationError):
            solve_auxiliary("1.2", self.star(b=Fraction(9)))

    def test_unknown_kind(self):
        """Test an unknown problem name"""
        with pytest.raises(UnknownKind):
            solve_auxiliary("3.1", self.star(b=Fraction(9)))

    def test_fan_split_bounds(self):
        """Test problem 2.4 picks the merged second option"""
        group = FanGroup(
            "g1",
            Fraction(3),
            (FanOption(0, Fraction(0), Fraction(2), Fraction(1)), FanOption(1, Fraction(2), Fraction(3), Fraction(0))),
        )
        fan = FanInstance(Fraction(1), (group,), b_minus=Fraction(4), b_plus=Fraction(3))
        selection = solve_auxiliary("2.4", fan)
        assert selection.chosen == (("g1", 1, 1),)
        assert selection.profit == 5

    def test_fan_rejects_fixed_tails(self):
        """Test problems 2.1 and 2.2 have no fixed tails"""
        group = FanGroup("g1", Fraction(1), (FanOption(0, Fraction(0), Fraction(1), Fraction(0)),), Fraction(1))
        fan = FanInstance(Fraction(1), (group,), b=Fraction(5))
        with pytest.raises(ValidationError):
            solve_auxiliary("2.1", fan)

    def test_fan_takes_fan_instance(self):
        """Test 2.x problems reject star instances"""
        with pytest.raises(ValidationError):
            solve_auxiliary("2.3", self.star(b=Fraction(9)))

    def test_star_from_tree(self, load_instance):
        """Test the root star of the overlay fixture"""
        star = star_from_tree(load_instance("overlay14.json").tree, b=Fraction(12))
        assert star.root_ram == 4
        assert [c.id for c in star.children] == [1, 2, 11]
        assert [c.tail for c in star.children] == [0, 5, 0]
