"""Hierarchy modification: hotlinks, Steiner-point augmentation and budgeted restructuring."""

import itertools
import logging
import math
from collections.abc import Iterable, Iterator, Mapping
from fractions import Fraction
from typing import Optional

import networkx as nx

import config
from core import is_spanning_tree, spanning_trees, structure_proximity, tree_metrics
from knapsack import multiple_choice_exact
from models.errors import Infeasible, TooLargeForExact, ValidationError
from models.models import (
    AugmentInstance,
    ChangeCosts,
    ChoiceInstance,
    ChoiceOption,
    Graph,
    HotlinkInstance,
    RestructureInstance,
    RestructureResult,
    RootedTree,
    Selection,
    edge_key,
)

logger = logging.getLogger(__name__)

Hotlink = tuple[int, int]
HotlinkSet = frozenset[Hotlink]

NO_POINT = "None"


# --------------------------------------------------------------- hotlinks ---


def expected_access_cost(tree: RootedTree, weights: Mapping[int, Fraction], hotlinks: Iterable[Hotlink] = ()) -> Fraction:
    """Weighted mean number of links from the root to each weighted node, hotlinks counting as one link"""
    g = nx.DiGraph()
    g.add_nodes_from(tree.nodes)
    g.add_edges_from((p, c) for c, p in tree.parent.items())
    g.add_edges_from(hotlinks)
    distance = nx.single_source_shortest_path_length(g, tree.root)
    total = sum(weights.values(), Fraction(0))
    if total == 0:
        return Fraction(0)
    return sum((Fraction(w) * distance[v] for v, w in weights.items()), Fraction(0)) / total


def hotlink_candidates(instance: HotlinkInstance) -> list[Hotlink]:
    """Source-to-descendant arcs that are not tree arcs, ordered by (target, source)"""
    tree = instance.tree
    arcs = set()
    for source in instance.source_nodes:
        children = set(tree.children[source])
        arcs.update((source, v) for v in tree.subtree(source)[1:] if v not in children)
    return sorted(arcs, key=lambda a: (a[1], a[0]))


def hotlink_exact_small(instance: HotlinkInstance, limit: Optional[int] = None) -> HotlinkSet:
    """Cheapest set of at most k hotlinks; smaller sets win ties"""
    limit = config.HOTLINK_EXACT_TARGETS if limit is None else limit
    candidates = hotlink_candidates(instance)
    if len(candidates) > limit:
        raise TooLargeForExact(f"{len(candidates)} hotlink candidates exceed the exact bound {limit}")
    best_cost = expected_access_cost(instance.tree, instance.weights)
    best: tuple[Hotlink, ...] = ()
    for size in range(1, min(instance.k, len(candidates)) + 1):
        for combo in itertools.combinations(candidates, size):
            cost = expected_access_cost(instance.tree, instance.weights, combo)
            if cost < best_cost:
                best_cost, best = cost, combo
    return frozenset(best)


def hotlink_greedy(instance: HotlinkInstance) -> HotlinkSet:
    """Add the hotlink with the largest cost reduction, k times or until nothing helps"""
    candidates = hotlink_candidates(instance)
    chosen: list[Hotlink] = []
    cost = expected_access_cost(instance.tree, instance.weights)
    for _ in range(instance.k):
        best = None
        for arc in candidates:
            if arc in chosen:
                continue
            trial = expected_access_cost(instance.tree, instance.weights, [*chosen, arc])
            if trial < cost and (best is None or trial < best[0]):
                best = (trial, arc)
        if best is None:
            break
        cost = best[0]
        chosen.append(best[1])
        logger.debug("hotlink %s lowers the expected cost to %s", best[1], cost)
    return frozenset(chosen)


# --------------------------------------------------------- steiner points ---


def _check_regions(instance: AugmentInstance) -> None:
    """Each candidate may only rewire edges inside its own region"""
    for r, (region, candidates) in enumerate(zip(instance.regions, instance.candidates)):
        inside = set(region)
        for c in candidates:
            for e in c.remove:
                if not set(e) <= inside:
                    raise ValidationError(f"candidates[{r}].{c.id}.remove", f"edge {e} leaves region {r}")
            for e in c.add:
                if not set(e) - {c.node} <= inside:
                    raise ValidationError(f"candidates[{r}].{c.id}.add", f"edge {e} leaves region {r}")


def steiner_augment(instance: AugmentInstance) -> tuple[Selection, RootedTree]:
    """Pick at most one Steiner point per region under the budget and splice the picks into the tree"""
    _check_regions(instance)
    groups = []
    lookup = {}
    for r, candidates in enumerate(instance.candidates):
        options = [ChoiceOption((0, NO_POINT), Fraction(0), Fraction(0))]
        for c in candidates:
            options.append(ChoiceOption((1, c.id), c.profit, c.weight))
            lookup[(r, c.id)] = c
        groups.append(tuple(options))
    picked = multiple_choice_exact(ChoiceInstance(tuple(groups), instance.budget))

    chosen = [lookup[(r, option_id)] for r, (flag, option_id) in enumerate(picked.chosen) if flag]
    edges = set(instance.tree.edges())
    labels = dict(instance.tree.labels)
    for c in chosen:
        for e in c.remove:
            if e not in edges:
                raise ValidationError(f"candidates.{c.id}.remove", f"edge {e} is not in the tree")
            edges.discard(e)
        edges.update(edge_key(*e) for e in c.add)
        labels[c.node] = str(c.id)
    nodes = set(instance.tree.nodes) | {c.node for c in chosen}
    touched = {v for e in edges for v in e} | {instance.tree.root}
    if touched != nodes or len(edges) != len(nodes) - 1:
        raise ValidationError("candidates", "splicing the chosen points does not leave a tree")
    tree = RootedTree.from_edges(instance.tree.root, sorted(edges), labels=labels)
    selection = Selection(tuple(c.id for c in chosen), picked.profit, picked.weight)
    return selection, tree


# ---------------------------------------------------------- restructuring ---


def change_cost(s_from: Iterable, s_to: Iterable, costs: Optional[ChangeCosts] = None) -> Fraction:
    """Cost of adding what s_to has beyond s_from and removing what s_from has beyond s_to"""
    costs = costs or ChangeCosts()
    s_from, s_to = set(s_from), set(s_to)
    added = sum((costs.add_cost(e) for e in s_to - s_from), Fraction(0))
    removed = sum((costs.remove_cost(e) for e in s_from - s_to), Fraction(0))
    return added + removed


class _Embedded:
    """Feasibility, objective and neighbourhood of the problem a solution belongs to"""

    def __init__(self, instance: RestructureInstance):
        self.instance = instance
        self.kind = instance.kind
        problem = instance.problem
        if self.kind == "knapsack-solution":
            self.values = {it.id: (it.profit, it.weight) for it in problem.items}
        elif self.kind == "mchoice-solution":
            self.values = {o.id: (o.profit, o.weight) for group in problem.groups for o in group}
            self.group_of = {o.id: g for g, group in enumerate(problem.groups) for o in group}
        else:
            self.values = {e: (w, Fraction(0)) for e, w in problem.edges.items()}

    def check_universe(self, solution: frozenset, path: str) -> None:
        stray = [e for e in solution if e not in self.values]
        if stray:
            raise ValidationError(path, f"{stray[0]} is not an element of the embedded problem")

    def objective(self, solution: frozenset) -> Fraction:
        return sum((self.values[e][0] for e in solution), Fraction(0))

    def _weight(self, solution: frozenset) -> Fraction:
        return sum((self.values[e][1] for e in solution), Fraction(0))

    def _within_limits(self, edges: frozenset) -> bool:
        if not self.instance.limits:
            return True
        graph: Graph = self.instance.problem
        metrics = tree_metrics(RootedTree.from_edges(min(graph.nodes), edges))
        for key, bound in self.instance.limits.items():
            side, _, name = key.partition("_")
            value = getattr(metrics, name)
            if (side == "min" and value < bound) or (side == "max" and value > bound):
                return False
        return True

    def feasible(self, solution: frozenset) -> bool:
        if self.kind == "knapsack-solution":
            return self._weight(solution) <= self.instance.problem.budget
        if self.kind == "mchoice-solution":
            groups = [self.group_of[o] for o in solution]
            if sorted(groups) != list(range(len(self.instance.problem.groups))):
                return False
            return self._weight(solution) <= self.instance.problem.budget
        return is_spanning_tree(self.instance.problem, solution) and self._within_limits(solution)

    def space_size(self) -> int:
        if self.kind == "knapsack-solution":
            return 2 ** len(self.values)
        if self.kind == "mchoice-solution":
            return math.prod(len(group) for group in self.instance.problem.groups)
        graph: Graph = self.instance.problem
        return math.comb(len(graph.edges), max(len(graph.nodes) - 1, 0))

    def space(self) -> Iterator[frozenset]:
        if self.kind == "knapsack-solution":
            ids = sorted(self.values)
            for mask in range(1 << len(ids)):
                yield frozenset(i for b, i in enumerate(ids) if mask >> b & 1)
        elif self.kind == "mchoice-solution":
            for combo in itertools.product(*([o.id for o in group] for group in self.instance.problem.groups)):
                yield frozenset(combo)
        else:
            yield from spanning_trees(self.instance.problem)

    def moves(self, solution: frozenset) -> Iterator[frozenset]:
        """Single add, remove or swap steps (cycle exchanges for spanning trees)"""
        if self.kind == "knapsack-solution":
            outside = sorted(set(self.values) - solution)
            for e in outside:
                yield solution | {e}
            for e in sorted(solution):
                yield solution - {e}
                for f in outside:
                    yield (solution - {e}) | {f}
        elif self.kind == "mchoice-solution":
            for e in sorted(solution):
                group = self.instance.problem.groups[self.group_of[e]]
                for o in group:
                    if o.id != e:
                        yield (solution - {e}) | {o.id}
        else:
            tree = nx.Graph(list(solution))
            for u, v in sorted(set(self.values) - solution):
                if u not in tree or v not in tree:
                    continue
                path = nx.shortest_path(tree, u, v)
                for a, b in zip(path, path[1:]):
                    yield (solution - {edge_key(a, b)}) | {(u, v)}


def restructure_solve(instance: RestructureInstance, mode: str = "exact", limit: Optional[int] = None) -> RestructureResult:
    """Feasible solution closest to the goal whose change cost from the initial solution fits the budget.

    exact scans the whole solution space; greedy walks from the initial solution by the
    cheapest single move that strictly lowers the proximity, while the total cost fits.
    """
    if mode not in ("exact", "greedy"):
        raise ValidationError("mode", f"unknown restructuring mode '{mode}'")
    embedded = _Embedded(instance)
    embedded.check_universe(instance.initial, "initial")
    embedded.check_universe(instance.goal, "goal")
    if not embedded.feasible(instance.initial):
        raise Infeasible("the initial solution violates the embedded problem's constraints")

    goal_value = embedded.objective(instance.goal)

    def rho(solution: frozenset) -> Fraction:
        if instance.proximity == "objective-gap":
            return abs(embedded.objective(solution) - goal_value)
        return Fraction(structure_proximity(solution, instance.goal))

    def key(solution: frozenset):
        return (rho(solution), change_cost(instance.initial, solution, instance.costs), tuple(sorted(solution)))

    best = instance.initial
    if mode == "exact":
        limit = config.EXACT_SPACE_LIMIT if limit is None else limit
        size = embedded.space_size()
        if size > limit:
            raise TooLargeForExact(f"solution space of {size} exceeds the exact bound {limit}")
        best_key = key(best)
        for solution in embedded.space():
            if not embedded.feasible(solution):
                continue
            if change_cost(instance.initial, solution, instance.costs) > instance.budget:
                continue
            k = key(solution)
            if k < best_key:
                best, best_key = solution, k
    else:
        # cheapest move that lowers rho wins, then lower rho
        current_rho = rho(best)
        while current_rho > 0:
            step = None
            for solution in embedded.moves(best):
                total = change_cost(instance.initial, solution, instance.costs)
                if total > instance.budget:
                    continue
                value = rho(solution)
                if value >= current_rho or not embedded.feasible(solution):
                    continue
                k = (change_cost(best, solution, instance.costs), value, total, tuple(sorted(solution)))
                if step is None or k < step[0]:
                    step = (k, solution)
            if step is None:
                break
            best, current_rho = step[1], step[0][1]
            logger.debug("restructuring step costs %s and reaches proximity %s", step[0][0], current_rho)

    return RestructureResult(
        solution=best,
        proximity=rho(best),
        change_cost=change_cost(instance.initial, best, instance.costs),
        objective=embedded.objective(best),
    )
