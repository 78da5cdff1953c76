from __future__ import annotations

from collections.abc import Hashable, Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Optional, Union

import networkx as nx

from .errors import ValidationError

Edge = tuple[int, int]
Id = Hashable


def edge_key(u: int, v: int) -> Edge:
    """Normalize an undirected edge to (min-id, max-id)"""
    return (u, v) if u < v else (v, u)


# ---------------------------------------------------------------- graphs ---


@dataclass(frozen=True)
class Graph:
    nodes: frozenset[int]
    edges: Mapping[Edge, Fraction]
    node_attrs: Mapping[int, Mapping[str, Any]] = field(default_factory=dict)

    @classmethod
    def from_edges(
        cls,
        nodes: Iterable[int],
        edges: Iterable[tuple[int, int, Any]],
        node_attrs: Optional[Mapping[int, Mapping[str, Any]]] = None,
        path: str = "edges",
    ) -> "Graph":
        """Build a graph, rejecting self-loops, duplicates and undeclared endpoints"""
        node_set = frozenset(nodes)
        weights: dict[Edge, Fraction] = {}
        for i, (u, v, w) in enumerate(edges):
            if u == v:
                raise ValidationError(f"{path}[{i}]", f"self-loop on node {u}")
            if u not in node_set or v not in node_set:
                raise ValidationError(f"{path}[{i}]", "endpoint is not a declared node")
            key = edge_key(u, v)
            if key in weights:
                raise ValidationError(f"{path}[{i}]", f"duplicate edge {key}")
            weight = Fraction(w)
            if weight < 0:
                raise ValidationError(f"{path}[{i}][2]", "weight must be nonnegative")
            weights[key] = weight
        return cls(node_set, weights, dict(node_attrs or {}))

    @cached_property
    def adjacency(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {v: [] for v in self.nodes}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return {v: tuple(sorted(ns)) for v, ns in adj.items()}

    def neighbors(self, u: int) -> tuple[int, ...]:
        return self.adjacency[u]

    def degree(self, u: int) -> int:
        return len(self.adjacency[u])

    def weight(self, u: int, v: int) -> Fraction:
        return self.edges[edge_key(u, v)]

    def has_edge(self, u: int, v: int) -> bool:
        return edge_key(u, v) in self.edges

    def sorted_edges(self) -> list[tuple[int, int, Fraction]]:
        return [(u, v, self.edges[(u, v)]) for u, v in sorted(self.edges)]

    def weight_of(self, edges: Iterable[Edge]) -> Fraction:
        return sum((self.edges[edge_key(*e)] for e in edges), Fraction(0))

    def induced(self, nodes: Iterable[int]) -> "Graph":
        keep = frozenset(nodes)
        return Graph(
            keep,
            {e: w for e, w in self.edges.items() if e[0] in keep and e[1] in keep},
            {v: a for v, a in self.node_attrs.items() if v in keep},
        )

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        for v in sorted(self.nodes):
            g.add_node(v, **self.node_attrs.get(v, {}))
        for u, v, w in self.sorted_edges():
            g.add_edge(u, v, weight=w)
        return g

    def components(self) -> list[frozenset[int]]:
        """Connected components ordered by smallest member"""
        comps = [frozenset(c) for c in nx.connected_components(self.to_networkx())]
        return sorted(comps, key=min)

    def is_connected(self) -> bool:
        return len(self.nodes) > 0 and len(self.components()) == 1


@dataclass(frozen=True)
class EdgeSetSolution:
    edges: frozenset[Edge]
    total_weight: Fraction

    @classmethod
    def of(cls, graph: Graph, edges: Iterable[Edge]) -> "EdgeSetSolution":
        chosen = frozenset(edge_key(*e) for e in edges)
        return cls(chosen, graph.weight_of(chosen))


@dataclass(frozen=True)
class RootedTree:
    root: int
    parent: Mapping[int, int]
    node_weight: Mapping[int, Fraction] = field(default_factory=dict)
    arc_weight: Mapping[int, Fraction] = field(default_factory=dict)
    labels: Mapping[int, str] = field(default_factory=dict)

    @classmethod
    def from_parents(
        cls,
        root: int,
        parent: Mapping[int, int],
        node_weight: Optional[Mapping[int, Any]] = None,
        arc_weight: Optional[Mapping[int, Any]] = None,
        labels: Optional[Mapping[int, str]] = None,
        path: str = "tree",
    ):
        """Build a tree, checking for a single root and an acyclic parent map"""
        if root in parent:
            raise ValidationError(f"{path}.parent", f"root {root} has a parent")
        nodes = {root, *parent}
        for child, par in parent.items():
            if par not in nodes:
                raise ValidationError(f"{path}.parent[{child}]", f"unknown parent {par}")
        for start in parent:
            seen = {start}
            v = start
            while v != root:
                v = parent[v]
                if v in seen:
                    raise ValidationError(f"{path}.parent[{start}]", "parent mapping has a cycle")
                seen.add(v)
        return cls(
            root,
            dict(parent),
            {v: Fraction(w) for v, w in (node_weight or {}).items()},
            {v: Fraction(w) for v, w in (arc_weight or {}).items()},
            dict(labels or {}),
        )

    @classmethod
    def from_edges(cls, root: int, edges: Iterable[Edge], **kwargs) -> "RootedTree":
        """Orient an undirected tree edge set away from `root`"""
        adj: dict[int, list[int]] = {root: []}
        for u, v in edges:
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
        parent: dict[int, int] = {}
        stack = [root]
        seen = {root}
        while stack:
            v = stack.pop()
            for w in sorted(adj[v]):
                if w in seen:
                    continue
                seen.add(w)
                parent[w] = v
                stack.append(w)
        if len(seen) != len(adj):
            raise ValidationError("edges", "edge set is not connected")
        return cls.from_parents(root, parent, **kwargs)

    @cached_property
    def nodes(self) -> tuple[int, ...]:
        return tuple(sorted({self.root, *self.parent}))

    @cached_property
    def children(self) -> dict[int, tuple[int, ...]]:
        kids: dict[int, list[int]] = {v: [] for v in self.nodes}
        for child, par in self.parent.items():
            kids[par].append(child)
        return {v: tuple(sorted(cs)) for v, cs in kids.items()}

    @cached_property
    def preorder(self) -> tuple[int, ...]:
        order = []
        stack = [self.root]
        while stack:
            v = stack.pop()
            order.append(v)
            stack.extend(reversed(self.children[v]))
        return tuple(order)

    @cached_property
    def depth(self) -> dict[int, int]:
        depth = {self.root: 0}
        for v in self.preorder[1:]:
            depth[v] = depth[self.parent[v]] + 1
        return depth

    @cached_property
    def leaves(self) -> tuple[int, ...]:
        return tuple(v for v in self.nodes if not self.children[v])

    @property
    def height(self) -> int:
        return max(self.depth.values())

    def label(self, v: int) -> str:
        return self.labels.get(v, str(v))

    def edges(self) -> frozenset[Edge]:
        return frozenset(edge_key(c, p) for c, p in self.parent.items())

    def subtree(self, v: int) -> tuple[int, ...]:
        """Nodes below v (inclusive) in preorder"""
        order = []
        stack = [v]
        while stack:
            u = stack.pop()
            order.append(u)
            stack.extend(reversed(self.children[u]))
        return tuple(order)

    def is_ancestor(self, a: int, v: int) -> bool:
        while v != self.root:
            v = self.parent[v]
            if v == a:
                return True
        return False


@dataclass(frozen=True)
class StructMetrics:
    depth: int
    max_degree: int
    leaf_count: int
    node_count: int
    expected_root_leaf_length: Fraction


# ------------------------------------------------------------ clustering ---


@dataclass(frozen=True)
class ClusterConfig:
    metric: str = "euclidean"
    rule: str = "average"
    clusters: int = 1
    max_distance: Optional[Fraction] = None
    variant: str = "standard"


@dataclass(frozen=True)
class ElementTable:
    elements: tuple[int, ...]
    attributes: tuple[tuple[Fraction, ...], ...]
    config: ClusterConfig = field(default_factory=ClusterConfig)

    def row(self, element: int) -> tuple[Fraction, ...]:
        return self.attributes[self.elements.index(element)]


@dataclass(frozen=True)
class MergeStep:
    index: int
    left: tuple[int, ...]
    right: tuple[int, ...]
    proximity: Fraction
    vector: Optional[tuple[Fraction, ...]] = None


@dataclass(frozen=True)
class Dendrogram:
    metric: str
    rule: str
    steps: tuple[MergeStep, ...]
    clusters: tuple[tuple[int, ...], ...]


# -------------------------------------------------------------- spanning ---


@dataclass(frozen=True)
class SteinerInstance:
    graph: Graph
    terminals: frozenset[int]


@dataclass(frozen=True)
class LeafTreeSolution:
    edges: frozenset[Edge]
    leaves: frozenset[int]
    internal: frozenset[int]
    root: int


# ------------------------------------------------------------ multilayer ---


@dataclass(frozen=True)
class Site:
    id: int
    x: Fraction
    y: Fraction
    z: Fraction = Fraction(0)

    @property
    def point(self) -> tuple[Fraction, Fraction, Fraction]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class UserProfile:
    site: Site
    bandwidth: Fraction
    priority: int
    reliability: Fraction

    @property
    def id(self) -> int:
        return self.site.id


@dataclass(frozen=True)
class AccessPoint:
    site: Site
    bandwidth: Fraction
    max_users: int
    reliability: Fraction

    @property
    def id(self) -> int:
        return self.site.id


@dataclass(frozen=True)
class LayeredNetwork:
    k: int
    centers: tuple[tuple[int, ...], ...]
    users: tuple[int, ...]
    graph: Graph
    layers: Mapping[int, str]


@dataclass(frozen=True)
class ApLoad:
    users: int
    bandwidth: Fraction


@dataclass(frozen=True)
class Assignment:
    mapping: Mapping[int, int]
    loads: Mapping[int, ApLoad]

    @property
    def assigned(self) -> int:
        return len(self.mapping)


@dataclass(frozen=True)
class KConnectInstance:
    sites: tuple[Site, ...]
    k: int
    scheme: str = "regional"
    seed: int = 0
    candidates: Optional[tuple[int, ...]] = None
    centers: Optional[tuple[tuple[int, ...], ...]] = None


@dataclass(frozen=True)
class TwoLevelInstance:
    sites: tuple[Site, ...]
    primary: frozenset[int]
    topology: str = "path"
    primary_multiplier: Fraction = Fraction(2)
    secondary_multiplier: Fraction = Fraction(1)


@dataclass(frozen=True)
class AssignInstance:
    users: tuple[UserProfile, ...]
    aps: tuple[AccessPoint, ...]
    max_distance: Optional[Fraction] = None


# -------------------------------------------------------------- knapsack ---


@dataclass(frozen=True)
class Item:
    id: Id
    profit: Fraction
    weight: Fraction


@dataclass(frozen=True)
class KnapsackInstance:
    items: tuple[Item, ...]
    budget: Fraction


@dataclass(frozen=True)
class ChoiceOption:
    id: Id
    profit: Fraction
    weight: Fraction


@dataclass(frozen=True)
class ChoiceInstance:
    groups: tuple[tuple[ChoiceOption, ...], ...]
    budget: Fraction


@dataclass(frozen=True)
class Selection:
    chosen: tuple[Id, ...]
    profit: Fraction
    weight: Fraction


# -------------------------------------------------------------- condense ---


class OverlayTree(RootedTree):
    """Rooted tree with RAM per vertex (node_weight) and call frequency per arc (arc_weight, keyed by child)"""

    @classmethod
    def from_parents(cls, root, parent, node_weight=None, arc_weight=None, labels=None, path="tree"):
        tree = super().from_parents(root, parent, node_weight, arc_weight, labels, path)
        for v in tree.nodes:
            if tree.node_weight.get(v, 0) <= 0:
                raise ValidationError(f"{path}.ram[{v}]", "ram must be positive")
        for v in tree.parent:
            if tree.arc_weight.get(v, 0) <= 0:
                raise ValidationError(f"{path}.freq[{v}]", "frequency must be positive")
        return tree

    def ram(self, v: int) -> Fraction:
        return self.node_weight[v]

    def freq(self, v: int) -> Fraction:
        return self.arc_weight[v]


@dataclass(frozen=True)
class CondensePlan:
    """Vertices whose incoming arc is condensed (x(a) = 1)"""

    selected: frozenset[int] = frozenset()

    def indicator(self, tree: RootedTree) -> dict[int, int]:
        return {v: int(v in self.selected) for v in tree.nodes if v != tree.root}


@dataclass(frozen=True)
class CondenseResult:
    plan: CondensePlan
    tree: OverlayTree
    saved: Fraction
    kernel: Fraction
    tail: Fraction
    weight: Fraction


@dataclass(frozen=True)
class CondenseInstance:
    tree: OverlayTree
    b: Optional[Fraction] = None
    b_minus: Optional[Fraction] = None
    b_plus: Optional[Fraction] = None
    mode: str = "exact"
    epsilon: Fraction = Fraction(1, 5)
    delta: Fraction = Fraction(1, 5)

    @property
    def kind(self) -> int:
        return 1 if self.b is not None else 2


@dataclass(frozen=True)
class StarChild:
    id: Id
    ram: Fraction
    freq: Fraction
    tail: Fraction = Fraction(0)


@dataclass(frozen=True)
class StarInstance:
    root_ram: Fraction
    children: tuple[StarChild, ...]
    b: Optional[Fraction] = None
    b_minus: Optional[Fraction] = None
    b_plus: Optional[Fraction] = None


@dataclass(frozen=True)
class FanOption:
    id: Id
    saved: Fraction
    kernel: Fraction
    tail: Fraction


@dataclass(frozen=True)
class FanGroup:
    id: Id
    freq: Fraction
    options: tuple[FanOption, ...]
    extra_tail: Fraction = Fraction(0)


@dataclass(frozen=True)
class FanInstance:
    root_ram: Fraction
    groups: tuple[FanGroup, ...]
    b: Optional[Fraction] = None
    b_minus: Optional[Fraction] = None
    b_plus: Optional[Fraction] = None


# ---------------------------------------------------------------- modify ---


@dataclass(frozen=True)
class HotlinkInstance:
    tree: RootedTree
    weights: Mapping[int, Fraction]
    k: int
    sources: tuple[int, ...] = ()

    @property
    def source_nodes(self) -> tuple[int, ...]:
        return self.sources or (self.tree.root,)


@dataclass(frozen=True)
class SteinerCandidate:
    id: Id
    node: int
    profit: Fraction
    weight: Fraction
    remove: tuple[Edge, ...] = ()
    add: tuple[Edge, ...] = ()


@dataclass(frozen=True)
class AugmentInstance:
    tree: RootedTree
    regions: tuple[tuple[int, ...], ...]
    candidates: tuple[tuple[SteinerCandidate, ...], ...]
    budget: Fraction


@dataclass(frozen=True)
class ChangeCosts:
    add: Mapping[Any, Fraction] = field(default_factory=dict)
    remove: Mapping[Any, Fraction] = field(default_factory=dict)
    default: Fraction = Fraction(1)

    def add_cost(self, element) -> Fraction:
        return self.add.get(element, self.default)

    def remove_cost(self, element) -> Fraction:
        return self.remove.get(element, self.default)


@dataclass(frozen=True)
class RestructureInstance:
    kind: str
    problem: Union[KnapsackInstance, ChoiceInstance, Graph]
    initial: frozenset
    goal: frozenset
    budget: Fraction
    costs: ChangeCosts = field(default_factory=ChangeCosts)
    proximity: str = "symmetric-difference"
    limits: Mapping[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class RestructureResult:
    solution: frozenset
    proximity: Fraction
    change_cost: Fraction
    objective: Fraction


# ---------------------------------------------------------------- morpho ---


@dataclass(frozen=True)
class DesignAlternative:
    name: str
    estimate: int


@dataclass(frozen=True)
class CompatTable:
    first: str
    second: str
    values: Mapping[tuple[str, str], int]


@dataclass(frozen=True)
class MorphHierarchy:
    tree: RootedTree
    alternatives: Mapping[str, tuple[DesignAlternative, ...]]
    tables: tuple[CompatTable, ...] = ()

    @property
    def leaf_names(self) -> tuple[str, ...]:
        return tuple(self.tree.label(v) for v in self.tree.preorder if not self.tree.children[v])


@dataclass(frozen=True)
class Composition:
    choice: tuple[str, ...]
    level_counts: tuple[int, ...]
    min_compat: int
