"""Graph and tree primitives: spanning trees, connectivity, structure metrics and DOT export."""

import heapq
import itertools
import logging
from collections.abc import Iterable, Iterator, Mapping
from fractions import Fraction
from typing import Optional, Union

from jinja2 import Environment, FileSystemLoader
from networkx.algorithms.connectivity import (
    build_auxiliary_node_connectivity,
    local_node_connectivity,
)
from networkx.algorithms.flow import build_residual_network

import config
from models.errors import DisconnectedInput, EmptyGraph, NegativeLeafWeight
from models.instances import parse_instance, serialize_instance  # noqa: F401
from models.models import Edge, EdgeSetSolution, Graph, RootedTree, StructMetrics, edge_key

logger = logging.getLogger(__name__)


class DisjointSet:
    """Union-find with path compression and union by rank"""

    def __init__(self, items: Iterable[int] = ()):
        self.parent: dict[int, int] = {}
        self.rank: dict[int, int] = {}
        for item in items:
            self.add(item)

    def add(self, item: int) -> None:
        if item not in self.parent:
            self.parent[item] = item
            self.rank[item] = 0

    def find(self, item: int) -> int:
        root = item
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[item] != root:
            self.parent[item], item = root, self.parent[item]
        return root

    def union(self, a: int, b: int) -> bool:
        """Merge the sets of a and b; False if they were already joined"""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def _kruskal(graph: Graph) -> list[Edge]:
    dsu = DisjointSet(graph.nodes)
    chosen = []
    # equal weights fall back to the (min-id, max-id) order
    for u, v, _ in sorted(graph.sorted_edges(), key=lambda e: (e[2], e[0], e[1])):
        if dsu.union(u, v):
            chosen.append((u, v))
    return chosen


def spanning_forest(graph: Graph) -> EdgeSetSolution:
    """Minimum spanning tree of every connected component"""
    return EdgeSetSolution.of(graph, _kruskal(graph))


def mst(graph: Graph) -> EdgeSetSolution:
    """Minimum spanning tree of a connected graph (Kruskal)"""
    if not graph.nodes:
        raise EmptyGraph("graph has no nodes")
    if not graph.is_connected():
        raise DisconnectedInput("graph is disconnected; use spanning_forest")
    solution = spanning_forest(graph)
    logger.debug("mst: %d edges, weight %s", len(solution.edges), solution.total_weight)
    return solution


def prim(graph: Graph) -> EdgeSetSolution:
    """Minimum spanning tree grown from the smallest node id"""
    if not graph.nodes:
        raise EmptyGraph("graph has no nodes")
    start = min(graph.nodes)
    visited = {start}
    heap = [(graph.weight(start, v), *edge_key(start, v)) for v in graph.neighbors(start)]
    heapq.heapify(heap)
    chosen = []
    while heap and len(visited) < len(graph.nodes):
        _, u, v = heapq.heappop(heap)
        new = v if u in visited else u
        if new in visited:
            continue
        visited.add(new)
        chosen.append((u, v))
        for w in graph.neighbors(new):
            if w not in visited:
                heapq.heappush(heap, (graph.weight(new, w), *edge_key(new, w)))
    if len(visited) < len(graph.nodes):
        raise DisconnectedInput("graph is disconnected")
    return EdgeSetSolution.of(graph, chosen)


def is_spanning_tree(graph: Graph, edges: Iterable[Edge]) -> bool:
    edges = list(edges)
    if len(edges) != len(graph.nodes) - 1:
        return False
    dsu = DisjointSet(graph.nodes)
    return all(graph.has_edge(u, v) and dsu.union(u, v) for u, v in edges)


def spanning_trees(graph: Graph) -> Iterator[frozenset[Edge]]:
    """All spanning trees as edge sets, in combination order of the sorted edge list"""
    if not graph.nodes:
        return
    keys = sorted(graph.edges)
    for combo in itertools.combinations(keys, len(graph.nodes) - 1):
        dsu = DisjointSet(graph.nodes)
        if all(dsu.union(u, v) for u, v in combo):
            yield frozenset(combo)


def vertex_connectivity_at_least(graph: Graph, k: int) -> bool:
    """Menger check: k internally disjoint paths between every non-adjacent pair"""
    if k < 1:
        raise ValueError("k must be positive")
    nodes = sorted(graph.nodes)
    if len(nodes) < k + 1:
        return False
    if any(graph.degree(v) < k for v in nodes):
        return False
    g = graph.to_networkx()
    auxiliary = build_auxiliary_node_connectivity(g)
    residual = build_residual_network(auxiliary, "capacity")
    for u, v in itertools.combinations(nodes, 2):
        if graph.has_edge(u, v):
            continue
        flow = local_node_connectivity(g, u, v, auxiliary=auxiliary, residual=residual, cutoff=k)
        if flow < k:
            logger.debug("nodes %s and %s have only %s disjoint paths", u, v, flow)
            return False
    return True


def tree_metrics(tree: RootedTree, leaf_weights: Optional[Mapping[int, Fraction]] = None) -> StructMetrics:
    """Depth, degree and leaf statistics of a rooted tree"""
    leaves = tree.leaves
    if leaf_weights is None:
        weights = {leaf: Fraction(1) for leaf in leaves}
    else:
        weights = {leaf: Fraction(leaf_weights.get(leaf, 0)) for leaf in leaves}
        negative = [leaf for leaf, w in weights.items() if w < 0]
        if negative:
            raise NegativeLeafWeight(f"negative weight on leaf {negative[0]}")
    total = sum(weights.values(), Fraction(0))
    expected = (
        sum((w * tree.depth[leaf] for leaf, w in weights.items()), Fraction(0)) / total
        if total
        else Fraction(0)
    )
    degree = {v: len(tree.children[v]) + (v != tree.root) for v in tree.nodes}
    return StructMetrics(
        depth=tree.height,
        max_degree=max(degree.values()),
        leaf_count=len(leaves),
        node_count=len(tree.nodes),
        expected_root_leaf_length=expected,
    )


def structure_proximity(s1: Iterable, s2: Iterable) -> int:
    """Symmetric-difference cardinality of two element sets"""
    return len(set(s1) ^ set(s2))


def _dot_quote(value) -> str:
    return '"' + str(value).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _dot_attrs(**attrs) -> str:
    return ", ".join(f"{key}={_dot_quote(value)}" for key, value in attrs.items() if value is not None)


def _number(value: Fraction) -> str:
    return str(value.numerator) if value.denominator == 1 else f"{float(value):g}"


def to_dot(
    structure: Union[Graph, RootedTree],
    highlight_nodes: Iterable[int] = (),
    highlight_edges: Iterable[Edge] = (),
    name: str = "G",
) -> str:
    """Render a graph (undirected) or rooted tree (directed) as Graphviz DOT text"""
    marked_nodes = set(highlight_nodes)
    marked_edges = {edge_key(*e) for e in highlight_edges}
    nodes, edges = [], []
    if isinstance(structure, RootedTree):
        keyword, connector = "digraph", "->"
        for v in structure.nodes:
            label = structure.labels.get(v)
            color = "red" if v in marked_nodes else None
            nodes.append({"id": v, "attrs": _dot_attrs(label=label, color=color)})
        for child in sorted(structure.parent):
            par = structure.parent[child]
            weight = structure.arc_weight.get(child)
            edges.append({
                "u": par,
                "v": child,
                "attrs": _dot_attrs(
                    label=_number(weight) if weight is not None else None,
                    color="red" if edge_key(par, child) in marked_edges else None,
                ),
            })
    else:
        keyword, connector = "graph", "--"
        for v in sorted(structure.nodes):
            layer = structure.node_attrs.get(v, {}).get("layer")
            color = "red" if v in marked_nodes else None
            nodes.append({"id": v, "attrs": _dot_attrs(group=layer, color=color)})
        for u, v, w in structure.sorted_edges():
            edges.append({
                "u": u,
                "v": v,
                "attrs": _dot_attrs(
                    label=_number(w),
                    color="red" if (u, v) in marked_edges else None,
                    penwidth="2" if (u, v) in marked_edges else None,
                ),
            })
    env = Environment(
        loader=FileSystemLoader(str(config.TEMPLATES_DIR)),
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
    )
    context = {"keyword": keyword, "connector": connector, "name": name, "nodes": nodes, "edges": edges}
    return env.get_template("structure.dot.j2").render(context)
