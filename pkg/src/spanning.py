"""Steiner trees, maximum-leaf spanning trees and connected dominating sets."""

import itertools
import logging
from collections.abc import Iterable
from fractions import Fraction
from typing import Optional

import networkx as nx

import config
from core import DisjointSet, mst, spanning_forest
from models.errors import DisconnectedInput, DominationViolation, TooLargeForExact, ValidationError
from models.models import Edge, EdgeSetSolution, Graph, LeafTreeSolution, SteinerInstance, edge_key

logger = logging.getLogger(__name__)


def _check_terminals(instance: SteinerInstance) -> None:
    if not instance.terminals:
        raise ValidationError("terminals", "terminal set is empty")
    unknown = sorted(instance.terminals - instance.graph.nodes)
    if unknown:
        raise ValidationError("terminals", f"unknown terminal {unknown[0]}")
    comps = [c for c in instance.graph.components() if c & instance.terminals]
    if len(comps) > 1:
        raise DisconnectedInput("terminals lie in different components")


def _prune(edges: set[Edge], terminals: frozenset[int]) -> set[Edge]:
    """Drop non-terminal leaves until none remain"""
    edges = set(edges)
    while True:
        degree: dict[int, int] = {}
        for u, v in edges:
            degree[u] = degree.get(u, 0) + 1
            degree[v] = degree.get(v, 0) + 1
        doomed = {v for v, d in degree.items() if d == 1 and v not in terminals}
        if not doomed:
            return edges
        edges = {e for e in edges if e[0] not in doomed and e[1] not in doomed}


def steiner_heuristic(instance: SteinerInstance) -> EdgeSetSolution:
    """Distance-network heuristic; weight at most twice the optimum"""
    _check_terminals(instance)
    graph = instance.graph
    terminals = sorted(instance.terminals)
    if len(terminals) == 1:
        return EdgeSetSolution(frozenset(), Fraction(0))

    g = graph.to_networkx()
    paths = {}
    closure_edges = []
    for t in terminals:
        dist, path = nx.single_source_dijkstra(g, t, weight="weight")
        for s in terminals:
            if s > t:
                closure_edges.append((t, s, dist[s]))
                paths[(t, s)] = path[s]
    closure = Graph.from_edges(terminals, closure_edges)

    expanded: set[Edge] = set()
    for t, s in mst(closure).edges:
        route = paths[(t, s)]
        expanded.update(edge_key(a, b) for a, b in zip(route, route[1:]))
    subgraph = Graph(
        frozenset(v for e in expanded for v in e),
        {e: graph.edges[e] for e in expanded},
    )
    tree = _prune(set(spanning_forest(subgraph).edges), instance.terminals)
    solution = EdgeSetSolution.of(graph, tree)
    logger.debug("steiner heuristic weight %s over %d terminals", solution.total_weight, len(terminals))
    return solution


def steiner_exact(instance: SteinerInstance) -> EdgeSetSolution:
    """Minimum Steiner tree by trying every set of Steiner vertices (small graphs only)"""
    _check_terminals(instance)
    graph = instance.graph
    others = sorted(graph.nodes - instance.terminals)
    best: Optional[EdgeSetSolution] = None
    for size in range(len(others) + 1):
        for extra in itertools.combinations(others, size):
            sub = graph.induced(instance.terminals | set(extra))
            if not sub.is_connected():
                continue
            tree = mst(sub)
            if best is None or tree.total_weight < best.total_weight:
                best = tree
    return best


def _leaf_solution(graph: Graph, edges: Iterable[Edge]) -> LeafTreeSolution:
    edges = frozenset(edge_key(*e) for e in edges)
    degree = {v: 0 for v in graph.nodes}
    for u, v in edges:
        degree[u] += 1
        degree[v] += 1
    leaves = frozenset(v for v, d in degree.items() if d <= 1)
    internal = frozenset(graph.nodes - leaves)
    root = min(internal) if internal else min(graph.nodes)
    return LeafTreeSolution(edges, leaves, internal, root)


def _check_connected(graph: Graph) -> None:
    if not graph.is_connected():
        raise DisconnectedInput("graph is empty or disconnected")


def _is_connected_dominating(graph: Graph, nodes: frozenset[int]) -> bool:
    if not nodes:
        return False
    if any(v not in nodes and not set(graph.neighbors(v)) & nodes for v in graph.nodes):
        return False
    return graph.induced(nodes).is_connected()


def _tree_from_dominating_set(graph: Graph, dominating: frozenset[int]) -> list[Edge]:
    core_edges = list(mst(graph.induced(dominating)).edges)
    for v in sorted(graph.nodes - dominating):
        anchor = min(u for u in graph.neighbors(v) if u in dominating)
        core_edges.append(edge_key(v, anchor))
    return core_edges


def max_leaf_exact(graph: Graph, limit: Optional[int] = None) -> LeafTreeSolution:
    """Spanning tree with the most leaves, via a minimum connected dominating set"""
    limit = config.MAX_LEAF_EXACT_NODES if limit is None else limit
    if len(graph.nodes) > limit:
        raise TooLargeForExact(f"{len(graph.nodes)} nodes exceed the exact bound {limit}")
    _check_connected(graph)
    nodes = sorted(graph.nodes)
    if len(nodes) <= 2:
        return _leaf_solution(graph, graph.edges)
    for size in range(1, len(nodes) + 1):
        for subset in itertools.combinations(nodes, size):
            dominating = frozenset(subset)
            if _is_connected_dominating(graph, dominating):
                return _leaf_solution(graph, _tree_from_dominating_set(graph, dominating))
    raise DisconnectedInput("no connected dominating set")


def _expansion_tree(graph: Graph) -> list[Edge]:
    """Grow one tree, always expanding the node that adds the most new neighbours"""
    start = min(graph.nodes, key=lambda v: (-graph.degree(v), v))
    in_tree = {start}
    edges = []
    frontier = [start]
    while len(in_tree) < len(graph.nodes):
        best = min(
            frontier,
            key=lambda v: (-sum(1 for w in graph.neighbors(v) if w not in in_tree), v),
        )
        new = [w for w in graph.neighbors(best) if w not in in_tree]
        frontier.remove(best)
        for w in new:
            in_tree.add(w)
            edges.append(edge_key(best, w))
            frontier.append(w)
    return edges


def _leafy_forest_tree(graph: Graph) -> list[Edge]:
    """Leafy forest from degree-3 roots, joined into a spanning tree"""
    in_forest: set[int] = set()
    forest: list[Edge] = []

    def free(v: int) -> list[int]:
        return [w for w in graph.neighbors(v) if w not in in_forest]

    while True:
        roots = [v for v in sorted(graph.nodes) if v not in in_forest and len(free(v)) >= 3]
        if not roots:
            break
        root = roots[0]
        in_forest.add(root)
        leaves = []
        for w in free(root):
            in_forest.add(w)
            forest.append(edge_key(root, w))
            leaves.append(w)
        while True:
            counts = [(len(free(v)), v) for v in leaves]
            expandable = [(c, v) for c, v in counts if c >= 2]
            if not expandable:
                break
            _, v = min(expandable, key=lambda cv: (-cv[0], cv[1]))
            leaves.remove(v)
            for w in free(v):
                in_forest.add(w)
                forest.append(edge_key(v, w))
                leaves.append(w)

    degree = {v: 0 for v in graph.nodes}
    for u, v in forest:
        degree[u] += 1
        degree[v] += 1
    forest_leaves = {v for v in in_forest if degree[v] == 1}
    dsu = DisjointSet(graph.nodes)
    for u, v in forest:
        dsu.union(u, v)
    edges = list(forest)
    # joining edges prefer endpoints that are not forest leaves
    for u, v, _ in sorted(
        graph.sorted_edges(),
        key=lambda e: ((e[0] in forest_leaves) + (e[1] in forest_leaves), e[0], e[1]),
    ):
        if dsu.union(u, v):
            edges.append((u, v))
    return edges


def max_leaf_greedy(graph: Graph) -> LeafTreeSolution:
    """Greedy spanning tree with many leaves"""
    _check_connected(graph)
    if len(graph.nodes) <= 2:
        return _leaf_solution(graph, graph.edges)
    forest = _leaf_solution(graph, _leafy_forest_tree(graph))
    grown = _leaf_solution(graph, _expansion_tree(graph))
    return grown if len(grown.leaves) > len(forest.leaves) else forest


def cds_from_spanning_tree(solution: LeafTreeSolution, graph: Graph) -> frozenset[int]:
    """Internal nodes of a spanning tree, verified to be a connected dominating set"""
    if len(solution.edges) != len(graph.nodes) - 1 or not all(graph.has_edge(*e) for e in solution.edges):
        raise DominationViolation("solution is not a spanning tree of the graph")
    dominating = solution.internal or frozenset({solution.root})
    if not _is_connected_dominating(graph, dominating):
        raise DominationViolation("internal nodes do not form a connected dominating set")
    return dominating
