"""Agglomerative hierarchical clustering over ordinal estimate vectors."""

import itertools
import logging
import math
from collections.abc import Sequence
from fractions import Fraction
from typing import Optional

import numpy as np

from models.errors import LengthMismatch, ValidationError
from models.models import ClusterConfig, Dendrogram, ElementTable, MergeStep, RootedTree

logger = logging.getLogger(__name__)

METRICS = ("euclidean", "manhattan", "chebyshev")
RULES = ("average", "min", "max")

Vector = tuple[Fraction, ...]


def proximity(z1: Sequence[Fraction], z2: Sequence[Fraction], metric: str = "euclidean") -> Fraction:
    """Exact comparison value of two vectors: squared distance for euclidean"""
    if len(z1) != len(z2):
        raise LengthMismatch(f"vectors of length {len(z1)} and {len(z2)}")
    diffs = [abs(Fraction(a) - Fraction(b)) for a, b in zip(z1, z2)]
    if metric == "euclidean":
        return sum((d * d for d in diffs), Fraction(0))
    if metric == "manhattan":
        return sum(diffs, Fraction(0))
    if metric == "chebyshev":
        return max(diffs, default=Fraction(0))
    raise ValidationError("config.metric", f"unknown metric '{metric}'")


def reported_distance(value: Fraction, metric: str = "euclidean") -> float:
    return math.sqrt(value) if metric == "euclidean" else float(value)


def distance_matrix(table: ElementTable, metric: str = "euclidean") -> tuple[tuple[Fraction, ...], ...]:
    """Symmetric matrix of exact proximities (squared for euclidean)"""
    rows = table.attributes
    return tuple(tuple(proximity(a, b, metric) for b in rows) for a in rows)


def distance_report(table: ElementTable, metric: str = "euclidean") -> np.ndarray:
    """Float distances for display"""
    exact = np.array(distance_matrix(table, metric), dtype=float)
    return np.sqrt(exact) if metric == "euclidean" else exact


def aggregate_pair(z1: Sequence[Fraction], z2: Sequence[Fraction], rule: str = "average") -> Vector:
    if len(z1) != len(z2):
        raise LengthMismatch(f"vectors of length {len(z1)} and {len(z2)}")
    if rule == "average":
        return tuple((Fraction(a) + Fraction(b)) / 2 for a, b in zip(z1, z2))
    if rule == "min":
        return tuple(min(Fraction(a), Fraction(b)) for a, b in zip(z1, z2))
    if rule == "max":
        return tuple(max(Fraction(a), Fraction(b)) for a, b in zip(z1, z2))
    raise ValidationError("config.rule", f"unknown aggregation rule '{rule}'")


def _validate(table: ElementTable) -> None:
    if not table.elements:
        raise ValidationError("elements", "table has no elements")
    if len(table.attributes) != len(table.elements):
        raise ValidationError("attrs", "one row per element is required")
    width = len(table.attributes[0])
    if width == 0:
        raise ValidationError("attrs[0]", "rows need at least one column")
    for i, row in enumerate(table.attributes):
        if len(row) != width:
            raise ValidationError(f"attrs[{i}]", f"expected {width} columns, got {len(row)}")


def _pair_key(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, int]:
    return tuple(sorted((min(a), min(b))))


def _merge(live: list, i: int, j: int, rule: str) -> tuple[tuple[int, ...], tuple[int, ...]]:
    (ma, va), (mb, vb) = live[i], live[j]
    if min(mb) < min(ma):
        (ma, va), (mb, vb) = (mb, vb), (ma, va)
    merged = (ma + mb, aggregate_pair(va, vb, rule))
    for idx in sorted((i, j), reverse=True):
        del live[idx]
    live.append(merged)
    live.sort(key=lambda c: min(c[0]))
    return ma, mb


def agglomerate(table: ElementTable, config: Optional[ClusterConfig] = None) -> Dendrogram:
    """Merge the closest pair of clusters until the stop condition holds"""
    config = config or table.config
    _validate(table)
    if config.metric not in METRICS:
        raise ValidationError("config.metric", f"unknown metric '{config.metric}'")
    if config.rule not in RULES:
        raise ValidationError("config.rule", f"unknown aggregation rule '{config.rule}'")
    if config.clusters < 1:
        raise ValidationError("config.clusters", "cluster count must be positive")
    limit = None
    if config.max_distance is not None:
        limit = config.max_distance**2 if config.metric == "euclidean" else config.max_distance

    live = [((e,), tuple(row)) for e, row in zip(table.elements, table.attributes)]
    live.sort(key=lambda c: min(c[0]))
    steps = []
    while len(live) > config.clusters:
        best = None
        for i, j in itertools.combinations(range(len(live)), 2):
            value = proximity(live[i][1], live[j][1], config.metric)
            key = (value, _pair_key(live[i][0], live[j][0]))
            if best is None or key < best[0]:
                best = (key, i, j)
        (value, _), i, j = best
        if limit is not None and value > limit:
            break
        left, right = _merge(live, i, j, config.rule)
        steps.append(MergeStep(len(steps) + 1, left, right, value))
        logger.debug("step %d merges %s and %s at %s", len(steps), left, right, value)
    return Dendrogram(config.metric, config.rule, tuple(steps), tuple(m for m, _ in live))


def dominates(a: Sequence[Fraction], b: Sequence[Fraction]) -> bool:
    """a <= b componentwise with at least one strict component"""
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def agglomerate_ordinal(table: ElementTable, config: Optional[ClusterConfig] = None) -> Dendrogram:
    """Merge a Pareto-minimal pair under componentwise absolute differences"""
    config = config or table.config
    _validate(table)
    if config.rule not in RULES:
        raise ValidationError("config.rule", f"unknown aggregation rule '{config.rule}'")
    live = [((e,), tuple(row)) for e, row in zip(table.elements, table.attributes)]
    live.sort(key=lambda c: min(c[0]))
    steps = []
    while len(live) > max(config.clusters, 1):
        pairs = []
        for i, j in itertools.combinations(range(len(live)), 2):
            vector = tuple(abs(a - b) for a, b in zip(live[i][1], live[j][1]))
            pairs.append((vector, _pair_key(live[i][0], live[j][0]), i, j))
        pareto = [p for p in pairs if not any(dominates(q[0], p[0]) for q in pairs)]
        vector, _, i, j = min(pareto, key=lambda p: p[1])
        left, right = _merge(live, i, j, config.rule)
        steps.append(MergeStep(len(steps) + 1, left, right, sum(vector, Fraction(0)), vector))
    return Dendrogram("ordinal", config.rule, tuple(steps), tuple(m for m, _ in live))


def partition_at(dendrogram: Dendrogram, steps: int) -> tuple[tuple[int, ...], ...]:
    """Partition after the first `steps` merges, ordered by smallest member"""
    elements = [e for cluster in dendrogram.clusters for e in cluster]
    clusters = {(e,) for e in elements}
    for step in dendrogram.steps[:steps]:
        clusters.discard(step.left)
        clusters.discard(step.right)
        clusters.add(step.left + step.right)
    return tuple(sorted(clusters, key=min))


def dendrogram_tree(dendrogram: Dendrogram) -> RootedTree:
    """Merge tree: elements are leaves, merge step s becomes node n + s"""
    elements = sorted(e for cluster in dendrogram.clusters for e in cluster)
    offset = max(elements)
    owner = {(e,): e for e in elements}
    parent: dict[int, int] = {}
    labels = {}
    for step in dendrogram.steps:
        node = offset + step.index
        parent[owner.pop(step.left)] = node
        parent[owner.pop(step.right)] = node
        owner[step.left + step.right] = node
        labels[node] = f"step {step.index}"
    roots = sorted(owner.values())
    if len(roots) > 1:
        top = offset + len(dendrogram.steps) + 1
        for r in roots:
            parent[r] = top
        labels[top] = "partition"
        roots = [top]
    return RootedTree.from_parents(roots[0], parent, labels=labels)
