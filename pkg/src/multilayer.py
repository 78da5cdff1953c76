"""Layered k-connected networks, two-level network design and user/access-point assignment."""

import itertools
import logging
import math
from collections.abc import Iterable, Sequence
from fractions import Fraction
from typing import Optional

import numpy as np

import config
from clustering import agglomerate
from core import mst
from models.errors import EmptyPrimarySet, TooFewSites, TooLargeForExact, ValidationError
from models.models import (
    AccessPoint,
    ApLoad,
    Assignment,
    ClusterConfig,
    ElementTable,
    Graph,
    LayeredNetwork,
    Site,
    UserProfile,
)

logger = logging.getLogger(__name__)

SCHEMES = ("regional", "distributed")
TOPOLOGIES = ("path", "tree", "ring")


def squared_distance(a: Site, b: Site) -> Fraction:
    return (a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2


def site_distance(a: Site, b: Site) -> Fraction:
    """Euclidean length as a rational rounded to 1e-6"""
    return Fraction(math.sqrt(squared_distance(a, b))).limit_denominator(10**6)


def _nearest(target: Site, pool: Iterable[Site]) -> Site:
    return min(pool, key=lambda s: (squared_distance(target, s), s.id))


def centrality_order(sites: Sequence[Site]) -> list[int]:
    """Site ids by ascending sum of distances to all other sites"""
    coords = np.array([[float(c) for c in s.point] for s in sites])
    totals = np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=2).sum(axis=1)
    ids = np.array([s.id for s in sites])
    return [int(ids[i]) for i in np.lexsort((ids, totals))]


def _site_table(sites: Sequence[Site]) -> ElementTable:
    return ElementTable(tuple(s.id for s in sites), tuple(s.point for s in sites))


def _anchor_classes(users: Sequence[Site], k: int) -> list[tuple[int, ...]]:
    """Split users into min(k + 1, |users|) spatial groups"""
    if not users:
        return []
    groups = agglomerate(_site_table(users), ClusterConfig(clusters=min(k + 1, len(users)))).clusters
    return sorted(groups, key=min)


def _centroid(members: Iterable[Site]) -> Site:
    members = list(members)
    return Site(-1, *(sum(c) / len(members) for c in zip(*(s.point for s in members))))


def _match_anchors(groups: Sequence[Sequence[int]], center: Sequence[int], by_id: dict[int, Site]) -> dict[int, int]:
    """Give every user group its own center member, closest pairs first"""
    centroids = [_centroid(by_id[v] for v in group) for group in groups]
    pairs = sorted(
        (squared_distance(centroids[g], by_id[m]), g, m) for g in range(len(groups)) for m in sorted(center)
    )
    taken_groups: set[int] = set()
    taken_members: set[int] = set()
    anchor = {}
    for _, g, m in pairs:
        if g in taken_groups or m in taken_members:
            continue
        taken_groups.add(g)
        taken_members.add(m)
        for user in groups[g]:
            anchor[user] = m
    return anchor


def connect_layers(sites: Sequence[Site], centers: Sequence[Sequence[int]], k: int) -> LayeredNetwork:
    """Center cliques plus one edge from every user into each center.

    Users are split into at most k + 1 spatial groups and each center links every
    group to a different member, so removing k - 1 vertices always leaves some
    group with a surviving user and surviving anchors in every center.
    """
    by_id = {s.id: s for s in sites}
    seen: set[int] = set()
    for c, center in enumerate(centers):
        if len(center) != k + 1:
            raise ValidationError(f"centers[{c}]", f"a center needs {k + 1} nodes")
        for v in center:
            if v not in by_id:
                raise ValidationError(f"centers[{c}]", f"unknown site {v}")
            if v in seen:
                raise ValidationError(f"centers[{c}]", f"site {v} is in two centers")
            seen.add(v)
    users = sorted(set(by_id) - seen)
    if len(users) < k:
        raise TooFewSites(f"{len(users)} user nodes left, at least {k} needed")

    edges = []
    for center in centers:
        for u, v in itertools.combinations(sorted(center), 2):
            edges.append((u, v, site_distance(by_id[u], by_id[v])))
    groups = _anchor_classes([by_id[v] for v in users], k)
    logger.debug("user groups: %s", groups)
    for center in centers:
        anchor = _match_anchors(groups, center, by_id)
        for user in users:
            edges.append((user, anchor[user], site_distance(by_id[user], by_id[anchor[user]])))
    layers = {v: "center" for v in seen} | {v: "user" for v in users}
    graph = Graph.from_edges(by_id, edges, {v: {"layer": layer} for v, layer in layers.items()})
    return LayeredNetwork(
        k=k,
        centers=tuple(tuple(sorted(c)) for c in centers),
        users=tuple(users),
        graph=graph,
        layers=layers,
    )


def _regional_centers(sites: Sequence[Site], k: int, candidates: Optional[Sequence[int]]) -> list[list[int]]:
    by_id = {s.id: s for s in sites}
    needed = k * (k + 1)
    if candidates:
        unknown = [c for c in candidates if c not in by_id]
        if unknown:
            raise ValidationError("candidates", f"unknown site {unknown[0]}")
        pool_ids = centrality_order([by_id[c] for c in candidates])[:needed]
    else:
        pool_ids = centrality_order(sites)[:needed]
    if len(pool_ids) < needed:
        raise TooFewSites(f"{len(pool_ids)} center candidates, {needed} needed")
    dendrogram = agglomerate(_site_table([by_id[v] for v in pool_ids]), ClusterConfig(clusters=1))
    order = dendrogram.clusters[0]
    return [list(order[i : i + k + 1]) for i in range(0, needed, k + 1)]


def _distributed_centers(sites: Sequence[Site], k: int, seed: int) -> list[list[int]]:
    by_id = {s.id: s for s in sites}
    clusters = agglomerate(_site_table(sites), ClusterConfig(clusters=k)).clusters
    centroids = [_centroid(by_id[v] for v in members) for members in clusters]
    rng = np.random.default_rng(seed)
    used: set[int] = set()
    centers: list[list[int]] = [[] for _ in range(k)]
    for slot in range(k + 1):
        for c in range(k):
            cluster = (c + slot) % k
            available = sorted(v for v in clusters[cluster] if v not in used)
            if available:
                pick = available[int(rng.integers(len(available)))]
            else:
                spare = (by_id[v] for v in sorted(by_id) if v not in used)
                pick = _nearest(centroids[cluster], spare).id
            used.add(pick)
            centers[c].append(pick)
    return centers


def build_k_connected(
    sites: Sequence[Site],
    k: int,
    scheme: str = "regional",
    seed: int = 0,
    candidates: Optional[Sequence[int]] = None,
) -> LayeredNetwork:
    """Three-layer network whose vertex connectivity is at least k"""
    if k < 2:
        raise ValidationError("k", "k must be at least 2")
    if scheme not in SCHEMES:
        raise ValidationError("scheme", f"unknown scheme '{scheme}'")
    needed = k * (k + 1) + k
    if len(sites) < needed:
        raise TooFewSites(f"{len(sites)} sites, at least {needed} needed for k={k}")
    if scheme == "regional":
        centers = _regional_centers(sites, k, candidates)
    else:
        centers = _distributed_centers(sites, k, seed)
    logger.debug("%s scheme centers: %s", scheme, centers)
    return connect_layers(sites, centers, k)


# ------------------------------------------------------- two-level design ---


def _path_length(path: Sequence[int], cost) -> Fraction:
    return sum((cost(a, b) for a, b in zip(path, path[1:])), Fraction(0))


def _nearest_neighbour_path(ids: Sequence[int], cost) -> list[int]:
    path = [min(ids)]
    rest = set(ids) - {path[0]}
    while rest:
        nxt = min(rest, key=lambda v: (cost(path[-1], v), v))
        path.append(nxt)
        rest.remove(nxt)
    return path


def _two_opt(path: list[int], cost) -> list[int]:
    """Reverse segments while the open path gets strictly shorter"""
    improved = True
    while improved:
        improved = False
        best = _path_length(path, cost)
        for i, j in itertools.combinations(range(len(path)), 2):
            candidate = path[:i] + path[i : j + 1][::-1] + path[j + 1 :]
            length = _path_length(candidate, cost)
            if length < best:
                path, best, improved = candidate, length, True
    return path


def two_level_design(
    sites: Sequence[Site],
    primary: Iterable[int],
    topology: str = "path",
    primary_multiplier=2,
    secondary_multiplier=1,
) -> Graph:
    """Primary backbone of the given topology plus minimum-cost secondary trees"""
    by_id = {s.id: s for s in sites}
    primary = sorted(set(primary))
    if not primary:
        raise EmptyPrimarySet("no primary nodes given")
    unknown = [v for v in primary if v not in by_id]
    if unknown:
        raise ValidationError("primary", f"unknown site {unknown[0]}")
    if topology not in TOPOLOGIES:
        raise ValidationError("topology", f"unknown topology '{topology}'")
    high, low = Fraction(primary_multiplier), Fraction(secondary_multiplier)
    if high <= low:
        raise ValidationError("primary_multiplier", "primary arcs must cost more than secondary arcs")

    def primary_cost(u: int, v: int) -> Fraction:
        return high * site_distance(by_id[u], by_id[v])

    if topology == "tree":
        backbone = Graph.from_edges(
            primary, [(u, v, primary_cost(u, v)) for u, v in itertools.combinations(primary, 2)]
        )
        high_edges = [(u, v, backbone.weight(u, v)) for u, v in sorted(mst(backbone).edges)]
    else:
        path = _two_opt(_nearest_neighbour_path(primary, primary_cost), primary_cost)
        pairs = list(zip(path, path[1:]))
        if topology == "ring" and len(path) >= 3:
            pairs.append((path[-1], path[0]))
        high_edges = [(u, v, primary_cost(u, v)) for u, v in pairs]

    secondary = sorted(set(by_id) - set(primary))
    low_edges = []
    if secondary:
        hub = min(by_id) - 1
        attach = {v: _nearest(by_id[v], (by_id[p] for p in primary)).id for v in secondary}
        aux_edges = [
            (u, v, low * site_distance(by_id[u], by_id[v]))
            for u, v in itertools.combinations(secondary, 2)
        ]
        aux_edges += [(hub, v, low * site_distance(by_id[v], by_id[attach[v]])) for v in secondary]
        aux = Graph.from_edges([hub, *secondary], aux_edges)
        for u, v in sorted(mst(aux).edges):
            weight = aux.weight(u, v)
            if u == hub:
                u = attach[v]
            low_edges.append((u, v, weight))

    attrs = {v: {"layer": "primary" if v in primary else "secondary"} for v in by_id}
    return Graph.from_edges(by_id, high_edges + low_edges, attrs)


def network_cost(graph: Graph) -> Fraction:
    return sum(graph.edges.values(), Fraction(0))


# ------------------------------------------------------------- assignment ---


def validate_profiles(users: Sequence[UserProfile]) -> list[str]:
    """Warn about values outside the documented scales without rejecting them"""
    warnings = []
    for user in users:
        if not 1 <= user.bandwidth <= 10:
            warnings.append(f"user {user.id}: bandwidth {user.bandwidth} outside [1, 10]")
        if not 1 <= user.reliability <= 10:
            warnings.append(f"user {user.id}: reliability {user.reliability} outside [1, 10]")
        if user.site.z <= 0:
            warnings.append(f"user {user.id}: nonpositive height {user.site.z}")
    for message in warnings:
        logger.warning(message)
    return warnings


def feasible_access_points(
    user: UserProfile, aps: Sequence[AccessPoint], max_distance: Optional[Fraction]
) -> tuple[int, ...]:
    """Ids of access points within distance L of the user; None or inf means unlimited"""
    if max_distance is None or max_distance == math.inf:
        return tuple(ap.id for ap in aps)
    limit = Fraction(max_distance) ** 2
    return tuple(ap.id for ap in aps if squared_distance(user.site, ap.site) <= limit)


def pair_vector(user: UserProfile, ap: AccessPoint) -> tuple[Fraction, Fraction, int]:
    """(r_ij, f_ij, p_ij) estimate of a user/access-point pair"""
    return (min(user.reliability, ap.reliability), user.bandwidth, user.priority)


def _better(a, b) -> bool:
    """a dominates b: reliability and bandwidth up, priority number down"""
    no_worse = a[0] >= b[0] and a[1] >= b[1] and a[2] <= b[2]
    return no_worse and (a[0] > b[0] or a[1] > b[1] or a[2] < b[2])


def rank_pairs(pairs: Sequence[tuple]) -> list[int]:
    """Pareto layer (1 = nondominated) of every pair vector"""
    ranks = [0] * len(pairs)
    remaining = set(range(len(pairs)))
    layer = 0
    while remaining:
        layer += 1
        front = [i for i in remaining if not any(_better(pairs[j], pairs[i]) for j in remaining)]
        for i in front:
            ranks[i] = layer
        remaining -= set(front)
    return ranks


def _assignment(mapping: dict[int, int], users, aps) -> Assignment:
    bandwidth = {u.id: u.bandwidth for u in users}
    loads = {}
    for ap in aps:
        members = [u for u, a in mapping.items() if a == ap.id]
        loads[ap.id] = ApLoad(len(members), sum((bandwidth[u] for u in members), Fraction(0)))
    return Assignment(dict(sorted(mapping.items())), loads)


def assign_users_greedy(
    users: Sequence[UserProfile], aps: Sequence[AccessPoint], max_distance: Optional[Fraction]
) -> Assignment:
    """Scan ranked user/AP pairs and accept each one that still fits the AP"""
    by_ap = {ap.id: ap for ap in aps}
    pairs = []
    for user in users:
        for ap_id in feasible_access_points(user, aps, max_distance):
            pairs.append((user, by_ap[ap_id], pair_vector(user, by_ap[ap_id])))
    ranks = rank_pairs([vec for _, _, vec in pairs])
    order = sorted(range(len(pairs)), key=lambda i: (ranks[i], pairs[i][0].id, pairs[i][1].id))

    mapping: dict[int, int] = {}
    count = {ap.id: 0 for ap in aps}
    load = {ap.id: Fraction(0) for ap in aps}
    for i in order:
        user, ap, _ = pairs[i]
        if user.id in mapping:
            continue
        if count[ap.id] + 1 > ap.max_users or load[ap.id] + user.bandwidth > ap.bandwidth:
            continue
        mapping[user.id] = ap.id
        count[ap.id] += 1
        load[ap.id] += user.bandwidth
    logger.debug("greedy assignment placed %d of %d users", len(mapping), len(users))
    return _assignment(mapping, users, aps)


def assign_users_exact(
    users: Sequence[UserProfile],
    aps: Sequence[AccessPoint],
    max_distance: Optional[Fraction],
    limit: Optional[int] = None,
) -> Assignment:
    """Assignment with the most users (then the largest total r_ij) by exhaustive search"""
    limit = config.EXACT_SPACE_LIMIT if limit is None else limit
    by_ap = {ap.id: ap for ap in aps}
    options = [feasible_access_points(u, aps, max_distance) for u in users]
    space = math.prod(len(o) + 1 for o in options)
    if space > limit:
        raise TooLargeForExact(f"{space} assignments exceed the exact bound {limit}")

    best: tuple = ((-1, Fraction(-1)), {})
    count = {ap.id: 0 for ap in aps}
    load = {ap.id: Fraction(0) for ap in aps}
    mapping: dict[int, int] = {}

    def search(i: int, assigned: int, reliability: Fraction) -> None:
        nonlocal best
        if i == len(users):
            if (assigned, reliability) > best[0]:
                best = ((assigned, reliability), dict(mapping))
            return
        user = users[i]
        for ap_id in options[i]:
            ap = by_ap[ap_id]
            if count[ap_id] + 1 > ap.max_users or load[ap_id] + user.bandwidth > ap.bandwidth:
                continue
            count[ap_id] += 1
            load[ap_id] += user.bandwidth
            mapping[user.id] = ap_id
            search(i + 1, assigned + 1, reliability + pair_vector(user, ap)[0])
            del mapping[user.id]
            count[ap_id] -= 1
            load[ap_id] -= user.bandwidth
        search(i + 1, assigned, reliability)

    search(0, 0, Fraction(0))
    return _assignment(best[1], users, aps)


def check_assignment(
    assignment: Assignment,
    users: Sequence[UserProfile],
    aps: Sequence[AccessPoint],
    max_distance: Optional[Fraction],
) -> list[str]:
    """Capacity, distance and load-summary violations of an assignment"""
    by_user = {u.id: u for u in users}
    by_ap = {ap.id: ap for ap in aps}
    problems = []
    for user_id, ap_id in assignment.mapping.items():
        if ap_id not in feasible_access_points(by_user[user_id], aps, max_distance):
            problems.append(f"user {user_id} is out of range of access point {ap_id}")
    recomputed = _assignment(dict(assignment.mapping), users, aps).loads
    for ap_id, ap in by_ap.items():
        load = recomputed[ap_id]
        if load != assignment.loads.get(ap_id):
            problems.append(f"access point {ap_id}: stored load differs from recomputed load")
        if load.users > ap.max_users:
            problems.append(f"access point {ap_id}: {load.users} users exceed {ap.max_users}")
        if load.bandwidth > ap.bandwidth:
            problems.append(f"access point {ap_id}: bandwidth {load.bandwidth} exceeds {ap.bandwidth}")
    return problems
