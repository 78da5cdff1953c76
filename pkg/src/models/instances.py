"""JSON instance files: parsing into the typed model and serializing back.

Every document carries a `kind`. Numbers may be written as JSON numbers or as decimal/rational
strings ("3.1", "1/3"); they are always written back as strings so values stay exact.
"""

import json
import logging
from collections.abc import Callable, Mapping
from fractions import Fraction
from typing import Any, Optional

from .errors import InstanceSyntaxError, ValidationError
from .models import (
    AccessPoint,
    AssignInstance,
    AugmentInstance,
    ChangeCosts,
    ChoiceInstance,
    ChoiceOption,
    ClusterConfig,
    CompatTable,
    CondenseInstance,
    DesignAlternative,
    ElementTable,
    Graph,
    HotlinkInstance,
    Item,
    KConnectInstance,
    KnapsackInstance,
    MorphHierarchy,
    OverlayTree,
    RestructureInstance,
    RootedTree,
    Site,
    SteinerCandidate,
    SteinerInstance,
    TwoLevelInstance,
    UserProfile,
    edge_key,
)

logger = logging.getLogger(__name__)

GRAPH_KINDS = ("graph", "mst", "maxleaf")
RESTRUCTURE_KINDS = ("knapsack-solution", "mchoice-solution", "spanning-tree")
METRIC_FIELDS = ("depth", "max_degree", "leaf_count", "node_count")


# ---------------------------------------------------------------- numbers ---


def number_text(value) -> str:
    """Exact decimal string, or p/q when the decimal expansion does not terminate"""
    value = Fraction(value)
    den = value.denominator
    places = 0
    while den % 2 == 0 or den % 5 == 0:
        if den % 10 == 0:
            den //= 10
        elif den % 2 == 0:
            den //= 2
        else:
            den //= 5
        places += 1
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    if places == 0:
        return str(value.numerator)
    digits = str(abs(value.numerator) * 10**places // value.denominator).rjust(places + 1, "0")
    text = f"{digits[:-places]}.{digits[-places:]}".rstrip("0").rstrip(".")
    return f"-{text}" if value < 0 else text


def _number(value: Any, path: str) -> Fraction:
    if isinstance(value, bool):
        raise ValidationError(path, "expected a number")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(str(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ValidationError(path, f"'{value}' is not a number") from None
    raise ValidationError(path, "expected a number")


def _int(value: Any, path: str) -> int:
    if isinstance(value, bool):
        raise ValidationError(path, "expected an integer")
    if isinstance(value, int):
        return value
    if isinstance(value, str) and value.strip().lstrip("-").isdigit():
        return int(value)
    raise ValidationError(path, "expected an integer")


def _ident(value: Any, path: str):
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ValidationError(path, "expected a string or integer id")
    return value


def _field(doc: Mapping, key: str, path: str = ""):
    if key not in doc:
        raise ValidationError(f"{path}{key}", "missing field")
    return doc[key]


def _list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise ValidationError(path, "expected a list")
    return value


def _object(value: Any, path: str) -> dict:
    if not isinstance(value, dict):
        raise ValidationError(path, "expected an object")
    return value


def _optional(doc: Mapping, key: str, convert: Callable, default=None):
    value = doc.get(key)
    return default if value is None else convert(value, key)


def _check_ids(ids: list, path: str) -> None:
    if len(set(ids)) != len(ids):
        raise ValidationError(path, "ids must be unique")
    if len({type(i) for i in ids}) > 1:
        raise ValidationError(path, "ids must be all strings or all integers")


# ----------------------------------------------------------------- graphs ---


def _graph(doc: Mapping, path: str = "") -> Graph:
    nodes = [_int(v, f"{path}nodes[{i}]") for i, v in enumerate(_list(_field(doc, "nodes", path), f"{path}nodes"))]
    if len(set(nodes)) != len(nodes):
        raise ValidationError(f"{path}nodes", "node ids must be unique")
    edges = []
    for i, row in enumerate(_list(doc.get("edges", []), f"{path}edges")):
        where = f"{path}edges[{i}]"
        if not isinstance(row, list) or len(row) != 3:
            raise ValidationError(where, "expected [u, v, weight]")
        edges.append((_int(row[0], f"{where}[0]"), _int(row[1], f"{where}[1]"), _number(row[2], f"{where}[2]")))
    attrs = {}
    for key, value in _object(doc.get("node_attrs", {}), f"{path}node_attrs").items():
        attrs[_int(key, f"{path}node_attrs")] = dict(_object(value, f"{path}node_attrs[{key}]"))
    return Graph.from_edges(nodes, edges, attrs, path=f"{path}edges")


def _graph_doc(graph: Graph) -> dict:
    doc = {
        "nodes": sorted(graph.nodes),
        "edges": [[u, v, number_text(w)] for u, v, w in graph.sorted_edges()],
    }
    if graph.node_attrs:
        doc["node_attrs"] = {str(v): dict(a) for v, a in sorted(graph.node_attrs.items())}
    return doc


def _int_map(value: Any, path: str, convert=_number) -> dict:
    return {_int(k, path): convert(v, f"{path}[{k}]") for k, v in _object(value, path).items()}


def _tree(doc: Mapping, path: str, cls=RootedTree, **weights) -> RootedTree:
    root = _int(_field(doc, "root", path), f"{path}root")
    if "edges" in doc:
        edges = []
        for i, e in enumerate(_list(doc["edges"], f"{path}edges")):
            if not isinstance(e, list) or len(e) != 2:
                raise ValidationError(f"{path}edges[{i}]", "expected [u, v]")
            edges.append((_int(e[0], f"{path}edges[{i}][0]"), _int(e[1], f"{path}edges[{i}][1]")))
        return cls.from_edges(root, edges, **weights)
    parent = _int_map(_field(doc, "parent", path), f"{path}parent", _int)
    labels = {_int(k, f"{path}labels"): str(v) for k, v in _object(doc.get("labels", {}), f"{path}labels").items()}
    return cls.from_parents(root, parent, labels=labels, path=path.rstrip(".") or "tree", **weights)


def _tree_doc(tree: RootedTree) -> dict:
    doc = {"root": tree.root, "parent": {str(c): p for c, p in sorted(tree.parent.items())}}
    if tree.labels:
        doc["labels"] = {str(v): name for v, name in sorted(tree.labels.items())}
    return doc


def _edge_list(value: Any, path: str) -> tuple:
    edges = []
    for i, e in enumerate(_list(value, path)):
        if not isinstance(e, list) or len(e) != 2:
            raise ValidationError(f"{path}[{i}]", "expected [u, v]")
        edges.append(edge_key(_int(e[0], f"{path}[{i}][0]"), _int(e[1], f"{path}[{i}][1]")))
    return tuple(edges)


# ------------------------------------------------------------ per kind ---


def _parse_steiner(doc):
    graph = _graph(doc)
    terminals = frozenset(_int(t, f"terminals[{i}]") for i, t in enumerate(_list(_field(doc, "terminals"), "terminals")))
    return SteinerInstance(graph, terminals)


def _parse_cluster(doc):
    elements = tuple(_int(e, f"elements[{i}]") for i, e in enumerate(_list(_field(doc, "elements"), "elements")))
    if len(set(elements)) != len(elements):
        raise ValidationError("elements", "element ids must be unique")
    attrs = tuple(
        tuple(_number(x, f"attrs[{i}][{j}]") for j, x in enumerate(_list(row, f"attrs[{i}]")))
        for i, row in enumerate(_list(_field(doc, "attrs"), "attrs"))
    )
    cfg = _object(doc.get("config", {}), "config")
    max_distance = cfg.get("max_distance")
    config = ClusterConfig(
        metric=str(cfg.get("metric", "euclidean")),
        rule=str(cfg.get("rule", "average")),
        clusters=_int(cfg.get("clusters", 1), "config.clusters"),
        max_distance=None if max_distance is None else _number(max_distance, "config.max_distance"),
        variant=str(cfg.get("variant", "standard")),
    )
    if config.variant not in ("standard", "ordinal"):
        raise ValidationError("config.variant", f"unknown variant '{config.variant}'")
    return ElementTable(elements, attrs, config)


def _sites(value, path="sites") -> tuple[Site, ...]:
    sites = []
    for i, row in enumerate(_list(value, path)):
        if not isinstance(row, list) or len(row) not in (3, 4):
            raise ValidationError(f"{path}[{i}]", "expected [id, x, y] or [id, x, y, z]")
        coords = [_number(x, f"{path}[{i}][{j + 1}]") for j, x in enumerate(row[1:])]
        sites.append(Site(_int(row[0], f"{path}[{i}][0]"), *coords))
    _check_ids([s.id for s in sites], path)
    return tuple(sites)


def _site_row(site: Site) -> list:
    return [site.id, number_text(site.x), number_text(site.y), number_text(site.z)]


def _parse_kconnect(doc):
    candidates = doc.get("candidates")
    centers = doc.get("centers")
    return KConnectInstance(
        sites=_sites(_field(doc, "sites")),
        k=_int(_field(doc, "k"), "k"),
        scheme=str(doc.get("scheme", "regional")),
        seed=_int(doc.get("seed", 0), "seed"),
        candidates=None if candidates is None else tuple(_int(c, "candidates") for c in _list(candidates, "candidates")),
        centers=None
        if centers is None
        else tuple(tuple(_int(c, f"centers[{i}]") for c in _list(g, f"centers[{i}]")) for i, g in enumerate(_list(centers, "centers"))),
    )


def _parse_twolevel(doc):
    return TwoLevelInstance(
        sites=_sites(_field(doc, "sites")),
        primary=frozenset(_int(p, "primary") for p in _list(_field(doc, "primary"), "primary")),
        topology=str(doc.get("topology", "path")),
        primary_multiplier=_optional(doc, "primary_multiplier", _number, Fraction(2)),
        secondary_multiplier=_optional(doc, "secondary_multiplier", _number, Fraction(1)),
    )


def _parse_assign(doc):
    users = []
    for i, row in enumerate(_list(_field(doc, "users"), "users")):
        where = f"users[{i}]"
        if not isinstance(row, list) or len(row) != 7:
            raise ValidationError(where, "expected [id, x, y, z, bandwidth, priority, reliability]")
        site = Site(_int(row[0], f"{where}[0]"), *(_number(row[j], f"{where}[{j}]") for j in (1, 2, 3)))
        users.append(UserProfile(site, _number(row[4], f"{where}[4]"), _int(row[5], f"{where}[5]"), _number(row[6], f"{where}[6]")))
    aps = []
    for i, row in enumerate(_list(_field(doc, "aps"), "aps")):
        where = f"aps[{i}]"
        if not isinstance(row, list) or len(row) != 7:
            raise ValidationError(where, "expected [id, x, y, z, bandwidth, max_users, reliability]")
        site = Site(_int(row[0], f"{where}[0]"), *(_number(row[j], f"{where}[{j}]") for j in (1, 2, 3)))
        aps.append(AccessPoint(site, _number(row[4], f"{where}[4]"), _int(row[5], f"{where}[5]"), _number(row[6], f"{where}[6]")))
    _check_ids([u.id for u in users], "users")
    _check_ids([a.id for a in aps], "aps")
    return AssignInstance(tuple(users), tuple(aps), _optional(doc, "L", _number))


def _items(value, path) -> tuple[Item, ...]:
    items = []
    for i, row in enumerate(_list(value, path)):
        if not isinstance(row, list) or len(row) != 3:
            raise ValidationError(f"{path}[{i}]", "expected [id, profit, weight]")
        profit, weight = _number(row[1], f"{path}[{i}][1]"), _number(row[2], f"{path}[{i}][2]")
        if profit < 0 or weight < 0:
            raise ValidationError(f"{path}[{i}]", "profit and weight must be nonnegative")
        items.append(Item(_ident(row[0], f"{path}[{i}][0]"), profit, weight))
    return tuple(items)


def _parse_knapsack(doc):
    items = _items(_field(doc, "items"), "items")
    _check_ids([it.id for it in items], "items")
    budget = _number(_field(doc, "budget"), "budget")
    if budget < 0:
        raise ValidationError("budget", "budget must be nonnegative")
    return KnapsackInstance(items, budget)


def _parse_mchoice(doc):
    groups = []
    for g, group in enumerate(_list(_field(doc, "groups"), "groups")):
        options = _items(group, f"groups[{g}]")
        if not options:
            raise ValidationError(f"groups[{g}]", "group has no options")
        _check_ids([o.id for o in options], f"groups[{g}]")
        groups.append(tuple(ChoiceOption(o.id, o.profit, o.weight) for o in options))
    if len({type(o.id) for group in groups for o in group}) > 1:
        raise ValidationError("groups", "ids must be all strings or all integers")
    budget = _number(_field(doc, "budget"), "budget")
    if budget < 0:
        raise ValidationError("budget", "budget must be nonnegative")
    return ChoiceInstance(tuple(groups), budget)


def _parse_condense(doc):
    weights = {"node_weight": _int_map(_field(doc, "ram"), "ram"), "arc_weight": _int_map(_field(doc, "freq"), "freq")}
    tree = _tree(doc, "", OverlayTree, **weights)
    b = _optional(doc, "b", _number)
    b_minus = _optional(doc, "b_minus", _number)
    b_plus = _optional(doc, "b_plus", _number)
    if b is None and (b_minus is None or b_plus is None):
        raise ValidationError("b", "give b, or both b_minus and b_plus")
    if b is not None and (b_minus is not None or b_plus is not None):
        raise ValidationError("b", "b excludes b_minus and b_plus")
    for name, bound in (("b", b), ("b_minus", b_minus), ("b_plus", b_plus)):
        if bound is not None and bound < 0:
            raise ValidationError(name, "bound must be nonnegative")
    mode = str(doc.get("mode", "exact"))
    if mode not in ("exact", "approx"):
        raise ValidationError("mode", f"unknown mode '{mode}'")
    return CondenseInstance(
        tree,
        b,
        b_minus,
        b_plus,
        mode,
        _optional(doc, "epsilon", _number, Fraction(1, 5)),
        _optional(doc, "delta", _number, Fraction(1, 5)),
    )


def _parse_hotlink(doc):
    tree = _tree(_object(_field(doc, "tree"), "tree"), "tree.")
    weights = _int_map(_field(doc, "weights"), "weights")
    for leaf, w in weights.items():
        if leaf not in tree.children:
            raise ValidationError(f"weights[{leaf}]", "not a tree node")
        if w < 0:
            raise ValidationError(f"weights[{leaf}]", "weight must be nonnegative")
    if not any(weights.values()):
        raise ValidationError("weights", "leaf weights are empty or all zero")
    k = _int(_field(doc, "k"), "k")
    if k < 0:
        raise ValidationError("k", "hotlink budget must be nonnegative")
    sources = tuple(_int(s, f"sources[{i}]") for i, s in enumerate(_list(doc.get("sources", []), "sources")))
    for i, s in enumerate(sources):
        if s not in tree.children:
            raise ValidationError(f"sources[{i}]", "not a tree node")
    return HotlinkInstance(tree, weights, k, sources)


def _parse_augment(doc):
    tree = _tree(_object(_field(doc, "tree"), "tree"), "tree.")
    regions = []
    for i, region in enumerate(_list(_field(doc, "regions"), "regions")):
        nodes = tuple(_int(v, f"regions[{i}]") for v in _list(region, f"regions[{i}]"))
        if not nodes:
            raise ValidationError(f"regions[{i}]", "region is empty")
        regions.append(nodes)
    candidates = []
    for i, group in enumerate(_list(_field(doc, "candidates"), "candidates")):
        options = []
        for j, c in enumerate(_list(group, f"candidates[{i}]")):
            where = f"candidates[{i}][{j}]"
            c = _object(c, where)
            options.append(
                SteinerCandidate(
                    id=_ident(_field(c, "id", f"{where}."), f"{where}.id"),
                    node=_int(_field(c, "node", f"{where}."), f"{where}.node"),
                    profit=_number(_field(c, "profit", f"{where}."), f"{where}.profit"),
                    weight=_number(_field(c, "weight", f"{where}."), f"{where}.weight"),
                    remove=_edge_list(c.get("remove", []), f"{where}.remove"),
                    add=_edge_list(c.get("add", []), f"{where}.add"),
                )
            )
        candidates.append(tuple(options))
    if len(candidates) != len(regions):
        raise ValidationError("candidates", "one candidate list per region is required")
    return AugmentInstance(tree, tuple(regions), tuple(candidates), _number(_field(doc, "budget"), "budget"))


def _element(value, kind: str, path: str):
    if kind == "spanning-tree":
        if not isinstance(value, list) or len(value) != 2:
            raise ValidationError(path, "expected [u, v]")
        return edge_key(_int(value[0], f"{path}[0]"), _int(value[1], f"{path}[1]"))
    return _ident(value, path)


def _element_doc(element):
    return list(element) if isinstance(element, tuple) else element


def _parse_restructure(doc):
    problem_doc = _object(_field(doc, "problem"), "problem")
    kind = str(_field(problem_doc, "kind", "problem."))
    if kind not in RESTRUCTURE_KINDS:
        raise ValidationError("problem.kind", f"unknown problem kind '{kind}'")
    if kind == "knapsack-solution":
        problem = _parse_knapsack(problem_doc)
    elif kind == "mchoice-solution":
        problem = _parse_mchoice(problem_doc)
        _check_ids([o.id for group in problem.groups for o in group], "problem.groups")
    else:
        problem = _graph(problem_doc, "problem.")

    def solution(key):
        return frozenset(_element(e, kind, f"{key}[{i}]") for i, e in enumerate(_list(_field(doc, key), key)))

    costs_doc = _object(doc.get("costs", {}), "costs")
    tables = {}
    for side in ("add", "remove"):
        table = {}
        for i, row in enumerate(_list(costs_doc.get(side, []), f"costs.{side}")):
            if not isinstance(row, list) or len(row) != 2:
                raise ValidationError(f"costs.{side}[{i}]", "expected [element, cost]")
            cost = _number(row[1], f"costs.{side}[{i}][1]")
            if cost < 0:
                raise ValidationError(f"costs.{side}[{i}][1]", "cost must be nonnegative")
            table[_element(row[0], kind, f"costs.{side}[{i}][0]")] = cost
        tables[side] = table
    default = _number(costs_doc.get("default", 1), "costs.default")
    if default < 0:
        raise ValidationError("costs.default", "cost must be nonnegative")

    proximity = str(doc.get("proximity", "symmetric-difference"))
    if proximity not in ("symmetric-difference", "objective-gap"):
        raise ValidationError("proximity", f"unknown proximity mode '{proximity}'")
    limits = {}
    for key, value in _object(doc.get("limits", {}), "limits").items():
        bound, _, name = key.partition("_")
        if bound not in ("min", "max") or name not in METRIC_FIELDS:
            raise ValidationError(f"limits.{key}", "unknown structure limit")
        limits[key] = _int(value, f"limits.{key}")
    budget = _number(_field(doc, "budget"), "budget")
    if budget < 0:
        raise ValidationError("budget", "budget must be nonnegative")
    return RestructureInstance(
        kind,
        problem,
        solution("initial"),
        solution("goal"),
        budget,
        ChangeCosts(tables["add"], tables["remove"], default),
        proximity,
        limits,
    )


def _parse_morpho(doc):
    names = [str(n) for n in _list(_field(doc, "nodes"), "nodes")]
    if len(set(names)) != len(names) or not names:
        raise ValidationError("nodes", "node names must be unique and nonempty")
    index = {name: i for i, name in enumerate(names)}
    parent = {}
    for child, par in _object(_field(doc, "parent"), "parent").items():
        if child not in index or par not in index:
            raise ValidationError(f"parent[{child}]", "unknown node name")
        parent[index[child]] = index[par]
    roots = [i for i in range(len(names)) if i not in parent]
    if len(roots) != 1:
        raise ValidationError("parent", "hierarchy needs exactly one root")
    tree = RootedTree.from_parents(roots[0], parent, labels=dict(enumerate(names)), path="hierarchy")
    leaves = {tree.label(v) for v in tree.leaves}

    alternatives = {}
    for leaf, das in _object(_field(doc, "alternatives"), "alternatives").items():
        if leaf not in leaves:
            raise ValidationError(f"alternatives[{leaf}]", "not a leaf of the hierarchy")
        options = []
        for i, row in enumerate(_list(das, f"alternatives[{leaf}]")):
            where = f"alternatives[{leaf}][{i}]"
            if not isinstance(row, list) or len(row) != 2:
                raise ValidationError(where, "expected [name, estimate]")
            estimate = _int(row[1], f"{where}[1]")
            if estimate < 1:
                raise ValidationError(f"{where}[1]", "estimates start at 1")
            options.append(DesignAlternative(str(row[0]), estimate))
        alternatives[leaf] = tuple(options)
    missing = sorted(leaves - set(alternatives))
    if missing:
        raise ValidationError(f"alternatives[{missing[0]}]", "leaf has no design alternatives")

    tables = []
    for t, table in enumerate(_list(doc.get("tables", []), "tables")):
        where = f"tables[{t}]"
        table = _object(table, where)
        rows = [str(r) for r in _list(_field(table, "rows", f"{where}."), f"{where}.rows")]
        cols = [str(c) for c in _list(_field(table, "cols", f"{where}."), f"{where}.cols")]
        aliases = {str(k): str(v) for k, v in _object(table.get("aliases", {}), f"{where}.aliases").items()}
        if aliases:
            logger.warning("%s: rows relabelled %s", where, ", ".join(f"{k}->{v}" for k, v in aliases.items()))
        grid = _list(_field(table, "values", f"{where}."), f"{where}.values")
        if len(grid) != len(rows):
            raise ValidationError(f"{where}.values", "one row of values per row label")
        values = {}
        for i, row in enumerate(grid):
            if not isinstance(row, list) or len(row) != len(cols):
                raise ValidationError(f"{where}.values[{i}]", "one value per column label")
            for j, value in enumerate(row):
                compat = _int(value, f"{where}.values[{i}][{j}]")
                if not 0 <= compat <= 3:
                    raise ValidationError(f"{where}.values[{i}][{j}]", "compatibility lies in [0, 3]")
                values[(aliases.get(rows[i], rows[i]), aliases.get(cols[j], cols[j]))] = compat
        tables.append(CompatTable(str(_field(table, "first", f"{where}.")), str(_field(table, "second", f"{where}.")), values))

    declared = {(t.first, t.second): t for t in tables}
    for (first, second), table in declared.items():
        mirror = declared.get((second, first))
        if mirror is None:
            continue
        for (a, b), value in table.values.items():
            if mirror.values.get((b, a), value) != value:
                raise ValidationError("tables", f"compatibility of {a} and {b} is not symmetric")
    return MorphHierarchy(tree, alternatives, tuple(tables))


PARSERS: dict[str, Callable[[Mapping], Any]] = {
    "graph": _graph,
    "mst": _graph,
    "maxleaf": _graph,
    "steiner": _parse_steiner,
    "cluster": _parse_cluster,
    "kconnect": _parse_kconnect,
    "twolevel": _parse_twolevel,
    "assign": _parse_assign,
    "knapsack": _parse_knapsack,
    "mchoice": _parse_mchoice,
    "condense": _parse_condense,
    "hotlink": _parse_hotlink,
    "augment": _parse_augment,
    "restructure": _parse_restructure,
    "morpho": _parse_morpho,
}


def parse_instance(text: str, kind: Optional[str] = None):
    """Parse and validate an instance document of the requested kind"""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceSyntaxError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise InstanceSyntaxError("instance document must be a JSON object")
    declared = doc.get("kind")
    if declared not in PARSERS:
        raise ValidationError("kind", f"unknown instance kind '{declared}'")
    kind = kind or declared
    if kind not in PARSERS:
        raise ValidationError("kind", f"unknown instance kind '{kind}'")
    if declared != kind and not (declared in GRAPH_KINDS and kind in GRAPH_KINDS):
        raise ValidationError("kind", f"expected a '{kind}' instance, found '{declared}'")
    return PARSERS[kind](doc)


# ------------------------------------------------------------ serializing ---


def _items_doc(items) -> list:
    return [[it.id, number_text(it.profit), number_text(it.weight)] for it in items]


def _restructure_doc(instance: RestructureInstance) -> dict:
    if instance.kind == "knapsack-solution":
        problem = {"items": _items_doc(instance.problem.items), "budget": number_text(instance.problem.budget)}
    elif instance.kind == "mchoice-solution":
        problem = {"groups": [_items_doc(g) for g in instance.problem.groups], "budget": number_text(instance.problem.budget)}
    else:
        problem = _graph_doc(instance.problem)
    costs = instance.costs
    return {
        "problem": {"kind": instance.kind, **problem},
        "initial": [_element_doc(e) for e in sorted(instance.initial)],
        "goal": [_element_doc(e) for e in sorted(instance.goal)],
        "costs": {
            "add": [[_element_doc(e), number_text(c)] for e, c in sorted(costs.add.items())],
            "remove": [[_element_doc(e), number_text(c)] for e, c in sorted(costs.remove.items())],
            "default": number_text(costs.default),
        },
        "budget": number_text(instance.budget),
        "proximity": instance.proximity,
        "limits": dict(sorted(instance.limits.items())),
    }


def _morpho_doc(h: MorphHierarchy) -> dict:
    tree = h.tree
    names = [tree.label(v) for v in tree.nodes]
    tables = []
    for table in h.tables:
        rows = list(dict.fromkeys(a for a, _ in table.values))
        cols = list(dict.fromkeys(b for _, b in table.values))
        tables.append(
            {
                "first": table.first,
                "second": table.second,
                "rows": rows,
                "cols": cols,
                "values": [[table.values[(r, c)] for c in cols] for r in rows],
            }
        )
    return {
        "nodes": names,
        "parent": {tree.label(c): tree.label(p) for c, p in sorted(tree.parent.items())},
        "alternatives": {leaf: [[da.name, da.estimate] for da in das] for leaf, das in h.alternatives.items()},
        "tables": tables,
    }


def _bound_doc(instance) -> dict:
    doc = {}
    for name in ("b", "b_minus", "b_plus"):
        value = getattr(instance, name)
        if value is not None:
            doc[name] = number_text(value)
    return doc


def serialize_instance(instance, kind: Optional[str] = None) -> str:
    """Inverse of parse_instance: parse_instance(serialize_instance(x)) == x"""
    if isinstance(instance, Graph):
        doc = {"kind": kind or "mst", **_graph_doc(instance)}
    elif isinstance(instance, SteinerInstance):
        doc = {"kind": "steiner", **_graph_doc(instance.graph), "terminals": sorted(instance.terminals)}
    elif isinstance(instance, ElementTable):
        cfg = instance.config
        config = {"metric": cfg.metric, "rule": cfg.rule, "clusters": cfg.clusters, "variant": cfg.variant}
        if cfg.max_distance is not None:
            config["max_distance"] = number_text(cfg.max_distance)
        doc = {
            "kind": "cluster",
            "elements": list(instance.elements),
            "attrs": [[number_text(x) for x in row] for row in instance.attributes],
            "config": config,
        }
    elif isinstance(instance, KConnectInstance):
        doc = {
            "kind": "kconnect",
            "sites": [_site_row(s) for s in instance.sites],
            "k": instance.k,
            "scheme": instance.scheme,
            "seed": instance.seed,
        }
        if instance.candidates is not None:
            doc["candidates"] = list(instance.candidates)
        if instance.centers is not None:
            doc["centers"] = [list(g) for g in instance.centers]
    elif isinstance(instance, TwoLevelInstance):
        doc = {
            "kind": "twolevel",
            "sites": [_site_row(s) for s in instance.sites],
            "primary": sorted(instance.primary),
            "topology": instance.topology,
            "primary_multiplier": number_text(instance.primary_multiplier),
            "secondary_multiplier": number_text(instance.secondary_multiplier),
        }
    elif isinstance(instance, AssignInstance):
        doc = {
            "kind": "assign",
            "users": [_site_row(u.site) + [number_text(u.bandwidth), u.priority, number_text(u.reliability)] for u in instance.users],
            "aps": [_site_row(a.site) + [number_text(a.bandwidth), a.max_users, number_text(a.reliability)] for a in instance.aps],
        }
        if instance.max_distance is not None:
            doc["L"] = number_text(instance.max_distance)
    elif isinstance(instance, KnapsackInstance):
        doc = {"kind": "knapsack", "items": _items_doc(instance.items), "budget": number_text(instance.budget)}
    elif isinstance(instance, ChoiceInstance):
        doc = {"kind": "mchoice", "groups": [_items_doc(g) for g in instance.groups], "budget": number_text(instance.budget)}
    elif isinstance(instance, CondenseInstance):
        tree = instance.tree
        doc = {
            "kind": "condense",
            **_tree_doc(tree),
            "ram": {str(v): number_text(tree.ram(v)) for v in tree.nodes},
            "freq": {str(v): number_text(tree.freq(v)) for v in sorted(tree.parent)},
            **_bound_doc(instance),
            "mode": instance.mode,
            "epsilon": number_text(instance.epsilon),
            "delta": number_text(instance.delta),
        }
    elif isinstance(instance, HotlinkInstance):
        doc = {
            "kind": "hotlink",
            "tree": _tree_doc(instance.tree),
            "weights": {str(v): number_text(w) for v, w in sorted(instance.weights.items())},
            "k": instance.k,
            "sources": list(instance.sources),
        }
    elif isinstance(instance, AugmentInstance):
        doc = {
            "kind": "augment",
            "tree": _tree_doc(instance.tree),
            "regions": [list(r) for r in instance.regions],
            "candidates": [
                [
                    {
                        "id": c.id,
                        "node": c.node,
                        "profit": number_text(c.profit),
                        "weight": number_text(c.weight),
                        "remove": [list(e) for e in c.remove],
                        "add": [list(e) for e in c.add],
                    }
                    for c in group
                ]
                for group in instance.candidates
            ],
            "budget": number_text(instance.budget),
        }
    elif isinstance(instance, RestructureInstance):
        doc = {"kind": "restructure", **_restructure_doc(instance)}
    elif isinstance(instance, MorphHierarchy):
        doc = {"kind": "morpho", **_morpho_doc(instance)}
    else:
        raise ValidationError("instance", f"cannot serialize {type(instance).__name__}")
    return json.dumps(doc, indent=2) + "\n"
