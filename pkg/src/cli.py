"""Command-line front end: read an instance file, run a solver, print a report."""

import argparse
import hashlib
import json
import logging
import sys
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from fractions import Fraction
from io import BytesIO
from pathlib import Path
from typing import Any, Optional

import pandas as pd

import config
from clustering import agglomerate, agglomerate_ordinal, dendrogram_tree, partition_at, reported_distance
from condense import solve_kind1, solve_kind2
from core import mst, parse_instance, to_dot, vertex_connectivity_at_least
from knapsack import knapsack_exact, knapsack_fptas, multiple_choice_exact, multiple_choice_fptas
from models.errors import Infeasible, InputError, ValidationError
from models.instances import number_text
from models.models import ClusterConfig
from modify import (
    expected_access_cost,
    hotlink_exact_small,
    hotlink_greedy,
    restructure_solve,
    steiner_augment,
)
from morpho import enumerate_compositions, pareto_filter
from multilayer import (
    assign_users_exact,
    assign_users_greedy,
    build_k_connected,
    check_assignment,
    connect_layers,
    network_cost,
    two_level_design,
    validate_profiles,
)
from plotting import plot_dendrogram, plot_network
from spanning import cds_from_spanning_tree, max_leaf_exact, max_leaf_greedy, steiner_exact, steiner_heuristic

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = Fraction(1, 10)


@dataclass
class Outcome:
    parameters: dict[str, Any]
    result: dict[str, Any]
    dot: Optional[str] = None
    plot: Optional[Callable[[], BytesIO]] = field(default=None, repr=False)


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"'{text}' is not a number") from None


def _mode(args, allowed: tuple[str, ...], default: str) -> str:
    mode = args.mode or default
    if mode not in allowed:
        raise ValidationError("--mode", f"{args.command} supports {', '.join(allowed)}")
    return mode


def _edges(edges) -> list[list[int]]:
    return [list(e) for e in sorted(edges)]


def _selection(selection) -> dict:
    return {
        "chosen": list(selection.chosen),
        "profit": number_text(selection.profit),
        "weight": number_text(selection.weight),
    }


# --------------------------------------------------------------- commands ---


def cmd_cluster(args, text: str) -> Outcome:
    table = parse_instance(text, "cluster")
    cfg = table.config
    cfg = ClusterConfig(
        metric=cfg.metric,
        rule=cfg.rule,
        clusters=args.k if args.k is not None else cfg.clusters,
        max_distance=args.max_distance if args.max_distance is not None else cfg.max_distance,
        variant=cfg.variant,
    )
    if cfg.variant == "ordinal":
        dendrogram = agglomerate_ordinal(table, cfg)
    else:
        dendrogram = agglomerate(table, cfg)
    steps = []
    for step in dendrogram.steps:
        record = {
            "step": step.index,
            "left": list(step.left),
            "right": list(step.right),
            "proximity": number_text(step.proximity),
        }
        if step.vector is not None:
            record["vector"] = [number_text(x) for x in step.vector]
        else:
            record["distance"] = f"{reported_distance(step.proximity, dendrogram.metric):.6f}"
        steps.append(record)
    parameters = {
        "metric": cfg.metric,
        "rule": cfg.rule,
        "clusters": cfg.clusters,
        "variant": cfg.variant,
        "max_distance": None if cfg.max_distance is None else number_text(cfg.max_distance),
    }
    result = {"steps": steps, "partition": [list(c) for c in partition_at(dendrogram, len(dendrogram.steps))]}
    return Outcome(parameters, result, to_dot(dendrogram_tree(dendrogram), name="dendrogram"), lambda: plot_dendrogram(dendrogram))


def cmd_mst(args, text: str) -> Outcome:
    graph = parse_instance(text, "mst")
    tree = mst(graph)
    result = {"edges": _edges(tree.edges), "weight": number_text(tree.total_weight)}
    return Outcome({}, result, to_dot(graph, highlight_edges=tree.edges))


def cmd_steiner(args, text: str) -> Outcome:
    instance = parse_instance(text, "steiner")
    mode = _mode(args, ("exact", "approx"), "approx")
    tree = steiner_exact(instance) if mode == "exact" else steiner_heuristic(instance)
    result = {"edges": _edges(tree.edges), "weight": number_text(tree.total_weight)}
    return Outcome(
        {"mode": mode},
        result,
        to_dot(instance.graph, highlight_nodes=instance.terminals, highlight_edges=tree.edges),
    )


def cmd_maxleaf(args, text: str) -> Outcome:
    graph = parse_instance(text, "maxleaf")
    mode = _mode(args, ("exact", "greedy"), "greedy")
    solution = max_leaf_exact(graph) if mode == "exact" else max_leaf_greedy(graph)
    result = {
        "edges": _edges(solution.edges),
        "leaves": sorted(solution.leaves),
        "leaf_count": len(solution.leaves),
        "dominating_set": sorted(cds_from_spanning_tree(solution, graph)),
        "root": solution.root,
    }
    return Outcome({"mode": mode}, result, to_dot(graph, highlight_nodes=solution.leaves, highlight_edges=solution.edges))


def cmd_kconnect(args, text: str) -> Outcome:
    instance = parse_instance(text, "kconnect")
    k = args.k if args.k is not None else instance.k
    seed = args.seed if args.seed is not None else instance.seed
    if instance.centers is not None:
        network = connect_layers(instance.sites, instance.centers, k)
    else:
        network = build_k_connected(instance.sites, k, instance.scheme, seed, instance.candidates)
    result = {
        "centers": [list(c) for c in network.centers],
        "users": list(network.users),
        "edges": _edges(network.graph.edges),
        "edge_count": len(network.graph.edges),
        "cost": number_text(network_cost(network.graph)),
        "k_connected": vertex_connectivity_at_least(network.graph, k),
    }
    parameters = {"k": k, "scheme": "given" if instance.centers is not None else instance.scheme, "seed": seed}
    return Outcome(
        parameters,
        result,
        to_dot(network.graph),
        lambda: plot_network(instance.sites, network.graph, network.layers),
    )


def cmd_twolevel(args, text: str) -> Outcome:
    instance = parse_instance(text, "twolevel")
    graph = two_level_design(
        instance.sites,
        instance.primary,
        instance.topology,
        instance.primary_multiplier,
        instance.secondary_multiplier,
    )
    layers = {v: a["layer"] for v, a in graph.node_attrs.items()}
    result = {"edges": _edges(graph.edges), "cost": number_text(network_cost(graph))}
    parameters = {
        "topology": instance.topology,
        "primary_multiplier": number_text(instance.primary_multiplier),
        "secondary_multiplier": number_text(instance.secondary_multiplier),
    }
    return Outcome(parameters, result, to_dot(graph), lambda: plot_network(instance.sites, graph, layers))


def cmd_assign(args, text: str) -> Outcome:
    instance = parse_instance(text, "assign")
    mode = _mode(args, ("exact", "greedy"), "greedy")
    limit = args.max_distance if args.max_distance is not None else instance.max_distance
    warnings = validate_profiles(instance.users)
    if mode == "exact":
        assignment = assign_users_exact(instance.users, instance.aps, limit)
    else:
        assignment = assign_users_greedy(instance.users, instance.aps, limit)
    result = {
        "assignment": [{"user": u, "ap": a} for u, a in assignment.mapping.items()],
        "assigned": assignment.assigned,
        "loads": [
            {"ap": ap, "users": load.users, "bandwidth": number_text(load.bandwidth)}
            for ap, load in sorted(assignment.loads.items())
        ],
        "violations": check_assignment(assignment, instance.users, instance.aps, limit),
        "warnings": warnings,
    }
    parameters = {"mode": mode, "max_distance": None if limit is None else number_text(limit)}
    return Outcome(parameters, result)


def cmd_knapsack(args, text: str) -> Outcome:
    instance = parse_instance(text, "knapsack")
    mode = _mode(args, ("exact", "approx"), "exact")
    budget = args.budget if args.budget is not None else instance.budget
    parameters = {"mode": mode, "budget": number_text(budget)}
    if mode == "exact":
        selection = knapsack_exact(instance.items, budget)
    else:
        epsilon = args.epsilon if args.epsilon is not None else DEFAULT_EPSILON
        parameters["epsilon"] = number_text(epsilon)
        selection = knapsack_fptas(instance.items, budget, epsilon)
    return Outcome(parameters, _selection(selection))


def cmd_mchoice(args, text: str) -> Outcome:
    instance = parse_instance(text, "mchoice")
    mode = _mode(args, ("exact", "approx"), "exact")
    if args.budget is not None:
        instance = type(instance)(instance.groups, args.budget)
    parameters = {"mode": mode, "budget": number_text(instance.budget)}
    if mode == "exact":
        selection = multiple_choice_exact(instance)
    else:
        epsilon = args.epsilon if args.epsilon is not None else DEFAULT_EPSILON
        parameters["epsilon"] = number_text(epsilon)
        selection = multiple_choice_fptas(instance, epsilon)
    return Outcome(parameters, _selection(selection))


def cmd_condense(args, text: str) -> Outcome:
    instance = parse_instance(text, "condense")
    mode = _mode(args, ("exact", "approx"), instance.mode)
    epsilon = args.epsilon if args.epsilon is not None else instance.epsilon
    delta = args.delta if args.delta is not None else instance.delta
    if instance.kind == 1:
        b = args.budget if args.budget is not None else instance.b
        outcome = solve_kind1(instance.tree, b, mode, epsilon, delta)
        parameters = {"b": number_text(b)}
    else:
        outcome = solve_kind2(instance.tree, instance.b_minus, instance.b_plus, mode, epsilon, delta)
        parameters = {"b_minus": number_text(instance.b_minus), "b_plus": number_text(instance.b_plus)}
    parameters["mode"] = mode
    if mode == "approx":
        parameters |= {"epsilon": number_text(epsilon), "delta": number_text(delta)}
    condensed = outcome.tree
    result = {
        "plan": sorted(outcome.plan.selected),
        "saved": number_text(outcome.saved),
        "kernel": number_text(outcome.kernel),
        "tail": number_text(outcome.tail),
        "weight": number_text(outcome.weight),
        "groups": [
            {"node": v, "label": condensed.label(v), "ram": number_text(condensed.ram(v))}
            for v in condensed.nodes
        ],
    }
    return Outcome(parameters, result, to_dot(condensed, name="overlay"))


def cmd_hotlink(args, text: str) -> Outcome:
    instance = parse_instance(text, "hotlink")
    mode = _mode(args, ("exact", "greedy"), "greedy")
    if args.k is not None:
        instance = type(instance)(instance.tree, instance.weights, args.k, instance.sources)
    links = hotlink_exact_small(instance) if mode == "exact" else hotlink_greedy(instance)
    result = {
        "hotlinks": [list(link) for link in sorted(links)],
        "cost_before": number_text(expected_access_cost(instance.tree, instance.weights)),
        "cost_after": number_text(expected_access_cost(instance.tree, instance.weights, links)),
    }
    return Outcome({"mode": mode, "k": instance.k}, result, to_dot(instance.tree, name="hotlinks"))


def cmd_augment(args, text: str) -> Outcome:
    instance = parse_instance(text, "augment")
    if args.budget is not None:
        instance = type(instance)(instance.tree, instance.regions, instance.candidates, args.budget)
    selection, tree = steiner_augment(instance)
    steiner_nodes = [v for v in tree.nodes if v not in instance.tree.parent and v != instance.tree.root]
    result = {**_selection(selection), "tree_edges": _edges(tree.edges())}
    return Outcome({"budget": number_text(instance.budget)}, result, to_dot(tree, highlight_nodes=steiner_nodes, name="augmented"))


def cmd_restructure(args, text: str) -> Outcome:
    instance = parse_instance(text, "restructure")
    mode = _mode(args, ("exact", "greedy"), "exact")
    if args.budget is not None:
        instance = type(instance)(
            instance.kind,
            instance.problem,
            instance.initial,
            instance.goal,
            args.budget,
            instance.costs,
            instance.proximity,
            instance.limits,
        )
    outcome = restructure_solve(instance, mode)
    solution = sorted(outcome.solution)
    result = {
        "solution": [list(e) if isinstance(e, tuple) else e for e in solution],
        "proximity": number_text(outcome.proximity),
        "change_cost": number_text(outcome.change_cost),
        "objective": number_text(outcome.objective),
    }
    parameters = {
        "mode": mode,
        "kind": instance.kind,
        "budget": number_text(instance.budget),
        "proximity": instance.proximity,
    }
    return Outcome(parameters, result)


def cmd_morpho(args, text: str) -> Outcome:
    hierarchy = parse_instance(text, "morpho")
    compositions = enumerate_compositions(hierarchy)
    front = pareto_filter(compositions) if compositions else []
    leaves = hierarchy.leaf_names
    result = {
        "admissible": len(compositions),
        "pareto": [
            {**dict(zip(leaves, c.choice)), "levels": list(c.level_counts), "min_compat": c.min_compat}
            for c in front
        ],
    }
    return Outcome({}, result, to_dot(hierarchy.tree, name="morphology"))


COMMANDS: dict[str, tuple[Callable[[argparse.Namespace, str], Outcome], str]] = {
    "cluster": (cmd_cluster, "agglomerative clustering of an element table"),
    "mst": (cmd_mst, "minimum spanning tree"),
    "steiner": (cmd_steiner, "Steiner tree over terminal nodes"),
    "maxleaf": (cmd_maxleaf, "spanning tree with many leaves"),
    "kconnect": (cmd_kconnect, "layered k-connected network"),
    "twolevel": (cmd_twolevel, "two-level network design"),
    "assign": (cmd_assign, "assign users to access points"),
    "knapsack": (cmd_knapsack, "0/1 knapsack"),
    "mchoice": (cmd_mchoice, "multiple choice knapsack"),
    "condense": (cmd_condense, "condense overlay tree arcs"),
    "hotlink": (cmd_hotlink, "add hotlinks to a tree"),
    "augment": (cmd_augment, "add Steiner points to a tree"),
    "restructure": (cmd_restructure, "budgeted restructuring toward a goal solution"),
    "morpho": (cmd_morpho, "morphological composition"),
}


# ----------------------------------------------------------------- output ---


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hierarchy", description="Hierarchy design and modification solvers")
    commands = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, summary) in COMMANDS.items():
        sub = commands.add_parser(name, help=summary)
        sub.add_argument("--input", required=True, help="instance file (JSON)")
        sub.add_argument("--mode", choices=("exact", "approx", "greedy"))
        sub.add_argument("--epsilon", type=_fraction)
        sub.add_argument("--delta", type=_fraction)
        sub.add_argument("--budget", type=_fraction)
        sub.add_argument("--k", type=int)
        sub.add_argument("--seed", type=int)
        sub.add_argument("--max-distance", type=_fraction, dest="max_distance")
        sub.add_argument("--dot", help="write the resulting structure as Graphviz DOT (not assign, knapsack, mchoice, restructure)")
        sub.add_argument("--plot", help="write a PNG drawing (cluster, kconnect, twolevel)")
        sub.add_argument("--format", choices=("json", "text"), default="json")
    return parser


def render_text(report: dict) -> str:
    lines = [f"command: {report['command']}", f"digest: {report['digest']}"]
    for key, value in report["parameters"].items():
        lines.append(f"{key}: {value}")
    for key, value in report["result"].items():
        if isinstance(value, list) and value and all(isinstance(v, dict) for v in value):
            frame = pd.DataFrame(value).astype(str)
            lines += ["", f"{key}:", frame.to_string(index=False), ""]
        else:
            lines.append(f"{key}: {json.dumps(value)}")
    return "\n".join(lines) + "\n"


def run(argv: Optional[list[str]] = None) -> int:
    """Run one command; returns 0 ok, 1 infeasible, 2 input error, 3 internal error"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2

    logging.basicConfig(level=config.LOG_LEVEL, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    started = time.perf_counter()
    try:
        text = Path(args.input).read_text()
        handler, _ = COMMANDS[args.command]
        outcome = handler(args, text)
        report = {
            "command": args.command,
            "digest": hashlib.sha256(text.encode()).hexdigest()[:16],
            "parameters": outcome.parameters,
            "result": outcome.result,
        }
        output = render_text(report) if args.format == "text" else json.dumps(report, indent=2, sort_keys=True) + "\n"
        if args.dot:
            if outcome.dot is None:
                raise ValidationError("--dot", f"{args.command} has no structure to draw")
            Path(args.dot).write_text(outcome.dot)
        if args.plot:
            if outcome.plot is None:
                raise ValidationError("--plot", f"{args.command} has no drawing")
            Path(args.plot).write_bytes(outcome.plot().getvalue())
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return exc.exit_code
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        logger.exception("internal error")
        return 3

    sys.stdout.write(output)
    logger.info("%s finished in %.3f s", args.command, time.perf_counter() - started)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
