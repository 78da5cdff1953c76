"""Overlay-tree condensing: merge arcs to save calls while RAM path weights stay within bounds.

A plan selects vertices whose incoming arc is condensed. Every vertex then belongs to the group of
its nearest unselected ancestor (itself included); a group is loaded as one unit. The root group is
the kernel, and the tail is the heaviest root-to-leaf RAM chain hanging below the kernel.
"""

import logging
import math
from collections.abc import Callable
from fractions import Fraction
from typing import Optional, Union

import config
from knapsack import (
    check_epsilon,
    knapsack_exact,
    knapsack_fptas,
    multiple_choice_exact,
    multiple_choice_fptas,
)
from models.errors import Infeasible, TooLargeForExact, UnknownKind, UnknownVertex, ValidationError
from models.models import (
    ChoiceInstance,
    ChoiceOption,
    CondensePlan,
    CondenseResult,
    FanGroup,
    FanInstance,
    FanOption,
    Item,
    OverlayTree,
    Selection,
    StarChild,
    StarInstance,
)

logger = logging.getLogger(__name__)

AUXILIARY_KINDS = ("1.1", "1.2", "1.3", "1.4", "2.1", "2.2", "2.3", "2.4")
MODES = ("exact", "approx")

# (kernel, tail, saved, plan)
State = tuple[Fraction, Fraction, Fraction, frozenset[int]]


def _representatives(tree: OverlayTree, selected: frozenset[int]) -> dict[int, int]:
    rep: dict[int, int] = {}
    for v in tree.preorder:
        rep[v] = v if v == tree.root or v not in selected else rep[tree.parent[v]]
    return rep


def _heaviest(tree: OverlayTree) -> dict[int, Fraction]:
    """Heaviest RAM chain from each vertex down to a leaf"""
    weight: dict[int, Fraction] = {}
    for v in reversed(tree.preorder):
        below = max((weight[c] for c in tree.children[v]), default=Fraction(0))
        weight[v] = tree.ram(v) + below
    return weight


def tree_weight(tree: OverlayTree) -> Fraction:
    return _heaviest(tree)[tree.root]


def tail_weight(tree: OverlayTree, a: int) -> Fraction:
    if a not in tree.children:
        raise UnknownVertex(f"vertex {a} is not in the tree")
    return _heaviest(tree)[a] - tree.ram(a)


def _check_plan(tree: OverlayTree, plan: CondensePlan) -> None:
    stray = sorted(v for v in plan.selected if v not in tree.parent)
    if stray:
        raise ValidationError("plan", f"vertex {stray[0]} is the root or not in the tree")


def apply_plan(tree: OverlayTree, plan: CondensePlan) -> OverlayTree:
    """Merge every condensed arc; merged vertices keep the top vertex id and a J(...) label"""
    _check_plan(tree, plan)
    rep = _representatives(tree, plan.selected)
    members: dict[int, list[int]] = {}
    for v in tree.preorder:
        members.setdefault(rep[v], []).append(v)
    ram = {r: sum((tree.ram(v) for v in group), Fraction(0)) for r, group in members.items()}
    parent = {r: rep[tree.parent[r]] for r in members if r != tree.root}
    freq = {r: tree.freq(r) for r in parent}
    labels = {}
    for r, group in members.items():
        if len(group) > 1:
            labels[r] = "J(" + ",".join(tree.label(v) for v in sorted(group)) + ")"
        elif r in tree.labels:
            labels[r] = tree.labels[r]
    return OverlayTree.from_parents(tree.root, parent, ram, freq, labels)


def _measure(tree: OverlayTree, selected: frozenset[int]) -> tuple[Fraction, Fraction, Fraction]:
    """(kernel, tail, saved) of a plan without building the condensed tree"""
    rep = _representatives(tree, selected)
    group_ram: dict[int, Fraction] = {}
    for v in tree.preorder:
        group_ram[rep[v]] = group_ram.get(rep[v], Fraction(0)) + tree.ram(v)
    below: dict[int, Fraction] = {}
    for v in reversed(tree.preorder):
        if rep[v] != v or v == tree.root:
            continue
        chain = group_ram[v] + below.get(v, Fraction(0))
        top = rep[tree.parent[v]]
        below[top] = max(below.get(top, Fraction(0)), chain)
    saved = sum((tree.freq(v) for v in selected), Fraction(0))
    return group_ram[tree.root], below.get(tree.root, Fraction(0)), saved


def evaluate_plan(tree: OverlayTree, plan: CondensePlan) -> CondenseResult:
    """Recompute every reported number from the plan and the input tree"""
    condensed = apply_plan(tree, plan)
    kernel, tail, saved = _measure(tree, plan.selected)
    return CondenseResult(
        plan=plan,
        tree=condensed,
        saved=saved,
        kernel=kernel,
        tail=tail,
        weight=kernel + tail,
    )


def _feasibility(b=None, b_minus=None, b_plus=None) -> Callable[[Fraction, Fraction], bool]:
    if b is not None:
        return lambda kernel, tail: kernel + tail <= b
    return lambda kernel, tail: kernel <= b_minus and tail <= b_plus


def _exhaustive(tree: OverlayTree, feasible, limit: Optional[int]) -> CondenseResult:
    limit = config.CONDENSE_EXACT_VERTICES if limit is None else limit
    movable = sorted(tree.parent)
    if len(movable) > limit:
        raise TooLargeForExact(f"{len(movable)} condensable arcs exceed the exact bound {limit}")
    best = None
    for mask in range(1 << len(movable)):
        selected = frozenset(v for i, v in enumerate(movable) if mask >> i & 1)
        kernel, tail, saved = _measure(tree, selected)
        if not feasible(kernel, tail):
            continue
        key = (-saved, tuple(sorted(selected)))
        if best is None or key < best[0]:
            best = (key, selected)
    if best is None:
        raise Infeasible("no plan satisfies the RAM bounds")
    return evaluate_plan(tree, CondensePlan(best[1]))


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValidationError("mode", f"unknown mode '{mode}'")


def solve_kind1(
    tree: OverlayTree,
    b,
    mode: str = "exact",
    epsilon=Fraction(1, 5),
    delta=Fraction(1, 5),
    limit: Optional[int] = None,
) -> CondenseResult:
    """Maximize saved calls subject to tree_weight(condensed tree) <= b"""
    _check_mode(mode)
    b = Fraction(b)
    if mode == "exact":
        return _exhaustive(tree, _feasibility(b=b), limit)
    return _cascade(tree, epsilon, delta, b=b)


def solve_kind2(
    tree: OverlayTree,
    b_minus,
    b_plus,
    mode: str = "exact",
    epsilon=Fraction(1, 5),
    delta=Fraction(1, 5),
    limit: Optional[int] = None,
) -> CondenseResult:
    """Maximize saved calls subject to kernel <= b_minus and tail <= b_plus"""
    _check_mode(mode)
    b_minus, b_plus = Fraction(b_minus), Fraction(b_plus)
    if mode == "exact":
        return _exhaustive(tree, _feasibility(b_minus=b_minus, b_plus=b_plus), limit)
    return cascade_bottom_up(tree, b_minus, b_plus, epsilon, delta)


# ----------------------------------------------------- auxiliary problems ---


def star_from_tree(tree: OverlayTree, b=None, b_minus=None, b_plus=None) -> StarInstance:
    """Problem 1.x instance of a root and its children, tails taken from the tree"""
    heaviest = _heaviest(tree)
    children = tuple(
        StarChild(c, tree.ram(c), tree.freq(c), heaviest[c] - tree.ram(c)) for c in tree.children[tree.root]
    )
    return StarInstance(tree.ram(tree.root), children, b, b_minus, b_plus)


def _solve_star(instance: StarInstance, split: bool, epsilon: Optional[Fraction]) -> Selection:
    def knap(items, cap):
        return knapsack_exact(items, cap) if epsilon is None else knapsack_fptas(items, cap, epsilon)

    children = instance.children
    if split:
        thresholds = [instance.b_plus]
    else:
        values = {Fraction(0)} | {c.tail for c in children} | {c.ram + c.tail for c in children}
        thresholds = sorted(v for v in values if v <= instance.b)
    best: Optional[Selection] = None
    for m in thresholds:
        if any(c.tail > m for c in children):
            continue
        forced = [c for c in children if c.ram + c.tail > m]
        free = [c for c in children if c.ram + c.tail <= m]
        room = instance.b_minus if split else instance.b - m
        room -= instance.root_ram + sum((c.ram for c in forced), Fraction(0))
        if room < 0:
            continue
        picked = knap([Item(c.id, c.freq, c.ram) for c in free], room)
        chosen = {c.id for c in forced} | set(picked.chosen)
        ordered = tuple(c.id for c in children if c.id in chosen)
        profit = sum((c.freq for c in forced), Fraction(0)) + picked.profit
        weight = sum((c.ram for c in forced), Fraction(0)) + picked.weight
        if best is None or profit > best.profit:
            best = Selection(ordered, profit, weight)
    if best is None:
        raise Infeasible("no selection of children satisfies the bounds")
    return best


def _fan_pairs(group: FanGroup, limit: Fraction) -> list[ChoiceOption]:
    """(option, merge flag) pairs of one child whose tail contribution stays within limit"""
    pairs = []
    for option in group.options:
        tail = max(option.tail, group.extra_tail)
        if option.kernel + tail <= limit:
            pairs.append(ChoiceOption((group.id, option.id, 0), option.saved, Fraction(0)))
        if tail <= limit:
            pairs.append(ChoiceOption((group.id, option.id, 1), option.saved + group.freq, option.kernel))
    return pairs


def _solve_fan(
    instance: FanInstance, split: bool, epsilon: Optional[Fraction], delta: Optional[Fraction]
) -> Selection:
    def choose(groups, budget):
        choice = ChoiceInstance(tuple(tuple(g) for g in groups), budget)
        return multiple_choice_exact(choice) if epsilon is None else multiple_choice_fptas(choice, epsilon)

    if split:
        plans = [(instance.b_plus, instance.b_minus - instance.root_ram)]
    elif delta is not None:
        step = delta * instance.b
        plans = [(j * step, instance.b - instance.root_ram - j * step + step) for j in range(math.ceil(1 / delta) + 1)]
    else:
        values = {Fraction(0)}
        for group in instance.groups:
            for option in group.options:
                tail = max(option.tail, group.extra_tail)
                values |= {tail, option.kernel + tail}
        plans = [(m, instance.b - instance.root_ram - m) for m in sorted(values) if m <= instance.b]

    best: Optional[Selection] = None
    for limit, budget in plans:
        if budget < 0:
            continue
        groups = [_fan_pairs(group, limit) for group in instance.groups]
        if any(not g for g in groups):
            continue
        try:
            picked = choose(groups, budget)
        except Infeasible:
            continue
        if best is None or picked.profit > best.profit:
            best = picked
    if best is None:
        raise Infeasible("no option combination satisfies the bounds")
    return best


def solve_auxiliary(
    kind: str,
    instance: Union[StarInstance, FanInstance],
    epsilon=None,
    delta=None,
) -> Selection:
    """Solve one of the knapsack-family condensing subproblems.

    1.x take a StarInstance and return the merged child ids. 2.x take a FanInstance and return
    (child, option, merged) triples. Odd kinds bound kernel + tail by b, even kinds bound the
    kernel by b_minus and the tail by b_plus. 1.1, 1.2, 2.1 and 2.2 reject nonzero fixed tails.
    Passing epsilon switches to the FPTAS solvers; delta additionally puts the 2.1/2.3 tail
    thresholds on a delta * b grid, relaxing the bound to (1 + delta) * b.
    """
    if kind not in AUXILIARY_KINDS:
        raise UnknownKind(f"unknown auxiliary problem '{kind}'")
    eps = check_epsilon(epsilon) if epsilon is not None else None
    dlt = check_epsilon(delta) if delta is not None else None
    split = kind in ("1.2", "1.4", "2.2", "2.4")
    if split and (instance.b_minus is None or instance.b_plus is None):
        raise ValidationError("b_minus", f"problem {kind} needs b_minus and b_plus")
    if not split and instance.b is None:
        raise ValidationError("b", f"problem {kind} needs b")

    if kind.startswith("1."):
        if not isinstance(instance, StarInstance):
            raise ValidationError("instance", f"problem {kind} takes a star instance")
        if kind in ("1.1", "1.2") and any(c.tail for c in instance.children):
            raise ValidationError("children", f"problem {kind} has leaf children only")
        return _solve_star(instance, split, eps)

    if not isinstance(instance, FanInstance):
        raise ValidationError("instance", f"problem {kind} takes a fan instance")
    if kind in ("2.1", "2.2") and any(g.extra_tail for g in instance.groups):
        raise ValidationError("groups", f"problem {kind} has no fixed tails")
    return _solve_fan(instance, split, eps, dlt if not split else None)


# ---------------------------------------------------------------- cascade ---


def _trim(states: list[State], tau: Fraction) -> list[State]:
    """Drop states within a (1 + tau) saved factor of a lighter state, then dominated ones"""
    kept: list[State] = []
    for state in sorted(states, key=lambda s: (s[2], s[0], s[1])):
        if any(o[0] <= state[0] and o[1] <= state[1] and o[2] * (1 + tau) >= state[2] for o in kept):
            continue
        kept.append(state)
    front: list[State] = []
    for state in sorted(kept, key=lambda s: (-s[2], s[0], s[1])):
        if not any(o[0] <= state[0] and o[1] <= state[1] for o in front):
            front.append(state)
    return front


def _menu(
    tree: OverlayTree,
    v: int,
    ram: dict[int, Fraction],
    menus: dict[int, list[State]],
    viable,
    tau: Fraction,
) -> list[State]:
    """(kernel, tail, saved) trade-offs of the subtree at v with v heading its own group"""
    states: list[State] = [(ram[v], Fraction(0), Fraction(0), frozenset())]
    for child in tree.children[v]:
        freq = tree.freq(child)
        grown: list[State] = []
        for kernel, tail, saved, plan in states:
            for c_kernel, c_tail, c_saved, c_plan in menus[child]:
                apart = (kernel, max(tail, c_kernel + c_tail), saved + c_saved, plan | c_plan)
                merged = (kernel + c_kernel, max(tail, c_tail), saved + c_saved + freq, plan | c_plan | {child})
                grown += [s for s in (apart, merged) if viable(s[0], s[1])]
        states = _trim(grown, tau)
    return states


def _cascade(tree: OverlayTree, epsilon, delta, b=None, b_minus=None, b_plus=None) -> CondenseResult:
    eps, dlt = check_epsilon(epsilon), check_epsilon(delta)
    kind1 = b is not None
    feasible = _feasibility(b, b_minus, b_plus)
    if kind1:
        viable = feasible
    else:
        def viable(kernel, tail):
            return tail <= b_plus and (kernel <= b_minus or kernel + tail <= b_plus)

    n = len(tree.nodes)
    lowest = min([b] if kind1 else [b_minus, b_plus])
    unit = dlt / 2 * lowest / n if lowest > 0 else Fraction(0)
    ram = {v: (math.floor(tree.ram(v) / unit) * unit if unit else tree.ram(v)) for v in tree.nodes}

    if tree.height == 0:
        plan: frozenset[int] = frozenset()
    elif tree.height == 1:
        children = tuple(StarChild(c, ram[c], tree.freq(c)) for c in tree.children[tree.root])
        star = StarInstance(ram[tree.root], children, b, b_minus, b_plus)
        picked = solve_auxiliary("1.1" if kind1 else "1.2", star, eps)
        plan = frozenset(picked.chosen)
    else:
        tau = eps / (2 * n)
        menus: dict[int, list[State]] = {}
        for v in reversed(tree.preorder):
            if v != tree.root:
                menus[v] = _menu(tree, v, ram, menus, viable, tau)
        groups = tuple(
            FanGroup(c, tree.freq(c), tuple(FanOption(i, s[2], s[0], s[1]) for i, s in enumerate(menus[c])))
            for c in tree.children[tree.root]
        )
        fan = FanInstance(ram[tree.root], groups, b, b_minus, b_plus)
        if kind1:
            picked = solve_auxiliary("2.3", fan, eps / 2, dlt / 2)
        else:
            picked = solve_auxiliary("2.4", fan, eps / 2)
        selected: set[int] = set()
        for child, option, merged in picked.chosen:
            selected |= menus[child][option][3]
            if merged:
                selected.add(child)
        plan = frozenset(selected)

    result = evaluate_plan(tree, CondensePlan(plan))
    relaxed = _feasibility(
        b * (1 + dlt) if kind1 else None,
        b_minus * (1 + dlt) if not kind1 else None,
        b_plus * (1 + dlt) if not kind1 else None,
    )
    if not relaxed(result.kernel, result.tail):
        raise Infeasible("no plan satisfies the relaxed bounds")
    logger.debug("cascade saved %s with kernel %s and tail %s", result.saved, result.kernel, result.tail)
    return result


def cascade_bottom_up(tree: OverlayTree, b_minus, b_plus, epsilon=Fraction(1, 5), delta=Fraction(1, 5)) -> CondenseResult:
    """Bottom-up approximation for kernel <= b_minus, tail <= b_plus.

    Children menus are built leaves-first, a root fan is solved as problem 2.4 and a bare star
    collapses to a single problem 1.2. Saved calls reach (1 - epsilon) of the optimum while the
    bounds may be exceeded by a factor of at most (1 + delta).
    """
    return _cascade(tree, epsilon, delta, b_minus=Fraction(b_minus), b_plus=Fraction(b_plus))
