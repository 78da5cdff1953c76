"""Exact and approximate solvers for 0/1 knapsack and the multiple choice problem."""

import logging
import math
from bisect import bisect_right
from collections.abc import Sequence
from fractions import Fraction
from typing import Optional

from models.errors import Infeasible, InvalidEpsilon, ValidationError
from models.models import ChoiceInstance, ChoiceOption, Item, Selection

logger = logging.getLogger(__name__)

Front = list[tuple[int, Fraction]]


def check_epsilon(epsilon) -> Fraction:
    eps = Fraction(epsilon)
    if not 0 < eps < 1:
        raise InvalidEpsilon(f"epsilon must lie in (0, 1), got {epsilon}")
    return eps


def scale_factor(values: Sequence[Fraction]) -> int:
    """Common denominator that puts every value on an integer grid"""
    return math.lcm(1, *(Fraction(v).denominator for v in values))


def _front(points: Front) -> Front:
    """Pareto front: ascending weight, strictly ascending profit"""
    front: Front = []
    for weight, profit in sorted(points, key=lambda p: (p[0], -p[1])):
        if not front or profit > front[-1][1]:
            front.append((weight, profit))
    return front


def _best(front: Front, cap: int) -> Optional[Fraction]:
    """Largest profit on the front with weight <= cap"""
    idx = bisect_right([w for w, _ in front], cap) - 1
    return front[idx][1] if idx >= 0 else None


def _selection(chosen: Sequence, profit_of, weight_of) -> Selection:
    return Selection(
        tuple(c.id for c in chosen),
        sum((profit_of(c) for c in chosen), Fraction(0)),
        sum((weight_of(c) for c in chosen), Fraction(0)),
    )


def knapsack_exact(items: Sequence[Item], budget) -> Selection:
    """Profit-maximal subset; ties go to the lexicographically smallest sorted id tuple"""
    budget = Fraction(budget)
    order = sorted(items, key=lambda it: it.id)
    factor = scale_factor([budget, *(it.weight for it in order)])
    cap0 = int(budget * factor)
    weights = [int(it.weight * factor) for it in order]

    suffix: list[Front] = [[] for _ in range(len(order) + 1)]
    suffix[-1] = [(0, Fraction(0))]
    for i in range(len(order) - 1, -1, -1):
        below = suffix[i + 1]
        points = list(below)
        points += [(w + weights[i], p + order[i].profit) for w, p in below if w + weights[i] <= cap0]
        suffix[i] = _front(points)

    need = _best(suffix[0], cap0) or Fraction(0)
    cap = cap0
    chosen = []
    for i, item in enumerate(order):
        if need == 0:
            break
        if weights[i] > cap:
            continue
        rest = _best(suffix[i + 1], cap - weights[i])
        if rest is not None and item.profit + rest >= need:
            chosen.append(item)
            need -= item.profit
            cap -= weights[i]
    selection = _selection(chosen, lambda it: it.profit, lambda it: it.weight)
    logger.debug("knapsack_exact: %s items, profit %s", len(chosen), selection.profit)
    return selection


def knapsack_fptas(items: Sequence[Item], budget, epsilon) -> Selection:
    """Profit-scaling DP with profit >= (1 - epsilon) * OPT"""
    eps = check_epsilon(epsilon)
    budget = Fraction(budget)
    fits = sorted((it for it in items if it.weight <= budget), key=lambda it: it.id)
    pmax = max((it.profit for it in fits), default=Fraction(0))
    if pmax == 0:
        return Selection((), Fraction(0), Fraction(0))
    unit = eps * pmax / len(fits)
    scaled = [math.floor(it.profit / unit) for it in fits]

    # tables[i][P] = least weight reaching scaled profit P with the first i items
    tables: list[dict[int, Fraction]] = [{0: Fraction(0)}]
    for item, sp in zip(fits, scaled):
        prev = tables[-1]
        cur = dict(prev)
        for p, w in prev.items():
            nw = w + item.weight
            if nw <= budget and nw < cur.get(p + sp, budget + 1):
                cur[p + sp] = nw
        tables.append(cur)

    target = max(tables[-1])
    chosen = []
    for i in range(len(fits), 0, -1):
        prev = tables[i - 1]
        if prev.get(target) == tables[i][target]:
            continue
        chosen.append(fits[i - 1])
        target -= scaled[i - 1]
    chosen.reverse()
    return _selection(chosen, lambda it: it.profit, lambda it: it.weight)


def _check_groups(instance: ChoiceInstance) -> None:
    for g, group in enumerate(instance.groups):
        if not group:
            raise ValidationError(f"groups[{g}]", "group has no options")


def multiple_choice_exact(instance: ChoiceInstance) -> Selection:
    """One option per group, profit-maximal under the budget"""
    _check_groups(instance)
    groups = [sorted(group, key=lambda o: o.id) for group in instance.groups]
    budget = Fraction(instance.budget)
    factor = scale_factor([budget, *(o.weight for group in groups for o in group)])
    cap0 = int(budget * factor)

    suffix: list[Front] = [[] for _ in range(len(groups) + 1)]
    suffix[-1] = [(0, Fraction(0))]
    for g in range(len(groups) - 1, -1, -1):
        points = []
        for option in groups[g]:
            ow = int(option.weight * factor)
            points += [(w + ow, p + option.profit) for w, p in suffix[g + 1] if w + ow <= cap0]
        suffix[g] = _front(points)
    if not suffix[0]:
        raise Infeasible("no combination of options fits the budget")

    need = _best(suffix[0], cap0)
    cap = cap0
    chosen: list[ChoiceOption] = []
    for g, group in enumerate(groups):
        for option in group:
            ow = int(option.weight * factor)
            if ow > cap:
                continue
            rest = _best(suffix[g + 1], cap - ow)
            if rest is not None and option.profit + rest >= need:
                chosen.append(option)
                need -= option.profit
                cap -= ow
                break
    return _selection(chosen, lambda o: o.profit, lambda o: o.weight)


def _profit_lower_bound(groups: list[list[ChoiceOption]], budget: Fraction) -> Fraction:
    """Best 'one upgraded group, lightest elsewhere' solution; at least OPT / #groups"""
    lightest = [min(group, key=lambda o: (o.weight, -o.profit)) for group in groups]
    base_weight = sum((o.weight for o in lightest), Fraction(0))
    base_profit = sum((o.profit for o in lightest), Fraction(0))
    bound = base_profit
    for g, group in enumerate(groups):
        for option in group:
            if base_weight - lightest[g].weight + option.weight <= budget:
                bound = max(bound, base_profit - lightest[g].profit + option.profit)
    return bound


def multiple_choice_fptas(instance: ChoiceInstance, epsilon) -> Selection:
    """Profit-scaling DP over groups with profit >= (1 - epsilon) * OPT"""
    eps = check_epsilon(epsilon)
    _check_groups(instance)
    groups = [sorted(group, key=lambda o: o.id) for group in instance.groups]
    budget = Fraction(instance.budget)
    if sum((min(o.weight for o in group) for group in groups), Fraction(0)) > budget:
        raise Infeasible("no combination of options fits the budget")
    if not groups:
        return Selection((), Fraction(0), Fraction(0))

    bound = _profit_lower_bound(groups, budget)
    if bound == 0:
        return multiple_choice_exact(instance)
    unit = eps * bound / len(groups)

    # states[g][P] = (least weight, option index, previous P) after g groups
    states: list[dict[int, tuple[Fraction, int, int]]] = [{0: (Fraction(0), -1, 0)}]
    for group in groups:
        cur: dict[int, tuple[Fraction, int, int]] = {}
        for p, (w, _, _) in states[-1].items():
            for idx, option in enumerate(group):
                nw = w + option.weight
                if nw > budget:
                    continue
                np_ = p + math.floor(option.profit / unit)
                if np_ not in cur or nw < cur[np_][0]:
                    cur[np_] = (nw, idx, p)
        states.append(cur)

    target = max(states[-1])
    chosen: list[ChoiceOption] = []
    for g in range(len(groups), 0, -1):
        _, idx, prev = states[g][target]
        chosen.append(groups[g - 1][idx])
        target = prev
    chosen.reverse()
    return _selection(chosen, lambda o: o.profit, lambda o: o.weight)
