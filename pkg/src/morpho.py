"""Morphological design: compose one design alternative per leaf under pairwise compatibility."""

import logging
import math
from collections.abc import Sequence
from typing import Optional

import config
from models.errors import TooManyCombinations
from models.models import CompatTable, Composition, DesignAlternative, MorphHierarchy

logger = logging.getLogger(__name__)

TOP_COMPAT = 3


def _active_tables(h: MorphHierarchy) -> list[CompatTable]:
    leaves = set(h.leaf_names)
    active = []
    for table in h.tables:
        if table.first in leaves and table.second in leaves:
            active.append(table)
        else:
            logger.warning("compatibility %s x %s is stored but unused: not a pair of leaves", table.first, table.second)
    return active


def _levels(h: MorphHierarchy) -> int:
    return max((da.estimate for das in h.alternatives.values() for da in das), default=1)


def composition_signature(h: MorphHierarchy, das: Sequence[DesignAlternative]) -> tuple[tuple[int, ...], int]:
    """(count of chosen DAs per estimate level, minimum compatibility over declared pairs)"""
    counts = [0] * _levels(h)
    for da in das:
        counts[da.estimate - 1] += 1
    chosen = dict(zip(h.leaf_names, (da.name for da in das)))
    values = [
        t.values[(chosen[t.first], chosen[t.second])]
        for t in _active_tables(h)
        if (chosen[t.first], chosen[t.second]) in t.values
    ]
    return tuple(counts), min(values, default=TOP_COMPAT)


def enumerate_compositions(h: MorphHierarchy, limit: Optional[int] = None) -> list[Composition]:
    """Every admissible leaf-DA combination, leaves in preorder and DAs in declared order"""
    limit = config.MORPHO_LIMIT if limit is None else limit
    leaves = h.leaf_names
    options = [h.alternatives[leaf] for leaf in leaves]
    total = math.prod(len(o) for o in options)
    if total > limit:
        raise TooManyCombinations(f"{total} combinations exceed the limit {limit}")

    position = {leaf: i for i, leaf in enumerate(leaves)}
    # checks[i]: tables whose later leaf is i, as (earlier position, table, later leaf is first)
    checks: list[list[tuple[int, CompatTable, bool]]] = [[] for _ in leaves]
    for table in _active_tables(h):
        a, b = position[table.first], position[table.second]
        if a == b:
            continue
        checks[max(a, b)].append((min(a, b), table, a > b))
    levels = _levels(h)

    result: list[Composition] = []
    chosen: list[DesignAlternative] = []
    compat: list[int] = []

    def extend(i: int) -> None:
        if i == len(leaves):
            counts = [0] * levels
            for da in chosen:
                counts[da.estimate - 1] += 1
            result.append(Composition(tuple(da.name for da in chosen), tuple(counts), min(compat, default=TOP_COMPAT)))
            return
        for da in options[i]:
            found = []
            for j, table, later_first in checks[i]:
                pair = (da.name, chosen[j].name) if later_first else (chosen[j].name, da.name)
                if pair in table.values:
                    found.append(table.values[pair])
            if 0 in found:
                continue
            chosen.append(da)
            compat.extend(found)
            extend(i + 1)
            del compat[len(compat) - len(found):]
            chosen.pop()

    extend(0)
    logger.debug("%d of %d combinations are admissible", len(result), total)
    return result


def dominates(a: Composition, b: Composition) -> bool:
    """a has at least as many DAs at every cumulative best-level prefix and no lower compatibility, one strictly"""
    cum_a = [sum(a.level_counts[: i + 1]) for i in range(len(a.level_counts))]
    cum_b = [sum(b.level_counts[: i + 1]) for i in range(len(b.level_counts))]
    if any(x < y for x, y in zip(cum_a, cum_b)) or a.min_compat < b.min_compat:
        return False
    return cum_a != cum_b or a.min_compat > b.min_compat


def pareto_filter(compositions: Sequence[Composition]) -> list[Composition]:
    """Nondominated compositions in input order; equal signatures are all kept"""
    signatures = {}
    for c in compositions:
        signatures.setdefault((c.level_counts, c.min_compat), c)
    front = {
        key
        for key, c in signatures.items()
        if not any(dominates(other, c) for other in signatures.values())
    }
    return [c for c in compositions if (c.level_counts, c.min_compat) in front]
