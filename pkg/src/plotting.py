from collections.abc import Mapping, Sequence
from io import BytesIO

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from clustering import reported_distance
from models.models import Dendrogram, Graph, Site

LAYER_STYLES = {
    "center": ("tab:red", 80),
    "primary": ("tab:red", 80),
    "user": ("tab:blue", 30),
    "secondary": ("tab:blue", 30),
}


def _png(fig) -> BytesIO:
    buffer = BytesIO()
    fig.savefig(buffer, format="png", dpi=150, bbox_inches="tight")
    plt.close(fig)
    buffer.seek(0)
    return buffer


def plot_dendrogram(dendrogram: Dendrogram) -> BytesIO:
    """Draw the merge steps bottom-up and return the PNG as a BytesIO buffer"""
    order = [e for cluster in dendrogram.clusters for e in cluster]
    position = {(e,): float(i) for i, e in enumerate(order)}
    height = {(e,): 0.0 for e in order}

    fig, ax = plt.subplots(figsize=(10, 5))
    for step in dendrogram.steps:
        y = float(step.proximity) if dendrogram.metric == "ordinal" else reported_distance(step.proximity, dendrogram.metric)
        xl, xr = position.pop(step.left), position.pop(step.right)
        ax.plot([xl, xl], [height.pop(step.left), y], "k-")
        ax.plot([xr, xr], [height.pop(step.right), y], "k-")
        ax.plot([xl, xr], [y, y], "k-")
        position[step.left + step.right] = (xl + xr) / 2
        height[step.left + step.right] = y

    ax.set_xticks(range(len(order)))
    ax.set_xticklabels([str(e) for e in order])
    ax.set_xlabel("Element")
    ax.set_ylabel("Merge distance")
    ax.set_title(f"Dendrogram ({dendrogram.metric}, {dendrogram.rule})")
    ax.grid(True, axis="y", alpha=0.3)
    return _png(fig)


def plot_network(sites: Sequence[Site], graph: Graph, layers: Mapping[int, str]) -> BytesIO:
    """Draw a site network in the plane, nodes coloured by layer"""
    by_id = {s.id: s for s in sites}
    fig, ax = plt.subplots(figsize=(10, 6))
    for u, v, _ in graph.sorted_edges():
        a, b = by_id[u], by_id[v]
        ax.plot([float(a.x), float(b.x)], [float(a.y), float(b.y)], color="0.6", linewidth=0.8, zorder=1)
    for layer in sorted(set(layers.values())):
        color, size = LAYER_STYLES.get(layer, ("tab:gray", 30))
        members = [by_id[v] for v in sorted(graph.nodes) if layers.get(v) == layer]
        ax.scatter([float(s.x) for s in members], [float(s.y) for s in members], s=size, c=color, label=layer, zorder=2)
    for v in sorted(graph.nodes):
        ax.annotate(str(v), (float(by_id[v].x), float(by_id[v].y)), textcoords="offset points", xytext=(4, 4), fontsize=8)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend()
    ax.grid(True, alpha=0.3)
    return _png(fig)
