"""Degree-based edge orientation of the undirected co-occurrence graph.

Edges point from the higher-degree endpoint to the lower-degree endpoint;
equal-degree endpoints get both directions, each carrying the full payload.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .cooccur import CooccurrenceGraph


@dataclass(frozen=True)
class DirectedTieGraph:
    """Directed graph whose edges keep the originating co-occurrence times."""

    nodes: frozenset[str]
    degree: dict[str, int]  # undirected degree of the source graph
    edges: dict[tuple[str, str], tuple[int, ...]]  # (src, dst) -> sorted times

    def end_time(self) -> int:
        """Latest co-occurrence timestamp over all edges."""
        if not self.edges:
            raise ValueError("graph has no edges")
        return max(times[-1] for times in self.edges.values())


def node_degrees(g: CooccurrenceGraph) -> dict[str, int]:
    """Number of distinct neighbors per node; isolated nodes have degree 0."""
    degrees = {node: 0 for node in g.nodes}
    for a, b in g.edges:
        degrees[a] += 1
        degrees[b] += 1
    return degrees


def orient_edges(g: CooccurrenceGraph) -> DirectedTieGraph:
    """Apply the degree-comparison rules to every undirected edge.

    Higher degree points to lower degree; ties produce both directions
    without splitting the weight. Degrees are computed once on the full
    undirected graph.
    """
    degrees = node_degrees(g)
    edges: dict[tuple[str, str], tuple[int, ...]] = {}
    for (a, b), times in g.edges.items():
        ka, kb = degrees[a], degrees[b]
        if ka > kb:
            edges[(a, b)] = times
        elif ka < kb:
            edges[(b, a)] = times
        else:
            edges[(a, b)] = times
            edges[(b, a)] = times
    return DirectedTieGraph(nodes=g.nodes, degree=degrees, edges=edges)


def write_directed_edges_tsv(g: DirectedTieGraph, path, comments: Sequence[str] = ()) -> None:
    """TSV export: src<TAB>dst<TAB>count."""
    with open(path, "w", encoding="utf-8") as handle:
        for comment in comments:
            handle.write(f"# {comment}\n")
        for (src, dst) in sorted(g.edges):
            handle.write(f"{src}\t{dst}\t{len(g.edges[(src, dst)])}\n")


def write_tie_graph_json(g: DirectedTieGraph, path, params: dict | None = None) -> None:
    """Lossless JSON persistence (keeps per-edge times for later snapshots)."""
    doc = {
        "params": params or {},
        "nodes": sorted(g.nodes),
        "degree": {node: g.degree[node] for node in sorted(g.degree)},
        "edges": [
            {"src": src, "dst": dst, "times": list(g.edges[(src, dst)])}
            for (src, dst) in sorted(g.edges)
        ],
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=2, sort_keys=True)
        handle.write("\n")


def read_tie_graph_json(path) -> DirectedTieGraph:
    with open(path, "r", encoding="utf-8") as handle:
        doc = json.load(handle)
    edges = {
        (e["src"], e["dst"]): tuple(int(t) for t in e["times"]) for e in doc["edges"]
    }
    return DirectedTieGraph(
        nodes=frozenset(doc["nodes"]),
        degree={node: int(k) for node, k in doc["degree"].items()},
        edges=edges,
    )
