"""Canonical labelling of small vertex- and edge-labelled multigraphs.

Colour refinement with canonical renumbering, then individualization
backtracking over the remaining symmetric cells, keeping the
lexicographically least serialization.  Labels must be hashable and
encodable; loops carry both directed labels.  Sizes here are desk-scale,
so the backtracking needs no fancy pruning.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable


def encode(value) -> bytes:
    """Deterministic byte encoding of nested tuples, str, int, Fraction."""
    if isinstance(value, Fraction):
        return b"F" + str(value).encode()
    if isinstance(value, bool):
        return b"B1" if value else b"B0"
    if isinstance(value, int):
        return b"I" + str(value).encode()
    if isinstance(value, str):
        return b"S" + value.encode()
    if isinstance(value, bytes):
        return b"Y" + value
    if value is None:
        return b"N"
    if isinstance(value, (tuple, list)):
        return b"(" + b",".join(encode(v) for v in value) + b")"
    if isinstance(value, (set, frozenset)):
        return b"{" + b",".join(sorted(encode(v) for v in value)) + b"}"
    raise TypeError(f"cannot encode {type(value)}")


@dataclass(frozen=True)
class LabelledEdge:
    u: int
    v: int
    fwd: object  # label read from u towards v
    bwd: object  # label read from v towards u


class LabelledGraph:
    """Input shape for canonical labelling: integer vertices, hashable colours."""

    def __init__(self, colors: list, edges: list[LabelledEdge]):
        self.colors = list(colors)
        self.edges = list(edges)
        self.n = len(colors)
        self.incident: list[list[tuple[int, object, object]]] = [[] for _ in range(self.n)]
        for e in edges:
            self.incident[e.u].append((e.v, e.fwd, e.bwd))
            if e.u != e.v:
                self.incident[e.v].append((e.u, e.bwd, e.fwd))
            else:
                self.incident[e.u].append((e.v, e.bwd, e.fwd))


def _refine(g: LabelledGraph, colors: list[int]) -> list[int]:
    n = g.n
    while True:
        sigs = []
        for v in range(n):
            nb = sorted(
                (encode(fwd_label), colors[w], encode(bwd_label))
                for (w, fwd_label, bwd_label) in g.incident[v]
            )
            sigs.append((colors[v], tuple(nb)))
        order = sorted(set(sigs))
        renum = {s: i for i, s in enumerate(order)}
        new = [renum[s] for s in sigs]
        if new == colors:
            return colors
        colors = new


def _initial_colors(g: LabelledGraph) -> list[int]:
    keys = [encode(c) for c in g.colors]
    order = sorted(set(keys))
    renum = {k: i for i, k in enumerate(order)}
    return _refine(g, [renum[k] for k in keys])


def _serialize(g: LabelledGraph, position: list[int], extra) -> bytes:
    """Bytes of the graph under a complete vertex numbering."""
    parts = [b"V"]
    for v in sorted(range(g.n), key=lambda v: position[v]):
        parts.append(encode((position[v], g.colors[v])))
    records = []
    for e in g.edges:
        a = (position[e.u], position[e.v], encode(e.fwd), encode(e.bwd))
        b = (position[e.v], position[e.u], encode(e.bwd), encode(e.fwd))
        records.append(min(a, b))
    parts.append(b"E")
    for r in sorted(records):
        parts.append(encode(r))
    if extra is not None:
        parts.append(b"X")
        parts.append(extra(position))
    return b"|".join(parts)


def canonical_bytes(
    g: LabelledGraph, extra: Callable[[list[int]], bytes] | None = None
) -> bytes:
    """Canonical serialization, invariant under renaming of the vertices.

    `extra` may append extra bytes computed from the candidate numbering
    (used for data that is gauge-fixed relative to the numbering); the
    backtracking minimizes over the complete output.
    """
    if g.n == 0:
        return b"empty"
    best: list[bytes | None] = [None]

    def finish(colors: list[int]) -> None:
        position = colors
        out = _serialize(g, position, extra)
        if best[0] is None or out < best[0]:
            best[0] = out

    def recurse(colors: list[int]) -> None:
        cells: dict[int, list[int]] = {}
        for v, c in enumerate(colors):
            cells.setdefault(c, []).append(v)
        target = None
        for c in sorted(cells):
            if len(cells[c]) > 1:
                target = cells[c]
                break
        if target is None:
            finish(colors)
            return
        for v in target:
            # individualize v inside its cell, then re-refine
            branched = [2 * c + (1 if (w == v) else 0) for w, c in enumerate(colors)]
            order = sorted(set(branched))
            renum = {s: i for i, s in enumerate(order)}
            recurse(_refine(g, [renum[s] for s in branched]))

    recurse(_initial_colors(g))
    return best[0]


def canonical_order(g: LabelledGraph) -> list[int]:
    """One canonical numbering achieving the canonical serialization."""
    if g.n == 0:
        return []
    best: dict = {"bytes": None, "pos": None}

    def recurse(colors: list[int]) -> None:
        cells: dict[int, list[int]] = {}
        for v, c in enumerate(colors):
            cells.setdefault(c, []).append(v)
        target = None
        for c in sorted(cells):
            if len(cells[c]) > 1:
                target = cells[c]
                break
        if target is None:
            out = _serialize(g, colors, None)
            if best["bytes"] is None or out < best["bytes"]:
                best["bytes"], best["pos"] = out, list(colors)
            return
        for v in target:
            branched = [2 * c + (1 if (w == v) else 0) for w, c in enumerate(colors)]
            order = sorted(set(branched))
            renum = {s: i for i, s in enumerate(order)}
            recurse(_refine(g, [renum[s] for s in branched]))

    recurse(_initial_colors(g))
    return best["pos"]
