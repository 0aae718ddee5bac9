"""Labelled graphs for manifolds glued from cusped hyperbolic pieces.

A graph stores one record per undirected edge; the reversal is derived,
carrying the exact inverse label.  Conventions: `head` is the vertex an
edge exits, `tail` the vertex it enters, and the label maps the head-cusp
tangent plane to the tail-cusp tangent plane with negative determinant.
Directed edges are referenced as "e" (stored direction) and "~e"
(reversal).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .catalog import OrbifoldCatalog, Violation
from .errors import (
    InvalidGraph,
    NonIntegralGluing,
    UnknownEdge,
    UnknownVertex,
    UnpairedCusp,
)
from .exact_linear import Mat2, conjugates_into, coset_canonical, lattice_index


def rev(ref: str) -> str:
    return ref[1:] if ref.startswith("~") else "~" + ref


def edge_id_of(ref: str) -> str:
    return ref[1:] if ref.startswith("~") else ref


@dataclass(frozen=True)
class DirectedEdge:
    """Stored orientation of one undirected edge."""

    edge_id: str
    head: str
    tail: str
    head_cusp: str
    tail_cusp: str
    label: Mat2


class NahGraph:
    """Vertices labelled by catalog orbifolds, edges by rational maps."""

    def __init__(self, vertices: dict[str, str], edges, catalog: OrbifoldCatalog):
        self.vertices = dict(sorted(vertices.items()))
        self.edges: dict[str, DirectedEdge] = {}
        for e in edges:
            if e.edge_id in self.edges:
                raise InvalidGraph(f"duplicate edge id {e.edge_id!r}")
            self.edges[e.edge_id] = e
        self.edges = dict(sorted(self.edges.items()))
        self.catalog = catalog

    # -- directed-edge accessors ------------------------------------------

    def edge(self, ref: str) -> DirectedEdge:
        eid = edge_id_of(ref)
        try:
            return self.edges[eid]
        except KeyError:
            raise UnknownEdge(f"no edge {eid!r}") from None

    def head(self, ref: str) -> str:
        e = self.edge(ref)
        return e.tail if ref.startswith("~") else e.head

    def tail(self, ref: str) -> str:
        e = self.edge(ref)
        return e.head if ref.startswith("~") else e.tail

    def head_cusp(self, ref: str) -> str:
        e = self.edge(ref)
        return e.tail_cusp if ref.startswith("~") else e.head_cusp

    def tail_cusp(self, ref: str) -> str:
        e = self.edge(ref)
        return e.head_cusp if ref.startswith("~") else e.tail_cusp

    def label(self, ref: str) -> Mat2:
        e = self.edge(ref)
        return e.label.inv() if ref.startswith("~") else e.label

    def directed_refs(self) -> list[str]:
        out = []
        for eid in self.edges:
            out.append(eid)
            out.append("~" + eid)
        return out

    def out_refs(self, vertex: str) -> list[str]:
        """Directed edges exiting the vertex, in deterministic order."""
        return [r for r in self.directed_refs() if self.head(r) == vertex]

    def ref_at(self, vertex: str, cusp: str) -> list[str]:
        return [r for r in self.out_refs(vertex) if self.head_cusp(r) == cusp]

    # -- label metadata -----------------------------------------------------

    def orbifold(self, vertex: str):
        try:
            return self.catalog.orbifold(self.vertices[vertex])
        except KeyError:
            raise UnknownVertex(f"no vertex {vertex!r}") from None

    def cusp(self, vertex: str, cusp_id: str):
        return self.orbifold(vertex).cusp(cusp_id)

    def head_cusp_spec(self, ref: str):
        return self.cusp(self.head(ref), self.head_cusp(ref))

    def tail_cusp_spec(self, ref: str):
        return self.cusp(self.tail(ref), self.tail_cusp(ref))

    def canonical_label(self, ref: str) -> Mat2:
        """Label modulo the head-cusp symmetry, as a canonical representative."""
        return coset_canonical(self.label(ref), self.head_cusp_spec(ref).symmetry)

    def delta(self, ref: str) -> Fraction:
        """Positive determinant weight of a directed edge."""
        d = -self.label(ref).det()
        return d

    def is_connected(self) -> bool:
        if not self.vertices:
            return False
        seen = set()
        stack = [next(iter(self.vertices))]
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            for r in self.out_refs(v):
                stack.append(self.tail(r))
        return len(seen) == len(self.vertices)


def delta(g: NahGraph, ref: str) -> Fraction:
    return g.delta(ref)


def validate(g: NahGraph, unused_cusps: dict[str, set[str]] | None = None) -> list[Violation]:
    """Report violations of the labelled-graph conditions (1)-(6).

    `unused_cusps` lists cusps per vertex that are legitimately hit by no
    edge (used when the graph is the hyperbolic part of a larger hybrid
    graph); by default every cusp must be used by exactly one edge end.
    """
    out: list[Violation] = []
    unused_cusps = unused_cusps or {}

    for ref in g.directed_refs():
        for v, name in ((g.head(ref), "head"), (g.tail(ref), "tail")):
            if v not in g.vertices:
                out.append(Violation(edge_id_of(ref), "(1) endpoints", f"{name} vertex {v!r} unknown"))
                return out

    for v in g.vertices:
        try:
            entry = g.orbifold(v)
        except Exception as exc:
            out.append(Violation(v, "(1) vertex-label", str(exc)))
            continue
        cusp_ids = set(entry.cusp_ids())
        usage: dict[str, list[str]] = {}
        for ref in g.out_refs(v):
            c = g.head_cusp(ref)
            if c not in cusp_ids:
                out.append(Violation(v, "(1) cusp-resolves", f"edge {ref} uses unknown cusp {c!r}"))
                continue
            usage.setdefault(c, []).append(ref)
        for c, refs in sorted(usage.items()):
            if len(refs) == 1:
                continue
            same_loop = (
                len(refs) == 2
                and edge_id_of(refs[0]) == edge_id_of(refs[1])
            )
            if not same_loop:
                out.append(
                    Violation(v, "(1) injective", f"cusp {c} used by edges {sorted(refs)}")
                )
        for c in sorted(cusp_ids - set(usage) - set(unused_cusps.get(v, set()))):
            out.append(Violation(v, "(1) cusp-unused", f"cusp {c} is hit by no edge"))

    if not g.is_connected():
        out.append(Violation("<graph>", "(1) connected", "graph is not connected"))

    for eid, e in g.edges.items():
        try:
            spec_h = g.cusp(e.head, e.head_cusp)
            spec_t = g.cusp(e.tail, e.tail_cusp)
        except Exception:
            continue  # already reported above
        if spec_h.degree != spec_t.degree:
            out.append(
                Violation(eid, "(2) degrees", f"{spec_h.degree} at head, {spec_t.degree} at tail")
            )
        det = e.label.det()
        if det >= 0:
            out.append(Violation(eid, "(3) orientation", f"det = {det} not negative"))
            continue
        if not conjugates_into(e.label, spec_h.symmetry, spec_t.symmetry):
            out.append(Violation(eid, "(5) conjugation", "label does not conjugate F_e to F_e-bar"))

    if g.vertices and not any(
        not g.orbifold(v).arithmetic for v in g.vertices if g.vertices[v] in g.catalog.orbifolds
    ):
        out.append(Violation("<graph>", "(6) non-arithmetic", "every vertex label is arithmetic"))

    return out


def require_valid(g: NahGraph, unused_cusps=None) -> None:
    violations = validate(g, unused_cusps)
    if violations:
        raise InvalidGraph(
            f"graph fails validation ({len(violations)} violations)", violations
        )


def balanced(g: NahGraph, unused_cusps=None) -> tuple[bool, dict[str, Fraction] | None]:
    """Cycle products of determinant weights, decided via a spanning tree.

    Returns (True, potential) where potential m satisfies
    m(tail e) = delta(e) * m(head e) on every edge, normalized so the least
    vertex id carries 1; or (False, None).
    """
    if not g.vertices:
        return True, {}
    base = min(g.vertices)
    m: dict[str, Fraction] = {base: Fraction(1)}
    order = [base]
    while order:
        v = order.pop(0)
        for ref in g.out_refs(v):
            w = g.tail(ref)
            expected = g.delta(ref) * m[v]
            if w in m:
                if m[w] != expected:
                    return False, None
            else:
                m[w] = expected
                order.append(w)
    # disconnected graphs are invalid elsewhere; treat remaining vertices as absent
    return True, dict(sorted(m.items()))


def is_integral(g: NahGraph) -> tuple[bool, dict[str, bool]]:
    """Whether every label maps the head cusp lattice onto the tail cusp
    lattice; the per-edge witness map names the failures."""
    witnesses: dict[str, bool] = {}
    for eid, e in sorted(g.edges.items()):
        lat_h = g.cusp(e.head, e.head_cusp).lattice
        lat_t = g.cusp(e.tail, e.tail_cusp).lattice
        image = lat_h.transform(e.label)
        witnesses[eid] = image == lat_t
    return all(witnesses.values()), witnesses


@dataclass(frozen=True)
class Pairing:
    left_piece: str
    left_cusp: str
    right_piece: str
    right_cusp: str
    gluing: Mat2


@dataclass(frozen=True)
class GluingManifest:
    """Combinatorial recipe pairing cusps of orbifold pieces by integral
    lattice isomorphisms."""

    pieces: tuple[tuple[str, str], ...]  # (piece_id, orbifold_id)
    pairings: tuple[Pairing, ...]


def from_manifest(manifest: GluingManifest, catalog: OrbifoldCatalog) -> NahGraph:
    """Build the labelled graph of a gluing: one vertex per piece, one edge
    per pairing.  The result is guaranteed valid and integral."""
    vertices = {pid: oid for pid, oid in manifest.pieces}
    slots: dict[tuple[str, str], int] = {}
    for pid, oid in manifest.pieces:
        for c in catalog.orbifold(oid).cusp_ids():
            slots[(pid, c)] = 0
    edges = []
    for k, p in enumerate(manifest.pairings):
        for side in ((p.left_piece, p.left_cusp), (p.right_piece, p.right_cusp)):
            if side not in slots:
                raise UnpairedCusp(f"pairing references unknown cusp {side}")
            slots[side] += 1
        lat_l = catalog.orbifold(vertices[p.left_piece]).cusp(p.left_cusp).lattice
        lat_r = catalog.orbifold(vertices[p.right_piece]).cusp(p.right_cusp).lattice
        if lat_l.transform(p.gluing) != lat_r:
            raise NonIntegralGluing(
                f"pairing {k}: gluing is not an isomorphism of the cusp lattices"
            )
        if p.gluing.det() >= 0:
            raise NonIntegralGluing(f"pairing {k}: gluing must reverse orientation")
        edges.append(
            DirectedEdge(
                edge_id=f"e{k}",
                head=p.left_piece,
                tail=p.right_piece,
                head_cusp=p.left_cusp,
                tail_cusp=p.right_cusp,
                label=p.gluing,
            )
        )
    loops = {
        (p.left_piece, p.left_cusp)
        for p in manifest.pairings
        if (p.left_piece, p.left_cusp) == (p.right_piece, p.right_cusp)
    }
    for side, count in sorted(slots.items()):
        expected = 2 if side in loops else 1
        if count != expected:
            raise UnpairedCusp(f"cusp {side} appears in {count} pairings, expected {expected}")
    g = NahGraph(vertices, edges, catalog)
    require_valid(g)
    ok, witnesses = is_integral(g)
    if not ok:
        bad = sorted(eid for eid, w in witnesses.items() if not w)
        raise NonIntegralGluing(f"gluing produced non-integral edges {bad}")
    return g
