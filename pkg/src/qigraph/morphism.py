"""Morphisms of labelled graphs: verification and the balance certificate.

A morphism is a graph homomorphism together with one declared orbifold
covering per vertex; the tangent squares must commute up to the head-cusp
symmetry of the image edge.  `check_balance_transfer` evaluates the
per-edge determinant/degree identity that makes `balanced` a morphism
invariant.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .catalog import (
    CoveringEntry,
    OrbifoldCatalog,
    Violation,
    compose_coverings,
    cusp_cover_degree,
)
from .errors import SingularMatrix
from .exact_linear import Mat2, coset_canonical
from .nah_graph import NahGraph, edge_id_of, rev


@dataclass(frozen=True)
class GraphMorphism:
    """Vertex and directed-edge maps plus one covering id per vertex.

    `edge_map` needs entries for the stored direction of every source
    edge; reversals are derived.  `local_coverings` holds covering entries
    (typically compositions) that are not registered in the catalog.
    """

    vertex_map: tuple[tuple[str, str], ...]
    edge_map: tuple[tuple[str, str], ...]
    vertex_coverings: tuple[tuple[str, str], ...]
    local_coverings: tuple[CoveringEntry, ...] = ()

    @staticmethod
    def of(vertex_map: dict, edge_map: dict, vertex_coverings: dict, local_coverings=()):
        return GraphMorphism(
            tuple(sorted(vertex_map.items())),
            tuple(sorted(edge_map.items())),
            tuple(sorted(vertex_coverings.items())),
            tuple(local_coverings),
        )

    def vertices(self) -> dict[str, str]:
        return dict(self.vertex_map)

    def edges(self) -> dict[str, str]:
        return dict(self.edge_map)

    def coverings(self) -> dict[str, str]:
        return dict(self.vertex_coverings)

    def covering_entry(self, covering_id: str, catalog: OrbifoldCatalog) -> CoveringEntry:
        for c in self.local_coverings:
            if c.covering_id == covering_id:
                return c
        return catalog.covering(covering_id)

    def map_ref(self, ref: str) -> str:
        edges = self.edges()
        if ref in edges:
            return edges[ref]
        other = rev(ref)
        if other in edges:
            return rev(edges[other])
        raise KeyError(f"morphism does not map edge {edge_id_of(ref)!r}")


def identity_morphism(g: NahGraph) -> GraphMorphism:
    return GraphMorphism.of(
        {v: v for v in g.vertices},
        {eid: eid for eid in g.edges},
        {v: "id:" + g.vertices[v] for v in g.vertices},
    )


def pushforward_edge_label(label: Mat2, psi_head: Mat2, psi_tail: Mat2) -> Mat2:
    """Image edge label under the two vertical tangent maps."""
    if psi_head.det() == 0 or psi_tail.det() == 0:
        raise SingularMatrix("tangent maps must be invertible")
    return psi_tail @ label @ psi_head.inv()


def verify_morphism(src: NahGraph, dst: NahGraph, m: GraphMorphism) -> list[Violation]:
    """Empty report iff the data is a morphism: homomorphism, per-vertex
    coverings respecting cusps, and commuting tangent squares up to the
    image head-cusp symmetry."""
    out: list[Violation] = []
    vmap = m.vertices()
    cov_ids = m.coverings()

    for v in src.vertices:
        if v not in vmap:
            out.append(Violation(v, "vertex-map-total", "vertex not mapped"))
        elif vmap[v] not in dst.vertices:
            out.append(Violation(v, "vertex-map-image", f"image {vmap[v]!r} not in target"))
    if out:
        return out

    covers: dict[str, CoveringEntry] = {}
    for v in src.vertices:
        cid = cov_ids.get(v)
        if cid is None:
            out.append(Violation(v, "covering-missing", "no covering assigned"))
            continue
        try:
            cov = m.covering_entry(cid, src.catalog)
        except Exception as exc:
            out.append(Violation(v, "covering-resolves", str(exc)))
            continue
        if cov.source != src.vertices[v]:
            out.append(Violation(v, "covering-source", f"{cov.source} != {src.vertices[v]}"))
        if cov.target != dst.vertices[vmap[v]]:
            out.append(Violation(v, "covering-target", f"{cov.target} != {dst.vertices[vmap[v]]}"))
        covers[v] = cov
    if out:
        return out

    for eid in src.edges:
        try:
            image = m.map_ref(eid)
        except KeyError as exc:
            out.append(Violation(eid, "edge-map-total", str(exc)))
            continue
        try:
            dst.edge(image)
        except Exception:
            out.append(Violation(eid, "edge-map-image", f"image {image!r} not in target"))
    if out:
        return out

    for ref in src.directed_refs():
        image = m.map_ref(ref)
        if dst.head(image) != vmap[src.head(ref)] or dst.tail(image) != vmap[src.tail(ref)]:
            out.append(Violation(edge_id_of(ref), "homomorphism", f"endpoints do not commute on {ref}"))
            continue
        cov_h = covers[src.head(ref)]
        try:
            assign = cov_h.assignment_for(src.head_cusp(ref))
        except KeyError:
            out.append(Violation(edge_id_of(ref), "cusp-respect", f"covering does not assign cusp of {ref}"))
            continue
        if assign.target_cusp != dst.head_cusp(image):
            out.append(
                Violation(
                    edge_id_of(ref),
                    "cusp-respect",
                    f"{ref}: covering sends cusp to {assign.target_cusp}, edge image uses {dst.head_cusp(image)}",
                )
            )
    if out:
        return out

    for eid in src.edges:
        for ref in (eid, rev(eid)):
            image = m.map_ref(ref)
            psi_head = covers[src.head(ref)].assignment_for(src.head_cusp(ref)).psi
            psi_tail = covers[src.tail(ref)].assignment_for(src.tail_cusp(ref)).psi
            pushed = pushforward_edge_label(src.label(ref), psi_head, psi_tail)
            f_image = dst.head_cusp_spec(image).symmetry
            if coset_canonical(pushed, f_image) != coset_canonical(dst.label(image), f_image):
                out.append(
                    Violation(
                        edge_id_of(ref),
                        "diagram-commutes",
                        f"{ref}: pushed label differs from image label modulo the cusp symmetry",
                    )
                )
    return out


@dataclass(frozen=True)
class BalanceRecord:
    edge_id: str
    d_head: Fraction
    d_tail: Fraction
    delta_src: Fraction
    delta_dst: Fraction

    @property
    def holds(self) -> bool:
        return self.d_head * self.delta_dst == self.delta_src * self.d_tail


def check_balance_transfer(
    src: NahGraph, dst: NahGraph, m: GraphMorphism
) -> tuple[bool, list[BalanceRecord]]:
    """Per-edge certificate d_e * delta(e') = delta(e) * d_e-bar, where the
    d's are the cusp covering degrees at the two ends."""
    records = []
    covers = {v: m.covering_entry(cid, src.catalog) for v, cid in m.coverings().items()}
    for eid in sorted(src.edges):
        image = m.map_ref(eid)
        cov_h = covers[src.head(eid)]
        cov_t = covers[src.tail(eid)]
        psi_h = cov_h.assignment_for(src.head_cusp(eid)).psi
        psi_t = cov_t.assignment_for(src.tail_cusp(eid)).psi
        d_head = cusp_cover_degree(psi_h, src.head_cusp_spec(eid), dst.head_cusp_spec(image))
        d_tail = cusp_cover_degree(psi_t, src.tail_cusp_spec(eid), dst.tail_cusp_spec(image))
        records.append(
            BalanceRecord(eid, d_head, d_tail, src.delta(eid), dst.delta(image))
        )
    return all(r.holds for r in records), records


def compose_morphisms(
    first: GraphMorphism, second: GraphMorphism, catalog: OrbifoldCatalog
) -> GraphMorphism:
    """Composite of first: A -> B and second: B -> C."""
    v1, v2 = first.vertices(), second.vertices()
    vertex_map = {v: v2[w] for v, w in v1.items()}
    edge_map = {}
    for eid in first.edges():
        mid = first.map_ref(eid)
        edge_map[eid] = second.map_ref(mid)
    coverings = {}
    local: dict[str, CoveringEntry] = {c.covering_id: c for c in first.local_coverings}
    for c in second.local_coverings:
        local.setdefault(c.covering_id, c)
    for v in v1:
        a = first.covering_entry(first.coverings()[v], catalog)
        b = second.covering_entry(second.coverings()[v1[v]], catalog)
        composite = compose_coverings(a, b)
        if composite.total_degree == 1 and composite.source == composite.target and all(
            x.psi == Mat2.identity() and x.source_cusp == x.target_cusp
            for x in composite.cusp_assignments
        ):
            coverings[v] = "id:" + composite.source
        else:
            local[composite.covering_id] = composite
            coverings[v] = composite.covering_id
    return GraphMorphism.of(vertex_map, edge_map, coverings, tuple(local.values()))
