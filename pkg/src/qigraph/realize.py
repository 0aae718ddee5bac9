"""Turning a balanced graph into an integral one in the same class.

Given one cover per vertex whose cusps all realize the chosen per-edge
sublattice, the construction takes enough disjoint copies of each cover
for the boundary counts to match across every edge, glues them
deterministically (forcing a connected result), and returns the integral
graph, its gluing manifest, and a verified morphism onto the minimal
graph of the input.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import lcm

from .catalog import (
    CoveringEntry,
    CuspAssignment,
    CuspSpec,
    OrbifoldCatalog,
    OrbifoldEntry,
    compose_coverings,
    minimal_quotient_of,
)
from .errors import CoverMismatch, LatticeNotContained, Unbalanced
from .exact_linear import CyclicSymmetry, Lattice2, Mat2, lattice_index, lattice_intersect
from .minimize import minimize
from .morphism import GraphMorphism, compose_morphisms
from .nah_graph import (
    DirectedEdge,
    GluingManifest,
    NahGraph,
    Pairing,
    balanced,
    require_valid,
    rev,
)

SYNTHETIC_NOTE = (
    "synthetic covers: internally consistent covering entries standing in for "
    "genuine finite covers, whose existence assumes the cusp covering conjecture"
)


def common_sublattice(g: NahGraph, ref: str) -> Lattice2:
    """Intersection of the tail-cusp lattice with the image of the head-cusp
    lattice under the edge label, expressed in the tail tangent plane."""
    lat_h = g.head_cusp_spec(ref).lattice
    lat_t = g.tail_cusp_spec(ref).lattice
    return lattice_intersect(lat_t, lat_h.transform(g.label(ref)))


def _plan_lattice_at_head(g: NahGraph, ref: str, plan: dict[str, Lattice2]) -> Lattice2:
    """The chosen sublattice expressed in the head tangent plane of `ref`.
    Plan lattices are stored in the tail plane of the stored direction."""
    eid = ref[1:] if ref.startswith("~") else ref
    lat = plan[eid]
    if ref.startswith("~"):
        return lat
    return lat.transform(g.label(eid).inv())


def _invariant_sublattice(lat: Lattice2, m: Mat2, rounds: int = 64) -> Lattice2:
    cur = lat
    for _ in range(rounds):
        nxt = lattice_intersect(cur, cur.transform(m))
        if nxt == cur:
            return cur
        cur = nxt
    raise CoverMismatch("could not stabilize a label-invariant sublattice for a loop edge")


def default_plan(g: NahGraph, overrides: dict[str, Lattice2] | None = None) -> dict[str, Lattice2]:
    """Per-edge sublattice choices: the full intersection lattice unless
    overridden; same-cusp loops get the largest label-invariant sublattice."""
    plan: dict[str, Lattice2] = {}
    overrides = overrides or {}
    for eid, e in sorted(g.edges.items()):
        full = common_sublattice(g, eid)
        lat = overrides.get(eid, full)
        ratio, contained = lattice_index(lat, full)
        if not contained:
            raise LatticeNotContained(
                f"edge {eid}: chosen sublattice is not contained in the intersection lattice"
            )
        if e.head == e.tail and e.head_cusp == e.tail_cusp:
            lat = _invariant_sublattice(lat, g.label(eid))
        plan[eid] = lat
    return plan


@dataclass(frozen=True)
class CatalogFragment:
    """Synthesized covering data plus the marker recorded in exports."""

    orbifolds: tuple[OrbifoldEntry, ...]
    coverings: tuple[CoveringEntry, ...]
    covers: tuple[tuple[str, str], ...]  # vertex -> covering id
    note: str = SYNTHETIC_NOTE

    def covers_map(self) -> dict[str, str]:
        return dict(self.covers)


def synthesize_covers(
    g: NahGraph, plan_lattices: dict[str, Lattice2] | None = None
) -> CatalogFragment:
    """Fabricate covering entries realizing the per-edge sublattices.

    Each vertex receives a fresh source orbifold whose cusps are tori with
    the standard lattice, mapped onto the chosen sublattices; the entries
    pass catalog validation and carry composed minimal quotients so that
    graphs labelled by them still minimize correctly.
    """
    plan = default_plan(g, plan_lattices)
    orbifolds: list[OrbifoldEntry] = []
    coverings: list[CoveringEntry] = []
    covers: list[tuple[str, str]] = []
    for v in sorted(g.vertices):
        base = g.orbifold(v)
        per_cusp: list[tuple[str, Lattice2, int, Fraction]] = []
        for c in sorted(base.cusp_ids()):
            refs = g.ref_at(v, c)
            ref = refs[0]
            lat = _plan_lattice_at_head(g, ref, plan)
            spec = base.cusp(c)
            idx, contained = lattice_index(lat, spec.lattice)
            if not contained or idx.denominator != 1:
                raise LatticeNotContained(f"vertex {v} cusp {c}: sublattice escapes the cusp lattice")
            per_cusp.append((c, lat, spec.degree, idx))
        total = lcm(*(int(idx) * deg for (_c, _lat, deg, idx) in per_cusp))
        cusps = []
        assignments = []
        for c, lat, deg, idx in per_cusp:
            count = total // (int(idx) * deg)
            psi = lat.basis  # oriented: canonical bases have positive determinant
            for j in range(count):
                cusp_id = f"{c}.{j}"
                cusps.append(
                    CuspSpec(cusp_id, 1, Lattice2.standard(), CyclicSymmetry.trivial())
                )
                assignments.append(CuspAssignment(cusp_id, c, psi))
        oid = f"syn.{v}"
        cov_id = f"cov.{v}"
        cover = CoveringEntry(cov_id, oid, base.orbifold_id, total, tuple(assignments))
        base_quotient = minimal_quotient_of(g.catalog, base.orbifold_id, base.own_degrees())
        folded = compose_coverings(cover, base_quotient)
        folded_id = f"covmin.{v}"
        folded = CoveringEntry(
            folded_id, folded.source, folded.target, folded.total_degree, folded.cusp_assignments
        )
        targets = tuple(sorted((c.cusp_id, 1) for c in cusps))
        orbifolds.append(
            OrbifoldEntry(
                orbifold_id=oid,
                arithmetic=base.arithmetic,
                cusps=tuple(cusps),
                is_minimal=False,
                minimal_quotients=((targets, folded_id),),
            )
        )
        coverings.append(cover)
        coverings.append(folded)
        covers.append((v, cov_id))
    return CatalogFragment(tuple(orbifolds), tuple(coverings), tuple(covers))


@dataclass(frozen=True)
class EdgeEndPlan:
    degree: Fraction  # cusp-cover degree at this end, f * lattice index
    sublattice: Lattice2  # in this end's tangent plane


@dataclass(frozen=True)
class RealizationPlan:
    potential: dict[str, Fraction]
    cover_ids: dict[str, str]
    vertex_degrees: dict[str, int]
    end_degrees: dict[str, Fraction]  # directed ref -> d_e
    sublattices: dict[str, Lattice2]  # stored-edge id -> lattice in tail plane
    b: int
    copies: dict[str, int]

    def end_degree(self, ref: str) -> Fraction:
        return self.end_degrees[ref]


@dataclass(frozen=True)
class RealizationResult:
    graph: NahGraph
    manifest: GluingManifest
    morphism: GraphMorphism  # output -> minimize(input)
    plan: RealizationPlan
    fragment: CatalogFragment | None


def realize(
    g: NahGraph,
    covers: dict[str, str] | None = None,
    plan_lattices: dict[str, Lattice2] | None = None,
    scale: int = 1,
) -> RealizationResult:
    """Assemble an integral graph from per-vertex covers of a balanced graph.

    When `covers` is omitted, consistent synthetic covers are fabricated
    and returned in the result's `fragment`.  `scale` multiplies the copy
    normalization b beyond the minimal choice (the lcm of denominators).
    """
    require_valid(g)
    ok, potential = balanced(g)
    if not ok:
        raise Unbalanced("realization requires a balanced graph")

    fragment = None
    catalog = g.catalog
    if covers is None:
        fragment = synthesize_covers(g, plan_lattices)
        catalog = catalog.with_entries(fragment.orbifolds, fragment.coverings)
        covers = fragment.covers_map()
        g = NahGraph(g.vertices, g.edges.values(), catalog)

    plan_map = default_plan(g, plan_lattices)
    cover_entries: dict[str, CoveringEntry] = {}
    for v in sorted(g.vertices):
        if v not in covers:
            raise CoverMismatch(f"no cover supplied for vertex {v}")
        cov = catalog.covering(covers[v])
        if cov.target != g.vertices[v]:
            raise CoverMismatch(
                f"cover {cov.covering_id} targets {cov.target}, vertex {v} is labelled {g.vertices[v]}"
            )
        cover_entries[v] = cov

    # validate the per-edge sublattice property and collect end data
    end_degrees: dict[str, Fraction] = {}
    slots_per_copy: dict[str, list[str]] = {}  # directed ref -> source cusp ids
    for ref in g.directed_refs():
        v = g.head(ref)
        cov = cover_entries[v]
        spec = g.head_cusp_spec(ref)
        sub = _plan_lattice_at_head(g, ref, plan_map)
        src_entry = catalog.orbifold(cov.source)
        matching = [a for a in cov.cusp_assignments if a.target_cusp == g.head_cusp(ref)]
        if not matching:
            raise CoverMismatch(
                f"cover {cov.covering_id} has no cusp over {g.head_cusp(ref)} at vertex {v}"
            )
        for a in matching:
            src_cusp = src_entry.cusp(a.source_cusp)
            if src_cusp.degree != 1:
                raise CoverMismatch(
                    f"cover {cov.covering_id}: cusp {a.source_cusp} is not toral"
                )
            if src_cusp.lattice.transform(a.psi) != sub:
                raise CoverMismatch(
                    f"cover {cov.covering_id}: cusp {a.source_cusp} does not realize the "
                    f"sublattice of edge {ref}"
                )
        idx, contained = lattice_index(sub, spec.lattice)
        if not contained:
            raise CoverMismatch(f"edge {ref}: sublattice not inside the cusp lattice")
        end_degrees[ref] = idx * spec.degree
        slots_per_copy[ref] = sorted(a.source_cusp for a in matching)

    for eid in g.edges:
        if end_degrees[eid] * g.delta(eid) != end_degrees[rev(eid)]:
            raise CoverMismatch(
                f"edge {eid}: end degrees are incompatible with the determinant weight "
                "(cusp lattices at the two ends have different covolumes)"
            )

    vertex_degrees = {v: cover_entries[v].total_degree for v in g.vertices}
    b = scale * lcm(
        *(
            (potential[v] / vertex_degrees[v]).denominator
            for v in sorted(g.vertices)
        )
    )
    copies = {}
    for v in sorted(g.vertices):
        n_v = b * potential[v] / vertex_degrees[v]
        assert n_v.denominator == 1 and n_v > 0
        copies[v] = int(n_v)

    plan = RealizationPlan(
        potential=potential,
        cover_ids=dict(sorted(covers.items())),
        vertex_degrees=vertex_degrees,
        end_degrees=end_degrees,
        sublattices=plan_map,
        b=b,
        copies=copies,
    )

    out_graph, manifest, raw_morphism = _assemble(g, cover_entries, plan)
    minimal, to_minimal = minimize(g)
    morphism = compose_morphisms(raw_morphism, to_minimal, catalog)
    return RealizationResult(out_graph, manifest, morphism, plan, fragment)


def _assemble(g: NahGraph, cover_entries, plan: RealizationPlan):
    catalog = g.catalog
    copy_ids: dict[str, list[str]] = {}
    vertices = {}
    for v in sorted(g.vertices):
        copy_ids[v] = [f"{v}.{i}" for i in range(plan.copies[v])]
        for cid in copy_ids[v]:
            vertices[cid] = cover_entries[v].source

    def slots(ref: str) -> list[tuple[str, str]]:
        v = g.head(ref)
        matching = sorted(
            a.source_cusp
            for a in cover_entries[v].cusp_assignments
            if a.target_cusp == g.head_cusp(ref)
        )
        return [(cid, s) for cid in copy_ids[v] for s in matching]

    def psi_of(vertex: str, source_cusp: str) -> Mat2:
        return cover_entries[vertex].assignment_for(source_cusp).psi

    # pair boundary slots across every edge, then repair connectivity
    pairings: dict[str, list[tuple[tuple[str, str], tuple[str, str]]]] = {}
    for eid in sorted(g.edges):
        heads = slots(eid)
        tails = slots(rev(eid))
        same_cusp_loop = heads == tails and g.head(eid) == g.tail(eid) and g.head_cusp(
            eid
        ) == g.tail_cusp(eid)
        if same_cusp_loop:
            pairs = []
            i = 0
            while i + 1 < len(heads):
                pairs.append((heads[i], heads[i + 1]))
                i += 2
            if i < len(heads):
                pairs.append((heads[i], heads[i]))
            pairings[eid] = pairs
        else:
            assert len(heads) == len(tails)
            pairings[eid] = list(zip(heads, tails))

    _repair_connectivity(g, vertices, pairings)

    # assemble edges and the manifest
    edges = []
    manifest_pairs = []
    counter = itertools.count()
    edge_map: dict[str, str] = {}
    for eid in sorted(pairings):
        base_label = g.label(eid)
        for (h_copy, h_cusp), (t_copy, t_cusp) in pairings[eid]:
            label = psi_of(g.tail(eid), t_cusp).inv() @ base_label @ psi_of(g.head(eid), h_cusp)
            out_eid = f"r{next(counter)}"
            edges.append(DirectedEdge(out_eid, h_copy, t_copy, h_cusp, t_cusp, label))
            manifest_pairs.append(Pairing(h_copy, h_cusp, t_copy, t_cusp, label))
            edge_map[out_eid] = eid

    out = NahGraph(vertices, edges, catalog)
    require_valid(out)
    manifest = GluingManifest(
        pieces=tuple(sorted(vertices.items())),
        pairings=tuple(manifest_pairs),
    )
    morphism = GraphMorphism.of(
        {cid: v for v in g.vertices for cid in (f"{v}.{i}" for i in range(plan.copies[v]))},
        edge_map,
        {
            cid: cover_entries[v].covering_id
            for v in g.vertices
            for cid in (f"{v}.{i}" for i in range(plan.copies[v]))
        },
    )
    return out, manifest, morphism


def _component_count(vertices, pairings) -> int:
    parent = {v: v for v in vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for eid in pairings:
        for (a, _), (b, _) in pairings[eid]:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
    return len({find(v) for v in parent})


def _repair_connectivity(g: NahGraph, vertices, pairings) -> None:
    """Deterministically rewire same-edge pairings until the assembled
    graph is connected: greedily apply swaps that strictly reduce the
    number of components."""
    best = _component_count(vertices, pairings)
    while best > 1:
        improved = False
        for eid in sorted(pairings):
            pairs = pairings[eid]
            for i in range(len(pairs)):
                for j in range(i + 1, len(pairs)):
                    (h1, t1), (h2, t2) = pairs[i], pairs[j]
                    candidates = [[(h1, t2), (h2, t1)]]
                    if h1 == t1 and h2 == t2:
                        candidates.append([[h1, h2]])
                    for cand in candidates:
                        saved_i, saved_j = pairs[i], pairs[j]
                        if len(cand) == 1:
                            # two self-paired slots merge into one ordinary pair
                            pairs[i] = (cand[0][0], cand[0][1])
                            del pairs[j]
                        else:
                            pairs[i], pairs[j] = cand[0], cand[1]
                        count = _component_count(vertices, pairings)
                        if count < best:
                            best = count
                            improved = True
                            break
                        # revert
                        if len(cand) == 1:
                            pairs.insert(j, saved_j)
                            pairs[i] = saved_i
                        else:
                            pairs[i], pairs[j] = saved_i, saved_j
                    if improved:
                        break
                if improved:
                    break
            if improved:
                break
        if not improved:
            raise CoverMismatch("could not assemble a connected realization")
