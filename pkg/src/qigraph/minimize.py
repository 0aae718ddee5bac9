"""Reduction of a labelled graph to the unique minimal member of its
equivalence class.

Two reduction moves are iterated to a fixpoint: (1) replace every vertex
label by its declared minimal orbifold, pushing edge labels through the
quotient tangent maps and folding parallel edges when the quotient
collapses cusps; (2) merge vertices by coarsest-stable-partition
refinement over exact per-cusp transition signatures.  The quotient
morphism is returned and can be verified independently.
"""
from __future__ import annotations

import itertools

from .canonical import LabelledEdge, LabelledGraph, canonical_bytes, encode
from .catalog import identity_covering, minimal_quotient_of
from .errors import InvalidGraph, TooLarge
from .exact_linear import Mat2, coset_canonical
from .morphism import (
    GraphMorphism,
    compose_morphisms,
    identity_morphism,
    pushforward_edge_label,
    verify_morphism,
)
from .nah_graph import DirectedEdge, NahGraph, edge_id_of, require_valid, rev


def normalize_labels(g: NahGraph) -> tuple[NahGraph, GraphMorphism]:
    """Replace every vertex label by its minimal orbifold (targets are the
    cusp degrees) and push the edge labels forward.  Requires the declared
    quotients to preserve cusps one-for-one; cusp-collapsing quotients are
    handled inside `minimize`, not here."""
    quotients = {}
    for v, oid in g.vertices.items():
        entry = g.catalog.orbifold(oid)
        q = minimal_quotient_of(g.catalog, oid, entry.own_degrees())
        targets = [a.target_cusp for a in q.cusp_assignments]
        if len(set(targets)) != len(targets):
            raise InvalidGraph(
                f"minimal quotient {q.covering_id} collapses cusps; normalize_labels "
                "requires one-for-one cusp assignments"
            )
        quotients[v] = q
    return _apply_quotients(g, quotients)


def _apply_quotients(g: NahGraph, quotients) -> tuple[NahGraph, GraphMorphism]:
    """Relabel vertices via per-vertex coverings, folding edges whose ends
    land on the same image cusps.  The coverings must be consistent; the
    caller is responsible for demoting inconsistent ones to identities."""
    new_vertices = {v: quotients[v].target for v in g.vertices}
    groups: dict[tuple, list[str]] = {}
    ends: dict[str, tuple] = {}
    for eid in g.edges:
        q_h = quotients[g.head(eid)]
        q_t = quotients[g.tail(eid)]
        h_end = (g.head(eid), q_h.assignment_for(g.head_cusp(eid)).target_cusp)
        t_end = (g.tail(eid), q_t.assignment_for(g.tail_cusp(eid)).target_cusp)
        key = tuple(sorted([h_end, t_end]))
        groups.setdefault(key, []).append(eid)
        ends[eid] = (h_end, t_end)

    new_edges = []
    edge_map: dict[str, str] = {}
    catalog = g.catalog
    for key in sorted(groups):
        members = sorted(groups[key])
        rep = members[0]
        h_end, t_end = ends[rep]
        psi_h = quotients[g.head(rep)].assignment_for(g.head_cusp(rep)).psi
        psi_t = quotients[g.tail(rep)].assignment_for(g.tail_cusp(rep)).psi
        label = pushforward_edge_label(g.label(rep), psi_h, psi_t)
        new_eid = rep
        head_entry = catalog.orbifold(quotients[g.head(rep)].target)
        f_head = head_entry.cusp(h_end[1]).symmetry
        canon = coset_canonical(label, f_head)
        new_edges.append(
            DirectedEdge(new_eid, h_end[0], t_end[0], h_end[1], t_end[1], canon)
        )
        for member in members:
            mh, mt = ends[member]
            if (mh, mt) == (h_end, t_end):
                edge_map[member] = new_eid
            else:
                edge_map[member] = rev(new_eid)
    out = NahGraph(new_vertices, new_edges, catalog)
    local = tuple(
        q
        for q in quotients.values()
        if not q.covering_id.startswith("id:") and q.covering_id not in catalog.coverings
    )
    morphism = GraphMorphism.of(
        {v: v for v in g.vertices},
        edge_map,
        {v: quotients[v].covering_id for v in g.vertices},
        local,
    )
    return out, morphism


def _fold_pass(g: NahGraph) -> tuple[NahGraph, GraphMorphism, bool]:
    """One normalize/fold attempt; inconsistent vertex quotients are demoted
    to identities so the pass always succeeds."""
    quotients = {}
    for v, oid in g.vertices.items():
        entry = g.catalog.orbifold(oid)
        quotients[v] = minimal_quotient_of(g.catalog, oid, entry.own_degrees())

    while True:
        demote = set()
        # group edges by image ends and check labels agree up to the symmetry
        groups: dict[tuple, list[tuple[str, str]]] = {}
        for eid in g.edges:
            q_h, q_t = quotients[g.head(eid)], quotients[g.tail(eid)]
            h_end = (g.head(eid), q_h.assignment_for(g.head_cusp(eid)).target_cusp)
            t_end = (g.tail(eid), q_t.assignment_for(g.tail_cusp(eid)).target_cusp)
            if h_end <= t_end:
                groups.setdefault((h_end, t_end), []).append((eid, "fwd"))
            else:
                groups.setdefault((t_end, h_end), []).append((eid, "bwd"))
        for (h_end, t_end), members in groups.items():
            labels = set()
            for eid, direction in members:
                ref = eid if direction == "fwd" else rev(eid)
                psi_h = quotients[g.head(ref)].assignment_for(g.head_cusp(ref)).psi
                psi_t = quotients[g.tail(ref)].assignment_for(g.tail_cusp(ref)).psi
                pushed = pushforward_edge_label(g.label(ref), psi_h, psi_t)
                f = g.catalog.orbifold(quotients[h_end[0]].target).cusp(h_end[1]).symmetry
                labels.add(coset_canonical(pushed, f).entries())
            if len(labels) > 1:
                demote.add(h_end[0])
                demote.add(t_end[0])
        if not demote:
            break
        changed = False
        for v in demote:
            if quotients[v].total_degree != 1 or quotients[v].source != quotients[v].target:
                quotients[v] = identity_covering(g.catalog.orbifold(g.vertices[v]))
                changed = True
        if not changed:
            break

    trivial = all(
        q.total_degree == 1 and q.source == q.target for q in quotients.values()
    )
    if trivial:
        return g, identity_morphism(g), False
    out, morphism = _apply_quotients(g, quotients)
    from .nah_graph import validate

    if validate(out):
        # the declared quotients do not glue into a valid graph; fold nothing
        return g, identity_morphism(g), False
    return out, morphism, True


def _signatures(g: NahGraph, block: dict[str, int]):
    sigs = {}
    for v in g.vertices:
        per_cusp = []
        entry = g.orbifold(v)
        for c in sorted(entry.cusp_ids()):
            descs = []
            for ref in g.ref_at(v, c):
                descs.append(
                    (
                        g.canonical_label(ref).entries(),
                        block[g.tail(ref)],
                        g.tail_cusp(ref),
                    )
                )
            per_cusp.append((c, tuple(sorted(descs))))
        sigs[v] = (g.vertices[v], tuple(per_cusp))
    return sigs


def _stable_partition(g: NahGraph) -> dict[str, int]:
    block = {}
    labels = sorted(set(g.vertices.values()))
    for v, oid in g.vertices.items():
        block[v] = labels.index(oid)
    while True:
        sigs = _signatures(g, block)
        order = sorted(set(sigs.values()), key=encode)
        new = {v: order.index(sigs[v]) for v in g.vertices}
        if new == block:
            return block
        block = new


def _merge_pass(g: NahGraph) -> tuple[NahGraph, GraphMorphism, bool]:
    block = _stable_partition(g)
    n_blocks = len(set(block.values()))
    if n_blocks == len(g.vertices):
        return g, identity_morphism(g), False

    members: dict[int, list[str]] = {}
    for v, b in block.items():
        members.setdefault(b, []).append(v)
    rep = {b: min(vs) for b, vs in members.items()}
    bname = {b: rep[b] for b in members}  # quotient vertex named by least member

    vertices = {bname[b]: g.vertices[rep[b]] for b in members}
    new_edges: dict[tuple, DirectedEdge] = {}
    edge_of_end: dict[tuple, tuple[str, str]] = {}
    counter = itertools.count()
    for b in sorted(members):
        r = rep[b]
        entry = g.orbifold(r)
        for c in sorted(entry.cusp_ids()):
            if (bname[b], c) in edge_of_end:
                continue
            refs = g.ref_at(r, c)
            if not refs:
                continue
            ref = refs[0]
            other = (bname[block[g.tail(ref)]], g.tail_cusp(ref))
            this = (bname[b], c)
            eid = f"q{next(counter)}"
            if other == this:
                # quotient edge closes into a same-cusp loop
                cands = [g.canonical_label(rf) for rf in refs]
                if len(refs) == 1:
                    f = g.head_cusp_spec(ref).symmetry
                    cands.append(coset_canonical(g.label(ref).inv(), f))
                lab = min(cands, key=lambda m: m.entries())
                new_edges[eid] = DirectedEdge(eid, this[0], this[0], c, c, lab)
                edge_of_end[this] = (eid, "loop")
            else:
                lab = g.canonical_label(ref)
                new_edges[eid] = DirectedEdge(eid, this[0], other[0], c, other[1], lab)
                edge_of_end[this] = (eid, "fwd")
                edge_of_end[other] = (eid, "bwd")

    out = NahGraph(vertices, new_edges.values(), g.catalog)

    edge_map = {}
    for eid in g.edges:
        v = g.head(eid)
        c = g.head_cusp(eid)
        q_eid, kind = edge_of_end[(bname[block[v]], c)]
        if kind == "loop":
            canon = coset_canonical(g.label(eid), g.head_cusp_spec(eid).symmetry)
            edge_map[eid] = q_eid if canon == new_edges[q_eid].label else rev(q_eid)
        elif kind == "fwd":
            edge_map[eid] = q_eid
        else:
            edge_map[eid] = rev(q_eid)

    morphism = GraphMorphism.of(
        {v: bname[block[v]] for v in g.vertices},
        edge_map,
        {v: "id:" + g.vertices[v] for v in g.vertices},
    )
    return out, morphism, True


def minimize(g: NahGraph) -> tuple[NahGraph, GraphMorphism]:
    """Unique minimal representative plus the quotient morphism onto it."""
    require_valid(g)
    current = g
    morphism = identity_morphism(g)
    for _ in range(len(g.vertices) + len(g.edges) + 2):
        folded, m1, changed1 = _fold_pass(current)
        merged, m2, changed2 = _merge_pass(folded)
        if changed1:
            morphism = compose_morphisms(morphism, m1, g.catalog)
        if changed2:
            morphism = compose_morphisms(morphism, m2, g.catalog)
        current = merged
        if not changed1 and not changed2:
            break
    return current, morphism


def canonical_form(g: NahGraph) -> bytes:
    """Serialization invariant under renaming vertices and edges; intended
    for minimize outputs but correct on any valid graph."""
    ids = sorted(g.vertices)
    index = {v: i for i, v in enumerate(ids)}
    colors = [g.vertices[v] for v in ids]
    edges = []
    for eid in sorted(g.edges):
        fwd = (g.head_cusp(eid), g.tail_cusp(eid), g.canonical_label(eid).entries())
        bwd = (
            g.tail_cusp(eid),
            g.head_cusp(eid),
            g.canonical_label(rev(eid)).entries(),
        )
        edges.append(LabelledEdge(index[g.head(eid)], index[g.tail(eid)], fwd, bwd))
    return canonical_bytes(LabelledGraph(colors, edges))


def isomorphic(g1: NahGraph, g2: NahGraph) -> bool:
    if sorted(g1.vertices.values()) != sorted(g2.vertices.values()):
        return False
    if len(g1.edges) != len(g2.edges):
        return False
    return canonical_form(g1) == canonical_form(g2)


def bisimilar(g1: NahGraph, g2: NahGraph) -> bool:
    m1, _ = minimize(g1)
    m2, _ = minimize(g2)
    return canonical_form(m1) == canonical_form(m2)


def _partitions(items: list):
    """All set partitions, smallest-first by construction order."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part


def _quotient_candidates(g: NahGraph):
    """All verified one-step quotients of g: a partition of the vertices
    plus a per-vertex choice of declared covering onto the block label."""
    cat = g.catalog
    coverings_from: dict[str, list] = {}
    for v, oid in sorted(g.vertices.items()):
        options = [identity_covering(cat.orbifold(oid))]
        for cov in cat.coverings.values():
            if cov.source == oid:
                options.append(cov)
        coverings_from[v] = options

    for part in _partitions(sorted(g.vertices)):
        choice_lists = []
        blocks = [sorted(b) for b in part]
        ok = True
        for blk in blocks:
            # candidate common targets with a covering choice per member
            per_member = [coverings_from[v] for v in blk]
            combos = []
            for combo in itertools.product(*per_member):
                targets = {c.target for c in combo}
                if len(targets) == 1:
                    combos.append(combo)
            if not combos:
                ok = False
                break
            choice_lists.append(combos)
        if not ok:
            continue
        for assignment in itertools.product(*choice_lists):
            covers = {}
            for blk, combo in zip(blocks, assignment):
                for v, cov in zip(blk, combo):
                    covers[v] = cov
            q = _build_quotient(g, blocks, covers)
            if q is not None:
                yield q


def _build_quotient(g: NahGraph, blocks, covers):
    """Construct the quotient graph for a partition and covering choice;
    returns (graph, morphism) or None when the data does not glue."""
    cat = g.catalog
    bof = {}
    bname = {}
    for blk in blocks:
        name = min(blk)
        for v in blk:
            bof[v] = name
        bname[name] = blk
    vertices = {}
    for name, blk in bname.items():
        vertices[name] = covers[blk[0]].target

    demands: dict[tuple, set] = {}
    for eid in list(g.edges):
        for ref in (eid, rev(eid)):
            v = g.head(ref)
            try:
                a = covers[v].assignment_for(g.head_cusp(ref))
                t = covers[g.tail(ref)].assignment_for(g.tail_cusp(ref))
            except KeyError:
                return None
            this = (bof[v], a.target_cusp)
            other = (bof[g.tail(ref)], t.target_cusp)
            pushed = pushforward_edge_label(g.label(ref), a.psi, t.psi)
            f = cat.orbifold(vertices[this[0]]).cusp(this[1]).symmetry
            canon = coset_canonical(pushed, f)
            demands.setdefault(this, set()).add((other, canon.entries()))

    new_edges = {}
    end_edge = {}
    counter = itertools.count()
    for this in sorted(demands):
        if this in end_edge:
            continue
        group = sorted(demands[this])
        if len(group) == 1:
            other, entries = group[0]
            eid = f"b{next(counter)}"
            label = Mat2.of(*entries)
            if other == this:
                # same-cusp loop whose two directions share one coset
                new_edges[eid] = DirectedEdge(eid, this[0], this[0], this[1], this[1], label)
                end_edge[this] = (eid, "loop")
            else:
                new_edges[eid] = DirectedEdge(eid, this[0], other[0], this[1], other[1], label)
                end_edge[this] = (eid, "fwd")
                end_edge[other] = (eid, "bwd")
        elif len(group) == 2 and all(o == this for o, _ in group):
            # a same-cusp loop: the two demands must be mutually inverse cosets
            f = cat.orbifold(vertices[this[0]]).cusp(this[1]).symmetry
            lab0 = Mat2.of(*group[0][1])
            if coset_canonical(lab0.inv(), f).entries() != group[1][1]:
                return None
            eid = f"b{next(counter)}"
            new_edges[eid] = DirectedEdge(eid, this[0], this[0], this[1], this[1], lab0)
            end_edge[this] = (eid, "loop")
        else:
            return None  # an image cusp would host more than one edge

    try:
        out = NahGraph(vertices, new_edges.values(), cat)
    except InvalidGraph:
        return None

    edge_map = {}
    for eid in g.edges:
        v, c = g.head(eid), g.head_cusp(eid)
        a = covers[v].assignment_for(c)
        this = (bof[v], a.target_cusp)
        q_eid, kind = end_edge[this]
        if kind == "loop":
            t = covers[g.tail(eid)].assignment_for(g.tail_cusp(eid))
            pushed = pushforward_edge_label(g.label(eid), a.psi, t.psi)
            f = cat.orbifold(vertices[this[0]]).cusp(this[1]).symmetry
            canon = coset_canonical(pushed, f)
            edge_map[eid] = q_eid if canon == new_edges[q_eid].label else rev(q_eid)
        else:
            edge_map[eid] = q_eid if kind == "fwd" else rev(q_eid)

    local = tuple(
        c for c in {cov.covering_id: cov for cov in covers.values()}.values()
        if c.covering_id not in cat.coverings and not c.covering_id.startswith("id:")
    )
    morphism = GraphMorphism.of(
        {v: bof[v] for v in g.vertices},
        edge_map,
        {v: covers[v].covering_id for v in g.vertices},
        local,
    )
    from .nah_graph import validate

    if validate(out):
        return None
    if verify_morphism(g, out, morphism):
        return None
    return out, morphism


def brute_force_minimize(g: NahGraph, max_vertices: int = 6) -> NahGraph:
    """Oracle: exhaustively explore verified quotients (iterated) and return
    the smallest reachable graph.  Only for tests at desk scale."""
    if len(g.vertices) > max_vertices:
        raise TooLarge(f"{len(g.vertices)} vertices exceeds bound {max_vertices}")
    require_valid(g)
    seen: dict[bytes, NahGraph] = {}
    frontier = [g]
    seen[canonical_form(g)] = g
    while frontier:
        cur = frontier.pop()
        for quotient, _m in _quotient_candidates(cur):
            key = canonical_form(quotient)
            if key not in seen:
                seen[key] = quotient
                frontier.append(quotient)
    best = min(
        seen.items(), key=lambda kv: (len(kv[1].vertices), len(kv[1].edges), kv[0])
    )
    return best[1]
