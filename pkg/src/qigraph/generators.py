"""Seeded random fixtures: catalogs, graphs, morphisms, hybrid graphs.

Everything here is deterministic in the seed.  The standard catalog keeps
every cusp lattice at covolume one, which makes the determinant identity
of the balance-transfer certificate exact on all generated morphisms.
"""
from __future__ import annotations

import random
from fractions import Fraction

from .catalog import (
    CoveringEntry,
    CuspAssignment,
    CuspSpec,
    OrbifoldCatalog,
    OrbifoldEntry,
)
from .exact_linear import CyclicSymmetry, Lattice2, Mat2, standard_symmetry
from .morphism import GraphMorphism
from .nah_graph import DirectedEdge, NahGraph, rev


def _cusp(cusp_id: str, degree: int) -> CuspSpec:
    return CuspSpec(cusp_id, degree, Lattice2.standard(), standard_symmetry(degree))


def standard_catalog() -> OrbifoldCatalog:
    """Fixed synthetic catalog used across the test suite."""
    two = Mat2.of(1, 0, 0, 2)
    two_t = Mat2.of(2, 0, 0, 1)
    scalar2 = Mat2.scalar(2)

    orbifolds = [
        OrbifoldEntry("m1", False, (_cusp("c0", 1),), True),
        OrbifoldEntry("m2", False, (_cusp("c0", 1), _cusp("c1", 1)), True),
        OrbifoldEntry("m3", False, (_cusp("c0", 1), _cusp("c1", 1), _cusp("c2", 1)), True),
        OrbifoldEntry("h1", False, (_cusp("c0", 2),), True,
                      minimal_quotients=(((("c0", 4),), "q_h1_t4"),)),
        OrbifoldEntry("h2", False, (_cusp("c0", 2), _cusp("c1", 2)), True),
        OrbifoldEntry("mix2", False, (_cusp("c0", 1), _cusp("c1", 2)), True),
        OrbifoldEntry("tri1", False, (_cusp("c0", 3),), True),
        OrbifoldEntry("sq1", False, (_cusp("c0", 4),), True),
        OrbifoldEntry("hex1", False, (_cusp("c0", 6),), True),
        OrbifoldEntry("a1", True, (_cusp("c0", 1),), True),
        # non-minimal entries with declared quotients
        OrbifoldEntry("m1s", False, (_cusp("c0", 1),), False,
                      minimal_quotients=(((("c0", 1),), "q_m1s"),)),
        OrbifoldEntry("m2s", False, (_cusp("c0", 1), _cusp("c1", 1)), False,
                      minimal_quotients=(((("c0", 1), ("c1", 1)), "q_m2s"),)),
        OrbifoldEntry("h1s", False, (_cusp("c0", 2),), False,
                      minimal_quotients=(((("c0", 2),), "q_h1s"),)),
        OrbifoldEntry("hex1s", False, (_cusp("c0", 6),), False,
                      minimal_quotients=(((("c0", 6),), "q_hex1s"),)),
    ]
    coverings = [
        CoveringEntry("q_m1s", "m1s", "m1", 2, (CuspAssignment("c0", "c0", two),)),
        CoveringEntry(
            "q_m2s", "m2s", "m2", 2,
            (CuspAssignment("c0", "c0", two), CuspAssignment("c1", "c1", two)),
        ),
        CoveringEntry("q_h1s", "h1s", "h1", 2, (CuspAssignment("c0", "c0", two_t),)),
        CoveringEntry("q_hex1s", "hex1s", "hex1", 4, (CuspAssignment("c0", "c0", scalar2),)),
        CoveringEntry("q_h1_t4", "h1", "sq1", 2, (CuspAssignment("c0", "c0", Mat2.identity()),)),
    ]
    return OrbifoldCatalog(orbifolds, coverings)


# orientation-reversing normalizers of the standard rotation groups
_REVERSER = {
    1: Mat2.of(1, 0, 0, -1),
    2: Mat2.of(1, 0, 0, -1),
    3: Mat2.of(0, 1, 1, 0),
    4: Mat2.of(1, 0, 0, -1),
    6: Mat2.of(0, 1, 1, 0),
}

_PRECOVER = {"m1": "m1s", "m2": "m2s", "h1": "h1s", "hex1": "hex1s"}


def rand_unimodular(rng: random.Random, steps: int = 4) -> Mat2:
    m = Mat2.identity()
    for _ in range(steps):
        k = rng.randint(-2, 2)
        if rng.random() < 0.5:
            m = m @ Mat2.of(1, k, 0, 1)
        else:
            m = m @ Mat2.of(1, 0, k, 1)
    return m


def rand_square(rng: random.Random) -> Fraction:
    r = Fraction(rng.randint(1, 3), rng.randint(1, 3))
    return r * r


def edge_label(rng: random.Random, degree: int, delta: Fraction, integral: bool = False) -> Mat2:
    """Orientation-reversing label with determinant -delta, conjugating the
    standard symmetry of the given order; high orders need delta a square."""
    g = standard_symmetry(degree).generator
    j = _REVERSER[degree]
    if degree in (3, 4, 6):
        root = _sqrt_fraction(delta)
        base = Mat2.scalar(root) @ g.pow(rng.randrange(degree)) @ j
        return base
    if integral:
        assert delta == 1
        return rand_unimodular(rng) @ j @ rand_unimodular(rng)
    scalediag = Mat2.of(delta, 0, 0, -1)
    return rand_unimodular(rng) @ scalediag @ rand_unimodular(rng)


def _sqrt_fraction(x: Fraction):
    from math import isqrt

    num, den = x.numerator, x.denominator
    rn, rd = isqrt(num), isqrt(den)
    if rn * rn != num or rd * rd != den:
        raise ValueError(f"{x} is not a rational square")
    return Fraction(rn, rd)


def rand_graph(
    rng: random.Random,
    catalog: OrbifoldCatalog | None = None,
    max_vertices: int = 6,
    balanced: bool = True,
    integral: bool = False,
    allow_high_degree: bool = True,
) -> NahGraph:
    """Random valid connected graph; balanced (or integral) on request."""
    catalog = catalog or standard_catalog()
    low_labels = ["m1", "m2", "m3", "h1", "h2", "mix2"]
    high_labels = ["tri1", "sq1", "hex1"] if allow_high_degree else []
    single = {1: "m1", 2: "h1", 3: "tri1", 4: "sq1", 6: "hex1"}

    n = rng.randint(1, max_vertices)
    vertices: dict[str, str] = {}
    open_ports: list[tuple[str, str, int]] = []  # (vertex, cusp, degree)
    edges: list[tuple[tuple[str, str], tuple[str, str], int]] = []

    def add_vertex(label: str) -> str:
        vid = f"v{len(vertices)}"
        vertices[vid] = label
        for cusp in catalog.orbifold(label).cusps:
            open_ports.append((vid, cusp.cusp_id, cusp.degree))
        return vid

    labels = low_labels + high_labels
    add_vertex(rng.choice(labels))
    while len(vertices) < n and open_ports:
        degrees = {p[2] for p in open_ports}
        candidates = [
            lab
            for lab in labels
            if any(c.degree in degrees for c in catalog.orbifold(lab).cusps)
        ]
        if not candidates:
            break
        lab = rng.choice(candidates)
        usable = {c.degree for c in catalog.orbifold(lab).cusps}
        anchor = rng.choice([p for p in open_ports if p[2] in usable])
        vid = add_vertex(lab)
        mine = rng.choice([p for p in open_ports if p[0] == vid and p[2] == anchor[2]])
        open_ports.remove(anchor)
        open_ports.remove(mine)
        edges.append(((anchor[0], anchor[1]), (mine[0], mine[1]), anchor[2]))

    # close remaining ports within equal degree; odd counts get a partner
    # vertex with one cusp of that degree, or a same-cusp loop
    by_degree: dict[int, list[tuple[str, str, int]]] = {}
    for p in open_ports:
        by_degree.setdefault(p[2], []).append(p)
    open_ports.clear()
    for deg in sorted(by_degree):
        ports = by_degree[deg]
        rng.shuffle(ports)
        if len(ports) % 2 == 1:
            last = ports.pop()
            if rng.random() < 0.5:
                vid = f"v{len(vertices)}"
                vertices[vid] = single[deg]
                cusp_id = catalog.orbifold(single[deg]).cusps[0].cusp_id
                edges.append(((last[0], last[1]), (vid, cusp_id), deg))
            else:
                edges.append(((last[0], last[1]), (last[0], last[1]), deg))
        while ports:
            a = ports.pop()
            b = ports.pop()
            edges.append(((a[0], a[1]), (b[0], b[1]), deg))

    # potentials (squares so every degree can realize the ratios exactly)
    if balanced or integral:
        potential = {v: Fraction(1) if integral else rand_square(rng) for v in vertices}
    else:
        potential = {v: rand_square(rng) for v in vertices}

    records = []
    for k, ((v1, c1), (v2, c2), deg) in enumerate(edges):
        d = potential[v2] / potential[v1]
        if (v1, c1) == (v2, c2):
            d = Fraction(1)
        label = edge_label(rng, deg, d, integral=integral)
        records.append(DirectedEdge(f"e{k}", v1, v2, c1, c2, label))

    g = NahGraph(vertices, records, catalog)
    if not balanced and not integral:
        g = _unbalance(g, rng)
    return g


def _unbalance(g: NahGraph, rng: random.Random) -> NahGraph:
    """Multiply one cycle edge's determinant weight so some cycle product
    is no longer one; graphs without usable cycles are returned balanced."""
    from .nah_graph import balanced as is_balanced

    tree = set()
    seen = {min(g.vertices)}
    frontier = [min(g.vertices)]
    while frontier:
        v = frontier.pop()
        for ref in g.out_refs(v):
            w = g.tail(ref)
            if w not in seen:
                seen.add(w)
                tree.add(ref[1:] if ref.startswith("~") else ref)
                frontier.append(w)
    extras = [
        eid
        for eid in g.edges
        if eid not in tree and g.head_cusp_spec(eid).degree <= 2
        and not (g.head(eid) == g.tail(eid) and g.head_cusp(eid) == g.tail_cusp(eid))
    ]
    if not extras:
        return g
    eid = rng.choice(extras)
    e = g.edges[eid]
    bumped = Mat2.of(2, 0, 0, 1) @ e.label
    records = [
        DirectedEdge(eid, e.head, e.tail, e.head_cusp, e.tail_cusp, bumped)
        if x == eid
        else g.edges[x]
        for x in g.edges
    ]
    out = NahGraph(g.vertices, records, g.catalog)
    ok, _ = is_balanced(out)
    return out if not ok else g


def expand_graph(
    g: NahGraph, rng: random.Random, fold: int | None = None, precover_prob: float = 0.4
) -> tuple[NahGraph, GraphMorphism]:
    """A graph mapping onto g: an n-fold unfolding (n > 1 only when g has a
    cycle) with labels twisted inside their cosets, and vertex labels
    optionally replaced by declared pre-covers."""
    catalog = g.catalog
    tree: set[str] = set()
    seen = {min(g.vertices)}
    frontier = [min(g.vertices)]
    while frontier:
        v = frontier.pop()
        for ref in g.out_refs(v):
            w = g.tail(ref)
            if w not in seen:
                seen.add(w)
                tree.add(ref[1:] if ref.startswith("~") else ref)
                frontier.append(w)
    def same_cusp_loop(eid: str) -> bool:
        e = g.edges[eid]
        return e.head == e.tail and e.head_cusp == e.tail_cusp

    spreadable = [eid for eid in g.edges if eid not in tree and not same_cusp_loop(eid)]
    if fold is None:
        fold = rng.choice([1, 2, 3]) if spreadable else 1
    if not spreadable:
        fold = 1

    # choose per-vertex labels: original or a declared pre-cover
    pre: dict[str, CoveringEntry | None] = {}
    for v, oid in g.vertices.items():
        use = rng.random() < precover_prob and oid in _PRECOVER
        pre[v] = catalog.covering("q_" + _PRECOVER[oid]) if use else None

    def psi(v: str, cusp: str) -> Mat2:
        if pre[v] is None:
            return Mat2.identity()
        return pre[v].assignment_for(cusp).psi

    def src_label(v: str) -> str:
        return pre[v].source if pre[v] else g.vertices[v]

    perms: dict[str, list[int]] = {}
    spin = rng.choice(sorted(spreadable)) if (fold > 1 and spreadable) else None
    for eid in g.edges:
        if eid in tree or fold == 1 or same_cusp_loop(eid):
            perms[eid] = list(range(fold))
        elif eid == spin:
            perms[eid] = [(i + 1) % fold for i in range(fold)]
        else:
            base = list(range(fold))
            rng.shuffle(base)
            perms[eid] = base

    vertices = {f"{v}.{i}": src_label(v) for v in g.vertices for i in range(fold)}
    records = []
    edge_map = {}
    for eid, e in sorted(g.edges.items()):
        f_head = g.head_cusp_spec(eid).symmetry
        for i in range(fold):
            j = perms[eid][i]
            twist = f_head.generator.pow(rng.randrange(f_head.order))
            label = psi(e.tail, e.tail_cusp).inv() @ (e.label @ twist) @ psi(e.head, e.head_cusp)
            src_eid = f"{eid}.{i}"
            records.append(
                DirectedEdge(
                    src_eid,
                    f"{e.head}.{i}",
                    f"{e.tail}.{j}",
                    e.head_cusp,
                    e.tail_cusp,
                    label,
                )
            )
            edge_map[src_eid] = eid

    src = NahGraph(vertices, records, catalog)
    coverings = {
        f"{v}.{i}": (pre[v].covering_id if pre[v] else "id:" + g.vertices[v])
        for v in g.vertices
        for i in range(fold)
    }
    morphism = GraphMorphism.of(
        {f"{v}.{i}": v for v in g.vertices for i in range(fold)},
        edge_map,
        coverings,
    )
    return src, morphism


def mergeable_double(g: NahGraph, rng: random.Random) -> NahGraph:
    """Connected two-fold unfolding with identical labels; minimizing it
    merges the copies back onto (the minimal form of) g."""
    src, _ = expand_graph(g, rng, fold=2, precover_prob=0.0)
    return src


def rand_graph_with_cycle(rng: random.Random, **kwargs) -> NahGraph:
    """Random graph guaranteed to contain a simple cycle through an
    ordinary (non-loop) low-degree edge; used for unbalancing and folding."""
    from .nah_graph import NahGraph as _NG

    for _ in range(200):
        g = rand_graph(rng, **kwargs)
        tree: set[str] = set()
        seen = {min(g.vertices)}
        frontier = [min(g.vertices)]
        while frontier:
            v = frontier.pop()
            for ref in g.out_refs(v):
                w = g.tail(ref)
                if w not in seen:
                    seen.add(w)
                    tree.add(ref[1:] if ref.startswith("~") else ref)
                    frontier.append(w)
        for eid in g.edges:
            e = g.edges[eid]
            if (
                eid not in tree
                and not (e.head == e.tail and e.head_cusp == e.tail_cusp)
                and g.head_cusp_spec(eid).degree <= 2
            ):
                return g
    raise RuntimeError("could not generate a cyclic graph")
