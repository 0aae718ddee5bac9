"""Declared orbifold data: cusps, coverings, minimal quotients.

No hyperbolic geometry is computed here.  Orbifolds are symbolic entries
whose cusp lattices, symmetry groups and covering maps are validated for
internal consistency; commensurability and minimality are declarations.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

from .errors import InvalidTarget, MismatchedEnds, NotDeclared
from .exact_linear import (
    CyclicSymmetry,
    Lattice2,
    Mat2,
    conjugates_into,
    lattice_index,
)

ALLOWED_DEGREES = (1, 2, 3, 4, 6)

IDENTITY_PREFIX = "id:"


@dataclass(frozen=True)
class Violation:
    """One invariant failure: where, which rule, and the witnesses."""

    entry: str
    invariant: str
    detail: str

    def __str__(self) -> str:
        return f"{self.entry}: {self.invariant}: {self.detail}"


@dataclass(frozen=True)
class CuspSpec:
    cusp_id: str
    degree: int
    lattice: Lattice2
    symmetry: CyclicSymmetry


@dataclass(frozen=True)
class OrbifoldEntry:
    orbifold_id: str
    arithmetic: bool
    cusps: tuple[CuspSpec, ...]
    is_minimal: bool
    # declared quotients, keyed by the full cusp -> target-degree assignment
    minimal_quotients: tuple[tuple[tuple[tuple[str, int], ...], str], ...] = ()

    def cusp(self, cusp_id: str) -> CuspSpec:
        for c in self.cusps:
            if c.cusp_id == cusp_id:
                return c
        raise KeyError(f"{self.orbifold_id} has no cusp {cusp_id!r}")

    def cusp_ids(self) -> tuple[str, ...]:
        return tuple(c.cusp_id for c in self.cusps)

    def own_degrees(self) -> dict[str, int]:
        return {c.cusp_id: c.degree for c in self.cusps}

    def quotient_for(self, targets: dict[str, int]) -> str | None:
        key = tuple(sorted(targets.items()))
        for k, covering_id in self.minimal_quotients:
            if k == key:
                return covering_id
        return None


@dataclass(frozen=True)
class CuspAssignment:
    source_cusp: str
    target_cusp: str
    psi: Mat2


@dataclass(frozen=True)
class CoveringEntry:
    covering_id: str
    source: str
    target: str
    total_degree: int
    cusp_assignments: tuple[CuspAssignment, ...]

    def assignment_for(self, source_cusp: str) -> CuspAssignment:
        for a in self.cusp_assignments:
            if a.source_cusp == source_cusp:
                return a
        raise KeyError(f"covering {self.covering_id} does not assign cusp {source_cusp!r}")


def cusp_cover_degree(psi: Mat2, src: CuspSpec, dst: CuspSpec) -> Fraction:
    """Degree of the induced cusp covering: lattice index times the ratio
    of cyclic-group orders."""
    ratio, _ = lattice_index(src.lattice.transform(psi), dst.lattice)
    return ratio * Fraction(dst.degree, src.degree)


def identity_covering(entry: OrbifoldEntry) -> CoveringEntry:
    return CoveringEntry(
        covering_id=IDENTITY_PREFIX + entry.orbifold_id,
        source=entry.orbifold_id,
        target=entry.orbifold_id,
        total_degree=1,
        cusp_assignments=tuple(
            CuspAssignment(c.cusp_id, c.cusp_id, Mat2.identity()) for c in entry.cusps
        ),
    )


class OrbifoldCatalog:
    """Immutable-after-load collection of orbifold and covering entries."""

    def __init__(self, orbifolds=(), coverings=()):
        self.orbifolds: dict[str, OrbifoldEntry] = {o.orbifold_id: o for o in orbifolds}
        self.coverings: dict[str, CoveringEntry] = {c.covering_id: c for c in coverings}

    def orbifold(self, orbifold_id: str) -> OrbifoldEntry:
        try:
            return self.orbifolds[orbifold_id]
        except KeyError:
            raise NotDeclared(f"orbifold {orbifold_id!r} not in catalog") from None

    def covering(self, covering_id: str) -> CoveringEntry:
        """Resolve a covering id; ids of the form 'id:<orbifold>' resolve to
        the synthesized identity covering of that orbifold."""
        if covering_id in self.coverings:
            return self.coverings[covering_id]
        if covering_id.startswith(IDENTITY_PREFIX):
            return identity_covering(self.orbifold(covering_id[len(IDENTITY_PREFIX):]))
        raise NotDeclared(f"covering {covering_id!r} not in catalog")

    def with_entries(self, orbifolds=(), coverings=()) -> "OrbifoldCatalog":
        """New catalog extended by the given entries (used for synthesized covers)."""
        out = OrbifoldCatalog(self.orbifolds.values(), self.coverings.values())
        for o in orbifolds:
            out.orbifolds[o.orbifold_id] = o
        for c in coverings:
            out.coverings[c.covering_id] = c
        return out


def _check_cusp(entry_id: str, cusp: CuspSpec, out: list[Violation]) -> None:
    if cusp.degree not in ALLOWED_DEGREES:
        out.append(Violation(entry_id, "cusp-degree", f"cusp {cusp.cusp_id}: degree {cusp.degree}"))
        return
    if cusp.symmetry.order != cusp.degree:
        out.append(
            Violation(
                entry_id,
                "symmetry-order",
                f"cusp {cusp.cusp_id}: symmetry order {cusp.symmetry.order} != degree {cusp.degree}",
            )
        )
    for problem in cusp.symmetry.violations(cusp.lattice):
        out.append(Violation(entry_id, "symmetry", f"cusp {cusp.cusp_id}: {problem}"))
    if cusp.degree in (3, 4, 6):
        trace = cusp.symmetry.generator.a + cusp.symmetry.generator.d
        expected = {3: -1, 4: 0, 6: 1}[cusp.degree]
        if trace != expected:
            out.append(
                Violation(
                    entry_id,
                    "rotation-trace",
                    f"cusp {cusp.cusp_id}: trace {trace} != {expected} for degree {cusp.degree}",
                )
            )


def _check_covering(cat: OrbifoldCatalog, cov: CoveringEntry, out: list[Violation]) -> None:
    eid = f"covering {cov.covering_id}"
    if cov.source not in cat.orbifolds or cov.target not in cat.orbifolds:
        out.append(Violation(eid, "resolves", f"source {cov.source!r} / target {cov.target!r}"))
        return
    src = cat.orbifolds[cov.source]
    dst = cat.orbifolds[cov.target]
    if cov.total_degree < 1:
        out.append(Violation(eid, "total-degree", f"{cov.total_degree} < 1"))
    seen = [a.source_cusp for a in cov.cusp_assignments]
    for cusp_id in src.cusp_ids():
        if seen.count(cusp_id) != 1:
            out.append(Violation(eid, "cusp-assigned-once", f"source cusp {cusp_id}"))
    for a in cov.cusp_assignments:
        if a.source_cusp not in src.cusp_ids() or a.target_cusp not in dst.cusp_ids():
            out.append(Violation(eid, "cusp-resolves", f"{a.source_cusp} -> {a.target_cusp}"))
            continue
        c_src = src.cusp(a.source_cusp)
        c_dst = dst.cusp(a.target_cusp)
        if a.psi.det() <= 0:
            out.append(
                Violation(eid, "orientation", f"det(psi) = {a.psi.det()} at {a.source_cusp}")
            )
            continue
        image = c_src.lattice.transform(a.psi)
        if not c_dst.lattice.contains_lattice(image):
            out.append(
                Violation(eid, "lattice-containment", f"psi(lattice) not inside target at {a.source_cusp}")
            )
        if not conjugates_into(a.psi, c_src.symmetry, c_dst.symmetry):
            out.append(
                Violation(eid, "symmetry-conjugation", f"psi does not conjugate F at {a.source_cusp}")
            )
    # covering degrees at the cusps over each target cusp must sum to the total
    if not any(v.entry == eid for v in out):
        for c_dst in dst.cusps:
            total = Fraction(0)
            for a in cov.cusp_assignments:
                if a.target_cusp == c_dst.cusp_id:
                    total += cusp_cover_degree(a.psi, src.cusp(a.source_cusp), c_dst)
            if total != cov.total_degree:
                out.append(
                    Violation(
                        eid,
                        "degree-consistency",
                        f"cusp {c_dst.cusp_id}: degrees sum to {total}, total is {cov.total_degree}",
                    )
                )


def validate_catalog(cat: OrbifoldCatalog) -> list[Violation]:
    """Check every declared invariant; an empty report means consistent."""
    out: list[Violation] = []
    for oid, entry in sorted(cat.orbifolds.items()):
        if entry.orbifold_id != oid:
            out.append(Violation(oid, "key-mismatch", entry.orbifold_id))
        ids = entry.cusp_ids()
        if len(set(ids)) != len(ids):
            out.append(Violation(oid, "cusp-ids-unique", ",".join(ids)))
        for cusp in entry.cusps:
            _check_cusp(oid, cusp, out)
        for key, covering_id in entry.minimal_quotients:
            if covering_id not in cat.coverings and not covering_id.startswith(IDENTITY_PREFIX):
                out.append(Violation(oid, "quotient-resolves", covering_id))
                continue
            cov = cat.covering(covering_id)
            if cov.source != oid:
                out.append(Violation(oid, "quotient-source", f"{covering_id} has source {cov.source}"))
            target = cat.orbifolds.get(cov.target)
            if target is None or not target.is_minimal:
                out.append(Violation(oid, "quotient-target-minimal", covering_id))
            if entry.is_minimal and dict(key) == entry.own_degrees():
                if cov.total_degree != 1 or cov.source != cov.target:
                    out.append(Violation(oid, "minimal-identity-quotient", covering_id))
    for cid, cov in sorted(cat.coverings.items()):
        if cov.covering_id != cid:
            out.append(Violation(cid, "key-mismatch", cov.covering_id))
        _check_covering(cat, cov, out)
    return out


def compose_coverings(first: CoveringEntry, second: CoveringEntry) -> CoveringEntry:
    """Covering obtained by following `first` and then `second`."""
    if first.target != second.source:
        raise MismatchedEnds(
            f"cannot compose: {first.covering_id} targets {first.target}, "
            f"{second.covering_id} starts at {second.source}"
        )
    assignments = []
    for a in first.cusp_assignments:
        b = second.assignment_for(a.target_cusp)
        assignments.append(CuspAssignment(a.source_cusp, b.target_cusp, b.psi @ a.psi))
    return CoveringEntry(
        covering_id=f"{first.covering_id};{second.covering_id}",
        source=first.source,
        target=second.target,
        total_degree=first.total_degree * second.total_degree,
        cusp_assignments=tuple(assignments),
    )


def minimal_quotient_of(
    cat: OrbifoldCatalog, orbifold_id: str, targets: dict[str, int]
) -> CoveringEntry:
    """The declared covering onto the minimal orbifold for a target-degree
    assignment.  Targets must be multiples of the cusp degrees within
    {1,2,3,4,6}; missing declarations are a hard data error."""
    entry = cat.orbifold(orbifold_id)
    degrees = entry.own_degrees()
    if set(targets) != set(degrees):
        raise InvalidTarget(
            f"{orbifold_id}: targets must cover exactly the cusps {sorted(degrees)}"
        )
    for cusp_id, target in sorted(targets.items()):
        if target not in ALLOWED_DEGREES:
            raise InvalidTarget(f"{orbifold_id}: target {target} at {cusp_id} not allowed")
        if target % degrees[cusp_id] != 0:
            raise InvalidTarget(
                f"{orbifold_id}: target {target} at {cusp_id} is not a multiple of "
                f"degree {degrees[cusp_id]}"
            )
    declared = entry.quotient_for(targets)
    if declared is not None:
        return cat.covering(declared)
    if entry.is_minimal and targets == degrees:
        return identity_covering(entry)
    raise NotDeclared(
        f"{orbifold_id}: no minimal quotient declared for targets {sorted(targets.items())}"
    )
