"""Exact rank-2 rational linear algebra.

Everything downstream (edge labels, cusp lattices, covering maps) is built
from three value types: 2x2 rational matrices, rank-2 lattices in the
rational plane stored with a canonical Hermite-form basis, and finite
cyclic symmetry groups of such lattices.  All arithmetic is exact; no
floating point enters anywhere in this module.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Sequence

from .errors import DegenerateLattice, SingularMatrix

Vec2 = tuple[Fraction, Fraction]


def frac(x) -> Fraction:
    """Coerce ints, strings like '3/4', and Fractions to Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"not an exact rational: {x!r}")


def vec2(v) -> Vec2:
    a, b = v
    return (frac(a), frac(b))


@dataclass(frozen=True)
class Mat2:
    """A 2x2 rational matrix, row-major [[a, b], [c, d]]."""

    a: Fraction
    b: Fraction
    c: Fraction
    d: Fraction

    @staticmethod
    def of(a, b, c, d) -> "Mat2":
        return Mat2(frac(a), frac(b), frac(c), frac(d))

    @staticmethod
    def from_rows(rows) -> "Mat2":
        (a, b), (c, d) = rows
        return Mat2.of(a, b, c, d)

    @staticmethod
    def from_columns(u, v) -> "Mat2":
        return Mat2.of(u[0], v[0], u[1], v[1])

    @staticmethod
    def identity() -> "Mat2":
        return _IDENTITY

    @staticmethod
    def scalar(s) -> "Mat2":
        s = frac(s)
        return Mat2(s, Fraction(0), Fraction(0), s)

    def entries(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        """Row-major entry tuple; also the total order key for cosets."""
        return (self.a, self.b, self.c, self.d)

    def columns(self) -> tuple[Vec2, Vec2]:
        return ((self.a, self.c), (self.b, self.d))

    def det(self) -> Fraction:
        return self.a * self.d - self.b * self.c

    def is_invertible(self) -> bool:
        return self.det() != 0

    def inv(self) -> "Mat2":
        det = self.det()
        if det == 0:
            raise SingularMatrix(f"singular matrix {self}")
        return Mat2(self.d / det, -self.b / det, -self.c / det, self.a / det)

    def __matmul__(self, other: "Mat2") -> "Mat2":
        return Mat2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def __neg__(self) -> "Mat2":
        return Mat2(-self.a, -self.b, -self.c, -self.d)

    def apply(self, v: Vec2) -> Vec2:
        x, y = frac(v[0]), frac(v[1])
        return (self.a * x + self.b * y, self.c * x + self.d * y)

    def pow(self, k: int) -> "Mat2":
        if k < 0:
            return self.inv().pow(-k)
        out = Mat2.identity()
        base = self
        while k:
            if k & 1:
                out = out @ base
            base = base @ base
            k >>= 1
        return out

    def is_integral(self) -> bool:
        return all(e.denominator == 1 for e in self.entries())

    def __str__(self) -> str:
        return f"[[{self.a},{self.b}],[{self.c},{self.d}]]"


_IDENTITY = Mat2(Fraction(1), Fraction(0), Fraction(0), Fraction(1))


def _ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, u, v) with g = gcd(a, b) >= 0 and u*a + v*b = g."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def _hnf_columns(cols: Sequence[tuple[int, int]]) -> tuple[int, int, int]:
    """Hermite form of the integer column span: columns (a, c), (0, d).

    a > 0, d > 0, 0 <= c < d; this triple is unique for the lattice, so
    equality of spans is equality of triples.
    """
    a, ya = 0, 0
    rest: list[int] = []
    for x, y in cols:
        if x == 0:
            rest.append(y)
            continue
        g, u, v = _ext_gcd(a, x)
        # the combination eliminating the x-coordinate stays in the span
        rest.append((a // g) * y - (x // g) * ya)
        a, ya = g, u * ya + v * y
    d = 0
    for y in rest:
        d = gcd(d, y)
    if a == 0 or d == 0:
        raise DegenerateLattice("generators do not span the plane")
    c = ya % d
    return a, c, d


@dataclass(frozen=True)
class Lattice2:
    """A full-rank lattice in Q^2.

    The stored basis matrix has the lattice generators as its columns and
    is in canonical Hermite form: columns (a, c) and (0, d) after clearing
    denominators, with a > 0, d > 0 and 0 <= c < d.  Two generating sets
    of the same lattice therefore produce byte-equal stored bases.
    """

    basis: Mat2

    @staticmethod
    def standard() -> "Lattice2":
        return Lattice2(Mat2.identity())

    @staticmethod
    def from_generators(generators: Iterable) -> "Lattice2":
        return canonical_lattice(generators)

    def determinant(self) -> Fraction:
        """Positive covolume of the lattice."""
        return abs(self.basis.det())

    def contains_vector(self, v) -> bool:
        x, y = self.basis.inv().apply(vec2(v))
        return x.denominator == 1 and y.denominator == 1

    def contains_lattice(self, other: "Lattice2") -> bool:
        return (self.basis.inv() @ other.basis).is_integral()

    def transform(self, m: Mat2) -> "Lattice2":
        """Image lattice m(L)."""
        if m.det() == 0:
            raise SingularMatrix("cannot transform a lattice by a singular matrix")
        c1, c2 = (m @ self.basis).columns()
        return canonical_lattice([c1, c2])

    def scale(self, s) -> "Lattice2":
        return self.transform(Mat2.scalar(s))

    def dual(self) -> "Lattice2":
        """Lattice of vectors with integral pairing against self."""
        b = self.basis
        inv_t = Mat2(b.a, b.c, b.b, b.d).inv()
        c1, c2 = inv_t.columns()
        return canonical_lattice([c1, c2])

    def sublattices_of_index(self, n: int) -> list["Lattice2"]:
        """All sublattices of index exactly n (HNF enumeration)."""
        out = []
        for a in range(1, n + 1):
            if n % a:
                continue
            d = n // a
            for c in range(d):
                m = Mat2.of(a, 0, c, d)
                cols = (self.basis @ m).columns()
                out.append(canonical_lattice(cols))
        return out

    def __str__(self) -> str:
        return f"Lattice{self.basis}"


def canonical_lattice(generators: Iterable) -> Lattice2:
    """Canonical Hermite-form basis of the lattice the generators span.

    Raises DegenerateLattice when the rational span is not the full plane.
    """
    vecs = [vec2(g) for g in generators]
    if len(vecs) < 2:
        raise DegenerateLattice("need at least two generators")
    denoms = [f.denominator for v in vecs for f in v]
    s = lcm(*denoms) if denoms else 1
    cols = [(int(v[0] * s), int(v[1] * s)) for v in vecs]
    a, c, d = _hnf_columns(cols)
    basis = Mat2(Fraction(a, s), Fraction(0), Fraction(c, s), Fraction(d, s))
    return Lattice2(basis)


def lattice_sum(a: Lattice2, b: Lattice2) -> Lattice2:
    c1, c2 = a.basis.columns()
    c3, c4 = b.basis.columns()
    return canonical_lattice([c1, c2, c3, c4])


def lattice_intersect(a: Lattice2, b: Lattice2) -> Lattice2:
    """Largest lattice contained in both, via duality: (A cap B)* = A* + B*."""
    return lattice_sum(a.dual(), b.dual()).dual()


def lattice_index(sub: Lattice2, sup: Lattice2) -> tuple[Fraction, bool]:
    """Covolume ratio |det sub| / |det sup| and whether sub is contained in sup.

    When the flag is true the ratio is a positive integer, the index of the
    subgroup sub in sup.
    """
    ratio = sub.determinant() / sup.determinant()
    return ratio, sup.contains_lattice(sub)


@dataclass(frozen=True)
class CyclicSymmetry:
    """A finite cyclic group of lattice automorphisms, given by a generator.

    Valid orders are 1, 2, 3, 4 and 6 (the rotation orders of plane
    lattices); the generator must have determinant 1 and exact order equal
    to `order`.  Use `violations` to check a constructed value.
    """

    order: int
    generator: Mat2

    ALLOWED_ORDERS = (1, 2, 3, 4, 6)

    @staticmethod
    def trivial() -> "CyclicSymmetry":
        return CyclicSymmetry(1, Mat2.identity())

    def elements(self) -> list[Mat2]:
        out = [Mat2.identity()]
        for _ in range(self.order - 1):
            out.append(out[-1] @ self.generator)
        return out

    def contains(self, m: Mat2) -> bool:
        return any(m == g for g in self.elements())

    def violations(self, lattice: Lattice2 | None = None) -> list[str]:
        out = []
        if self.order not in self.ALLOWED_ORDERS:
            out.append(f"order {self.order} not in {self.ALLOWED_ORDERS}")
            return out
        if self.generator.det() != 1:
            out.append(f"generator determinant {self.generator.det()} != 1")
        p = Mat2.identity()
        for k in range(1, self.order + 1):
            p = p @ self.generator
            if p == Mat2.identity():
                if k != self.order:
                    out.append(f"generator has order {k}, declared {self.order}")
                break
        else:
            out.append(f"generator^{self.order} is not the identity")
        if lattice is not None and not out:
            img = lattice.transform(self.generator)
            if img != lattice:
                out.append("generator does not map the lattice onto itself")
        return out


def coset_canonical(label: Mat2, f: CyclicSymmetry) -> Mat2:
    """Canonical representative of the right coset label * <generator>.

    Minimal under the lexicographic order on row-major entries; two labels
    are coset-equal iff their canonical forms are identical.
    """
    best = None
    rep = label
    for _ in range(f.order):
        if best is None or rep.entries() < best.entries():
            best = rep
        rep = rep @ f.generator
    return best


def conjugates_into(label: Mat2, f_src: CyclicSymmetry, f_dst: CyclicSymmetry) -> bool:
    """True iff label * g_src * label^-1 is a power of g_dst."""
    if label.det() == 0:
        raise SingularMatrix("label must be invertible")
    conj = label @ f_src.generator @ label.inv()
    return f_dst.contains(conj)


# Fixed generators of the standard-lattice rotation groups, used by
# catalogs and fixtures.  All preserve Z^2 and have determinant 1.
ROTATION_GENERATORS = {
    1: Mat2.identity(),
    2: Mat2.of(-1, 0, 0, -1),
    3: Mat2.of(0, -1, 1, -1),
    4: Mat2.of(0, -1, 1, 0),
    6: Mat2.of(0, -1, 1, 1),
}


def standard_symmetry(order: int) -> CyclicSymmetry:
    return CyclicSymmetry(order, ROTATION_GENERATORS[order])
