"""Exception types shared across the package.

Validation routines report violations as data and never raise; the
exceptions here are for genuine precondition failures and bad inputs.
"""


class QiGraphError(Exception):
    """Base class for all package errors."""


class DegenerateLattice(QiGraphError):
    """Generators span a line or a point instead of the full plane."""


class SingularMatrix(QiGraphError):
    """A matrix that must be invertible has determinant zero."""


class MismatchedEnds(QiGraphError):
    """Covering or morphism composition with incompatible ends."""


class InvalidTarget(QiGraphError):
    """A cusp degree target is not a multiple of the degree or not in {1,2,3,4,6}."""


class NotDeclared(QiGraphError):
    """The catalog does not declare a required covering or quotient."""


class UnknownEdge(QiGraphError):
    """Edge reference does not resolve in the graph."""


class UnknownVertex(QiGraphError):
    """Vertex id does not resolve in the graph."""


class UnpairedCusp(QiGraphError):
    """A gluing manifest leaves a cusp unpaired or pairs one twice."""


class NonIntegralGluing(QiGraphError):
    """A gluing matrix is not an isomorphism of the two cusp lattices."""


class InvalidGraph(QiGraphError):
    """An operation received a graph that fails validation."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class Unbalanced(QiGraphError):
    """Realization requires a balanced graph."""


class CoverMismatch(QiGraphError):
    """A supplied cover does not satisfy the per-edge sublattice property."""


class LatticeNotContained(QiGraphError):
    """A plan sublattice is not contained in the edge intersection lattice."""


class TooLarge(QiGraphError):
    """Instance exceeds the size bound of a brute-force routine."""


class BaseNotTree(QiGraphError):
    """Common-cover search requires the shared base quotient to be a tree."""


class IncompatibleRefinement(QiGraphError):
    """Degree refinements of the two graphs do not match."""


class SchemaError(QiGraphError):
    """A document violates the schema; carries a JSON path."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.reason = message


class VersionError(QiGraphError):
    """Unrecognized document format version."""
