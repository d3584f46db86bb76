"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class CapacityError(RuntimeError):
    """A computation would exceed a configured size or enumeration cap."""


class StructureError(ValueError):
    """A group-theoretic structure required by a layout does not exist."""


class ConstructionError(ValueError):
    """A code specification does not produce a valid CSS code."""


class AlistParseError(ValueError):
    """Malformed alist text. ``lineno`` is 1-based."""

    def __init__(self, message: str, lineno: int):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class CollisionError(RuntimeError):
    """A move step would place two atoms in one trap site."""


class NotInSubgroup(Exception):
    """Raised by the abelian compiler when a transition cannot be realized
    as rigid shifts; callers fall back to a more general strategy."""


class InfeasibleSyndrome(ValueError):
    """The syndrome is not in the column space of the check matrix."""
