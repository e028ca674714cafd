"""Exception hierarchy shared by all ridgecut modules."""


class RidgecutError(Exception):
    """Base class for every error raised by the package."""


class EmptyResult(RidgecutError):
    """A clip removed the whole body (the kept part has empty interior)."""


class DegenerateCap(RidgecutError):
    """The cutting plane touches the body along a vertex or an edge only."""


class NoIntersection(RidgecutError):
    """The plane misses the body."""


class DegenerateInput(RidgecutError):
    """Points are coplanar (or fewer than four), so no 3D hull exists."""


class BadFrame(RidgecutError):
    """The ridge frame does not match the body's geometry at r0."""

    def __init__(self, message, classification=None):
        super().__init__(message)
        self.classification = classification


class TinyCap(RidgecutError):
    """The cut section is too small to be resolved at the working tolerance."""


class NonConvexBrokenLine(RidgecutError):
    """The oscillating profile is not convex for the requested start index."""


class EndpointMassMissing(RidgecutError):
    """An arc measure lacks an atom at one of the arc endpoints."""


class N0NotInterior(RidgecutError):
    """The moment direction of an arc measure is not interior to the arc."""


class CapMiss(RidgecutError):
    """The extrusion has no bounded cap at z = 1."""


class PlaneBelowBase(RidgecutError):
    """The cutting plane dips below z = 0 somewhere over the domain."""


class Infeasible(RidgecutError):
    """A linear program has no feasible point."""


class Unbounded(RidgecutError):
    """A linear program is unbounded below."""


class DomainError(RidgecutError, ValueError):
    """An argument lies outside the documented domain."""
