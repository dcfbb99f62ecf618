"""Exception types raised across the package."""


class HeatSymError(Exception):
    """Base class for all package errors."""


class UnknownCase(HeatSymError, ValueError):
    """The (K, Q) combination is not one of the classified cases."""


class DomainError(HeatSymError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class NonpositiveDensity(DomainError):
    """A density or temperature that must be positive is not."""


class FlowBlowup(HeatSymError, ArithmeticError):
    """A Lie flow left the overflow guard before reaching the requested parameter."""


class LayerSkew(HeatSymError):
    """Flowed nodes of one stencil layer no longer share a common time."""


class InadmissibleImage(DomainError):
    """A point transformation left its domain of definition."""


class SolverDiverged(HeatSymError, RuntimeError):
    """An implicit nonlinear solve failed to converge."""


class StabilityBreach(HeatSymError, RuntimeError):
    """A step produced crossing nodes, nonpositive values or a non-finite result."""


class MissingMassGrid(HeatSymError, ValueError):
    """A mass-coordinate quantity was requested on a layer without s data."""


class LayerMismatch(HeatSymError, ValueError):
    """Two layers that must share a grid structure do not."""
