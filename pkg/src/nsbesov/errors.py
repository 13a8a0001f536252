"""Exception hierarchy shared by all modules."""


class NSBesovError(Exception):
    """Base class for every error raised by this package."""


class GridError(NSBesovError, ValueError):
    """Invalid grid parameters or mismatched grids."""


class SymbolError(NSBesovError, ValueError):
    """A symbol is non-finite at a node where it is needed."""


class AliasingError(NSBesovError):
    """A field is not band-limited within its grid (with the required margin)."""


class SingularityError(NSBesovError):
    """A singular multiplier met significant mass at the origin node."""


class HypothesisError(NSBesovError, ValueError):
    """Input violates a hypothesis of the construction being checked."""


class BudgetError(NSBesovError):
    """A resource budget (active nodes, frequency range) would be exceeded."""


class ConvergenceError(NSBesovError):
    """A quadrature failed its refinement self-consistency check."""
