"""Exception types shared across the package.

Parameter problems raise plain ``ValueError``; the classes below mark
the two failure families the CLI distinguishes: an analysis that cannot
produce a result from valid inputs, and a numerical invariant that was
violated during a computation.
"""


class AnalysisError(RuntimeError):
    """An analysis step could not produce a result (e.g. no plateau
    reached, front fit rejected).  Inputs were valid; the data did not
    support the requested measurement."""


class NumericalInvariantError(RuntimeError):
    """A conserved quantity or structural invariant was violated beyond
    tolerance (non-unitary propagator, block eigenvalue outside [0, 1],
    ...).  Indicates a numerics problem, not a modelling choice."""


class DegenerateFermiLevelError(NumericalInvariantError):
    """Ground-state occupation is ambiguous: the single-particle gap at
    the Fermi level is below tolerance."""
