"""Exception types shared across the toolkit.

Numerical failure modes get their own classes so callers (and the CLI exit
code table) can tell a malformed input from a genuine geometric obstruction.
"""

__all__ = [
    "LoopFiberError",
    "RankDeficiency",
    "IntersectionDimension",
    "UnitarityViolation",
    "PhaseStepTooLarge",
    "NonAntiHermitianSample",
    "PeriodicityDefect",
    "NonConstantReducedTransition",
]


class LoopFiberError(Exception):
    """Base class for all toolkit-specific errors."""


class RankDeficiency(LoopFiberError):
    """A generator family fails to span the dimension it claims."""


class IntersectionDimension(LoopFiberError):
    """The shift-complement intersection has the wrong dimension.

    Constructing a unitary loop from a subspace needs the intersection
    W cap (zW)^perp to have dimension exactly n.  Anything else means the
    subspace does not come from a loop of invertible matrices.
    """

    def __init__(self, got, expected):
        self.got = got
        self.expected = expected
        super().__init__(
            f"intersection dimension {got}, expected {expected}")


class UnitarityViolation(LoopFiberError):
    """A matrix loop fails pointwise unitarity beyond tolerance."""

    def __init__(self, defect, theta=None):
        self.defect = defect
        self.theta = theta
        where = "" if theta is None else f" at theta={theta:.6f}"
        super().__init__(f"pointwise unitarity defect {defect:.3e}{where}")


class PhaseStepTooLarge(LoopFiberError):
    """Phase accumulation cannot resolve a winding number.

    Raised when successive grid refinement still leaves a phase step of
    pi/2 or more between samples, or when a determinant passes too close
    to zero for its phase to mean anything.
    """


class NonAntiHermitianSample(LoopFiberError):
    """A connection form returned a sample that is not anti-Hermitian."""

    def __init__(self, defect, t=None):
        self.defect = defect
        self.t = t
        where = "" if t is None else f" at t={t:.6f}"
        super().__init__(f"anti-Hermitian defect {defect:.3e}{where}")


class PeriodicityDefect(LoopFiberError):
    """An untwisted section failed to close up over one period."""

    def __init__(self, residual):
        self.residual = residual
        super().__init__(f"periodicity residual {residual:.3e}")


class NonConstantReducedTransition(LoopFiberError):
    """A reduced transition retained genuine loop dependence.

    Carries the offending edge, the measured variation, and the total
    determinant winding of the input transitions, which is the obstruction
    that forbids a constant reduction.
    """

    def __init__(self, edge, variation, winding_sum=None):
        self.edge = edge
        self.variation = variation
        self.winding_sum = winding_sum
        msg = f"reduced transition on edge {edge} varies by {variation:.3e}"
        if winding_sum is not None:
            msg += f" (total det winding {winding_sum})"
        super().__init__(msg)
