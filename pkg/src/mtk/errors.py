"""Exception hierarchy.

Two families matter to callers: `InvalidInput` (bad parameters or files,
CLI exit code 2) and `NumericalFailure` (a computation that cannot proceed,
CLI exit code 3).
"""


class MTKError(Exception):
    """Base class for all toolkit errors."""


class InvalidInput(MTKError, ValueError):
    pass


class NumericalFailure(MTKError, ArithmeticError):
    pass


# units / traveling wave
class SupersonicFrame(InvalidInput):
    """Kink speed at or above the sound velocity v0."""


class DegeneratePotential(InvalidInput):
    """On-site potential is not a double well (A <= 0 or B <= 0)."""


class NoKink(InvalidInput):
    """Parameters admit no bounded front."""


class ComplexRoots(NoKink):
    """Drive too strong: the force cubic has a single real root."""


class DegenerateRoots(NumericalFailure):
    """The two connected vacua coincide; the front width diverges."""


class ZeroVelocity(InvalidInput):
    pass


# lattice
class UnderResolved(InvalidInput):
    """Kink narrower than four lattice spacings."""


class CFLViolation(InvalidInput):
    pass


class NonFinite(NumericalFailure):
    pass


class NoFront(NumericalFailure):
    pass


class MultipleCrossings(NumericalFailure):
    pass


class InsufficientSamples(NumericalFailure):
    pass


# tdva
class SymmetryRestored(NoKink):
    """Smearing width large enough that the smeared double well disappears."""


class SingularKernel(NumericalFailure):
    pass


# cavity
class ZeroSeparation(InvalidInput):
    pass


class DivergentCollapse(NumericalFailure):
    """Interaction phase sits on a node of sin^2, so the collapse time diverges."""


# scenario files
class ScenarioParseError(InvalidInput):
    pass


class ScenarioValidationError(InvalidInput):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
