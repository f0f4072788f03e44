"""Exception hierarchy shared by every module."""


class NumericalError(RuntimeError):
    """A computation failed for numerical reasons (non-convergence, overflow)."""


class RankDeficiencyError(NumericalError):
    """A state that must be full rank has an eigenvalue below the floor."""


class FlowDegeneracyError(RankDeficiencyError):
    """The evolved state left the full-rank manifold.

    ``time`` holds the flow parameter at which this was detected.
    """

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class GibbsOverflowError(NumericalError):
    pass


class DomainError(ValueError):
    """Input outside the domain of a matrix function."""


class HermiticityError(ValueError):
    pass


class PictureError(ValueError):
    """Tangent vector used in the wrong picture or violating its constraint."""


class ChannelError(ValueError):
    """Kraus set is not trace preserving."""


class LatticeError(ValueError):
    pass
