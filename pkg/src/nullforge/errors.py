"""Exception taxonomy shared across the package.

Every gate failure raises a dedicated class so pipelines can tell a bad
input apart from an exhausted search budget or a genuinely degenerate
geometric configuration.
"""


class NullforgeError(Exception):
    """Base class for all package errors."""


class DomainError(NullforgeError):
    """Evaluation outside the domain of definition (e.g. z=0 with a pole)."""


class DimensionError(NullforgeError):
    """Mismatched ambient dimensions."""


class ResidueError(NullforgeError):
    """A zeta^{-1} coefficient survives where an antiderivative is required."""


class ApproximationError(NullforgeError):
    """Requested tolerance unreachable at the configured window/budget."""


class FitError(ApproximationError):
    """A sampled function could not be refit to a coefficient window."""


class LiftError(NullforgeError):
    """Square-root lift failed: branch point proximity or odd monodromy."""


class DegenerateFrameError(NullforgeError):
    """Frame triple with |Theta| pairing too close to zero."""


class NondegeneracyError(NullforgeError):
    """Direction vectors pair degenerately with the center disc derivative."""


class NoLiftError(LiftError):
    """The attached-disc family hits the branch point of the spinor map."""


class GeneralPositionError(NullforgeError):
    """Every candidate on the search grid produced a vanishing lift."""


class BudgetExhausted(NullforgeError):
    """Search schedule exhausted before the target tolerance was met.

    Carries ``best`` (best achieved object, may be None) and ``trace``.
    """

    def __init__(self, msg, best=None, trace=None):
        super().__init__(msg)
        self.best = best
        self.trace = trace


class PeriodError(NullforgeError):
    """Two integration paths disagree beyond tolerance."""


class OscillationError(NullforgeError):
    """Requested per-arc oscillation finer than the grid can resolve."""


class GainShortfall(NullforgeError):
    """Measured intrinsic-distance gain fell below the configured floor.

    Carries the measured gain and the escape path that realized it.
    """

    def __init__(self, msg, gain=None, path=None):
        super().__init__(msg)
        self.gain = gain
        self.path = path


class CurvatureError(NullforgeError):
    """Parallel-domain offset beyond the focal distance 1/kappa_max."""


class GeometryError(NullforgeError):
    """Cap/tiling construction failed; retile finer."""


class ConfigError(NullforgeError):
    """Pipeline configuration failed validation; message names the field."""
