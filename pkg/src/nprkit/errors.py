"""Exception taxonomy shared by every nprkit module.

The CLI maps these onto exit codes: input-side problems (bad arguments,
unreadable or unsupported files, degenerate inputs) exit 1, runtime
failures inside a stage (non-convergence, empty segmentation) exit 2.
"""


class NprError(Exception):
    """Base class for all nprkit errors."""


class InvalidInputError(NprError):
    """Arguments violate a precondition (shape, range, missing data)."""


class DegenerateInputError(NprError):
    """Input is technically valid but carries no usable signal."""


class DegenerateResultError(NprError):
    """A stage produced an empty or unusable result."""


class NumericalError(NprError):
    """An iterative solve failed to reach its tolerance."""


class UnsupportedFormatError(NprError):
    """File format outside the supported 8-bit PNG / PGM subset."""
