"""Exception hierarchy.

Input-side problems (bad files, bad configs) derive from :class:`InputError`
so the command line can map them onto exit code 2; everything else raised
while processing maps onto exit code 3.
"""


class AppearError(Exception):
    """Base class for all pipeline errors."""


class InputError(AppearError):
    """Problem with user-supplied files or settings."""


class ParseError(InputError):
    pass


class FormatError(InputError):
    pass


class IoError(InputError, OSError):
    pass


class ConfigError(InputError):
    pass


class ArgumentError(AppearError, ValueError):
    pass


class BoundsError(AppearError, IndexError):
    pass


class EmptyDataError(AppearError):
    pass


class InsufficientDataError(AppearError):
    pass


class TriggerCountError(AppearError):
    def __init__(self, message, remainder):
        super().__init__(message)
        self.remainder = remainder


class InsufficientEpochsError(AppearError):
    pass


class InsufficientEventsError(AppearError):
    pass


class NoPeaksError(AppearError):
    pass


class NoCandidateError(AppearError):
    pass


class UnreliableError(AppearError):
    pass


class ExcessiveArtifactError(AppearError):
    pass


class SingularMatrixError(AppearError):
    pass


class LayoutError(AppearError):
    pass


class DegenerateError(AppearError):
    pass
