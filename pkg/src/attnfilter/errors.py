"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Array dimensions violate an operation's contract."""


class FormatError(ValueError):
    """A file is malformed or inconsistent with the active configuration."""


class InputError(ValueError):
    """A required input is missing or incompatible."""


class EmptyTokenSetError(ValueError):
    """Filtering removed every token; the encoder needs at least one."""
