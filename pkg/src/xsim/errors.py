"""Exception types shared across the toolkit."""


class XsimError(ValueError):
    """Base class for all toolkit errors."""


class ValidationError(XsimError):
    """An in-memory object violates its invariants."""


class FormatError(XsimError):
    """A file does not conform to the XEMB/XMAT/manifest contract."""
