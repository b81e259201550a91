"""Error taxonomy shared by all compass modules."""


class CompassError(Exception):
    """Base class for all errors raised by compass."""


class FormatError(CompassError):
    """An input document is malformed (bad JSON, bad field, bad value)."""


class AnalysisError(CompassError):
    """Inputs parse but are mutually inconsistent (skew, unknown identifiers)."""


class InternalError(CompassError):
    """An internal invariant was violated; indicates a bug, not bad input."""
