"""Exception types shared across the package."""


class BdlabError(Exception):
    """Base class for failures raised by simulation components."""


class ConfigError(BdlabError):
    """Invalid experiment configuration.

    Carries the full list of violations so a user can fix everything in
    one round trip instead of replaying the parser error by error.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class StabilityError(BdlabError):
    """Time step exceeds a stability bound (no silent clipping)."""


class PositivityError(BdlabError):
    """A density update produced a negative coefficient or value."""


class NumericsError(BdlabError):
    """Non-finite values appeared during time integration."""


class SnapshotError(BdlabError):
    """A snapshot file is malformed or does not match its grid."""


class DiagnosticsError(BdlabError):
    """A monitored discrete estimate failed its asserted bound."""
