"""Exception types shared across the package."""


class FdsecError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(FdsecError):
    """An array argument has the wrong shape or an inconsistent dimension."""

    def __init__(self, what, expected, got):
        self.what = what
        self.expected = expected
        self.got = got
        super().__init__(f"{what}: expected {expected}, got {got}")


class DegenerateChannelError(FdsecError):
    """Channel vectors do not span a usable subspace."""


class BisectionError(FdsecError):
    """The dual-power bisection failed to bracket or converge."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = dict(diagnostics or {})
        if self.diagnostics:
            detail = ", ".join(f"{k}={v}" for k, v in self.diagnostics.items())
            message = f"{message} ({detail})"
        super().__init__(message)


class InfeasibleError(FdsecError):
    """A conic program has no feasible point at the requested settings."""


class GuardError(FdsecError):
    """A returned solution violates a structural guarantee it must satisfy.

    Raised by consistency guards; indicates a solver bug or a broken
    assumption, never a user error.
    """


class ConfigError(FdsecError):
    """Config file missing, malformed, or internally inconsistent."""
