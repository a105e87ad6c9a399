"""Exception types shared across the package."""


class CjsrError(Exception):
    """Base class for all errors raised by this package."""


class AutomatonError(CjsrError):
    """A switching graph violates a structural invariant."""


class NodeOutOfRange(AutomatonError):
    pass


class LabelOutOfRange(AutomatonError):
    pass


class DuplicateEdge(AutomatonError):
    pass


class DanglingNode(AutomatonError):
    """A node with no outgoing edge; every switching sequence must be extendable."""


class UnusedLabel(AutomatonError):
    """A label with no edge; the mode could never be activated."""


class ConnectivityWarning(UserWarning):
    """Non-fatal: the graph is not strongly connected."""


class ExplosionGuard(CjsrError):
    """Path enumeration would exceed the configured cap."""

    def __init__(self, count, cap):
        self.count = count
        self.cap = cap
        super().__init__(
            f"enumeration needs {count} paths, above the cap of {cap}; "
            "raise the cap explicitly to proceed"
        )


class DimensionMismatch(CjsrError):
    pass


class NotPositiveDefinite(CjsrError):
    pass


class MissingPathKey(CjsrError):
    """A path-indexed certificate does not cover exactly the required keys."""


class VerificationFailure(CjsrError):
    """A constructed certificate failed its independent re-check."""


class InitFailure(CjsrError):
    """A bisection bracket could not be certified; indicates a numerical bug."""


class SystemFileError(CjsrError):
    """A system description file could not be parsed or validated."""
