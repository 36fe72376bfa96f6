"""Error types shared by all modules."""


class MaLabError(Exception):
    """Base class for all package errors."""


class InvalidInput(MaLabError):
    """Malformed or out-of-range arguments."""


class PreconditionViolated(MaLabError):
    """Arguments are well formed but violate an operation's hypothesis."""


class NotOmegaPsh(MaLabError):
    """A potential fails the convexity/slope constraints of the model."""


class NotSolvableInModel(MaLabError):
    """The target measure cannot be realized within the model's slope caps."""
