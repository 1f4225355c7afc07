"""Exception types shared across the package."""


class HatError(Exception):
    """Base class for every error raised by hatmem."""


class InvalidParameterError(HatError, ValueError):
    """A caller-supplied argument violates a precondition."""


class ContractViolationError(HatError):
    """An operation was invoked on an object that cannot support it."""


class NotFoundError(HatError, LookupError):
    """Lookup of a node, session, or file failed."""


class DocumentParseError(HatError, ValueError):
    """A persisted document or input record is malformed."""


class ConfigurationError(HatError):
    """Required configuration (credentials, gold data, ...) is missing."""


class RemoteUnavailableError(HatError):
    """The chat endpoint kept failing after all retries."""


class ProtocolError(HatError):
    """The chat endpoint replied with a body we cannot interpret."""


class AggregationUnavailableError(HatError):
    """Aggregation needed a remote reply that never arrived."""


class TraversalUnavailableError(HatError):
    """The traversal agent or oracle needed a remote reply that never arrived."""


class GenerationUnavailableError(HatError):
    """Response generation needed a remote reply that never arrived."""


class ActionParseError(HatError):
    """An agent reply contained no recognizable action token."""
