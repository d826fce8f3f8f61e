"""Shared exception types."""


class UnknownPerturbationError(KeyError):
    """Requested kind is not in the catalog."""


class UnsupportedPerturbationError(ValueError):
    """Requested kind exists in the literature but is deliberately excluded."""


class GenerationFailedError(RuntimeError):
    """Road generation exhausted its retry budget."""

    def __init__(self, seed, attempts):
        super().__init__(f"road generation failed after {attempts} attempts (seed={seed})")
        self.seed = seed
        self.attempts = attempts


class UndefinedMetricError(ValueError):
    """Metric has no defined value (e.g. mean IoU with no present classes)."""


class InvalidDatasetError(ValueError):
    """Dataset images and labels do not line up."""


class ProtocolError(RuntimeError):
    """Malformed or out-of-order wire message."""


class HandshakeError(ProtocolError):
    """Version or role negotiation failed."""


class AgentError(RuntimeError):
    """Agent failed, disconnected, or timed out during an episode."""
