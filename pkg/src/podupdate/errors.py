"""Exception hierarchy shared across the package."""


class PodError(Exception):
    """Base class for every error raised by podupdate."""


class SerializationError(PodError, ValueError):
    """Bytes do not decode to a valid element or structure."""


class PolicyError(PodError, ValueError):
    """Malformed policy formula or access structure."""


class CapacityError(PodError, ValueError):
    """Attribute set too large for the public parameters."""


class PolicyUnsatisfiedError(PodError):
    """The attribute set does not satisfy the signer's access structure."""


class KeyGenError(PodError, ValueError):
    """Key generation rejected its inputs."""


class DecryptionError(PodError):
    """Ciphertext integrity tag did not match."""


# DAPS extraction -----------------------------------------------------------

class ExtractionError(PodError):
    """Secret key extraction failed."""


class NoConflictError(ExtractionError):
    """Both signatures authenticate the same payload."""


class AddressMismatchError(ExtractionError):
    """Signatures were not made on the same address."""


# Ledger ----------------------------------------------------------------------

class LedgerError(PodError):
    """A transaction was rejected.  ``reason`` is a stable machine-readable code."""

    reason = "rejected"

    def __init__(self, message: str = "", reason: str | None = None):
        super().__init__(message or self.reason)
        if reason is not None:
            self.reason = reason


class SignatureRejected(LedgerError):
    reason = "signature-rejected"


class DeploymentError(LedgerError):
    reason = "underfunded"


class ClaimRejected(LedgerError):
    """Base for FinancialIncentive failures; ``reason`` distinguishes them."""

    reason = "claim-rejected"


class WithdrawRejected(LedgerError):
    reason = "withdraw-rejected"


# Protocol --------------------------------------------------------------------

class ProtocolError(PodError):
    """An actor refused to continue a session."""

    reason = "protocol-error"

    def __init__(self, message: str = "", reason: str | None = None):
        super().__init__(message or self.reason)
        if reason is not None:
            self.reason = reason


class ConfigError(PodError, ValueError):
    """Scenario configuration is invalid.  ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
