"""Exception hierarchy shared by all control-plane modules.

The HTTP layer maps these onto status codes; library callers catch them
directly.
"""


class FedplaneError(Exception):
    """Base class for all control-plane errors."""

    code = "error"


class ValidationError(FedplaneError):
    """Input failed a precondition or schema rule (HTTP 400)."""

    code = "validation"


class NotFoundError(FedplaneError):
    """Referenced object does not exist, or is not visible to the caller (HTTP 404)."""

    code = "not_found"


class AuthError(FedplaneError):
    """Token missing, malformed, tampered, or expired (HTTP 401)."""

    code = "auth"


class ForbiddenError(FedplaneError):
    """Authenticated caller lacks the required tier or ownership (HTTP 403)."""

    code = "forbidden"


class StateError(FedplaneError):
    """Operation is illegal in the object's current lifecycle state (HTTP 409)."""

    code = "state"


class CryptoError(FedplaneError):
    """Encryption or decryption failed (bad master key, corrupt blob)."""

    code = "crypto"
