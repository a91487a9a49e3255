"""Per-user secret storage with AES-256-GCM envelope encryption.

Values are encrypted the moment they enter the system; everything at rest
(store state, snapshots, event payloads) carries only nonce + ciphertext.
The (user, path) pair is bound into the AEAD associated data, so a
ciphertext lifted from one entry cannot be decrypted under another.

Lookups are scoped by user and a miss is indistinguishable from another
user's entry, which keeps path names non-enumerable across users.
"""

from __future__ import annotations

import base64
import os
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .errors import CryptoError, NotFoundError, ValidationError

NONCE_BYTES = 12
MASTER_KEY_BYTES = 32
MASTER_KEY_ENV = "MASTER_KEY"


def load_master_key(value: str | None = None) -> bytes:
    """Parse a hex master key, defaulting to the MASTER_KEY environment variable."""
    raw = value if value is not None else os.environ.get(MASTER_KEY_ENV, "")
    if not raw:
        raise CryptoError(f"{MASTER_KEY_ENV} is not set")
    try:
        key = bytes.fromhex(raw.strip())
    except ValueError:
        raise CryptoError(f"{MASTER_KEY_ENV} must be hex-encoded") from None
    if len(key) != MASTER_KEY_BYTES:
        raise CryptoError(f"{MASTER_KEY_ENV} must encode exactly {MASTER_KEY_BYTES} bytes")
    return key


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _unb64(text: str) -> bytes:
    return base64.b64decode(text.encode("ascii"))


def _aad(user: str, path: str) -> bytes:
    return f"{user}|{path}".encode("utf-8")


def _check_path(path: str) -> None:
    if not path or path.startswith("/") or path.endswith("/") or "//" in path:
        raise ValidationError(f"invalid secret path {path!r}")


@dataclass
class SecretEntry:
    user: str
    path: str
    nonce_b64: str
    ciphertext_b64: str
    created_at: int
    updated_at: int
    version: int = 1

    def summary(self) -> dict:
        return {
            "path": self.path,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "version": self.version,
        }

    def to_dict(self) -> dict:
        return {
            "user": self.user,
            "path": self.path,
            "nonce_b64": self.nonce_b64,
            "ciphertext_b64": self.ciphertext_b64,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SecretEntry":
        return cls(**d)


class SecretStore:
    def __init__(self, master_key: bytes) -> None:
        if len(master_key) != MASTER_KEY_BYTES:
            raise CryptoError(f"master key must be {MASTER_KEY_BYTES} bytes")
        self._aead = AESGCM(master_key)
        self._entries: dict[tuple[str, str], SecretEntry] = {}

    def encrypt(self, user: str, path: str, value: str) -> tuple[str, str]:
        """Encrypt a value for (user, path); returns (nonce_b64, ciphertext_b64).

        Kept separate from storage so callers can log the envelope instead of
        the plaintext and later replay it through put_encrypted.
        """
        _check_path(path)
        if not user:
            raise ValidationError("secret user must be non-empty")
        nonce = os.urandom(NONCE_BYTES)
        ciphertext = self._aead.encrypt(nonce, value.encode("utf-8"), _aad(user, path))
        return _b64(nonce), _b64(ciphertext)

    def put_encrypted(self, user: str, path: str, nonce_b64: str, ciphertext_b64: str, now: int) -> SecretEntry:
        _check_path(path)
        key = (user, path)
        existing = self._entries.get(key)
        if existing is None:
            entry = SecretEntry(
                user=user,
                path=path,
                nonce_b64=nonce_b64,
                ciphertext_b64=ciphertext_b64,
                created_at=now,
                updated_at=now,
            )
            self._entries[key] = entry
        else:
            existing.nonce_b64 = nonce_b64
            existing.ciphertext_b64 = ciphertext_b64
            existing.updated_at = now
            existing.version += 1
            entry = existing
        return entry

    def put(self, user: str, path: str, value: str, now: int) -> SecretEntry:
        nonce_b64, ciphertext_b64 = self.encrypt(user, path, value)
        return self.put_encrypted(user, path, nonce_b64, ciphertext_b64, now)

    def get(self, user: str, path: str) -> str:
        entry = self._entries.get((user, path))
        if entry is None:
            # same error for "absent" and "owned by someone else"
            raise NotFoundError(f"no secret at {path!r}")
        try:
            plaintext = self._aead.decrypt(
                _unb64(entry.nonce_b64), _unb64(entry.ciphertext_b64), _aad(user, path)
            )
        except InvalidTag:
            raise CryptoError(f"secret at {path!r} failed authentication") from None
        return plaintext.decode("utf-8")

    def list(self, user: str, prefix: str = "") -> list[dict]:
        return [
            entry.summary()
            for (owner, path), entry in sorted(self._entries.items())
            if owner == user and path.startswith(prefix)
        ]

    def delete(self, user: str, path: str) -> None:
        if (user, path) not in self._entries:
            raise NotFoundError(f"no secret at {path!r}")
        del self._entries[(user, path)]

    def delete_prefix(self, user: str, prefix: str) -> list[str]:
        """Remove every entry under prefix for the user; returns deleted paths."""
        doomed = sorted(path for (owner, path) in self._entries if owner == user and path.startswith(prefix))
        for path in doomed:
            del self._entries[(user, path)]
        return doomed

    def to_state(self) -> dict:
        return {"entries": [entry.to_dict() for _, entry in sorted(self._entries.items())]}

    def from_state(self, state: dict) -> None:
        self._entries = {}
        for d in state["entries"]:
            entry = SecretEntry.from_dict(d)
            self._entries[(entry.user, entry.path)] = entry
