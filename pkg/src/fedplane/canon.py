"""Canonical JSON and hashing helpers shared across modules.

Canonical form: sorted keys, compact separators, UTF-8 without ASCII
escaping. Two structurally equal documents always serialize to the same
bytes, which is what digests and replay comparisons rely on.
"""

from __future__ import annotations

import hashlib
import json


def canonical_json(obj: object) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()
