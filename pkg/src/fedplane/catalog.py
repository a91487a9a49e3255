"""Model catalog with rule-table validation and a flat interoperability profile.

Metadata is a nested JSON document addressed by JSON pointers. A small
internal rule table drives validation, so updates are atomic: a record is
only replaced once the patched document passes every rule.

The interoperability export flattens a record into a DCAT-flavored profile
(identifier, title, description, license, creator, landingPage,
distribution, keyword, issued, modified) and the import path maps it back,
round-tripping every required field.
"""

from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable

from .errors import NotFoundError, ValidationError

SUMMARY_MAX_CHARS = 300
TITLE_MAX_CHARS = 200
DOI_RE = re.compile(r"^10\.\d{4,9}/\S+$")
URL_RE = re.compile(r"^https?://\S+$")

# curated SPDX identifiers the platform accepts for published models
ACCEPTED_LICENSES = frozenset(
    {
        "Apache-2.0",
        "MIT",
        "BSD-3-Clause",
        "GPL-3.0-only",
        "GPL-3.0-or-later",
        "LGPL-3.0-only",
        "MPL-2.0",
        "AGPL-3.0-only",
        "EUPL-1.2",
        "CC-BY-4.0",
        "CC-BY-SA-4.0",
        "CC0-1.0",
    }
)


def resolve_pointer(doc: object, pointer: str) -> tuple[bool, object]:
    """RFC 6901 style lookup; returns (found, value)."""
    if pointer == "":
        return True, doc
    node = doc
    for raw in pointer.lstrip("/").split("/"):
        token = raw.replace("~1", "/").replace("~0", "~")
        if isinstance(node, dict) and token in node:
            node = node[token]
        elif isinstance(node, list) and token.isdigit() and int(token) < len(node):
            node = node[int(token)]
        else:
            return False, None
    return True, node


def set_pointer(doc: dict, pointer: str, value: object) -> None:
    """Create intermediate objects as needed; value None removes the key."""
    parts = [p.replace("~1", "/").replace("~0", "~") for p in pointer.lstrip("/").split("/")]
    if not parts or parts == [""]:
        raise ValidationError("cannot patch the document root")
    node = doc
    for token in parts[:-1]:
        child = node.get(token)
        if not isinstance(child, dict):
            child = {}
            node[token] = child
        node = child
    if value is None:
        node.pop(parts[-1], None)
    else:
        node[parts[-1]] = value


def _check_title(value: object) -> str | None:
    if not isinstance(value, str) or not value.strip():
        return "must be a non-empty string"
    if len(value) > TITLE_MAX_CHARS:
        return f"must be at most {TITLE_MAX_CHARS} characters"
    return None


def _check_summary(value: object) -> str | None:
    if not isinstance(value, str) or not value.strip():
        return "must be a non-empty string"
    if len(value) > SUMMARY_MAX_CHARS:
        return f"must be at most {SUMMARY_MAX_CHARS} characters"
    return None


def _check_license(value: object) -> str | None:
    if not isinstance(value, str):
        return "must be a string"
    if value not in ACCEPTED_LICENSES:
        return f"{value!r} is not an accepted SPDX identifier"
    return None


def _check_url(value: object) -> str | None:
    if not isinstance(value, str) or not URL_RE.match(value):
        return "must be an http(s) URL"
    return None


def _check_doi(value: object) -> str | None:
    if not isinstance(value, str) or not DOI_RE.match(value):
        return "must match the DOI pattern 10.<registrant>/<suffix>"
    return None


def _check_authors(value: object) -> str | None:
    if not isinstance(value, list) or not value:
        return "must be a non-empty list"
    for author in value:
        if not isinstance(author, dict) or not isinstance(author.get("name"), str) or not author["name"].strip():
            return "every author needs a non-empty name"
    return None


def _check_tags(value: object) -> str | None:
    if not isinstance(value, dict):
        return "must be an object of tag groups"
    for group, values in value.items():
        if not isinstance(group, str) or not isinstance(values, list):
            return "tag groups must map to lists"
        if not all(isinstance(v, str) and v for v in values):
            return "tag values must be non-empty strings"
    return None


@dataclass(frozen=True)
class FieldRule:
    pointer: str
    required: bool
    check: Callable[[object], str | None]


METADATA_RULES: tuple[FieldRule, ...] = (
    FieldRule("/title", True, _check_title),
    FieldRule("/summary", True, _check_summary),
    FieldRule("/license", True, _check_license),
    FieldRule("/links/source_repo", True, _check_url),
    FieldRule("/links/download", False, _check_url),
    FieldRule("/links/doi", False, _check_doi),
    FieldRule("/authors", False, _check_authors),
    FieldRule("/tags", False, _check_tags),
)


def validate_metadata(metadata: object) -> list[str]:
    """Returns all violations, one message per failing rule."""
    problems: list[str] = []
    if not isinstance(metadata, dict):
        return ["metadata must be an object"]
    for rule in METADATA_RULES:
        found, value = resolve_pointer(metadata, rule.pointer)
        if not found:
            if rule.required:
                problems.append(f"{rule.pointer}: required field is missing")
            continue
        message = rule.check(value)
        if message:
            problems.append(f"{rule.pointer}: {message}")
    return problems


@dataclass
class ModelRecord:
    id: str
    owner: str
    vo: str
    metadata: dict
    version: int = 1
    created_at: int = 0
    modified_at: int = 0
    release: dict | None = None  # {"digest", "pseudo_doi", "released_at"}

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "owner": self.owner,
            "vo": self.vo,
            "metadata": copy.deepcopy(self.metadata),
            "version": self.version,
            "created_at": self.created_at,
            "modified_at": self.modified_at,
            "release": copy.deepcopy(self.release),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelRecord":
        return cls(
            id=d["id"],
            owner=d["owner"],
            vo=d["vo"],
            metadata=copy.deepcopy(d["metadata"]),
            version=d["version"],
            created_at=d["created_at"],
            modified_at=d["modified_at"],
            release=copy.deepcopy(d.get("release")),
        )


def _iso_utc(ms: int) -> str:
    return datetime.fromtimestamp(ms / 1000, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _parse_iso_utc(text: str) -> int:
    dt = datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)
    return int(dt.timestamp() * 1000)


class ModelCatalog:
    def __init__(self) -> None:
        self._records: dict[str, ModelRecord] = {}
        self._next = 1

    def create_record(self, owner: str, vo: str, metadata: dict, now: int) -> ModelRecord:
        problems = validate_metadata(metadata)
        if problems:
            raise ValidationError("; ".join(problems))
        record_id = f"mod-{self._next:04d}"
        self._next += 1
        record = ModelRecord(
            id=record_id,
            owner=owner,
            vo=vo,
            metadata=copy.deepcopy(metadata),
            created_at=now,
            modified_at=now,
        )
        self._records[record_id] = record
        return record

    def get_record(self, record_id: str) -> ModelRecord:
        try:
            return self._records[record_id]
        except KeyError:
            raise NotFoundError(f"unknown model record {record_id!r}") from None

    def update_metadata(self, record_id: str, patch: dict[str, object], now: int) -> ModelRecord:
        """Apply pointer -> value patches atomically; None deletes a key."""
        record = self.get_record(record_id)
        candidate = copy.deepcopy(record.metadata)
        for pointer, value in patch.items():
            set_pointer(candidate, pointer, value)
        problems = validate_metadata(candidate)
        if problems:
            raise ValidationError("; ".join(problems))
        record.metadata = candidate
        record.version += 1
        record.modified_at = now
        return record

    def delete_record(self, record_id: str) -> None:
        if record_id not in self._records:
            raise NotFoundError(f"unknown model record {record_id!r}")
        del self._records[record_id]

    def set_release(self, record_id: str, digest: str, pseudo_doi: str, now: int) -> ModelRecord:
        record = self.get_record(record_id)
        record.release = {"digest": digest, "pseudo_doi": pseudo_doi, "released_at": now}
        record.version += 1
        record.modified_at = now
        return record

    def list_records(self, vo: str | None = None, tag_filter: dict[str, list[str]] | None = None) -> list[ModelRecord]:
        out = []
        for record_id in sorted(self._records):
            record = self._records[record_id]
            if vo is not None and record.vo != vo:
                continue
            if tag_filter and not self._passes_tag_filter(record, tag_filter):
                continue
            out.append(record)
        return out

    @staticmethod
    def _passes_tag_filter(record: ModelRecord, tag_filter: dict[str, list[str]]) -> bool:
        tags = record.metadata.get("tags") or {}
        for group, accepted in tag_filter.items():
            values = tags.get(group) or []
            if not set(values) & set(accepted):
                return False
        return True

    # -- interoperability profile -------------------------------------------

    def export_interop(self, record_id: str) -> dict:
        record = self.get_record(record_id)
        md = record.metadata
        found_doi, doi = resolve_pointer(md, "/links/doi")
        identifier = doi if found_doi else f"urn:fedplane:model:{record.id}"
        found_dl, download = resolve_pointer(md, "/links/download")
        keywords = sorted(
            f"{group}:{value}" for group, values in (md.get("tags") or {}).items() for value in values
        )
        return {
            "identifier": identifier,
            "title": md["title"],
            "description": md["summary"],
            "license": md["license"],
            "creator": [a["name"] for a in md.get("authors", [])],
            "landingPage": md["links"]["source_repo"],
            "distribution": [{"accessURL": download}] if found_dl else [],
            "keyword": keywords,
            "issued": _iso_utc(record.created_at),
            "modified": _iso_utc(record.modified_at),
        }

    @staticmethod
    def import_interop(profile: dict) -> dict:
        """Map a flat profile back into catalog metadata."""
        for key in ("title", "description", "license", "landingPage"):
            if key not in profile:
                raise ValidationError(f"interop profile is missing {key!r}")
        metadata: dict = {
            "title": profile["title"],
            "summary": profile["description"],
            "license": profile["license"],
            "links": {"source_repo": profile["landingPage"]},
        }
        identifier = profile.get("identifier", "")
        if isinstance(identifier, str) and DOI_RE.match(identifier):
            metadata["links"]["doi"] = identifier
        distributions = profile.get("distribution") or []
        if distributions and isinstance(distributions[0], dict) and distributions[0].get("accessURL"):
            metadata["links"]["download"] = distributions[0]["accessURL"]
        creators = profile.get("creator") or []
        if creators:
            metadata["authors"] = [{"name": name} for name in creators]
        keywords = profile.get("keyword") or []
        tags: dict[str, list[str]] = {}
        for keyword in keywords:
            group, _, value = keyword.partition(":")
            if value:
                tags.setdefault(group, []).append(value)
        if tags:
            metadata["tags"] = {g: sorted(vs) for g, vs in sorted(tags.items())}
        problems = validate_metadata(metadata)
        if problems:
            raise ValidationError("; ".join(problems))
        return metadata

    # -- state ----------------------------------------------------------------

    def to_state(self) -> dict:
        return {
            "records": [self._records[rid].to_dict() for rid in sorted(self._records)],
            "next": self._next,
        }

    def from_state(self, state: dict) -> None:
        self._records = {d["id"]: ModelRecord.from_dict(d) for d in state["records"]}
        self._next = state["next"]
