"""Staged quality pipeline for publishing catalog models.

A run walks a fixed stage order:

    metadata -> static_checks -> build -> refresh -> provenance -> release

Every stage reports passed or failed; once one fails the rest are recorded
as skipped, so a stage list always matches passed* failed? skipped*.

The build stage derives a content digest from the record id, the source
ref, and the canonical metadata bytes, which makes reruns reproducible.
Release stamps the record with the digest and a pseudo DOI derived from it.

Static checks are pluggable: a checker takes the source bundle (a mapping
of path -> bytes) and returns a list of problems. The two shipped checkers
reject empty bundles and credential-looking tokens.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .canon import canonical_json, sha256_hex
from .catalog import ModelCatalog, ModelRecord, validate_metadata
from .errors import NotFoundError, ValidationError
from .provenance import ProvenanceStore

STAGES = ("metadata", "static_checks", "build", "refresh", "provenance", "release")

PASSED = "passed"
FAILED = "failed"
SKIPPED = "skipped"

SourceBundle = dict[str, bytes]
Checker = Callable[[SourceBundle], list[str]]
SourceProvider = Callable[[ModelRecord, str], SourceBundle]

BANNED_TOKENS = (
    b"BEGIN RSA PRIVATE KEY",
    b"BEGIN OPENSSH PRIVATE KEY",
    b"AKIA",
    b"ghp_",
    b"password=",
)


def check_non_empty_bundle(bundle: SourceBundle) -> list[str]:
    if not bundle:
        return ["source bundle is empty"]
    empties = sorted(path for path, blob in bundle.items() if not blob)
    return [f"{path}: file is empty" for path in empties]


def check_banned_tokens(bundle: SourceBundle) -> list[str]:
    problems = []
    for path in sorted(bundle):
        for token in BANNED_TOKENS:
            if token in bundle[path]:
                problems.append(f"{path}: contains banned token {token.decode('ascii', 'replace')!r}")
    return problems


SHIPPED_CHECKERS: dict[str, Checker] = {
    "non_empty_bundle": check_non_empty_bundle,
    "banned_tokens": check_banned_tokens,
}


def default_source_provider(record: ModelRecord, source_ref: str) -> SourceBundle:
    """Stand-in for a repository fetch; derived purely from the record."""
    return {
        "README.md": f"# {record.metadata.get('title', record.id)}\n".encode("utf-8"),
        "model.json": canonical_json(record.metadata).encode("utf-8"),
    }


def compute_digest(record_id: str, source_ref: str, metadata: dict) -> str:
    return sha256_hex("\n".join([record_id, source_ref, canonical_json(metadata)]))


def pseudo_doi(digest: str) -> str:
    return f"10.5281/fake.{digest[:8]}"


@dataclass
class StageResult:
    name: str
    status: str
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "detail": self.detail}

    @classmethod
    def from_dict(cls, d: dict) -> "StageResult":
        return cls(**d)


@dataclass
class PipelineRun:
    id: str
    record_id: str
    source_ref: str
    stages: list[StageResult] = field(default_factory=list)
    digest: str | None = None
    doi: str | None = None
    started_at: int = 0
    finished_at: int = 0

    @property
    def status(self) -> str:
        return FAILED if any(s.status == FAILED for s in self.stages) else PASSED

    def stage_statuses(self) -> list[str]:
        return [s.status for s in self.stages]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "record_id": self.record_id,
            "source_ref": self.source_ref,
            "stages": [s.to_dict() for s in self.stages],
            "digest": self.digest,
            "doi": self.doi,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineRun":
        return cls(
            id=d["id"],
            record_id=d["record_id"],
            source_ref=d["source_ref"],
            stages=[StageResult.from_dict(s) for s in d["stages"]],
            digest=d["digest"],
            doi=d["doi"],
            started_at=d["started_at"],
            finished_at=d["finished_at"],
        )


class QualityPipeline:
    def __init__(
        self,
        catalog: ModelCatalog,
        provenance: ProvenanceStore,
        checkers: dict[str, Checker] | None = None,
        source_provider: SourceProvider = default_source_provider,
    ) -> None:
        self.catalog = catalog
        self.provenance = provenance
        self.checkers = dict(SHIPPED_CHECKERS) if checkers is None else dict(checkers)
        self.source_provider = source_provider
        self._runs: dict[str, PipelineRun] = {}
        self._next = 1

    def run(self, record_id: str, source_ref: str, now: int) -> PipelineRun:
        record = self.catalog.get_record(record_id)  # NotFoundError propagates before a run exists
        run = PipelineRun(
            id=f"run-{self._next:04d}",
            record_id=record_id,
            source_ref=source_ref,
            started_at=now,
        )
        self._next += 1
        self._runs[run.id] = run

        failed = False
        bundle: SourceBundle = {}
        for stage in STAGES:
            if failed:
                run.stages.append(StageResult(stage, SKIPPED))
                continue
            try:
                detail = self._execute(stage, run, record, source_ref, bundle, now)
                run.stages.append(StageResult(stage, PASSED, detail))
            except ValidationError as exc:
                run.stages.append(StageResult(stage, FAILED, str(exc)))
                failed = True
        run.finished_at = now
        return run

    def _execute(
        self,
        stage: str,
        run: PipelineRun,
        record: ModelRecord,
        source_ref: str,
        bundle: SourceBundle,
        now: int,
    ) -> str:
        if stage == "metadata":
            problems = validate_metadata(record.metadata)
            if problems:
                raise ValidationError("; ".join(problems))
            return "metadata valid"
        if stage == "static_checks":
            bundle.update(self.source_provider(record, source_ref))
            problems = []
            for name in sorted(self.checkers):
                problems.extend(f"{name}: {p}" for p in self.checkers[name](bundle))
            if problems:
                raise ValidationError("; ".join(problems))
            return f"{len(self.checkers)} checks over {len(bundle)} files"
        if stage == "build":
            if not bundle:
                raise ValidationError("nothing to build")
            run.digest = compute_digest(record.id, source_ref, record.metadata)
            return f"digest {run.digest[:12]}"
        if stage == "refresh":
            # re-derive the interop view so a record that can no longer
            # export cleanly stops the run before release
            self.catalog.export_interop(record.id)
            return "interop profile refreshed"
        if stage == "provenance":
            fragment = self.provenance.add_fragment(
                "pipeline",
                record.id,
                {"run_id": run.id, "digest": run.digest, "source_ref": source_ref},
                now,
            )
            return fragment.id
        if stage == "release":
            run.doi = pseudo_doi(run.digest)
            self.catalog.set_release(record.id, run.digest, run.doi, now)
            return run.doi
        raise ValidationError(f"unknown stage {stage!r}")

    def get_run(self, run_id: str) -> PipelineRun:
        try:
            return self._runs[run_id]
        except KeyError:
            raise NotFoundError(f"unknown pipeline run {run_id!r}") from None

    def runs(self, record_id: str | None = None) -> list[PipelineRun]:
        out = [self._runs[rid] for rid in sorted(self._runs)]
        if record_id is not None:
            out = [r for r in out if r.record_id == record_id]
        return out

    def to_state(self) -> dict:
        return {"runs": [self._runs[rid].to_dict() for rid in sorted(self._runs)], "next": self._next}

    def from_state(self, state: dict) -> None:
        self._runs = {d["id"]: PipelineRun.from_dict(d) for d in state["runs"]}
        self._next = state["next"]
