"""Desk-scale federated control plane for AI workloads.

A single event-sourced process that federates compute providers, schedules
quota-bounded jobs across them, curates a validated model catalog with a
staged quality pipeline and provenance trail, keeps scoped secrets under
envelope encryption, and serves models through autoscaled endpoints. An
HTTP/JSON API and a CLI sit on top; everything below `Platform` is a plain
library that works without the network.
"""

from .canon import canonical_json, sha256_hex
from .catalog import ACCEPTED_LICENSES, ModelCatalog, ModelRecord, validate_metadata
from .errors import (
    AuthError,
    CryptoError,
    FedplaneError,
    ForbiddenError,
    NotFoundError,
    StateError,
    ValidationError,
)
from .eventlog import EventLog, SnapshotStore
from .federation import SLA, Capacity, FederationRegistry, Provider, VirtualOrganization
from .inference import BlobStore, InferenceService
from .pipeline import QualityPipeline, compute_digest, pseudo_doi
from .platform import Platform
from .provenance import ProvenanceStore, slugify
from .ranker import ProviderRanker
from .scheduler import JobSpec, Scheduler
from .secrets import SecretStore, load_master_key

__version__ = "1.0.0"

__all__ = [
    "ACCEPTED_LICENSES",
    "AuthError",
    "BlobStore",
    "Capacity",
    "CryptoError",
    "EventLog",
    "FederationRegistry",
    "FedplaneError",
    "ForbiddenError",
    "InferenceService",
    "JobSpec",
    "ModelCatalog",
    "ModelRecord",
    "NotFoundError",
    "Platform",
    "Provider",
    "ProviderRanker",
    "ProvenanceStore",
    "QualityPipeline",
    "SLA",
    "Scheduler",
    "SecretStore",
    "SnapshotStore",
    "StateError",
    "ValidationError",
    "VirtualOrganization",
    "canonical_json",
    "compute_digest",
    "load_master_key",
    "pseudo_doi",
    "sha256_hex",
    "slugify",
    "validate_metadata",
    "__version__",
]
