"""Federation registry: providers, capacities, liveness, SLAs, and Virtual Organizations.

Liveness is timeout-based: providers that stop heartbeating move
alive -> suspect -> dead during sweeps, and any heartbeat resurrects them.
All resource quantities are integers (GPUs, CPU GHz-equivalents, disk GB)
so accounting stays exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import NotFoundError, ValidationError

ALIVE = "alive"
SUSPECT = "suspect"
DEAD = "dead"
STATUSES = (ALIVE, SUSPECT, DEAD)

ROLE_DEMO = "demo"
ROLE_FULL = "full"
ROLES = (ROLE_DEMO, ROLE_FULL)

DEFAULT_SUSPECT_AFTER_MS = 30_000
DEFAULT_DEAD_AFTER_MS = 90_000


@dataclass(frozen=True)
class Capacity:
    """Component-wise resource vector. Closed under + and bounded -."""

    gpus: int = 0
    cpu_ghz: int = 0
    disk_gb: int = 0

    def __post_init__(self) -> None:
        for name in ("gpus", "cpu_ghz", "disk_gb"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise ValidationError(f"capacity.{name} must be a non-negative integer, got {value!r}")

    def __add__(self, other: "Capacity") -> "Capacity":
        return Capacity(self.gpus + other.gpus, self.cpu_ghz + other.cpu_ghz, self.disk_gb + other.disk_gb)

    def __sub__(self, other: "Capacity") -> "Capacity":
        # raises ValidationError via __post_init__ when any component would go negative
        return Capacity(self.gpus - other.gpus, self.cpu_ghz - other.cpu_ghz, self.disk_gb - other.disk_gb)

    def covers(self, other: "Capacity") -> bool:
        """True when self >= other on every component."""
        return self.gpus >= other.gpus and self.cpu_ghz >= other.cpu_ghz and self.disk_gb >= other.disk_gb

    def is_zero(self) -> bool:
        return self.gpus == 0 and self.cpu_ghz == 0 and self.disk_gb == 0

    def to_dict(self) -> dict:
        return {"gpus": self.gpus, "cpu_ghz": self.cpu_ghz, "disk_gb": self.disk_gb}

    @classmethod
    def from_dict(cls, d: dict) -> "Capacity":
        return cls(gpus=int(d.get("gpus", 0)), cpu_ghz=int(d.get("cpu_ghz", 0)), disk_gb=int(d.get("disk_gb", 0)))

    @classmethod
    def zero(cls) -> "Capacity":
        return cls(0, 0, 0)


@dataclass
class Provider:
    id: str
    name: str
    country: str
    endpoint: str
    capacity: Capacity
    supported_vos: set[str]
    status: str = ALIVE
    last_heartbeat: int = 0
    # advisory figure sent with the last heartbeat; scheduling uses the
    # registry capacity minus scheduler allocations, never this field
    reported_free: Capacity | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "country": self.country,
            "endpoint": self.endpoint,
            "capacity": self.capacity.to_dict(),
            "supported_vos": sorted(self.supported_vos),
            "status": self.status,
            "last_heartbeat": self.last_heartbeat,
            "reported_free": self.reported_free.to_dict() if self.reported_free else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Provider":
        return cls(
            id=d["id"],
            name=d["name"],
            country=d["country"],
            endpoint=d["endpoint"],
            capacity=Capacity.from_dict(d["capacity"]),
            supported_vos=set(d["supported_vos"]),
            status=d["status"],
            last_heartbeat=d["last_heartbeat"],
            reported_free=Capacity.from_dict(d["reported_free"]) if d.get("reported_free") else None,
        )


@dataclass
class SLA:
    """Per-(VO, provider) resource cap with a validity window."""

    id: str
    vo: str
    provider: str
    caps: Capacity
    valid_from: int
    valid_until: int

    def active_at(self, now: int) -> bool:
        return self.valid_from <= now < self.valid_until

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "vo": self.vo,
            "provider": self.provider,
            "caps": self.caps.to_dict(),
            "valid_from": self.valid_from,
            "valid_until": self.valid_until,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SLA":
        return cls(
            id=d["id"],
            vo=d["vo"],
            provider=d["provider"],
            caps=Capacity.from_dict(d["caps"]),
            valid_from=d["valid_from"],
            valid_until=d["valid_until"],
        )


@dataclass
class VirtualOrganization:
    id: str
    name: str
    default_user_storage_quota_gb: int = 500
    # tag-group -> accepted values; a record passes when every group listed
    # here intersects the record's tags for that group
    catalog_filter: dict[str, list[str]] | None = None
    member_roles: dict[str, str] = field(default_factory=dict)
    tryme_gpus_allowed: bool = False

    def validate(self) -> None:
        if not self.id:
            raise ValidationError("vo id must be non-empty")
        if self.default_user_storage_quota_gb <= 0:
            raise ValidationError("vo default storage quota must be > 0")
        for user, role in self.member_roles.items():
            if role not in ROLES:
                raise ValidationError(f"unknown role {role!r} for member {user!r}")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "default_user_storage_quota_gb": self.default_user_storage_quota_gb,
            "catalog_filter": self.catalog_filter,
            "member_roles": dict(sorted(self.member_roles.items())),
            "tryme_gpus_allowed": self.tryme_gpus_allowed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VirtualOrganization":
        return cls(
            id=d["id"],
            name=d["name"],
            default_user_storage_quota_gb=d.get("default_user_storage_quota_gb", 500),
            catalog_filter=d.get("catalog_filter"),
            member_roles=dict(d.get("member_roles", {})),
            tryme_gpus_allowed=d.get("tryme_gpus_allowed", False),
        )


class FederationRegistry:
    """Source of truth for federation members, their liveness, and VO agreements."""

    def __init__(
        self,
        suspect_after_ms: int = DEFAULT_SUSPECT_AFTER_MS,
        dead_after_ms: int = DEFAULT_DEAD_AFTER_MS,
    ) -> None:
        if not 0 < suspect_after_ms < dead_after_ms:
            raise ValidationError("need 0 < suspect_after_ms < dead_after_ms")
        self.suspect_after_ms = suspect_after_ms
        self.dead_after_ms = dead_after_ms
        self._providers: dict[str, Provider] = {}
        self._slas: dict[str, SLA] = {}
        self._sla_by_pair: dict[tuple[str, str], str] = {}
        self._vos: dict[str, VirtualOrganization] = {}
        self._next_provider = 1
        self._next_sla = 1

    # -- providers ---------------------------------------------------------

    def register_provider(
        self,
        name: str,
        country: str,
        endpoint: str,
        capacity: Capacity,
        supported_vos: set[str] | None = None,
        now: int = 0,
    ) -> Provider:
        if not name:
            raise ValidationError("provider name must be non-empty")
        if not endpoint:
            raise ValidationError("provider endpoint must be non-empty")
        if any(p.name == name for p in self._providers.values()):
            raise ValidationError(f"provider name {name!r} already registered")
        pid = f"pr-{self._next_provider:04d}"
        self._next_provider += 1
        provider = Provider(
            id=pid,
            name=name,
            country=country,
            endpoint=endpoint,
            capacity=capacity,
            supported_vos=set(supported_vos or ()),
            status=ALIVE,
            last_heartbeat=now,
        )
        self._providers[pid] = provider
        return provider

    def get_provider(self, provider_id: str) -> Provider:
        try:
            return self._providers[provider_id]
        except KeyError:
            raise NotFoundError(f"unknown provider {provider_id!r}") from None

    def providers(self) -> list[Provider]:
        return [self._providers[pid] for pid in sorted(self._providers)]

    def heartbeat(self, provider_id: str, now: int, free: Capacity) -> str:
        provider = self.get_provider(provider_id)
        if not provider.capacity.covers(free):
            raise ValidationError("reported free capacity exceeds registered capacity")
        if now < provider.last_heartbeat:
            raise ValidationError("heartbeat timestamp precedes the last one")
        provider.last_heartbeat = now
        provider.status = ALIVE
        provider.reported_free = free
        return provider.status

    def sweep_membership(self, now: int) -> list[tuple[str, str, str]]:
        """Apply liveness timeouts; returns (provider_id, old, new) transitions.

        A provider that has been silent past the dead threshold while still
        alive goes through suspect first, so both hops are reported.
        """
        transitions: list[tuple[str, str, str]] = []
        for pid in sorted(self._providers):
            provider = self._providers[pid]
            silent_ms = now - provider.last_heartbeat
            if provider.status == ALIVE and silent_ms > self.suspect_after_ms:
                transitions.append((pid, ALIVE, SUSPECT))
                provider.status = SUSPECT
            if provider.status == SUSPECT and silent_ms > self.dead_after_ms:
                transitions.append((pid, SUSPECT, DEAD))
                provider.status = DEAD
        return transitions

    def aggregate_capacity(self, status: str | None = ALIVE) -> Capacity:
        total = Capacity.zero()
        for provider in self._providers.values():
            if status is None or provider.status == status:
                total = total + provider.capacity
        return total

    # -- SLAs ---------------------------------------------------------------

    def upsert_sla(self, vo: str, provider_id: str, caps: Capacity, valid_from: int, valid_until: int) -> SLA:
        provider = self.get_provider(provider_id)
        self.require_vo(vo)
        if valid_from >= valid_until:
            raise ValidationError("sla valid_from must precede valid_until")
        if not provider.capacity.covers(caps):
            raise ValidationError("sla caps exceed provider capacity")
        key = (vo, provider_id)
        sla_id = self._sla_by_pair.get(key)
        if sla_id is None:
            sla_id = f"sla-{self._next_sla:04d}"
            self._next_sla += 1
            self._sla_by_pair[key] = sla_id
        sla = SLA(id=sla_id, vo=vo, provider=provider_id, caps=caps, valid_from=valid_from, valid_until=valid_until)
        self._slas[sla_id] = sla
        return sla

    def valid_sla(self, vo: str, provider_id: str, now: int) -> SLA | None:
        sla_id = self._sla_by_pair.get((vo, provider_id))
        if sla_id is None:
            return None
        sla = self._slas[sla_id]
        return sla if sla.active_at(now) else None

    def slas(self) -> list[SLA]:
        return [self._slas[sid] for sid in sorted(self._slas)]

    def list_providers(self, vo: str | None = None, status: str | None = None, now: int = 0) -> list[Provider]:
        out = []
        for provider in self.providers():
            if status is not None and provider.status != status:
                continue
            if vo is not None:
                if vo not in provider.supported_vos:
                    continue
                if self.valid_sla(vo, provider.id, now) is None:
                    continue
            out.append(provider)
        return out

    # -- VOs -----------------------------------------------------------------

    def upsert_vo(self, vo: VirtualOrganization) -> VirtualOrganization:
        vo.validate()
        self._vos[vo.id] = vo
        return vo

    def get_vo(self, vo_id: str) -> VirtualOrganization | None:
        return self._vos.get(vo_id)

    def require_vo(self, vo_id: str) -> VirtualOrganization:
        vo = self._vos.get(vo_id)
        if vo is None:
            raise NotFoundError(f"unknown vo {vo_id!r}")
        return vo

    def role_of(self, vo_id: str, user: str) -> str | None:
        vo = self._vos.get(vo_id)
        if vo is None:
            return None
        return vo.member_roles.get(user)

    def vos(self) -> list[VirtualOrganization]:
        return [self._vos[vid] for vid in sorted(self._vos)]

    # -- state ----------------------------------------------------------------

    def to_state(self) -> dict:
        return {
            "providers": [p.to_dict() for p in self.providers()],
            "slas": [s.to_dict() for s in self.slas()],
            "vos": [v.to_dict() for v in self.vos()],
            "next_provider": self._next_provider,
            "next_sla": self._next_sla,
        }

    def from_state(self, state: dict) -> None:
        self._providers = {d["id"]: Provider.from_dict(d) for d in state["providers"]}
        self._slas = {d["id"]: SLA.from_dict(d) for d in state["slas"]}
        self._sla_by_pair = {(s.vo, s.provider): s.id for s in self._slas.values()}
        self._vos = {d["id"]: VirtualOrganization.from_dict(d) for d in state["vos"]}
        self._next_provider = state["next_provider"]
        self._next_sla = state["next_sla"]
