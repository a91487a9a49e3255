"""Provenance capture and graph assembly.

Lifecycle stages drop small JSON fragments (catalog, pipeline, training,
tracking) into an append-only store. Assembly folds the fragments for one
model into a typed graph:

    entities    model:<record>, dataset:<uri>
    activities  build:<run>, training:<job>
    agents      author:<slug>, user:<owner>

with the usual relation directions: wasGeneratedBy entity->activity,
used activity->entity, wasAssociatedWith activity->agent, wasAttributedTo
entity->agent, wasDerivedFrom entity->entity. Derivations must stay
acyclic. Node ids, attribute merging, and both serializations (canonical
JSON and line-oriented triples) are fully deterministic, so the same
fragment set always yields identical bytes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .canon import canonical_json
from .errors import NotFoundError, StateError, ValidationError

FRAGMENT_KINDS = ("catalog", "pipeline", "training", "tracking")

REQUIRED_PAYLOAD_KEYS: dict[str, tuple[str, ...]] = {
    "catalog": ("metadata",),
    "pipeline": ("run_id", "digest"),
    "training": ("job_id", "provider", "resources"),
    "tracking": ("metrics",),
}

GENERATED_BY = "wasGeneratedBy"
USED = "used"
ASSOCIATED_WITH = "wasAssociatedWith"
ATTRIBUTED_TO = "wasAttributedTo"
DERIVED_FROM = "wasDerivedFrom"


def slugify(name: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")
    if not slug:
        raise ValidationError(f"cannot derive a slug from {name!r}")
    return slug


@dataclass
class Fragment:
    id: str
    kind: str
    record_id: str
    payload: dict
    recorded_at: int

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "record_id": self.record_id,
            "payload": self.payload,
            "recorded_at": self.recorded_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Fragment":
        return cls(**d)


@dataclass
class ProvGraph:
    """Nodes keyed by id; edges are (subject, relation, object) triples."""

    nodes: dict[str, dict] = field(default_factory=dict)
    edges: list[tuple[str, str, str]] = field(default_factory=list)

    def add_node(self, node_id: str, node_type: str, attrs: dict | None = None) -> None:
        node = self.nodes.setdefault(node_id, {"type": node_type, "attrs": {}})
        if node["type"] != node_type:
            raise StateError(f"node {node_id!r} is both {node['type']} and {node_type}")
        if attrs:
            node["attrs"].update(attrs)

    def add_edge(self, subject: str, relation: str, obj: str) -> None:
        edge = (subject, relation, obj)
        if edge not in self.edges:
            self.edges.append(edge)

    def sorted_edges(self) -> list[tuple[str, str, str]]:
        return sorted(self.edges)

    def neighbors(self, node_id: str, relation: str) -> list[str]:
        return sorted(obj for subj, rel, obj in self.edges if subj == node_id and rel == relation)

    def check_derivations_acyclic(self) -> None:
        adjacency: dict[str, list[str]] = {}
        for subj, rel, obj in self.edges:
            if rel == DERIVED_FROM:
                adjacency.setdefault(subj, []).append(obj)
        state: dict[str, int] = {}  # 1 = on stack, 2 = done

        def visit(node: str, path: list[str]) -> None:
            state[node] = 1
            for nxt in adjacency.get(node, ()):
                if state.get(nxt) == 1:
                    cycle = path[path.index(nxt):] + [nxt] if nxt in path else [node, nxt]
                    raise StateError("derivation cycle: " + " -> ".join(cycle))
                if state.get(nxt) != 2:
                    visit(nxt, path + [nxt])
            state[node] = 2

        for node in sorted(adjacency):
            if state.get(node) != 2:
                visit(node, [node])

    def to_doc(self) -> dict:
        return {
            "nodes": {
                node_id: {"type": node["type"], "attrs": node["attrs"]}
                for node_id, node in sorted(self.nodes.items())
            },
            "edges": [
                {"subject": s, "relation": r, "object": o} for s, r, o in self.sorted_edges()
            ],
        }

    def to_canonical_json(self) -> str:
        return canonical_json(self.to_doc())

    def to_triples(self) -> str:
        """One `<subject> relation <object>` per line, sorted, LF-terminated."""
        lines = [f"<{s}> {r} <{o}>" for s, r, o in self.sorted_edges()]
        return "\n".join(lines) + ("\n" if lines else "")


class ProvenanceStore:
    def __init__(self) -> None:
        self._fragments: list[Fragment] = []
        self._next = 1

    def add_fragment(self, kind: str, record_id: str, payload: dict, now: int) -> Fragment:
        if kind not in FRAGMENT_KINDS:
            raise ValidationError(f"unknown fragment kind {kind!r}")
        if not record_id:
            raise ValidationError("fragment needs a model record id")
        missing = [k for k in REQUIRED_PAYLOAD_KEYS[kind] if k not in payload]
        if missing:
            raise ValidationError(f"{kind} fragment payload is missing {missing}")
        fragment = Fragment(
            id=f"frag-{self._next:04d}",
            kind=kind,
            record_id=record_id,
            payload=payload,
            recorded_at=now,
        )
        self._next += 1
        self._fragments.append(fragment)
        return fragment

    def fragments(self, record_id: str | None = None) -> list[Fragment]:
        if record_id is None:
            return list(self._fragments)
        return [f for f in self._fragments if f.record_id == record_id]

    def build_graph(self, record_id: str) -> ProvGraph:
        fragments = self.fragments(record_id)
        if not fragments:
            raise NotFoundError(f"no provenance recorded for {record_id!r}")
        graph = ProvGraph()
        model_node = f"model:{record_id}"
        graph.add_node(model_node, "entity")
        for fragment in sorted(fragments, key=lambda f: f.id):
            payload = fragment.payload
            if fragment.kind == "catalog":
                metadata = payload["metadata"]
                attrs = {}
                if metadata.get("title"):
                    attrs["title"] = metadata["title"]
                if metadata.get("license"):
                    attrs["license"] = metadata["license"]
                graph.add_node(model_node, "entity", attrs)
                for author in metadata.get("authors", []):
                    agent = f"author:{slugify(author['name'])}"
                    graph.add_node(agent, "agent", {"name": author["name"]})
                    graph.add_edge(model_node, ATTRIBUTED_TO, agent)
            elif fragment.kind == "pipeline":
                activity = f"build:{payload['run_id']}"
                graph.add_node(activity, "activity", {"digest": payload["digest"]})
                graph.add_edge(model_node, GENERATED_BY, activity)
            elif fragment.kind == "training":
                activity = f"training:{payload['job_id']}"
                graph.add_node(
                    activity,
                    "activity",
                    {"provider": payload["provider"], "resources": payload["resources"]},
                )
                owner = payload.get("owner")
                if owner:
                    agent = f"user:{owner}"
                    graph.add_node(agent, "agent")
                    graph.add_edge(activity, ASSOCIATED_WITH, agent)
                for uri in payload.get("datasets", []):
                    dataset = f"dataset:{uri}"
                    graph.add_node(dataset, "entity")
                    graph.add_edge(activity, USED, dataset)
                    graph.add_edge(model_node, DERIVED_FROM, dataset)
            elif fragment.kind == "tracking":
                graph.add_node(model_node, "entity", {"metrics": payload["metrics"]})
        graph.check_derivations_acyclic()
        return graph

    def datasets_for(self, record_id: str) -> list[str]:
        """Answers the lineage question: which datasets trained this model."""
        graph = self.build_graph(record_id)
        prefix = "dataset:"
        return [
            obj[len(prefix):]
            for obj in graph.neighbors(f"model:{record_id}", DERIVED_FROM)
            if obj.startswith(prefix)
        ]

    def to_state(self) -> dict:
        return {"fragments": [f.to_dict() for f in self._fragments], "next": self._next}

    def from_state(self, state: dict) -> None:
        self._fragments = [Fragment.from_dict(d) for d in state["fragments"]]
        self._next = state["next"]
