"""Fragment validation, graph assembly, and deterministic serialization."""

import itertools

import pytest

from fedplane.errors import NotFoundError, StateError, ValidationError
from fedplane.provenance import ProvenanceStore, ProvGraph, slugify


def full_lifecycle(store: ProvenanceStore, record_id: str = "mod-0001") -> None:
    store.add_fragment(
        "catalog",
        record_id,
        {
            "metadata": {
                "title": "Yield forecaster",
                "license": "Apache-2.0",
                "authors": [{"name": "Ada Lovelace"}, {"name": "Grace Hopper"}],
            },
            "owner": "carol",
        },
        now=1,
    )
    store.add_fragment("pipeline", record_id, {"run_id": "run-0001", "digest": "ab" * 32}, now=2)
    store.add_fragment(
        "training",
        record_id,
        {
            "job_id": "job-0001",
            "provider": "pr-0002",
            "resources": {"gpus": 2, "cpu_ghz": 10, "disk_gb": 50},
            "owner": "carol",
            "datasets": ["s3://fields/2023"],
        },
        now=3,
    )
    store.add_fragment("tracking", record_id, {"metrics": {"rmse": 0.41}}, now=4)


class TestFragments:
    def test_ids_are_sequential(self):
        store = ProvenanceStore()
        f1 = store.add_fragment("tracking", "mod-0001", {"metrics": {}}, now=0)
        f2 = store.add_fragment("tracking", "mod-0001", {"metrics": {}}, now=0)
        assert (f1.id, f2.id) == ("frag-0001", "frag-0002")

    @pytest.mark.parametrize(
        "kind,payload,missing",
        [
            ("catalog", {}, "metadata"),
            ("pipeline", {"run_id": "run-0001"}, "digest"),
            ("training", {"job_id": "j", "provider": "p"}, "resources"),
            ("tracking", {}, "metrics"),
        ],
    )
    def test_required_payload_keys(self, kind, payload, missing):
        store = ProvenanceStore()
        with pytest.raises(ValidationError, match=missing):
            store.add_fragment(kind, "mod-0001", payload, now=0)

    def test_unknown_kind_rejected(self):
        store = ProvenanceStore()
        with pytest.raises(ValidationError):
            store.add_fragment("telemetry", "mod-0001", {}, now=0)

    def test_fragments_filter_by_record(self):
        store = ProvenanceStore()
        store.add_fragment("tracking", "mod-0001", {"metrics": {}}, now=0)
        store.add_fragment("tracking", "mod-0002", {"metrics": {}}, now=0)
        assert len(store.fragments("mod-0001")) == 1
        assert len(store.fragments()) == 2


class TestGraph:
    def test_full_lifecycle_nodes_and_edges(self):
        store = ProvenanceStore()
        full_lifecycle(store)
        graph = store.build_graph("mod-0001")

        assert set(graph.nodes) == {
            "model:mod-0001",
            "author:ada-lovelace",
            "author:grace-hopper",
            "build:run-0001",
            "training:job-0001",
            "dataset:s3://fields/2023",
            "user:carol",
        }
        assert graph.nodes["model:mod-0001"]["type"] == "entity"
        assert graph.nodes["build:run-0001"]["type"] == "activity"
        assert graph.nodes["author:ada-lovelace"]["type"] == "agent"

        expected_edges = {
            ("model:mod-0001", "wasAttributedTo", "author:ada-lovelace"),
            ("model:mod-0001", "wasAttributedTo", "author:grace-hopper"),
            ("model:mod-0001", "wasGeneratedBy", "build:run-0001"),
            ("training:job-0001", "used", "dataset:s3://fields/2023"),
            ("training:job-0001", "wasAssociatedWith", "user:carol"),
            ("model:mod-0001", "wasDerivedFrom", "dataset:s3://fields/2023"),
        }
        assert set(graph.edges) == expected_edges
        assert len(graph.edges) == 6

    def test_model_attrs_fold_in_catalog_and_tracking(self):
        store = ProvenanceStore()
        full_lifecycle(store)
        attrs = store.build_graph("mod-0001").nodes["model:mod-0001"]["attrs"]
        assert attrs["title"] == "Yield forecaster"
        assert attrs["license"] == "Apache-2.0"
        assert attrs["metrics"] == {"rmse": 0.41}

    def test_lineage_question_datasets(self):
        store = ProvenanceStore()
        full_lifecycle(store)
        assert store.datasets_for("mod-0001") == ["s3://fields/2023"]

    def test_empty_record_raises(self):
        store = ProvenanceStore()
        with pytest.raises(NotFoundError):
            store.build_graph("mod-none")

    def test_duplicate_fragments_do_not_duplicate_edges(self):
        store = ProvenanceStore()
        for _ in range(3):
            store.add_fragment("pipeline", "mod-0001", {"run_id": "run-0001", "digest": "d"}, now=0)
        graph = store.build_graph("mod-0001")
        assert graph.edges == [("model:mod-0001", "wasGeneratedBy", "build:run-0001")]

    def test_derivation_cycle_detected(self):
        graph = ProvGraph()
        graph.add_node("model:a", "entity")
        graph.add_node("model:b", "entity")
        graph.add_edge("model:a", "wasDerivedFrom", "model:b")
        graph.add_edge("model:b", "wasDerivedFrom", "model:a")
        with pytest.raises(StateError, match="cycle"):
            graph.check_derivations_acyclic()

    def test_node_type_conflict_detected(self):
        graph = ProvGraph()
        graph.add_node("thing:x", "entity")
        with pytest.raises(StateError):
            graph.add_node("thing:x", "activity")


class TestSerialization:
    def test_triples_format_and_order(self):
        store = ProvenanceStore()
        full_lifecycle(store)
        text = store.build_graph("mod-0001").to_triples()
        assert text.endswith("\n") and "\r" not in text
        lines = text.splitlines()
        assert lines == sorted(lines)
        assert "<model:mod-0001> wasGeneratedBy <build:run-0001>" in lines
        assert "<training:job-0001> used <dataset:s3://fields/2023>" in lines
        assert len(lines) == 6

    def test_serialization_is_insertion_order_independent(self):
        base = ProvenanceStore()
        full_lifecycle(base)
        reference_json = base.build_graph("mod-0001").to_canonical_json()
        reference_triples = base.build_graph("mod-0001").to_triples()

        fragments = [(f.kind, f.payload) for f in base.fragments("mod-0001")]
        for perm in itertools.permutations(fragments):
            store = ProvenanceStore()
            for kind, payload in perm:
                store.add_fragment(kind, "mod-0001", payload, now=9)
            graph = store.build_graph("mod-0001")
            assert graph.to_canonical_json() == reference_json
            assert graph.to_triples() == reference_triples

    def test_canonical_json_is_sorted_and_compact(self):
        store = ProvenanceStore()
        full_lifecycle(store)
        text = store.build_graph("mod-0001").to_canonical_json()
        assert ": " not in text and ", " not in text
        assert text.index('"edges"') < text.index('"nodes"')

    def test_state_round_trip(self):
        store = ProvenanceStore()
        full_lifecycle(store)
        other = ProvenanceStore()
        other.from_state(store.to_state())
        assert other.build_graph("mod-0001").to_canonical_json() == store.build_graph("mod-0001").to_canonical_json()
        assert other.add_fragment("tracking", "mod-0001", {"metrics": {}}, now=9).id == "frag-0005"


class TestSlug:
    @pytest.mark.parametrize(
        "name,slug",
        [
            ("Ada Lovelace", "ada-lovelace"),
            ("  Grace   Hopper  ", "grace-hopper"),
            ("J. R. R. Tolkien", "j-r-r-tolkien"),
            ("ÉLODIE", "lodie"),
        ],
    )
    def test_slugify(self, name, slug):
        assert slugify(name) == slug

    def test_unsluggable_rejected(self):
        with pytest.raises(ValidationError):
            slugify("***")
