"""Secret store: round-trips, scoping, envelope hygiene."""

import json

import pytest
from hypothesis import given, strategies as st

from fedplane.errors import CryptoError, NotFoundError, ValidationError
from fedplane.secrets import SecretStore, load_master_key

KEY = bytes(range(32))
OTHER_KEY = bytes(range(1, 33))


def make_store() -> SecretStore:
    return SecretStore(KEY)


class TestMasterKey:
    def test_parses_hex(self):
        assert load_master_key(KEY.hex()) == KEY

    def test_rejects_short_and_non_hex(self):
        with pytest.raises(CryptoError):
            load_master_key("abcd")
        with pytest.raises(CryptoError):
            load_master_key("zz" * 32)

    def test_missing_env(self, monkeypatch):
        monkeypatch.delenv("MASTER_KEY", raising=False)
        with pytest.raises(CryptoError):
            load_master_key()

    def test_reads_env(self, monkeypatch):
        monkeypatch.setenv("MASTER_KEY", KEY.hex())
        assert load_master_key() == KEY


class TestRoundTrip:
    def test_put_get(self):
        store = make_store()
        store.put("ann", "tokens/github", "ghp_secret", now=1)
        assert store.get("ann", "tokens/github") == "ghp_secret"

    @given(st.text(max_size=200))
    def test_any_text_survives(self, value):
        store = make_store()
        store.put("ann", "p/x", value, now=0)
        assert store.get("ann", "p/x") == value

    def test_update_bumps_version_and_rotates_nonce(self):
        store = make_store()
        e1 = store.put("ann", "p/x", "one", now=1)
        first_nonce = e1.nonce_b64
        e2 = store.put("ann", "p/x", "two", now=2)
        assert e2.version == 2 and e2.created_at == 1 and e2.updated_at == 2
        assert e2.nonce_b64 != first_nonce
        assert store.get("ann", "p/x") == "two"

    def test_same_value_encrypts_differently_each_time(self):
        store = make_store()
        n1, c1 = store.encrypt("ann", "p/x", "same")
        n2, c2 = store.encrypt("ann", "p/x", "same")
        assert (n1, c1) != (n2, c2)


class TestScoping:
    def test_cross_user_read_looks_like_absence(self):
        store = make_store()
        store.put("ann", "p/x", "v", now=0)
        with pytest.raises(NotFoundError) as fresh:
            store.get("bob", "p/never-created")
        with pytest.raises(NotFoundError) as cross:
            store.get("bob", "p/x")
        assert str(fresh.value) == str(cross.value).replace("p/x", "p/never-created")

    def test_list_is_per_user_and_prefix_filtered(self):
        store = make_store()
        store.put("ann", "deployments/job-0001/token", "a", now=0)
        store.put("ann", "deployments/job-0002/token", "b", now=0)
        store.put("ann", "tokens/hub", "c", now=0)
        store.put("bob", "deployments/job-0001/token", "d", now=0)
        paths = [e["path"] for e in store.list("ann", prefix="deployments/")]
        assert paths == ["deployments/job-0001/token", "deployments/job-0002/token"]
        assert len(store.list("ann")) == 3

    def test_list_never_includes_values(self):
        store = make_store()
        store.put("ann", "p/x", "hunter2", now=0)
        dumped = json.dumps(store.list("ann"))
        assert "hunter2" not in dumped

    def test_delete_prefix_cascades(self):
        store = make_store()
        store.put("ann", "deployments/job-0001/a", "1", now=0)
        store.put("ann", "deployments/job-0001/b", "2", now=0)
        store.put("ann", "deployments/job-0010/a", "3", now=0)
        deleted = store.delete_prefix("ann", "deployments/job-0001/")
        assert deleted == ["deployments/job-0001/a", "deployments/job-0001/b"]
        assert [e["path"] for e in store.list("ann")] == ["deployments/job-0010/a"]

    def test_delete_unknown_raises(self):
        store = make_store()
        with pytest.raises(NotFoundError):
            store.delete("ann", "p/x")


class TestEnvelope:
    def test_state_never_contains_plaintext(self):
        store = make_store()
        store.put("ann", "p/x", "super-plain-value", now=0)
        blob = json.dumps(store.to_state())
        assert "super-plain-value" not in blob
        assert "p/x" in blob  # paths are metadata, values are not

    def test_state_round_trip_decrypts_with_same_key(self):
        store = make_store()
        store.put("ann", "p/x", "v1", now=0)
        other = SecretStore(KEY)
        other.from_state(store.to_state())
        assert other.get("ann", "p/x") == "v1"

    def test_wrong_key_fails_authentication(self):
        store = make_store()
        store.put("ann", "p/x", "v1", now=0)
        other = SecretStore(OTHER_KEY)
        other.from_state(store.to_state())
        with pytest.raises(CryptoError):
            other.get("ann", "p/x")

    def test_ciphertext_cannot_be_replanted_on_other_path(self):
        store = make_store()
        entry = store.put("ann", "p/x", "v1", now=0)
        store.put_encrypted("ann", "p/y", entry.nonce_b64, entry.ciphertext_b64, now=1)
        with pytest.raises(CryptoError):
            store.get("ann", "p/y")

    @pytest.mark.parametrize("path", ["", "/abs", "trailing/", "a//b"])
    def test_path_shape_enforced(self, path):
        store = make_store()
        with pytest.raises(ValidationError):
            store.put("ann", path, "v", now=0)
