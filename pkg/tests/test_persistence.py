"""JSON bundle round-trips, fingerprints, corruption handling."""

import json

import numpy as np
import pytest

from pyrocol.dataset import DEFAULT_SCHEMA, Task
from pyrocol.ensemble import predict_batch
from pyrocol.errors import (
    CorruptFileError,
    SchemaFingerprintMismatchError,
    VersionMismatchError,
)
from pyrocol.persistence import (
    bundle_dict,
    load_bundle,
    load_model,
    restore_ensemble,
    save_model,
    schema_fingerprint,
)


@pytest.fixture()
def saved(tmp_path, fire_model):
    path = tmp_path / "model.json"
    save_model(bundle_dict(fire_model, seed=11, split_fraction=0.7), path)
    return path


class TestRoundTrip:
    def test_predictions_bit_identical(self, saved, fire_model, bench_small):
        restored = load_model(saved, DEFAULT_SCHEMA)
        recs = list(bench_small.records[:60])
        before = predict_batch(fire_model, recs, validate=False)
        after = predict_batch(restored, recs, validate=False)
        for a, b in zip(before, after):
            assert a.fr_minutes == b.fr_minutes  # exact, not approximate
            assert a.per_member == b.per_member

    def test_spalling_round_trip(self, tmp_path, spalling_model, bench_small):
        path = tmp_path / "sp.json"
        save_model(bundle_dict(spalling_model, seed=11, split_fraction=0.7), path)
        restored = load_model(path, DEFAULT_SCHEMA)
        recs = list(bench_small.records[:60])
        before = predict_batch(spalling_model, recs, validate=False)
        after = predict_batch(restored, recs, validate=False)
        for a, b in zip(before, after):
            assert a.sp_probability == b.sp_probability
            assert a.sp_label == b.sp_label

    def test_envelope_fields(self, saved, fire_model):
        bundle = load_bundle(saved)
        assert bundle["format_version"] == 1
        assert bundle["task"] == "fire_resistance"
        assert bundle["ensemble"]["chosen"] == fire_model.chosen
        assert bundle["metadata"]["trained_at"] is None
        assert set(bundle["members"]) == {"forest", "gbt", "mlp"}

    def test_save_deterministic_bytes(self, tmp_path, fire_model):
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_model(bundle_dict(fire_model, seed=11, split_fraction=0.7), p1)
        save_model(bundle_dict(fire_model, seed=11, split_fraction=0.7), p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestFailures:
    def test_wrong_fingerprint(self, saved):
        bundle = load_bundle(saved)
        bundle["schema_fingerprint"] = "0" * 64
        with pytest.raises(SchemaFingerprintMismatchError):
            restore_ensemble(bundle, DEFAULT_SCHEMA)

    def test_version_mismatch(self, saved, tmp_path):
        bundle = load_bundle(saved)
        bundle["format_version"] = 99
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(bundle), encoding="utf-8")
        with pytest.raises(VersionMismatchError):
            load_bundle(bad)

    def test_truncated_file(self, saved, tmp_path):
        data = saved.read_bytes()[: len(saved.read_bytes()) // 2]
        bad = tmp_path / "trunc.json"
        bad.write_bytes(data)
        with pytest.raises(CorruptFileError):
            load_bundle(bad)

    def test_missing_section(self, tmp_path):
        bad = tmp_path / "empty.json"
        bad.write_text("{}", encoding="utf-8")
        with pytest.raises(CorruptFileError):
            load_bundle(bad)


class TestFingerprint:
    def test_stable_and_sensitive(self):
        fp = schema_fingerprint(DEFAULT_SCHEMA)
        assert fp == schema_fingerprint(DEFAULT_SCHEMA)
        assert len(fp) == 64
