"""Pair building, averaging synthesis, interpolation geometry, augmented ingestion."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pyrocol.augment import (
    PairPlan,
    build_pairs,
    ingest_augmented,
    pair_synthesize,
    smote_interpolate,
    synthesize_pairs_report,
)
from pyrocol.dataset import (
    Dataset,
    Provenance,
    Restraint,
    load_csv,
    write_csv,
)
from pyrocol.errors import (
    DimensionMismatchError,
    InsufficientDataError,
    MissingLabelError,
    UOutOfRangeError,
    WrongProvenanceError,
)
from test_dataset import GOOD_ROW, make_record, write_rows


class TestInterpolate:
    def test_endpoints(self):
        a, b = np.array([200.0, 30.0]), np.array([400.0, 50.0])
        assert np.array_equal(smote_interpolate(a, b, 0.0), a)
        assert np.array_equal(smote_interpolate(a, b, 1.0), b)

    def test_midpoint(self):
        out = smote_interpolate([200.0, 30.0], [400.0, 50.0], 0.5)
        assert np.array_equal(out, [300.0, 40.0])

    def test_errors(self):
        with pytest.raises(DimensionMismatchError):
            smote_interpolate([1.0], [1.0, 2.0], 0.5)
        with pytest.raises(UOutOfRangeError):
            smote_interpolate([1.0], [2.0], 1.5)

    @given(st.lists(st.tuples(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6)),
                    min_size=1, max_size=8),
           st.floats(0, 1))
    @settings(max_examples=100)
    def test_stays_in_bounding_box(self, pairs, u):
        a = np.array([x for x, _ in pairs])
        b = np.array([y for _, y in pairs])
        out = smote_interpolate(a, b, u)
        assert np.all(out >= np.minimum(a, b) - 1e-9)
        assert np.all(out <= np.maximum(a, b) + 1e-9)


def spall_record(rid, w, sp=True, **kw):
    return make_record(rid=rid, W=w, FR=None, SP=sp, L=None, fy=None, **kw)


class TestBuildPairs:
    def test_obvious_nearest_neighbors(self):
        # one informative feature; separated clusters at 200ish and 500ish
        ds = Dataset(tuple([
            spall_record("a", 200.0), spall_record("b", 203.0),
            spall_record("c", 500.0), spall_record("d", 503.0),
        ]))
        plan = build_pairs(ds, target_count=2, seed=0)
        assert set(frozenset(p) for p in plan.pairs) == {
            frozenset(("a", "b")), frozenset(("c", "d"))}

    def test_target_count_n_minus_one(self):
        rng = np.random.default_rng(0)
        recs = tuple(
            spall_record(f"r{i:03d}", float(w), sp=bool(i % 2),
                         fc=float(f), C=float(c), P=float(p), r=float(rr))
            for i, (w, f, c, p, rr) in enumerate(zip(
                rng.uniform(152, 514, 167), rng.uniform(16, 126, 167),
                rng.uniform(13, 64, 167), rng.uniform(10, 5000, 167),
                rng.uniform(0.5, 11, 167)))
        )
        ds = Dataset(recs)
        plan = build_pairs(ds, target_count=166, seed=1)
        assert len(plan.pairs) == 166
        # everyone participates before anyone repeats
        from collections import Counter
        first_round = plan.pairs[:83]
        counts = Counter(x for p in first_round for x in p)
        assert max(counts.values()) == 1

    def test_single_record_insufficient(self):
        ds = Dataset((spall_record("only", 300.0),))
        with pytest.raises(InsufficientDataError):
            build_pairs(ds, 1, seed=0)

    def test_deterministic(self):
        recs = tuple(spall_record(f"r{i}", 150.0 + 17.0 * (i * i % 11)) for i in range(12))
        ds = Dataset(recs)
        assert build_pairs(ds, 10, seed=4).pairs == build_pairs(ds, 10, seed=9).pairs

    def test_ignores_non_real(self):
        ds = Dataset(tuple([
            spall_record("a", 200.0), spall_record("b", 210.0),
            spall_record("s", 205.0, provenance=Provenance.SYNTHETIC),
        ]))
        plan = build_pairs(ds, 5, seed=0)
        assert all("s" not in p for p in plan.pairs)


class TestPairSynthesize:
    def pair_ds(self, sp_a, sp_b, **kw_b):
        return Dataset((spall_record("a", 300.0, sp=sp_a),
                        spall_record("b", 340.0, sp=sp_b, fc=65.0, **kw_b)))

    @pytest.mark.parametrize("sp_a,sp_b,expected", [
        (True, True, True),
        (False, False, False),
        (True, False, True),   # worst case for conservativeness
        (False, True, True),
    ])
    def test_label_rule(self, sp_a, sp_b, expected):
        ds = self.pair_ds(sp_a, sp_b)
        out = pair_synthesize(ds, PairPlan((("a", "b"),)))
        assert out[0].SP is expected

    def test_features_are_midpoints(self):
        ds = self.pair_ds(True, False)
        rec = pair_synthesize(ds, PairPlan((("a", "b"),)))[0]
        assert rec.W == 320.0
        assert rec.fc == 60.0
        assert rec.provenance is Provenance.SYNTHETIC
        assert rec.id == "syn:a+b"

    def test_missing_label_raises(self):
        unlabelled = make_record(rid="a", W=300.0, SP=None, FR=120.0, L=None, fy=None)
        ds = Dataset((unlabelled, spall_record("b", 340.0)))
        with pytest.raises(MissingLabelError):
            pair_synthesize(ds, PairPlan((("a", "b"),)))

    def test_categorical_disagreement_flagged(self):
        ds = Dataset((spall_record("a", 300.0, K=Restraint.FF),
                      spall_record("b", 340.0, K=Restraint.PP)))
        report = synthesize_pairs_report(ds, PairPlan((("a", "b"),)))
        assert report.categorical_disagreements == {"syn:a+b": ["K"]}
        assert report.records[0].K is Restraint.FF  # lexicographically-first parent


class TestDistributionPreservation:
    def test_synthetic_means_within_two_se(self):
        rng = np.random.default_rng(7)
        n = 120
        recs = tuple(
            spall_record(f"r{i:03d}", float(w), sp=bool(s), fc=float(f),
                         C=float(c), P=float(p), r=float(rr))
            for i, (w, f, c, p, rr, s) in enumerate(zip(
                rng.normal(330, 70, n), rng.normal(45, 20, n).clip(16, 126),
                rng.normal(34, 7, n).clip(14, 63), rng.uniform(100, 4900, n),
                rng.normal(2.3, 1.2, n).clip(0.4, 11), rng.integers(0, 2, n)))
        )
        ds = Dataset(recs)
        plan = build_pairs(ds, target_count=n - 1, seed=0)
        synth = pair_synthesize(ds, plan)
        for feat in ["W", "r", "fc", "C", "P"]:
            real = np.array([r.feature(feat) for r in recs])
            fake = np.array([r.feature(feat) for r in synth])
            se = real.std(ddof=1) / np.sqrt(len(real))
            assert abs(fake.mean() - real.mean()) <= 2.0 * se, feat


class TestIngestAugmented:
    def test_appends_with_provenance(self, tmp_path):
        base_p = tmp_path / "base.csv"
        write_rows(base_p, [GOOD_ROW])
        ds = load_csv(base_p)
        aug_p = tmp_path / "aug.csv"
        write_rows(aug_p, [
            "a1,augmented,420,1.8,4.4,80,500,FP,55,0,12.5,2100,HC,3,95,",
            "a2,augmented,300,2.4,2.9,35,410,FF,28,0,0,800,ISO834,4,150,0",
        ])
        merged = ingest_augmented(ds, aug_p)
        assert len(merged) == 3
        assert merged.provenance_counts()["augmented"] == 2

    def test_rejects_real_provenance(self, tmp_path):
        base_p = tmp_path / "base.csv"
        write_rows(base_p, [GOOD_ROW])
        ds = load_csv(base_p)
        aug_p = tmp_path / "bad.csv"
        write_rows(aug_p, ["x1,real,420,1.8,4.4,80,500,FP,55,0,12.5,2100,HC,3,95,"])
        with pytest.raises(WrongProvenanceError):
            ingest_augmented(ds, aug_p)

    def test_empty_file_unchanged(self, tmp_path):
        base_p = tmp_path / "base.csv"
        write_rows(base_p, [GOOD_ROW])
        ds = load_csv(base_p)
        aug_p = tmp_path / "empty.csv"
        write_rows(aug_p, [])
        merged = ingest_augmented(ds, aug_p)
        assert merged.records == ds.records
