"""HTTP API contract: schemas, prediction, explanation wire identity, errors."""

import numpy as np
import pytest
from starlette.testclient import TestClient

from pyrocol.dataset import Task
from pyrocol.ensemble import predict as ensemble_predict
from pyrocol.service import create_app
from test_dataset import make_record

RECORD = {
    "id": "x1", "W_mm": 350, "r_pct": 2.0, "L_m": 3.5, "fc_MPa": 60,
    "fy_MPa": 450, "K": "FF", "C_mm": 40, "ex_mm": 10, "ey_mm": 0,
    "P_kN": 1500, "E": "ASTM_E119", "S": 4,
}


@pytest.fixture(scope="module")
def client(spalling_model, fire_model, bench_small):
    app = create_app(
        {"spalling": spalling_model, "fire_resistance": fire_model},
        {"spalling": "fp-spall", "fire_resistance": "fp-fire"},
        batch_limit=100,
        background_records=list(bench_small.records[:64]),
    )
    return TestClient(app, raise_server_exceptions=False)


class TestSchemaRoutes:
    def test_schema_lists_every_feature(self, client):
        body = client.get("/v1/schema").json()
        names = [f["name"] for f in body["features"]]
        assert names == ["W", "r", "L", "fc", "fy", "K", "C", "ex", "ey", "P", "E", "S"]
        w = next(f for f in body["features"] if f["name"] == "W")
        assert (w["min"], w["max"]) == (200.0, 914.0)
        k = next(f for f in body["features"] if f["name"] == "K")
        assert k["categories"][:3] == ["FF", "FP", "PP"]

    def test_model_route(self, client):
        body = client.get("/v1/model").json()
        assert set(body["models"]) == {"spalling", "fire_resistance"}
        assert body["models"]["spalling"]["fingerprint"] == "fp-spall"

    def test_unknown_route_404(self, client):
        assert client.get("/v1/nothing").status_code == 404


class TestPredict:
    def test_single_record(self, client, spalling_model, fire_model):
        body = client.post("/v1/predict", json={"record": RECORD}).json()
        result = body["results"][0]
        rec = make_record(W=350.0, r=2.0, L=3.5, fc=60.0, fy=450.0, C=40.0,
                          ex=10.0, ey=0.0, P=1500.0)
        sp = ensemble_predict(spalling_model, rec, validate=False)
        fr = ensemble_predict(fire_model, rec, validate=False)
        assert result["sp_probability"] == pytest.approx(sp.sp_probability, abs=1e-12)
        assert result["sp_label"] == sp.sp_label
        assert result["fr_minutes"] == pytest.approx(fr.fr_minutes, abs=1e-12)
        assert result["rating_class"] == fr.rating.value

    def test_batch(self, client):
        body = client.post("/v1/predict",
                           json={"records": [RECORD, dict(RECORD, id="x2")]}).json()
        assert [r["id"] for r in body["results"]] == ["x1", "x2"]

    def test_validation_error_names_field(self, client):
        bad = dict(RECORD, S=9)
        resp = client.post("/v1/predict", json={"record": bad})
        assert resp.status_code == 400
        assert "S" in resp.json()["fields"]

    def test_batch_too_large(self, client):
        resp = client.post("/v1/predict", json={"records": [RECORD] * 101})
        assert resp.status_code == 413

    def test_missing_body_key(self, client):
        resp = client.post("/v1/predict", json={})
        assert resp.status_code == 400


class TestExplain:
    def test_efficiency_identity_over_the_wire(self, client):
        pred = client.post("/v1/predict", json={"record": RECORD}).json()["results"][0]
        exp = client.post("/v1/explain",
                          json={"record": RECORD, "task": "spalling"}).json()
        total = exp["baseline"] + sum(exp["contributions"].values())
        assert total == pytest.approx(exp["prediction"], abs=1e-6)
        assert exp["prediction"] == pytest.approx(pred["sp_probability"], abs=1e-9)
        assert exp["mode"] == "exact"

    def test_fire_resistance_sampled_mode(self, client):
        exp = client.post("/v1/explain",
                          json={"record": RECORD, "task": "fire_resistance"}).json()
        assert exp["mode"] == "sampled"
        assert exp["n_permutations"] > 0
        total = exp["baseline"] + sum(exp["contributions"].values())
        assert total == pytest.approx(exp["prediction"], abs=1e-6)

    def test_unknown_task(self, client):
        resp = client.post("/v1/explain", json={"record": RECORD, "task": "nope"})
        assert resp.status_code == 400


class TestCodal:
    def test_both_estimates_with_profile(self, client):
        body = client.post("/v1/codal", json={"record": RECORD, "mu_fi": 0.4}).json()
        assert body["profile"] == "printed"
        assert body["ec2_minutes"] > 0
        assert body["as3600_minutes"] is not None
        assert body["ec2_flags"]["defaulted_mu"] is False

    def test_alt_profile(self, client):
        body = client.post("/v1/codal",
                           json={"record": RECORD, "profile": "alt-n15"}).json()
        assert body["profile"] == "alt-n15"

    def test_unmappable_record_reports_error(self, client):
        no_length = {k: v for k, v in RECORD.items() if k != "L_m"}
        no_length["FR_min"] = 100  # keep a target so validation passes
        body = client.post("/v1/codal", json={"record": no_length}).json()
        assert body["ec2_minutes"] is None
        assert "ec2_error" in body
