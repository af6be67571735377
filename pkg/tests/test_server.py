import json
import time

import pytest
import requests

from aqdetect import pipeline, server, store, synth


@pytest.fixture()
def api(tmp_path):
    st = store.Store(tmp_path / "data")
    httpd, base = server.start_background(st, port=0)
    yield st, base
    httpd.shutdown()
    httpd.server_close()


def ingest_synth(base, days=20, seed=6, anomalies=0):
    spec = synth.SynthSpec(days=days, noise_sigma=1.0, seed=seed)
    if anomalies:
        spec.anomalies = synth.auto_anomalies(spec, anomalies)
    r = synth.generate(spec)
    resp = requests.post(f"{base}/api/datasets", json={
        "readings_csv": synth.readings_csv(r),
        "stations_csv": synth.stations_csv(r),
    })
    assert resp.status_code == 201, resp.text
    return resp.json()["dataset_id"], spec


def fast_config():
    cfg = pipeline.default_config()
    idx = next(i for i, b in enumerate(cfg.blocks) if b.name == "lstm_regressor")
    cfg.blocks[idx] = pipeline.BlockSpec("persistence_regressor")
    cfg.block("find_anomaly").hyperparameters.update({"h": 120, "stride": 60})
    return cfg.to_dict()


def submit_and_wait(base, ds_id, seed=1, timeout=60.0):
    resp = requests.post(f"{base}/api/experiments", json={
        "config": fast_config(), "dataset": ds_id, "seed": seed,
    })
    assert resp.status_code == 202, resp.text
    exp_id = resp.json()["experiment_id"]
    deadline = time.time() + timeout
    while time.time() < deadline:
        status = requests.get(f"{base}/api/experiments/{exp_id}").json()
        if status["status"] in ("done", "failed", "cancelled"):
            return exp_id, status
        time.sleep(0.1)
    raise TimeoutError("experiment did not finish")


class TestDatasets:
    def test_ingest_and_list(self, api):
        st, base = api
        ds_id, _ = ingest_synth(base)
        listing = requests.get(f"{base}/api/datasets").json()
        assert any(d["dataset_id"] == ds_id for d in listing["datasets"])

    def test_stations_endpoint(self, api):
        st, base = api
        ds_id, spec = ingest_synth(base)
        out = requests.get(f"{base}/api/stations", params={"dataset": ds_id}).json()
        assert out["stations"][0]["station_id"] == spec.station_id
        assert out["stations"][0]["kind"] == spec.station_kind
        assert spec.pollutant in out["stations"][0]["attributes"]

    def test_unknown_dataset_404(self, api):
        st, base = api
        resp = requests.get(f"{base}/api/stations", params={"dataset": "zzz"})
        assert resp.status_code == 404
        assert "error" in resp.json()

    def test_conflicting_ingest_409(self, api):
        st, base = api
        readings = (
            "station_id,timestamp,attribute,value\n"
            "A1,2021-01-01T00:00:00Z,PM25,1.0\n"
            "A1,2021-01-01T00:00:00Z,PM25,2.0\n"
        )
        stations = "station_id,name,latitude,longitude,kind\nA1,X,1.0,2.0,general\n"
        resp = requests.post(f"{base}/api/datasets", json={
            "readings_csv": readings, "stations_csv": stations,
        })
        assert resp.status_code == 409


class TestExperiments:
    def test_submit_poll_result_signals(self, api):
        st, base = api
        ds_id, spec = ingest_synth(base, days=30, anomalies=3)
        exp_id, status = submit_and_wait(base, ds_id)
        assert status["status"] == "done"
        assert all(v == "done" for v in status["models"].values())

        result = requests.get(f"{base}/api/experiments/{exp_id}/result").json()
        assert result["summary"]["model_count"] == 1

        models = requests.get(f"{base}/api/experiments/{exp_id}/models").json()["models"]
        assert len(models) == 1
        assert models[0]["status"] == "done"
        assert "event_count" in models[0]

        sig = requests.get(
            f"{base}/api/experiments/{exp_id}/signals",
            params={"station": spec.station_id, "attribute": spec.pollutant},
        ).json()
        n = len(sig["timestamps"])
        assert n == len(sig["y"]) == len(sig["y_hat"]) == len(sig["e_s"])
        assert isinstance(sig["events"], list)

    def test_invalid_config_400_with_violations(self, api):
        st, base = api
        ds_id, _ = ingest_synth(base)
        bad = fast_config()
        bad["blocks"][4]["hyperparameters"]["l_s"] = 0
        resp = requests.post(f"{base}/api/experiments", json={"config": bad, "dataset": ds_id})
        assert resp.status_code == 400
        assert resp.json()["violations"]

    def test_registry_lists_blocks_and_defaults(self, api):
        st, base = api
        reg = requests.get(f"{base}/api/registry").json()
        assert "lstm_regressor" in reg["blocks"]
        assert reg["blocks"]["window"]["hyperparameters"]["l_s"]["min"] == 1
        names = [b["name"] for b in reg["default_config"]["blocks"]]
        assert names[0] == "resample"
        assert names[-1] == "find_anomaly"


class TestSeriesEndpoint:
    def test_series_range_and_resolution(self, api):
        st, base = api
        ds_id, spec = ingest_synth(base, days=40)
        out = requests.get(f"{base}/api/series", params={
            "dataset": ds_id, "station": spec.station_id, "attribute": spec.pollutant,
            "from": "2021-01-02T00:00:00Z", "to": "2021-01-04T00:00:00Z",
        }).json()
        assert len(out["values"]) == 49
        down = requests.get(f"{base}/api/series", params={
            "dataset": ds_id, "station": spec.station_id, "attribute": spec.pollutant,
            "resolution": 50,
        }).json()
        assert len(down["values"]) <= 50
        assert down["downsampled"] is not None


class TestEventsApi:
    def test_crud_round_trip(self, api):
        st, base = api
        ds_id, spec = ingest_synth(base, days=30, anomalies=3)
        exp_id, _ = submit_and_wait(base, ds_id)

        create = requests.post(f"{base}/api/events", json={
            "station_id": spec.station_id,
            "attribute": spec.pollutant,
            "start": "2021-01-06T00:00:00Z",
            "end": "2021-01-07T00:00:00Z",
            "severity": 2,
            "comment": "weekend haze",
            "experiment_id": exp_id,
            "author": "analyst-a",
        })
        assert create.status_code == 201, create.text
        ev = create.json()
        assert ev["source"] == "manual"

        fetched = requests.get(f"{base}/api/events", params={"experiment": exp_id}).json()
        assert any(e["id"] == ev["id"] for e in fetched["events"])

        patched = requests.patch(f"{base}/api/events/{ev['id']}", json={"severity": 4})
        assert patched.status_code == 200
        assert patched.json()["severity"] == 4

        ann = requests.post(f"{base}/api/events/{ev['id']}/annotations",
                            json={"text": "confirmed", "tags": ["news"], "author": "eb"})
        assert ann.status_code == 201
        assert ann.json()["annotations"][0]["text"] == "confirmed"

        deleted = requests.delete(f"{base}/api/events/{ev['id']}")
        assert deleted.status_code == 200
        remaining = requests.get(f"{base}/api/events", params={"experiment": exp_id}).json()
        assert all(e["id"] != ev["id"] for e in remaining["events"])

    def test_unknown_event_404(self, api):
        st, base = api
        resp = requests.delete(f"{base}/api/events/ev-zzz")
        assert resp.status_code == 404

    def test_create_missing_fields_400(self, api):
        st, base = api
        ds_id, spec = ingest_synth(base)
        resp = requests.post(f"{base}/api/events", json={"station_id": spec.station_id})
        assert resp.status_code == 400


class TestAggregatesEndpoint:
    def test_levels(self, api):
        st, base = api
        ds_id, spec = ingest_synth(base, days=35)
        day = requests.get(f"{base}/api/aggregates", params={
            "dataset": ds_id, "station": spec.station_id, "attribute": spec.pollutant,
            "level": "day", "anchor": "2021-01-10T00:00:00Z",
        }).json()
        assert len(day["buckets"]) == 31
        month = requests.get(f"{base}/api/aggregates", params={
            "dataset": ds_id, "station": spec.station_id, "attribute": spec.pollutant,
            "level": "month", "anchor": "2021-01-10T00:00:00Z",
        }).json()
        assert len(month["buckets"]) == 12
        year = requests.get(f"{base}/api/aggregates", params={
            "dataset": ds_id, "station": spec.station_id, "attribute": spec.pollutant,
            "level": "year", "anchor": "2021-01-10T00:00:00Z",
        }).json()
        assert len(year["buckets"]) == 1


class TestCors:
    def test_preflight_and_headers(self, api):
        st, base = api
        resp = requests.options(f"{base}/api/datasets")
        assert resp.status_code == 204
        assert resp.headers["Access-Control-Allow-Origin"] == "*"
        got = requests.get(f"{base}/api/datasets")
        assert got.headers["Access-Control-Allow-Origin"] == "*"
