import numpy as np
import pytest

from aqdetect import pipeline, store, synth


def small_dataset(tmp_path, days=14, noise=1.0, seed=3, anomalies=0, name="ds"):
    spec = synth.SynthSpec(days=days, noise_sigma=noise, seed=seed)
    if anomalies:
        spec.anomalies = synth.auto_anomalies(spec, anomalies)
    result = synth.generate(spec)
    st = store.Store(tmp_path / name)
    out = st.ingest(synth.readings_csv(result), synth.stations_csv(result))
    return st, out["dataset_id"], spec


def fast_config():
    cfg = pipeline.default_config()
    cfg.block("lstm_regressor").hyperparameters.update({"hidden_dim": 8, "epochs": 3})
    cfg.block("find_anomaly").hyperparameters.update({"h": 120, "stride": 60})
    return cfg


class TestValidate:
    def test_default_config_is_valid(self):
        assert pipeline.validate(pipeline.default_config()) == []

    def test_out_of_range_hyperparameter_names_field_and_range(self):
        cfg = pipeline.default_config()
        cfg.block("window").hyperparameters["l_s"] = 0
        violations = pipeline.validate(cfg)
        assert any("window.l_s" in v and "[1, 1000]" in v for v in violations)

    def test_regressor_before_window_is_ordering_violation(self):
        cfg = pipeline.default_config()
        blocks = cfg.blocks
        w = next(i for i, b in enumerate(blocks) if b.name == "window")
        blocks[w], blocks[w + 1] = blocks[w + 1], blocks[w]
        violations = pipeline.validate(cfg)
        assert any("ordering" in v and "lstm_regressor" in v for v in violations)

    def test_unknown_block_rejected(self):
        cfg = pipeline.default_config()
        cfg.blocks.append(pipeline.BlockSpec("mystery_block"))
        assert any("unknown block" in v for v in pipeline.validate(cfg))

    def test_unknown_hyperparameter_rejected(self):
        cfg = pipeline.default_config()
        cfg.block("impute").hyperparameters["momentum"] = 3
        assert any("impute.momentum" in v for v in pipeline.validate(cfg))

    def test_wrong_type_rejected(self):
        cfg = pipeline.default_config()
        cfg.block("window").hyperparameters["l_s"] = 12.5
        assert any("window.l_s" in v for v in pipeline.validate(cfg))

    def test_incomplete_chain_rejected(self):
        cfg = pipeline.default_config()
        cfg.blocks = cfg.blocks[:-1]
        assert any("must end at events" in v for v in pipeline.validate(cfg))


class TestConfigHash:
    def test_stable_under_key_reordering(self):
        a = pipeline.PipelineConfig.from_dict(
            {"interval": 3600, "split_fraction": 0.5,
             "blocks": [{"name": "resample", "hyperparameters": {"agg": "mean"}}]}
        )
        b = pipeline.PipelineConfig.from_dict(
            {"blocks": [{"hyperparameters": {"agg": "mean"}, "name": "resample"}],
             "split_fraction": 0.5, "interval": 3600}
        )
        assert pipeline.config_hash(a) == pipeline.config_hash(b)

    def test_defaults_equal_explicit_defaults(self):
        sparse = pipeline.default_config()
        explicit = pipeline.default_config()
        explicit.block("window").hyperparameters["l_s"] = 24
        assert pipeline.config_hash(sparse) == pipeline.config_hash(explicit)

    def test_changes_when_semantics_change(self):
        a = pipeline.default_config()
        b = pipeline.default_config()
        b.block("window").hyperparameters["l_s"] = 30
        assert pipeline.config_hash(a) != pipeline.config_hash(b)

    def test_changes_with_interval(self):
        a = pipeline.default_config()
        b = pipeline.default_config()
        b.interval = 1800
        assert pipeline.config_hash(a) != pipeline.config_hash(b)


class TestRun:
    def test_single_model_end_to_end(self, tmp_path):
        st, ds_id, spec = small_dataset(tmp_path)
        result = pipeline.run(fast_config(), st.dataset(ds_id), dataset_id=ds_id, seed=0)
        assert len(result.models) == 1
        m = result.models[0]
        assert m.status == "done"
        assert m.mape is not None and m.mape >= 0
        assert m.predictions is not None
        assert len(m.windows) >= 1
        summary = result.summary()
        assert summary["model_count"] == 1
        assert summary["event_count"] == sum(len(mm.events) for mm in result.models)

    def test_deterministic_result_hash(self, tmp_path):
        st, ds_id, _ = small_dataset(tmp_path)
        cfg = fast_config()
        r1 = pipeline.run(cfg, st.dataset(ds_id), dataset_id=ds_id, seed=4)
        r2 = pipeline.run(cfg, st.dataset(ds_id), dataset_id=ds_id, seed=4)
        assert r1.result_hash() == r2.result_hash()
        assert r1.report_bytes() == r2.report_bytes()

    def test_different_seed_changes_hash(self, tmp_path):
        st, ds_id, _ = small_dataset(tmp_path)
        cfg = fast_config()
        r1 = pipeline.run(cfg, st.dataset(ds_id), dataset_id=ds_id, seed=4)
        r2 = pipeline.run(cfg, st.dataset(ds_id), dataset_id=ds_id, seed=5)
        assert r1.result_hash() != r2.result_hash()

    def test_persistence_swap_needs_no_other_change(self, tmp_path):
        st, ds_id, _ = small_dataset(tmp_path)
        cfg = fast_config()
        idx = next(i for i, b in enumerate(cfg.blocks) if b.name == "lstm_regressor")
        cfg.blocks[idx] = pipeline.BlockSpec("persistence_regressor")
        assert pipeline.validate(cfg) == []
        result = pipeline.run(cfg, st.dataset(ds_id), dataset_id=ds_id, seed=0)
        m = result.models[0]
        assert m.status == "done"
        assert m.mape is not None
        assert m.checkpoint is None

    def test_missing_weather_fails_model_not_experiment(self, tmp_path):
        spec = synth.SynthSpec(days=10, noise_sigma=1.0, seed=2)
        result = synth.generate(spec)
        # strip one weather attribute entirely
        text = synth.readings_csv(result)
        lines = [l for l in text.splitlines() if ",humidity," not in l]
        st = store.Store(tmp_path / "ds2")
        out = st.ingest("\n".join(lines) + "\n", synth.stations_csv(result))
        res = pipeline.run(fast_config(), st.dataset(out["dataset_id"]),
                           dataset_id=out["dataset_id"], seed=0)
        assert len(res.models) == 1
        assert res.models[0].status == "failed"
        assert "UnimputableColumn" in res.models[0].error

    def test_invalid_config_rejected(self, tmp_path):
        st, ds_id, _ = small_dataset(tmp_path)
        cfg = fast_config()
        cfg.block("window").hyperparameters["l_s"] = 0
        with pytest.raises(pipeline.InvalidConfig):
            pipeline.run(cfg, st.dataset(ds_id), dataset_id=ds_id, seed=0)

    def test_events_stamped_with_station_and_attribute(self, tmp_path):
        st, ds_id, spec = small_dataset(tmp_path, days=30, noise=1.5, seed=8, anomalies=3)
        result = pipeline.run(fast_config(), st.dataset(ds_id), dataset_id=ds_id, seed=1)
        for ev in result.models[0].events:
            assert ev.station_id == spec.station_id
            assert ev.attribute == spec.pollutant

    def test_excluded_gap_rows_survive_to_display(self, tmp_path):
        spec = synth.SynthSpec(days=10, noise_sigma=1.0, seed=2)
        result = synth.generate(spec)
        # knock a 30h hole in the pollutant series (> max_gap of 24)
        text = synth.readings_csv(result)
        lines = text.splitlines()
        header, rows = lines[0], lines[1:]
        pm_rows = [l for l in rows if f",{spec.pollutant}," in l]
        hole = set(pm_rows[50:80])
        kept = [l for l in rows if l not in hole]
        st = store.Store(tmp_path / "ds3")
        out = st.ingest("\n".join([header] + kept) + "\n", synth.stations_csv(result))
        res = pipeline.run(fast_config(), st.dataset(out["dataset_id"]),
                           dataset_id=out["dataset_id"], seed=0)
        m = res.models[0]
        assert m.status == "done"
        # predictions still cover the full row range
        assert len(m.predictions.y) == 10 * 24 - 24


class TestCancellation:
    def test_cancel_skips_models_not_started(self, tmp_path):
        st, ds_id, _ = small_dataset(tmp_path)
        calls = []

        def cancel_after_first():
            return len(calls) >= 1

        def progress(station, attr, state):
            if state in ("done", "failed"):
                calls.append((station, attr))

        cfg = fast_config()
        result = pipeline.run(
            cfg, st.dataset(ds_id), dataset_id=ds_id, seed=0,
            pollutants=["PM25", "NO2"],
            progress=progress, should_cancel=cancel_after_first,
        )
        # first model completed and is retained; the second never started
        assert len(result.models) == 1
        assert result.models[0].status in ("done", "failed")


class TestModelSeed:
    def test_stable_across_processes(self):
        assert pipeline.model_seed(7, "S1", "PM25") == pipeline.model_seed(7, "S1", "PM25")

    def test_varies_by_station_and_attribute(self):
        seeds = {
            pipeline.model_seed(7, st, attr)
            for st in ("S1", "S2")
            for attr in ("PM25", "NO2")
        }
        assert len(seeds) == 4


class TestKGrid:
    def test_default_grid(self):
        hp = {"k_min": 0.5, "k_max": 12.0, "k_step": 0.5}
        grid = pipeline.k_grid_from(hp)
        assert grid[0] == 0.5
        assert grid[-1] == 12.0
        assert len(grid) == 24
