import numpy as np
import pytest

from aqdetect import synth
from aqdetect.series import WEATHER


class TestGenerate:
    def test_shapes_and_determinism(self):
        spec = synth.SynthSpec(days=10, seed=4)
        a = synth.generate(spec)
        b = synth.generate(synth.SynthSpec(days=10, seed=4))
        assert a.pollutant_values.shape == (240,)
        assert np.array_equal(a.pollutant_values, b.pollutant_values)
        for name in WEATHER:
            assert np.array_equal(a.weather_values[name], b.weather_values[name])

    def test_different_seeds_differ(self):
        a = synth.generate(synth.SynthSpec(days=10, seed=4))
        b = synth.generate(synth.SynthSpec(days=10, seed=5))
        assert not np.array_equal(a.pollutant_values, b.pollutant_values)

    def test_zero_noise_is_pure_periodic(self):
        spec = synth.SynthSpec(days=14, noise_sigma=0.0, seed=1)
        r = synth.generate(spec)
        x = r.pollutant_values
        # one-week periodicity holds exactly without noise
        week = 24 * 7
        assert np.allclose(x[:week], x[week : 2 * week], atol=1e-9)

    def test_planted_anomaly_changes_values_inside_interval_only(self):
        base_spec = synth.SynthSpec(days=10, seed=4)
        base = synth.generate(base_spec)
        spec = synth.SynthSpec(days=10, seed=4)
        spec.anomalies = [synth.PlantedAnomaly("level_shift", start_step=100, length=20, magnitude=30.0)]
        r = synth.generate(spec)
        diff = np.nonzero(r.pollutant_values != base.pollutant_values)[0]
        assert diff.min() == 100
        assert diff.max() == 119

    def test_labels_match_anomalies(self):
        spec = synth.SynthSpec(days=10, seed=4)
        spec.anomalies = [
            synth.PlantedAnomaly("spike", start_step=50, length=6, magnitude=25.0),
            synth.PlantedAnomaly("trend_break", start_step=120, length=30, magnitude=20.0),
        ]
        r = synth.generate(spec)
        assert len(r.labels) == 2
        station, attr, start, end = r.labels[0]
        assert station == spec.station_id
        assert attr == spec.pollutant
        assert start == spec.start + 50 * 3600
        assert end == spec.start + 55 * 3600

    def test_anomaly_outside_series_rejected(self):
        spec = synth.SynthSpec(days=2, seed=4)
        spec.anomalies = [synth.PlantedAnomaly("spike", start_step=100, length=6, magnitude=5.0)]
        with pytest.raises(ValueError):
            synth.generate(spec)


class TestAutoAnomalies:
    def test_count_and_determinism(self):
        spec = synth.SynthSpec(days=120, seed=11)
        a = synth.auto_anomalies(spec, 10)
        b = synth.auto_anomalies(synth.SynthSpec(days=120, seed=11), 10)
        assert len(a) == 10
        assert [(x.kind, x.start_step, x.length, x.magnitude) for x in a] == [
            (x.kind, x.start_step, x.length, x.magnitude) for x in b
        ]

    def test_non_overlapping_and_sorted(self):
        spec = synth.SynthSpec(days=120, seed=7)
        anomalies = synth.auto_anomalies(spec, 10)
        for prev, cur in zip(anomalies, anomalies[1:]):
            assert prev.start_step + prev.length <= cur.start_step

    def test_too_many_for_series_rejected(self):
        spec = synth.SynthSpec(days=2, seed=7)
        with pytest.raises(ValueError):
            synth.auto_anomalies(spec, 10)


class TestCsv:
    def test_readings_cover_all_attributes(self):
        spec = synth.SynthSpec(days=3, seed=2)
        r = synth.generate(spec)
        text = synth.readings_csv(r)
        lines = text.strip().splitlines()
        assert lines[0] == "station_id,timestamp,attribute,value"
        assert len(lines) == 1 + 5 * 72
        assert f"{spec.station_id},2021-01-01T00:00:00Z,{spec.pollutant}," in text

    def test_byte_identical_for_same_seed(self):
        a = synth.generate(synth.SynthSpec(days=5, seed=9))
        b = synth.generate(synth.SynthSpec(days=5, seed=9))
        assert synth.readings_csv(a) == synth.readings_csv(b)
        assert synth.labels_csv(a) == synth.labels_csv(b)
        assert synth.stations_csv(a) == synth.stations_csv(b)

    def test_labels_csv_rows(self):
        spec = synth.SynthSpec(days=60, seed=13)
        spec.anomalies = synth.auto_anomalies(spec, 10)[:10]
        # keep exactly 10 spike rows for the count contract
        spec.anomalies = [
            synth.PlantedAnomaly("spike", a.start_step, 6, 25.0) for a in spec.anomalies
        ]
        r = synth.generate(spec)
        text = synth.labels_csv(r)
        lines = text.strip().splitlines()
        assert lines[0] == "station_id,attribute,start,end"
        assert len(lines) == 11


class TestSpecRoundTrip:
    def test_dict_round_trip(self):
        spec = synth.SynthSpec(days=30, seed=5)
        spec.anomalies = synth.auto_anomalies(spec, 3)
        d = synth.spec_to_dict(spec)
        back = synth.spec_from_dict(d)
        assert back.days == spec.days
        assert back.start == spec.start
        assert len(back.anomalies) == 3
        assert back.anomalies[0].start_step == spec.anomalies[0].start_step

    def test_int_anomalies_auto_plants(self):
        d = synth.spec_to_dict(synth.SynthSpec(days=60, seed=5))
        d["anomalies"] = 4
        spec = synth.spec_from_dict(d)
        assert len(spec.anomalies) == 4
