"""File-backed persistence with a single-writer journal.

Every mutation appends one JSON line to ``journal.jsonl``; bulky payloads
(readings CSVs, experiment results) live in content-addressed files next to
it and journal entries reference them. Re-opening a store replays the journal
and reconstructs exactly the same state, which is the backup/recovery story
and a tested invariant.

Layout under the store root:

    journal.jsonl
    datasets/<dataset_id>/readings.csv
    datasets/<dataset_id>/stations.csv
    experiments/<experiment_id>/result.json
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import threading
from calendar import monthrange
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import pipeline
from .errors import AqError, IngestConflict, InvalidConfig, NotFound, UnknownDataset
from .series import ATTRIBUTES, POLLUTANTS, RawSeries, resample
from .timefmt import format_iso, parse_iso

STATION_KINDS = ("roadside", "general")


class Dataset:
    """Ingested readings keyed by (station, attribute), plus station metadata."""

    def __init__(self, dataset_id: str, stations: dict, readings: dict, provenance: dict):
        self.id = dataset_id
        self.stations = stations          # station_id -> {name, latitude, longitude, kind}
        self.readings = readings          # (station_id, attribute) -> RawSeries
        self.provenance = provenance

    def station_ids(self):
        return sorted(self.stations)

    def attributes(self, station_id: str):
        return sorted(attr for (st, attr) in self.readings if st == station_id)

    def raw_series(self, station_id: str, attribute: str):
        return self.readings.get((station_id, attribute))

    def time_range(self):
        lo, hi = None, None
        for series in self.readings.values():
            if len(series) == 0:
                continue
            s, e = int(series.timestamps[0]), int(series.timestamps[-1])
            lo = s if lo is None else min(lo, s)
            hi = e if hi is None else max(hi, e)
        return lo, hi

    @property
    def row_count(self) -> int:
        return sum(len(s) for s in self.readings.values())


def parse_stations_csv(text: str) -> dict:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    expected = ["station_id", "name", "latitude", "longitude", "kind"]
    if header is None or [h.strip() for h in header] != expected:
        raise AqError(f"stations CSV header must be {','.join(expected)}")
    stations = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 5:
            raise AqError(f"stations CSV line {lineno}: expected 5 fields, got {len(row)}")
        sid, name, lat, lon, kind = [f.strip() for f in row]
        if kind not in STATION_KINDS:
            raise AqError(f"stations CSV line {lineno}: kind must be one of {STATION_KINDS}")
        try:
            stations[sid] = {
                "name": name,
                "latitude": float(lat),
                "longitude": float(lon),
                "kind": kind,
            }
        except ValueError as exc:
            raise AqError(f"stations CSV line {lineno}: {exc}") from None
    if not stations:
        raise AqError("stations CSV has no rows")
    return stations


def parse_readings_csv(text: str, stations: dict) -> dict:
    """Validate and group readings; duplicates with equal values are dropped."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    expected = ["station_id", "timestamp", "attribute", "value"]
    if header is None or [h.strip() for h in header] != expected:
        raise AqError(f"readings CSV header must be {','.join(expected)}")

    grouped: dict = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 4:
            raise AqError(f"readings CSV line {lineno}: expected 4 fields, got {len(row)}")
        sid, ts_text, attr, value_text = [f.strip() for f in row]
        if sid not in stations:
            raise AqError(f"readings CSV line {lineno}: unknown station '{sid}'")
        if attr not in ATTRIBUTES:
            raise AqError(
                f"readings CSV line {lineno}: unknown attribute '{attr}' "
                f"(accepted: {', '.join(ATTRIBUTES)})"
            )
        try:
            ts = parse_iso(ts_text)
        except ValueError:
            raise AqError(f"readings CSV line {lineno}: bad timestamp '{ts_text}'") from None
        try:
            value = float(value_text)
        except ValueError:
            raise AqError(f"readings CSV line {lineno}: bad value '{value_text}'") from None
        if not math.isfinite(value):
            raise AqError(f"readings CSV line {lineno}: value must be finite")

        key = (sid, attr)
        bucket = grouped.setdefault(key, {})
        if ts in bucket and bucket[ts] != value:
            raise IngestConflict(
                f"readings CSV line {lineno}: duplicate timestamp {ts_text} for "
                f"{sid}/{attr} with conflicting value"
            )
        bucket[ts] = value

    if not grouped:
        raise AqError("readings CSV has no rows")

    readings = {}
    for (sid, attr), bucket in grouped.items():
        ts_sorted = sorted(bucket)
        readings[(sid, attr)] = RawSeries(
            station_id=sid,
            attribute=attr,
            timestamps=np.array(ts_sorted, dtype=np.int64),
            values=np.array([bucket[t] for t in ts_sorted], dtype=np.float64),
        )
    return readings


def _dataset_digest(stations: dict, readings: dict) -> str:
    h = hashlib.sha256()
    for sid in sorted(stations):
        meta = stations[sid]
        h.update(f"{sid}|{meta['name']}|{meta['latitude']}|{meta['longitude']}|{meta['kind']}\n".encode())
    for key in sorted(readings):
        series = readings[key]
        h.update(f"{key[0]}|{key[1]}\n".encode())
        h.update(series.timestamps.tobytes())
        h.update(series.values.tobytes())
    return "d" + h.hexdigest()[:12]


def _now_iso() -> str:
    return datetime.now(tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class ExperimentRecord:
    def __init__(self, exp_id, config_dict, dataset_id, stations, pollutants, seed, created_at):
        self.id = exp_id
        self.config_dict = config_dict
        self.dataset_id = dataset_id
        self.stations = stations
        self.pollutants = pollutants
        self.seed = seed
        self.created_at = created_at
        self.status = "pending"          # pending|running|done|failed|cancelled|interrupted
        self.error = None
        self.model_states: dict = {}     # "station/attribute" -> pending|running|done|failed|cancelled
        self.summary: dict | None = None
        self.result_hash: str | None = None

    def public(self) -> dict:
        return {
            "id": self.id,
            "dataset_id": self.dataset_id,
            "stations": self.stations,
            "pollutants": self.pollutants,
            "seed": self.seed,
            "created_at": self.created_at,
            "status": self.status,
            "error": self.error,
            "models": dict(sorted(self.model_states.items())),
            "summary": self.summary,
            "result_hash": self.result_hash,
            "config": self.config_dict,
        }


class Store:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.journal_path = self.root / "journal.jsonl"
        self.lock = threading.RLock()
        self.datasets: dict = {}
        self.experiments: dict = {}
        self.events: dict = {}
        self._manual_counter = 0
        self._threads: dict = {}
        self._cancel_flags: dict = {}
        self._hourly_cache: dict = {}
        if self.journal_path.exists():
            self._replay()

    # ------------------------------------------------------------- journal

    def _append_journal(self, entry: dict) -> None:
        with self.journal_path.open("a", encoding="utf-8") as f:
            f.write(json.dumps(entry, sort_keys=True) + "\n")

    def _replay(self) -> None:
        with self.journal_path.open(encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                self._apply(json.loads(line), replay=True)
        # Experiments that never finished cannot resume across processes.
        for rec in self.experiments.values():
            if rec.status in ("pending", "running"):
                rec.status = "interrupted"

    def _apply(self, entry: dict, replay: bool = False) -> None:
        op = entry["op"]
        if op == "dataset_ingested":
            self._apply_dataset(entry)
        elif op == "experiment_submitted":
            rec = ExperimentRecord(
                exp_id=entry["id"],
                config_dict=entry["config"],
                dataset_id=entry["dataset_id"],
                stations=entry["stations"],
                pollutants=entry["pollutants"],
                seed=entry["seed"],
                created_at=entry["at"],
            )
            self.experiments[rec.id] = rec
        elif op == "experiment_completed":
            rec = self.experiments[entry["id"]]
            rec.status = "done"
            rec.summary = entry["summary"]
            rec.result_hash = entry["result_hash"]
            rec.model_states = entry["model_states"]
        elif op == "experiment_failed":
            rec = self.experiments[entry["id"]]
            rec.status = "failed"
            rec.error = entry["error"]
        elif op == "experiment_cancelled":
            rec = self.experiments[entry["id"]]
            rec.status = "cancelled"
            rec.model_states = entry.get("model_states", rec.model_states)
        elif op == "event_created":
            record = entry["event"]
            self.events[record["id"]] = record
            if record["source"] == "manual":
                num = _manual_number(record["id"])
                if num is not None:
                    self._manual_counter = max(self._manual_counter, num)
        elif op == "event_modified":
            record = self.events[entry["id"]]
            if "original" not in record:
                record["original"] = {
                    k: record[k] for k in ("start", "end", "severity", "tags", "comment")
                }
            record.update(entry["changes"])
            record["modified_at"] = entry["at"]
            record["modified_by"] = entry["author"]
        elif op == "event_deleted":
            record = self.events.get(entry["id"])
            if record is None:
                return
            if record["source"] == "detected":
                record["hidden"] = True
            else:
                del self.events[entry["id"]]
        elif op == "event_annotated":
            record = self.events[entry["id"]]
            record.setdefault("annotations", []).append(entry["annotation"])
        else:
            raise AqError(f"unknown journal op '{op}'")

    def _apply_dataset(self, entry: dict) -> None:
        ds_dir = self.root / "datasets" / entry["id"]
        readings_text = (ds_dir / "readings.csv").read_text(encoding="utf-8")
        stations_text = (ds_dir / "stations.csv").read_text(encoding="utf-8")
        stations = parse_stations_csv(stations_text)
        readings = parse_readings_csv(readings_text, stations)
        self.datasets[entry["id"]] = Dataset(
            dataset_id=entry["id"],
            stations=stations,
            readings=readings,
            provenance=entry.get("provenance", {}),
        )

    # ------------------------------------------------------------- datasets

    def ingest(self, readings_text: str, stations_text: str, provenance: dict | None = None) -> dict:
        """Validate and persist a dataset; identical content is idempotent."""
        with self.lock:
            stations = parse_stations_csv(stations_text)
            readings = parse_readings_csv(readings_text, stations)
            dataset_id = _dataset_digest(stations, readings)
            if dataset_id in self.datasets:
                ds = self.datasets[dataset_id]
                return {"dataset_id": dataset_id, "rows": ds.row_count,
                        "stations": len(ds.stations), "deduplicated": True}

            ds_dir = self.root / "datasets" / dataset_id
            ds_dir.mkdir(parents=True, exist_ok=True)
            (ds_dir / "readings.csv").write_text(readings_text, encoding="utf-8")
            (ds_dir / "stations.csv").write_text(stations_text, encoding="utf-8")
            provenance = dict(provenance or {})
            provenance.setdefault("ingested_at", _now_iso())
            ds = Dataset(dataset_id, stations, readings, provenance)
            self.datasets[dataset_id] = ds
            self._append_journal(
                {"op": "dataset_ingested", "id": dataset_id, "at": provenance["ingested_at"],
                 "provenance": provenance}
            )
            return {"dataset_id": dataset_id, "rows": ds.row_count,
                    "stations": len(ds.stations), "deduplicated": False}

    def dataset(self, dataset_id: str) -> Dataset:
        ds = self.datasets.get(dataset_id)
        if ds is None:
            raise UnknownDataset(f"no dataset '{dataset_id}'")
        return ds

    # ---------------------------------------------------------- experiments

    def _experiment_id(self, cfg_hash: str, dataset_id: str, stations, pollutants, seed: int) -> str:
        key = json.dumps([cfg_hash, dataset_id, sorted(stations), sorted(pollutants), seed])
        return "x" + hashlib.sha256(key.encode()).hexdigest()[:12]

    def submit_experiment(self, config_dict: dict, dataset_id: str, stations=None,
                          pollutants=None, seed: int = 0, background: bool = True) -> dict:
        """Register and start an experiment; identical submissions are served cached."""
        config = pipeline.PipelineConfig.from_dict(config_dict)
        violations = pipeline.validate(config)
        if violations:
            raise InvalidConfig(violations)
        with self.lock:
            ds = self.dataset(dataset_id)
            stations = sorted(stations) if stations else ds.station_ids()
            unknown = [s for s in stations if s not in ds.stations]
            if unknown:
                raise NotFound(f"unknown stations {unknown}")
            if pollutants:
                pollutants = sorted(pollutants)
                bad = [p for p in pollutants if p not in POLLUTANTS]
                if bad:
                    raise AqError(f"not pollutants: {bad} (accepted: {', '.join(POLLUTANTS)})")
            else:
                present = set()
                for st in stations:
                    present |= set(ds.attributes(st)) & set(POLLUTANTS)
                pollutants = sorted(present)
            cfg_hash = pipeline.config_hash(config)
            exp_id = self._experiment_id(cfg_hash, dataset_id, stations, pollutants, seed)
            existing = self.experiments.get(exp_id)
            if existing is not None and existing.status in ("pending", "running", "done"):
                return {"experiment_id": exp_id, "status": existing.status, "cached": True}

            rec = ExperimentRecord(exp_id, config.to_dict(), dataset_id, stations,
                                   pollutants, seed, _now_iso())
            rec.model_states = {f"{st}/{p}": "pending" for st in stations for p in pollutants}
            self.experiments[exp_id] = rec
            self._cancel_flags[exp_id] = False
            self._append_journal({
                "op": "experiment_submitted", "id": exp_id, "config": rec.config_dict,
                "dataset_id": dataset_id, "stations": stations, "pollutants": pollutants,
                "seed": seed, "at": rec.created_at,
            })
        if background:
            thread = threading.Thread(target=self._run_experiment, args=(exp_id,), daemon=True)
            self._threads[exp_id] = thread
            thread.start()
        else:
            self._run_experiment(exp_id)
        return {"experiment_id": exp_id, "status": self.experiments[exp_id].status, "cached": False}

    def _run_experiment(self, exp_id: str) -> None:
        rec = self.experiments[exp_id]
        rec.status = "running"

        def progress(station, attribute, state):
            with self.lock:
                rec.model_states[f"{station}/{attribute}"] = state

        def should_cancel():
            return self._cancel_flags.get(exp_id, False)

        try:
            config = pipeline.PipelineConfig.from_dict(rec.config_dict)
            ds = self.dataset(rec.dataset_id)
            result = pipeline.run(
                config, ds, dataset_id=rec.dataset_id, stations=rec.stations,
                pollutants=rec.pollutants, seed=rec.seed,
                progress=progress, should_cancel=should_cancel,
            )
            result.created_at = rec.created_at
        except Exception as exc:  # config/dataset level failure
            with self.lock:
                rec.status = "failed"
                rec.error = f"{type(exc).__name__}: {exc}"
                self._append_journal({"op": "experiment_failed", "id": exp_id,
                                      "error": rec.error, "at": _now_iso()})
            return

        with self.lock:
            exp_dir = self.root / "experiments" / exp_id
            exp_dir.mkdir(parents=True, exist_ok=True)
            (exp_dir / "result.json").write_bytes(result.report_bytes())
            if self._cancel_flags.get(exp_id, False):
                rec.status = "cancelled"
                self._append_journal({"op": "experiment_cancelled", "id": exp_id,
                                      "model_states": rec.model_states, "at": _now_iso()})
                return
            rec.summary = result.summary()
            rec.result_hash = result.result_hash()
            rec.status = "done"
            self._append_journal({
                "op": "experiment_completed", "id": exp_id, "summary": rec.summary,
                "result_hash": rec.result_hash, "model_states": rec.model_states,
                "result_file": f"experiments/{exp_id}/result.json", "at": _now_iso(),
            })
            for i, model in enumerate(result.models):
                for j, ev in enumerate(model.events):
                    record = pipeline.event_to_dict(ev)
                    record["id"] = f"ev-{exp_id}-{i:03d}-{j:03d}"
                    record["experiment_id"] = exp_id
                    record["dataset_id"] = rec.dataset_id
                    record["hidden"] = False
                    record["annotations"] = []
                    self.events[record["id"]] = record
                    self._append_journal({"op": "event_created", "event": record, "at": _now_iso()})

    def run_experiment_sync(self, config_dict: dict, dataset_id: str, stations=None,
                            pollutants=None, seed: int = 0) -> dict:
        out = self.submit_experiment(config_dict, dataset_id, stations, pollutants,
                                     seed, background=False)
        exp_id = out["experiment_id"]
        if out.get("cached") and self.experiments[exp_id].status == "done":
            return {"experiment_id": exp_id, "cached": True, **self.experiments[exp_id].public()}
        rec = self.experiments[exp_id]
        if rec.status == "failed":
            raise AqError(rec.error or "experiment failed")
        return {"experiment_id": exp_id, "cached": False, **rec.public()}

    def poll(self, exp_id: str) -> dict:
        rec = self.experiments.get(exp_id)
        if rec is None:
            raise NotFound(f"no experiment '{exp_id}'")
        with self.lock:
            return rec.public()

    def wait(self, exp_id: str, timeout: float = 600.0) -> dict:
        thread = self._threads.get(exp_id)
        if thread is not None:
            thread.join(timeout)
        return self.poll(exp_id)

    def cancel(self, exp_id: str) -> dict:
        rec = self.experiments.get(exp_id)
        if rec is None:
            raise NotFound(f"no experiment '{exp_id}'")
        self._cancel_flags[exp_id] = True
        return self.poll(exp_id)

    def result(self, exp_id: str) -> dict:
        rec = self.experiments.get(exp_id)
        if rec is None:
            raise NotFound(f"no experiment '{exp_id}'")
        path = self.root / "experiments" / exp_id / "result.json"
        if rec.status not in ("done", "cancelled") or not path.exists():
            raise NotFound(f"experiment '{exp_id}' has no result yet (status {rec.status})")
        return json.loads(path.read_text(encoding="utf-8"))

    def result_model(self, exp_id: str, station_id: str, attribute: str) -> dict:
        for model in self.result(exp_id)["models"]:
            if model["station_id"] == station_id and model["attribute"] == attribute:
                return model
        raise NotFound(f"no model {station_id}/{attribute} in experiment {exp_id}")

    def result_model_summaries(self, exp_id: str) -> list:
        """Light per-model rows for dashboards (no signal arrays)."""
        return [
            {
                "station_id": m["station_id"],
                "attribute": m["attribute"],
                "status": m["status"],
                "error": m.get("error"),
                "mape": m.get("mape"),
                "event_count": len(m.get("events", [])),
                "final_loss": (m.get("loss_history") or [None])[-1],
            }
            for m in self.result(exp_id)["models"]
        ]

    # --------------------------------------------------------------- events

    def _dataset_range_check(self, dataset_id: str, start: int, end: int) -> None:
        ds = self.dataset(dataset_id)
        lo, hi = ds.time_range()
        if lo is None or start < lo or end > hi:
            raise AqError(
                f"event interval [{format_iso(start)}, {format_iso(end)}] outside dataset "
                f"range [{format_iso(lo)}, {format_iso(hi)}]"
            )

    def create_event(self, payload: dict, author: str = "analyst") -> dict:
        """Create a manual event; detected events only ever come from experiments."""
        with self.lock:
            required = ("station_id", "attribute", "start", "end", "severity")
            missing = [k for k in required if k not in payload]
            if missing:
                raise AqError(f"event payload missing fields {missing}")
            dataset_id = payload.get("dataset_id")
            experiment_id = payload.get("experiment_id")
            if dataset_id is None and experiment_id:
                rec = self.experiments.get(experiment_id)
                if rec is None:
                    raise NotFound(f"no experiment '{experiment_id}'")
                dataset_id = rec.dataset_id
            if dataset_id is None:
                raise AqError("event payload needs dataset_id or experiment_id")
            ds = self.dataset(dataset_id)
            if payload["station_id"] not in ds.stations:
                raise NotFound(f"unknown station '{payload['station_id']}'")
            if payload["attribute"] not in ATTRIBUTES:
                raise AqError(f"unknown attribute '{payload['attribute']}'")
            start = parse_iso(payload["start"]) if isinstance(payload["start"], str) else int(payload["start"])
            end = parse_iso(payload["end"]) if isinstance(payload["end"], str) else int(payload["end"])
            if end < start:
                raise AqError("event end before start")
            severity = int(payload["severity"])
            if not 0 <= severity <= 4:
                raise AqError("severity must be in 0..4")
            self._dataset_range_check(dataset_id, start, end)

            self._manual_counter += 1
            record = {
                "id": f"ev-m-{self._manual_counter:05d}",
                "station_id": payload["station_id"],
                "attribute": payload["attribute"],
                "start": format_iso(start),
                "end": format_iso(end),
                "score": float(payload.get("score", 0.0)),
                "severity": severity,
                "source": "manual",
                "tags": list(payload.get("tags", [])),
                "comment": payload.get("comment", ""),
                "theta": None,
                "k": None,
                "window_start": None,
                "window_len": None,
                "experiment_id": experiment_id,
                "dataset_id": dataset_id,
                "hidden": False,
                "annotations": [],
                "author": author,
                "created_at": _now_iso(),
            }
            self.events[record["id"]] = record
            self._append_journal({"op": "event_created", "event": record, "at": record["created_at"]})
            return dict(record)

    def modify_event(self, event_id: str, changes: dict, author: str = "analyst") -> dict:
        allowed = {"start", "end", "severity", "tags", "comment", "hidden"}
        with self.lock:
            record = self.events.get(event_id)
            if record is None:
                raise NotFound(f"no event '{event_id}'")
            bad = set(changes) - allowed
            if bad:
                raise AqError(f"cannot modify fields {sorted(bad)}")
            cleaned = {}
            for key, value in changes.items():
                if key in ("start", "end"):
                    cleaned[key] = format_iso(parse_iso(value) if isinstance(value, str) else int(value))
                elif key == "severity":
                    value = int(value)
                    if not 0 <= value <= 4:
                        raise AqError("severity must be in 0..4")
                    cleaned[key] = value
                elif key == "tags":
                    cleaned[key] = [str(t) for t in value]
                elif key == "hidden":
                    cleaned[key] = bool(value)
                else:
                    cleaned[key] = str(value)
            start = parse_iso(cleaned.get("start", record["start"]))
            end = parse_iso(cleaned.get("end", record["end"]))
            if end < start:
                raise AqError("event end before start")
            entry = {"op": "event_modified", "id": event_id, "changes": cleaned,
                     "author": author, "at": _now_iso()}
            self._apply(entry)
            self._append_journal(entry)
            return dict(self.events[event_id])

    def delete_event(self, event_id: str, author: str = "analyst") -> dict:
        with self.lock:
            record = self.events.get(event_id)
            if record is None:
                raise NotFound(f"no event '{event_id}'")
            entry = {"op": "event_deleted", "id": event_id, "author": author, "at": _now_iso()}
            self._apply(entry)
            self._append_journal(entry)
            return {"id": event_id, "deleted": record["source"] == "manual",
                    "hidden": record["source"] == "detected"}

    def annotate_event(self, event_id: str, text: str, tags=None, author: str = "analyst") -> dict:
        with self.lock:
            if event_id not in self.events:
                raise NotFound(f"no event '{event_id}'")
            annotation = {"author": author, "at": _now_iso(), "text": str(text),
                          "tags": [str(t) for t in (tags or [])]}
            entry = {"op": "event_annotated", "id": event_id, "annotation": annotation,
                     "at": annotation["at"]}
            self._apply(entry)
            self._append_journal(entry)
            return dict(self.events[event_id])

    def list_events(self, experiment_id=None, dataset_id=None, station_id=None,
                    attribute=None, include_hidden=False) -> list:
        with self.lock:
            out = []
            for record in self.events.values():
                if experiment_id and record.get("experiment_id") != experiment_id:
                    continue
                if dataset_id and record.get("dataset_id") != dataset_id:
                    continue
                if station_id and record.get("station_id") != station_id:
                    continue
                if attribute and record.get("attribute") != attribute:
                    continue
                if record.get("hidden") and not include_hidden:
                    continue
                out.append(dict(record))
            out.sort(key=lambda r: (r["start"], r["id"]))
            return out

    # ---------------------------------------------------------------- views

    def _hourly(self, dataset_id: str, station_id: str, attribute: str):
        key = (dataset_id, station_id, attribute)
        if key not in self._hourly_cache:
            raw = self.dataset(dataset_id).raw_series(station_id, attribute)
            if raw is None:
                raise NotFound(f"no readings for {station_id}/{attribute}")
            self._hourly_cache[key] = resample(raw, 3600, "mean")
        return self._hourly_cache[key]

    def series_view(self, dataset_id: str, station_id: str, attribute: str,
                    ts_from=None, ts_to=None, resolution: int = 0) -> dict:
        """Raw points in range, min/max-preserving downsampled to <= resolution."""
        raw = self.dataset(dataset_id).raw_series(station_id, attribute)
        if raw is None:
            raise NotFound(f"no readings for {station_id}/{attribute}")
        ts, values = raw.timestamps, raw.values
        lo = parse_iso(ts_from) if isinstance(ts_from, str) else ts_from
        hi = parse_iso(ts_to) if isinstance(ts_to, str) else ts_to
        mask = np.ones(ts.size, dtype=bool)
        if lo is not None:
            mask &= ts >= lo
        if hi is not None:
            mask &= ts <= hi
        ts, values = ts[mask], values[mask]

        if resolution and ts.size > resolution:
            n_buckets = max(1, resolution // 2)
            span_lo, span_hi = int(ts[0]), int(ts[-1]) + 1
            width = max(1, -(-(span_hi - span_lo) // n_buckets))  # ceil
            keep = []
            for b in range(n_buckets):
                b_lo, b_hi = span_lo + b * width, span_lo + (b + 1) * width
                sel = np.nonzero((ts >= b_lo) & (ts < b_hi))[0]
                if sel.size == 0:
                    continue
                i_min = sel[np.argmin(values[sel])]
                i_max = sel[np.argmax(values[sel])]
                keep.extend({int(i_min), int(i_max)})
            idx = np.array(sorted(set(keep)), dtype=int)
            ts, values = ts[idx], values[idx]
            downsampled = {"bucket_seconds": int(width)}
        else:
            downsampled = None

        return {
            "station_id": station_id,
            "attribute": attribute,
            "timestamps": [format_iso(t) for t in ts],
            "values": [float(v) for v in values],
            "downsampled": downsampled,
        }

    def signals_view(self, exp_id: str, station_id: str, attribute: str) -> dict:
        """Model signals for the focus view plus the current visible events."""
        model = self.result_model(exp_id, station_id, attribute)
        events = self.list_events(experiment_id=exp_id, station_id=station_id,
                                  attribute=attribute)
        return {
            "experiment_id": exp_id,
            "station_id": station_id,
            "attribute": attribute,
            "status": model["status"],
            "error": model.get("error"),
            "mape": model.get("mape"),
            "timestamps": model.get("timestamps", []),
            "y": model.get("y", []),
            "y_hat": model.get("y_hat", []),
            "e": model.get("e", []),
            "e_s": model.get("e_s", []),
            "windows": model.get("windows", []),
            "events": events,
        }

    def period_aggregate(self, dataset_id: str, station_id: str, attribute: str,
                         level: str, anchor: str) -> dict:
        """Calendar-aligned means of the hourly series for the period glyphs."""
        if level not in ("year", "month", "day"):
            raise AqError("level must be year, month, or day")
        hourly = self._hourly(dataset_id, station_id, attribute)
        anchor_epoch = parse_iso(anchor) if isinstance(anchor, str) else int(anchor)
        anchor_dt = datetime.fromtimestamp(anchor_epoch, tz=timezone.utc)

        def mean_between(lo: int, hi: int):
            i0 = max(0, -(-(lo - hourly.start) // hourly.interval))  # ceil
            i1 = (hi - hourly.start) // hourly.interval              # floor, exclusive
            vals = [v for v in hourly.values[max(0, i0):max(0, i1)] if v is not None]
            return round(float(np.mean(vals)), 6) if vals else None

        buckets = []
        if level == "day":
            year, month = anchor_dt.year, anchor_dt.month
            for day in range(1, monthrange(year, month)[1] + 1):
                day_start = int(datetime(year, month, day, tzinfo=timezone.utc).timestamp())
                values = [mean_between(day_start + h * 3600, day_start + (h + 1) * 3600)
                          for h in range(24)]
                buckets.append({"label": f"{year:04d}-{month:02d}-{day:02d}",
                                "weekday": datetime(year, month, day, tzinfo=timezone.utc).weekday(),
                                "values": values})
        elif level == "month":
            year = anchor_dt.year
            for month in range(1, 13):
                n_days = monthrange(year, month)[1]
                month_start = int(datetime(year, month, 1, tzinfo=timezone.utc).timestamp())
                values = [mean_between(month_start + d * 86400, month_start + (d + 1) * 86400)
                          for d in range(n_days)]
                buckets.append({"label": f"{year:04d}-{month:02d}", "values": values})
        else:
            lo_year = datetime.fromtimestamp(hourly.start, tz=timezone.utc).year
            hi_year = datetime.fromtimestamp(hourly.end, tz=timezone.utc).year
            for year in range(lo_year, hi_year + 1):
                values = []
                for month in range(1, 13):
                    m_start = int(datetime(year, month, 1, tzinfo=timezone.utc).timestamp())
                    if month == 12:
                        m_end = int(datetime(year + 1, 1, 1, tzinfo=timezone.utc).timestamp())
                    else:
                        m_end = int(datetime(year, month + 1, 1, tzinfo=timezone.utc).timestamp())
                    values.append(mean_between(m_start, m_end))
                buckets.append({"label": f"{year:04d}", "values": values})

        return {"station_id": station_id, "attribute": attribute, "level": level,
                "anchor": format_iso(anchor_epoch), "buckets": buckets}

    # ------------------------------------------------------------- snapshot

    def snapshot(self) -> dict:
        """Canonical state for replay equivalence checks."""
        with self.lock:
            return {
                "datasets": {
                    ds.id: {
                        "stations": ds.stations,
                        "rows": ds.row_count,
                        "attributes": {st: ds.attributes(st) for st in ds.station_ids()},
                    }
                    for ds in self.datasets.values()
                },
                "experiments": {
                    rec.id: {
                        "status": rec.status,
                        "dataset_id": rec.dataset_id,
                        "summary": rec.summary,
                        "result_hash": rec.result_hash,
                        "model_states": dict(sorted(rec.model_states.items())),
                        "config": rec.config_dict,
                        "seed": rec.seed,
                    }
                    for rec in self.experiments.values()
                },
                "events": {eid: dict(rec) for eid, rec in sorted(self.events.items())},
            }


def _manual_number(event_id: str):
    if event_id.startswith("ev-m-"):
        try:
            return int(event_id.rsplit("-", 1)[1])
        except ValueError:
            return None
    return None
