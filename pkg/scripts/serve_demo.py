#!/usr/bin/env python3
"""Spin up a demo server with a freshly generated multi-station dataset.

Creates three synthetic stations (two general, one roadside with stronger
episodes), runs the default pipeline on all of them, and serves the API so
the web UI has something realistic to browse.

Usage:
    python scripts/serve_demo.py [--port 8787] [--workdir /tmp/aqdetect-demo] [--ui frontend/dist]
"""

import argparse
import json
import shutil
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from aqdetect import pipeline, server, store, synth  # noqa: E402


STATIONS = [
    dict(station_id="HK01", station_name="Causeway East", latitude=22.280, longitude=114.186, station_kind="roadside", seed=31),
    dict(station_id="HK02", station_name="Harbor West", latitude=22.288, longitude=114.150, station_kind="general", seed=47),
    dict(station_id="HK03", station_name="Hillside", latitude=22.336, longitude=114.175, station_kind="general", seed=59),
]


def build_dataset(days):
    readings_parts = []
    stations_lines = ["station_id,name,latitude,longitude,kind"]
    labels_lines = ["station_id,attribute,start,end"]
    n_anomalies = max(1, min(8, days // 12))
    for meta in STATIONS:
        spec = synth.SynthSpec(days=days, noise_sigma=2.0, **meta)
        spec.anomalies = synth.auto_anomalies(spec, n_anomalies)
        result = synth.generate(spec)
        body = synth.readings_csv(result).split("\n", 1)[1]
        readings_parts.append(body.rstrip("\n"))
        stations_lines.append(synth.stations_csv(result).strip().split("\n")[1])
        labels_body = synth.labels_csv(result).split("\n", 1)[1].rstrip("\n")
        if labels_body:
            labels_lines.append(labels_body)
    readings = "station_id,timestamp,attribute,value\n" + "\n".join(readings_parts) + "\n"
    stations = "\n".join(stations_lines) + "\n"
    labels = "\n".join(labels_lines) + "\n"
    return readings, stations, labels


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--port", type=int, default=8787)
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--days", type=int, default=90)
    ap.add_argument("--workdir", default="/tmp/aqdetect-demo")
    ap.add_argument("--ui", default=None, help="serve a built frontend from this directory")
    ap.add_argument("--fresh", action="store_true", help="wipe the workdir first")
    args = ap.parse_args()

    work = Path(args.workdir)
    if args.fresh and work.exists():
        shutil.rmtree(work)
    st = store.Store(work)

    if not st.datasets:
        readings, stations, labels = build_dataset(args.days)
        out = st.ingest(readings, stations, provenance={"via": "serve_demo"})
        (work / "labels.csv").write_text(labels)
        print(f"ingested dataset {out['dataset_id']} ({out['rows']} rows)")
        sub = st.submit_experiment(pipeline.default_config().to_dict(),
                                   out["dataset_id"], seed=7, background=False)
        print(f"experiment {sub['experiment_id']}: "
              f"{json.dumps(st.poll(sub['experiment_id'])['summary'])}")
    else:
        print(f"reusing store at {work}")

    ui = args.ui
    if ui is None:
        default_ui = Path(__file__).resolve().parents[1] / "frontend" / "dist"
        ui = str(default_ui) if default_ui.is_dir() else None
    server.serve_forever(st, port=args.port, host=args.host, ui_dir=ui)


if __name__ == "__main__":
    main()
