// Wire-format integration: boot the real analysis service (python, scratch
// store, persistence-regressor experiment on synthetic data) and drive the
// typed client plus the context/focus views against its actual payloads.
// Catches drift between the UI types and the live API that the in-memory
// fake cannot.

import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { ViewState } from "../src/state";
import { ContextView } from "../src/views/context";
import { FocusView } from "../src/views/focus";

const BOOT = `
import json, sys
sys.path.insert(0, "src")
from aqdetect import pipeline, server, store, synth

spec = synth.SynthSpec(days=30, noise_sigma=1.5, seed=8)
spec.anomalies = synth.auto_anomalies(spec, 4)
result = synth.generate(spec)
st = store.Store(sys.argv[1])
out = st.ingest(synth.readings_csv(result), synth.stations_csv(result))
cfg = pipeline.default_config()
idx = next(i for i, b in enumerate(cfg.blocks) if b.name == "lstm_regressor")
cfg.blocks[idx] = pipeline.BlockSpec("persistence_regressor")
cfg.block("find_anomaly").hyperparameters.update({"h": 120, "stride": 60})
st.submit_experiment(cfg.to_dict(), out["dataset_id"], seed=1, background=False)
httpd, base = server.start_background(st, port=0)
print("BASE=" + base, flush=True)
import time
while True:
    time.sleep(1)
`;

let proc: ChildProcess | null = null;
let base = "";
let workdir = "";

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "aqdetect-ui-it-"));
  // vitest runs with cwd at frontend/; the service package lives one up
  proc = spawn("python3", ["-c", BOOT, join(workdir, "store")], {
    cwd: join(process.cwd(), ".."),
    stdio: ["ignore", "pipe", "pipe"],
  });
  base = await new Promise<string>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("service did not boot in time")), 55_000);
    let buffer = "";
    proc!.stdout!.on("data", (chunk) => {
      buffer += String(chunk);
      const m = buffer.match(/BASE=(\S+)/);
      if (m) {
        clearTimeout(timer);
        resolve(m[1]);
      }
    });
    proc!.on("exit", (code) => reject(new Error(`service exited early (${code})`)));
  });
}, 60_000);

afterAll(() => {
  proc?.kill("SIGKILL");
  if (workdir) rmSync(workdir, { recursive: true, force: true });
});

describe("live service integration", () => {
  it("types line up across datasets, stations, experiments, signals, aggregates", async () => {
    const api = new ApiClient(base);
    const datasets = await api.listDatasets();
    expect(datasets.datasets.length).toBe(1);
    const datasetId = datasets.datasets[0].dataset_id;

    const stations = await api.stations(datasetId);
    expect(stations.stations[0].station_id).toBe("S1");
    expect(stations.range.from).not.toBeNull();

    const experiments = await api.listExperiments();
    const done = experiments.experiments.find((e) => e.status === "done");
    expect(done).toBeDefined();

    const models = await api.modelSummaries(done!.id);
    expect(models.models[0].attribute).toBe("PM25");

    const signals = await api.signals(done!.id, "S1", "PM25");
    expect(signals.status).toBe("done");
    expect(signals.timestamps.length).toBe(signals.y_hat.length);
    expect(signals.windows.length).toBeGreaterThan(0);

    const aggregate = await api.aggregates(datasetId, "S1", "PM25", "day", signals.timestamps[0]);
    expect(aggregate.buckets.length).toBe(31);
    expect(aggregate.buckets[0].values.length).toBe(24);
  }, 30_000);

  it("context and focus views render real payloads and event edits persist", async () => {
    const api = new ApiClient(base);
    const datasetId = (await api.listDatasets()).datasets[0].dataset_id;
    const stationsResp = await api.stations(datasetId);
    const experiment = (await api.listExperiments()).experiments.find((e) => e.status === "done")!;

    const state = new ViewState();
    state.datasetId = datasetId;
    state.experimentId = experiment.id;
    state.setContextRange({
      from: stationsResp.range.from! * 1000,
      to: stationsResp.range.to! * 1000,
    });
    state.toggleStation("S1");

    const context = new ContextView(api, state, () => {});
    await context.load();
    expect(context.root.querySelectorAll(".context-row").length).toBe(10);

    const focus = new FocusView(api, state, () => {});
    await focus.load();
    expect(focus.root.querySelectorAll(".focus-series").length).toBe(1);

    // create through the dialog against the live API, then verify persistence
    focus.beginCreate({
      from: stationsResp.range.from! * 1000 + 3600_000 * 24,
      to: stationsResp.range.from! * 1000 + 3600_000 * 30,
    });
    focus.dialog.root.querySelector<HTMLInputElement>('input[name="comment"]')!.value = "it-check";
    focus.dialog.root.querySelector<HTMLButtonElement>('button[name="save"]')!.click();
    await new Promise((r) => setTimeout(r, 300));

    const events = await api.events({ experiment: experiment.id });
    const manual = events.events.find((e) => e.source === "manual" && e.comment === "it-check");
    expect(manual).toBeDefined();

    const modified = await api.modifyEvent(manual!.id, { severity: 4 });
    expect(modified.severity).toBe(4);
  }, 30_000);
});
