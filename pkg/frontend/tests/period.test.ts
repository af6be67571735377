// UI contract: period drill-down year -> month -> day issues the matching
// aggregate requests and the day level arranges glyphs as calendar weeks.

import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { ViewState } from "../src/state";
import { PeriodView } from "../src/views/period";
import { FakeServer, T0 } from "./fakeServer";

describe("period view", () => {
  let server: FakeServer;
  let api: ApiClient;
  let state: ViewState;

  beforeEach(() => {
    server = new FakeServer();
    api = new ApiClient("", server.fetch);
    state = new ViewState();
    state.datasetId = server.datasetId;
    state.setContextRange({ from: T0, to: T0 + server.hours * 3600_000 });
    state.toggleStation("S1");
    state.periodAnchor = "2021-01-01T00:00:00Z";
    state.periodLevel = "year";
  });

  function aggregateRequests(): string[] {
    return server.requests.filter((r) => r.includes("/api/aggregates"));
  }

  it("drills year -> month -> day issuing one aggregate request per level", async () => {
    const view = new PeriodView(api, state);
    await view.load();
    expect(aggregateRequests().at(-1)).toContain("level=year");
    expect(view.root.querySelectorAll(".glyph-cell").length).toBe(1);

    await view.drillInto("2021");
    expect(state.periodLevel).toBe("month");
    const monthReq = aggregateRequests().at(-1)!;
    expect(monthReq).toContain("level=month");
    expect(monthReq).toContain(encodeURIComponent("2021-06-01T00:00:00Z"));
    expect(view.root.querySelectorAll(".glyph-cell").length).toBe(12);

    await view.drillInto("2021-01");
    expect(state.periodLevel).toBe("day");
    const dayReq = aggregateRequests().at(-1)!;
    expect(dayReq).toContain("level=day");
    expect(dayReq).toContain(encodeURIComponent("2021-01-15T00:00:00Z"));
    expect(aggregateRequests().length).toBe(3);
  });

  it("day level lays glyphs out as calendar weeks", async () => {
    state.periodLevel = "day";
    const view = new PeriodView(api, state);
    await view.load();
    const weeks = view.root.querySelectorAll(".calendar-week");
    expect(weeks.length).toBeGreaterThan(4); // header + 5 weeks of january
    expect(view.root.querySelectorAll(".glyph-cell").length).toBe(31);
  });

  it("drill up climbs back toward the year level", async () => {
    state.periodLevel = "day";
    const view = new PeriodView(api, state);
    await view.load();
    await view.drillUp();
    expect(state.periodLevel).toBe("month");
    await view.drillUp();
    expect(state.periodLevel).toBe("year");
  });

  it("renders a radial area polygon per bucket with missing values at the core", async () => {
    const view = new PeriodView(api, state);
    await view.load();
    const glyph = view.root.querySelector(".period-glyph polygon")!;
    expect(glyph.getAttribute("points")!.split(" ").length).toBe(12);
  });
});
