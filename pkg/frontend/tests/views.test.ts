// Remaining view contracts: hexbin projection rendering with linked
// highlighting, parallel-coordinates payload rendering, comparison charts,
// and the API client's mutation queue.

import { beforeEach, describe, expect, it } from "vitest";
import { ApiClient } from "../src/api";
import { ViewState } from "../src/state";
import { ComparisonView } from "../src/views/comparison";
import { ProjectionView } from "../src/views/projection";
import { RepresentativesView } from "../src/views/representatives";
import { container, mockFetch } from "./helpers";
import projections from "../fixtures/projections.json";
import groupPayload from "../fixtures/group.json";
import historyPayload from "../fixtures/history.json";

describe("projection view", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("renders one hexagon per bin with count-ordered opacity", () => {
    const state = new ViewState();
    const view = new ProjectionView(container(), state);
    view.render({ gameplay: projections.gameplay as never });
    const hexes = Array.from(
      document.querySelectorAll<SVGPolygonElement>(
        'div[data-channel="gameplay"] polygon.hex',
      ),
    );
    expect(hexes).toHaveLength(projections.gameplay.hexbins.bins.length);
    const byCount = hexes.map((h) => ({
      count: Number(h.getAttribute("data-count")),
      opacity: Number(h.getAttribute("fill-opacity")),
    }));
    for (const a of byCount) {
      for (const b of byCount) {
        if (a.count > b.count) expect(a.opacity).toBeGreaterThan(b.opacity);
      }
    }
  });

  it("hover highlights bins holding the same players in other channels", () => {
    const state = new ViewState();
    const view = new ProjectionView(container(), state);
    view.render({
      gameplay: projections.gameplay as never,
      social: projections.social as never,
    });
    const bin = projections.gameplay.hexbins.bins.find((b) => b.count > 1)!;
    view.highlight(new Set(bin.members));
    const linkedSocial = document.querySelectorAll(
      'div[data-channel="social"] polygon.hex.linked',
    );
    expect(linkedSocial.length).toBeGreaterThan(0);
    view.highlight(new Set());
    expect(
      document.querySelectorAll('div[data-channel="social"] polygon.hex.linked'),
    ).toHaveLength(0);
  });

  it("tooltip content comes from the per-bin means payload", () => {
    const state = new ViewState();
    const view = new ProjectionView(container(), state);
    view.render({ gameplay: projections.gameplay as never });
    const bin = projections.gameplay.hexbins.bins[0];
    const hex = document.querySelector<SVGPolygonElement>(
      `div[data-channel="gameplay"] polygon.hex[data-bin="${bin.q},${bin.r}"]`,
    )!;
    hex.dispatchEvent(new MouseEvent("mouseenter", { bubbles: false }));
    const tooltip = document.querySelector(
      'div[data-channel="gameplay"] .tooltip',
    ) as HTMLElement;
    expect(tooltip.style.display).toBe("block");
    expect(tooltip.textContent).toContain(`${bin.count} players`);
    for (const value of Object.values(bin.channel_means)) {
      expect(tooltip.textContent).toContain((value as number).toFixed(3));
    }
  });
});

describe("representatives view", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("renders one polyline per group player and a full table", () => {
    const state = new ViewState();
    state.step = "1.2";
    const view = new RepresentativesView(container(), state, () => {});
    view.render(groupPayload as never);
    expect(document.querySelectorAll("path.player-line")).toHaveLength(
      groupPayload.players.length,
    );
    expect(document.querySelectorAll(".player-table tbody tr")).toHaveLength(
      groupPayload.players.length,
    );
  });

  it("brushed ranges filter the table", () => {
    const state = new ViewState();
    state.step = "1.2";
    const view = new RepresentativesView(container(), state, () => {});
    view.render(groupPayload as never);
    const name = groupPayload.attributes[0];
    const values = groupPayload.players.map((p) => (p.attributes as never)[name] as number);
    const median = [...values].sort((a, b) => a - b)[Math.floor(values.length / 2)];
    state.brushedRanges[name] = [median, Math.max(...values)];
    const kept = view.filtered();
    expect(kept.length).toBeLessThan(groupPayload.players.length);
    expect(kept.length).toBeGreaterThan(0);
  });
});

describe("comparison view", () => {
  it("plots one point per iteration per metric from the history payload", () => {
    document.body.innerHTML = "";
    const view = new ComparisonView(container());
    view.render(historyPayload as never);
    const iterations = historyPayload.records.length;
    expect(iterations).toBe(2);
    const points = document.querySelectorAll('circle[data-metric="total_sim"]');
    expect(points).toHaveLength(iterations);
    const lines = document.querySelectorAll("path.metric-line");
    expect(lines.length).toBeGreaterThanOrEqual(3);
  });
});

describe("api client", () => {
  it("queues mutations so concurrent gestures serialize", async () => {
    const order: string[] = [];
    let release: (() => void) | null = null;
    const gate = new Promise<void>((resolve) => (release = resolve));
    const { fetchFn } = mockFetch(() => ({}));
    const slowFetch: typeof fetchFn = async (url, init) => {
      order.push(`start ${url}`);
      if (url.endsWith("/first")) await gate;
      order.push(`end ${url}`);
      return fetchFn(url, init);
    };
    const api = new ApiClient("/api/v1", slowFetch);
    const first = api.post("/first", {});
    const second = api.post("/second", {});
    release!();
    await Promise.all([first, second]);
    expect(order).toEqual([
      "start /api/v1/first",
      "end /api/v1/first",
      "start /api/v1/second",
      "end /api/v1/second",
    ]);
  });

  it("raises structured errors from the error envelope", async () => {
    const fetchFn = async () =>
      ({
        ok: false,
        status: 409,
        json: async () => ({ error: { code: "illegal_state", message: "nope" } }),
      }) as Response;
    const api = new ApiClient("/api/v1", fetchFn);
    await expect(api.get("/sessions/s-1")).rejects.toMatchObject({
      code: "illegal_state",
      status: 409,
    });
  });
});
