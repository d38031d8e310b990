// Adjustment view contracts: slider gestures map to exactly one endpoint
// call, ratio-table rows repopulate the sliders, the lineup draws
// cross-column curves for multi-channel candidates, and rendered numbers
// equal payload numbers exactly.

import { describe, expect, it } from "vitest";
import { AdjustmentView } from "../src/views/adjustment";
import { ViewState } from "../src/state";
import { container, click, fire } from "./helpers";
import samplePayload from "../fixtures/sample.json";
import fusePayload from "../fixtures/fuse.json";
import rankPayload from "../fixtures/rank.json";
import rankSecond from "../fixtures/rank_second.json";

interface Calls {
  sample: { freqs: Record<string, number[]>; seed: number }[];
  fuse: Record<string, number>[];
  rank: number[];
  assign: number;
}

function setup(step = "1.3") {
  document.body.innerHTML = "";
  const state = new ViewState();
  state.step = step;
  const calls: Calls = { sample: [], fuse: [], rank: [], assign: 0 };
  const view = new AdjustmentView(container(), state, {
    onSample: (freqs, seed) => calls.sample.push({ freqs, seed }),
    onFuse: (weights) => calls.fuse.push(weights),
    onRank: (n) => calls.rank.push(n ?? -1),
    onAssign: () => (calls.assign += 1),
  });
  return { state, view, calls };
}

describe("slider to endpoint mapping", () => {
  it("moving the outer-band slider to 0.8 and clicking Sample issues one call with freqs [.., 0.8]", () => {
    const { calls } = setup();
    const slider = document.querySelector<HTMLInputElement>(
      'input.band-slider[data-channel="social"][data-band="3"]',
    )!;
    slider.value = "0.8";
    fire(slider, "change");
    expect(calls.sample).toHaveLength(0); // slider release alone commits locally
    click(document.querySelector('div[data-channel="social"] button.sample-button')!);
    expect(calls.sample).toHaveLength(1);
    expect(calls.sample[0].freqs["social"]).toEqual([1, 1, 1, 0.8]);
  });

  it("each button click maps to exactly one call", () => {
    const { calls } = setup();
    click(document.querySelector("button.fusion-button")!);
    click(document.querySelector("button.rank-button")!);
    expect(calls.fuse).toHaveLength(1);
    expect(calls.rank).toHaveLength(1);
    click(document.querySelector("button.fusion-button")!);
    expect(calls.fuse).toHaveLength(2);
  });

  it("weight sliders renormalise to sum 1 on release", () => {
    const { state } = setup();
    const slider = document.querySelector<HTMLInputElement>(
      'input.weight-slider[data-channel="social"]',
    )!;
    slider.value = "0.9";
    fire(slider, "change");
    const total = Object.values(state.weights).reduce((a, b) => a + (b ?? 0), 0);
    expect(total).toBeCloseTo(1.0, 9);
    expect(state.weights.social).toBeCloseTo(0.9, 9);
    expect(state.weights.avatar).toBeCloseTo(0.1, 9);
  });

  it("controls are disabled outside mediation steps", () => {
    setup("1.1");
    const button = document.querySelector<HTMLButtonElement>("button.sample-button")!;
    expect(button.hasAttribute("disabled")).toBe(true);
  });
});

describe("ratio table", () => {
  it("clicking a row repopulates sliders with that row's values", () => {
    const { state, view, calls } = setup();
    view.renderRank(rankPayload as never);
    view.renderRatioTable([
      ...(rankPayload.ratio_table as never[]),
      ...(rankSecond.ratio_table as never[]).filter(
        (r: never) =>
          !(rankPayload.ratio_table as { row_id: number }[]).some(
            (p) => p.row_id === (r as { row_id: number }).row_id,
          ),
      ),
    ] as never);
    const rows = document.querySelectorAll("tr.ratio-row");
    expect(rows.length).toBeGreaterThanOrEqual(2);
    const second = rankSecond.ratio_table.find(
      (r) => JSON.stringify(r.intra) !== JSON.stringify(rankPayload.ratio_table[0].intra),
    )!;
    const target = Array.from(rows).find(
      (r) => r.getAttribute("data-row") === String(second.row_id),
    )!;
    click(target);
    expect(state.freqs["social"]).toEqual(second.intra["social"]);
    expect(state.weights["social"]).toBeCloseTo(second.inter["social"], 9);
    const slider = document.querySelector<HTMLInputElement>(
      'input.band-slider[data-channel="social"][data-band="3"]',
    )!;
    expect(Number(slider.value)).toBeCloseTo(second.intra["social"][3], 9);
    // repopulation is local re-adjustment: no endpoint call
    expect(calls.sample).toHaveLength(0);
    expect(calls.fuse).toHaveLength(0);
  });
});

describe("lineup", () => {
  it("draws cross-column curves exactly for multi-channel candidates", () => {
    const { view } = setup();
    view.renderRank(rankPayload as never);
    const multi = (rankPayload.lineup as { player: number; members: string[] }[]).filter(
      (r) => r.members.length > 1,
    );
    expect(multi.length).toBeGreaterThan(0);
    const curves = document.querySelectorAll("path.lineup-curve");
    expect(curves).toHaveLength(multi.length);
    const curvePlayers = new Set(
      Array.from(curves).map((c) => Number(c.getAttribute("data-player"))),
    );
    expect(curvePlayers).toEqual(new Set(multi.map((r) => r.player)));
    for (const row of rankPayload.lineup as { player: number; members: string[] }[]) {
      if (row.members.length === 1) {
        expect(curvePlayers.has(row.player)).toBe(false);
      }
    }
  });
});

describe("payload fidelity", () => {
  it("sample diversity bars show the payload numbers verbatim", () => {
    const { view } = setup();
    view.renderSample(samplePayload as never);
    for (const [channel, data] of Object.entries(samplePayload.channels)) {
      const label = document.querySelector(
        `div.diversity-bar[data-channel="${channel}"] .bar-value`,
      );
      expect(label?.textContent).toBe(
        (data as { content_diversity: number }).content_diversity.toFixed(3),
      );
    }
  });

  it("fusion pies reflect membership and similarity radius from the payload", () => {
    const { view } = setup();
    view.renderFuse(fusePayload as never);
    const pies = document.querySelectorAll("g.pie");
    expect(pies).toHaveLength(fusePayload.entries.length);
    const multi = fusePayload.entries.filter((e) => e.members.length > 1);
    for (const entry of multi) {
      const pie = document.querySelector(`g.pie[data-player="${entry.player}"]`)!;
      expect(pie.querySelectorAll("path.slice")).toHaveLength(entry.members.length);
    }
  });

  it("SD bars equal the rank payload metrics", () => {
    const { view } = setup();
    view.renderRank(rankPayload as never);
    const values = Object.fromEntries(
      Array.from(document.querySelectorAll("div.sd-bar")).map((bar) => [
        bar.getAttribute("data-metric"),
        bar.querySelector(".bar-value")?.textContent,
      ]),
    );
    expect(values["total_sim"]).toBe(rankPayload.sd.total_sim.toFixed(3));
    expect(values["content_diversity"]).toBe(
      rankPayload.sd.content_diversity.toFixed(3),
    );
    expect(values["fri_sim"]).toBe(rankPayload.sd.fri_sim.toFixed(3));
  });
});
