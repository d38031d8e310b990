// Uncertainty table: descending order regardless of payload order, and row
// clicks promote the player into the representative table for re-mediation.

import { beforeEach, describe, expect, it } from "vitest";
import { PropagationView } from "../src/views/propagation";
import { RepresentativesView } from "../src/views/representatives";
import { ViewState } from "../src/state";
import { container, click } from "./helpers";
import uncertainPayload from "../fixtures/uncertain.json";
import groupPayload from "../fixtures/group.json";

describe("propagation view", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("sorts rows by descending uncertainty even from a shuffled payload", () => {
    const state = new ViewState();
    state.step = "2.2";
    const view = new PropagationView(container(), state);
    const shuffled = {
      ...uncertainPayload,
      rows: [...uncertainPayload.rows].sort((a, b) => a.uncertainty - b.uncertainty),
    };
    view.render(shuffled as never);
    const cells = Array.from(
      document.querySelectorAll("tr.uncertain-row td:last-child"),
    ).map((td) => Number(td.textContent));
    const sorted = [...cells].sort((a, b) => b - a);
    expect(cells).toEqual(sorted);
  });

  it("shows per-ratio probabilities from the payload", () => {
    const state = new ViewState();
    state.step = "2.2";
    new PropagationView(container(), state).render(uncertainPayload as never);
    const first = uncertainPayload.rows.reduce((a, b) =>
      a.uncertainty >= b.uncertainty ? a : b,
    );
    const row = document.querySelector(
      `tr.uncertain-row[data-player="${first.player}"]`,
    )!;
    const cells = row.querySelectorAll("td");
    // player | one per ratio | uncertainty
    expect(cells).toHaveLength(2 + uncertainPayload.ratio_ids.length);
  });

  it("clicking an uncertain row promotes the player into the representative table", () => {
    const state = new ViewState();
    state.step = "2.2";
    const reps = new RepresentativesView(container(), state, () => {});
    reps.render(groupPayload as never);
    const view = new PropagationView(container(), state, () => {});
    view.render(uncertainPayload as never);

    const target = uncertainPayload.rows[0].player;
    expect(state.representatives.includes(target)).toBe(false);
    click(document.querySelector(`tr.uncertain-row[data-player="${target}"]`)!);
    expect(state.promoted).toContain(target);
    const repRow = document.querySelector(
      `.rep-table tr[data-player="${target}"]`,
    );
    expect(repRow).not.toBeNull();
    expect(repRow!.classList.contains("promoted")).toBe(true);
    expect(repRow!.textContent).toContain("re-mediation");
  });

  it("row clicks outside step 2.2 are ignored", () => {
    const state = new ViewState();
    state.step = "1.3";
    new PropagationView(container(), state).render(uncertainPayload as never);
    const target = uncertainPayload.rows[0].player;
    click(document.querySelector(`tr.uncertain-row[data-player="${target}"]`)!);
    expect(state.promoted).toHaveLength(0);
  });
});
