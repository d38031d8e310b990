// Propagation with active learning: the uncertainty table, sorted by
// descending uncertainty, shows each player's probability of every
// registered ratio. Clicking a row promotes the player into the
// representative table for re-mediation.

import * as d3 from "d3";
import type { UncertainPayload } from "../types";
import type { ViewState } from "../state";

export class PropagationView {
  private root: d3.Selection<HTMLElement, unknown, null, undefined>;
  private state: ViewState;
  private onPromote: (player: number) => void;

  constructor(
    container: HTMLElement,
    state: ViewState,
    onPromote: (player: number) => void = () => {},
  ) {
    this.root = d3.select(container).classed("propagation-view", true);
    this.state = state;
    this.onPromote = onPromote;
  }

  render(payload: UncertainPayload): void {
    this.root.selectAll("*").remove();
    this.root.append("h3").text("Uncertain players");
    const rows = [...payload.rows].sort((a, b) => b.uncertainty - a.uncertainty);
    const table = this.root.append("table").attr("class", "uncertainty-table");
    const header = table.append("thead").append("tr");
    header.append("th").text("player");
    for (const rid of payload.ratio_ids) header.append("th").text(rid);
    header.append("th").text("uncertainty");
    const body = table
      .append("tbody")
      .selectAll("tr")
      .data(rows)
      .enter()
      .append("tr")
      .attr("class", "uncertain-row")
      .attr("data-player", (r) => r.player)
      .on("click", (_, r) => {
        if (!this.state.stepAllows("remediate")) return;
        this.state.promote(r.player);
        this.onPromote(r.player);
      });
    body.append("td").text((r) => r.player);
    for (const rid of payload.ratio_ids) {
      body.append("td").text((r) => (r.probabilities[rid] ?? 0).toFixed(3));
    }
    body.append("td").text((r) => r.uncertainty.toFixed(3));
  }
}
