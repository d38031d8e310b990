// Guidance strip: one chip per workflow step. Active steps render black,
// completed steps blue, future steps gray.

import * as d3 from "d3";
import type { GuidanceStep } from "../types";

export const STEP_COLORS: Record<GuidanceStep["status"], string> = {
  active: "#000000",
  completed: "#5680af",
  future: "#9e9e9e",
};

export const STEP_LABELS: Record<string, string> = {
  "1.1": "Select group",
  "1.2": "Pick representative",
  "1.3": "Mediate ratios",
  "1.4": "Verify SD",
  "2.1": "Propagate",
  "2.2": "Evaluate",
};

export class GuidanceView {
  private root: d3.Selection<HTMLElement, unknown, null, undefined>;

  constructor(container: HTMLElement) {
    this.root = d3.select(container).classed("guidance-view", true);
  }

  render(steps: GuidanceStep[]): void {
    const chips = this.root
      .selectAll<HTMLSpanElement, GuidanceStep>("span.step")
      .data(steps, (d) => d.step);
    const entering = chips
      .enter()
      .append("span")
      .attr("class", "step")
      .attr("data-step", (d) => d.step);
    entering
      .merge(chips)
      .attr("data-status", (d) => d.status)
      .style("color", (d) => STEP_COLORS[d.status])
      .style("border-color", (d) => STEP_COLORS[d.status])
      .text((d) => `${d.step} ${STEP_LABELS[d.step] ?? ""}`);
    chips.exit().remove();
  }
}
